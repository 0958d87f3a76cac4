#include <ablscar.h>
#include <cstdio>
int main() { return ablscar_version() ? 0 : 1; }
