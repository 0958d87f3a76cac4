#pragma once

#include <cstdint>
#include <string>

namespace ablscar {

// SHA-256 of a byte string (used for manifest checksums and cache keys)
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

}  // namespace ablscar
