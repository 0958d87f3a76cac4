// Batch front-end for the scar pipeline; talks to the core exclusively
// through the public C API.

#include <ablscar.h>

#include <CLI11.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"ablscar - semiclassical scar states in a magnetic strip resonator"};

    std::string subcommand = "all";
    std::string config_path;
    std::string out_dir = "out";
    std::string stage_flag;
    int threads = 1;

    app.add_option("subcommand", subcommand,
                   "orbit|stability|quantize|field|exact-scan|exact-state|husimi|compare|report|all")
        ->required(false);
    app.add_option("--config", config_path, "JSON config file (omit for benchmark defaults)");
    app.add_option("--out", out_dir, "output directory for artifacts");
    app.add_option("--threads", threads, "worker threads");
    app.add_option("--stage", stage_flag, "alias for the positional subcommand");

    CLI11_PARSE(app, argc, argv);
    if (!stage_flag.empty()) subcommand = stage_flag;

    ablscar_session* session = nullptr;
    ablscar_status rc = ablscar_session_create(config_path.empty() ? nullptr : config_path.c_str(),
                                               out_dir.c_str(), &session);
    if (rc != ABLSCAR_OK) {
        std::fprintf(stderr, "error: failed to create session (status %d)\n", rc);
        return 2;
    }
    if (threads > 1) ablscar_set_threads(session, threads);

    rc = ablscar_run_stage(session, subcommand.c_str());
    if (rc != ABLSCAR_OK && rc != ABLSCAR_CHECKS_FAILED) {
        std::fprintf(stderr, "error: %s\n", ablscar_last_error(session));
        ablscar_session_free(session);
        return 2;
    }

    char* summary = nullptr;
    if (ablscar_result_json(session, &summary) == ABLSCAR_OK) {
        std::printf("%s\n", summary);
        ablscar_string_free(summary);
    }

    int exit_code = 0;
    if (rc == ABLSCAR_CHECKS_FAILED) {
        std::fprintf(stderr, "one or more acceptance checks failed\n");
        exit_code = 1;
    }
    ablscar_session_free(session);
    return exit_code;
}
