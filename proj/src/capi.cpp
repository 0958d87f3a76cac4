#include "../include/ablscar.h"

#include "pipeline.hpp"

#include <cstring>

using namespace ablscar;

struct ablscar_session {
    std::unique_ptr<Pipeline> pipeline;
    RunConfig config;
    std::string out_dir;
    std::string last_error;
};

namespace {

ablscar_status wrap(ablscar_session* s, const std::function<void()>& fn) {
    try {
        fn();
        if (s) s->last_error.clear();
        return ABLSCAR_OK;
    } catch (const DependencyError& e) {
        if (s) s->last_error = e.what();
        return ABLSCAR_DEPENDENCY_ERROR;
    } catch (const InputError& e) {
        if (s) s->last_error = e.what();
        return ABLSCAR_INVALID_ARGUMENT;
    } catch (const std::exception& e) {
        if (s) s->last_error = e.what();
        return ABLSCAR_NUMERIC_ERROR;
    }
}

char* dup_string(const std::string& str) {
    char* out = static_cast<char*>(std::malloc(str.size() + 1));
    if (out) std::memcpy(out, str.c_str(), str.size() + 1);
    return out;
}

ablscar_status create_common(RunConfig cfg, const char* out_dir, ablscar_session** out_session) {
    if (!out_session || !out_dir) return ABLSCAR_INVALID_ARGUMENT;
    auto* s = new ablscar_session;
    s->config = std::move(cfg);
    s->out_dir = out_dir;
    const ablscar_status rc = wrap(s, [&] {
        s->pipeline = std::make_unique<Pipeline>(s->config, s->out_dir);
    });
    if (rc != ABLSCAR_OK) {
        delete s;
        return rc;
    }
    *out_session = s;
    return ABLSCAR_OK;
}

}  // namespace

extern "C" {

const char* ablscar_version(void) { return "0.1.0"; }

ablscar_status ablscar_session_create(const char* config_path, const char* out_dir,
                                      ablscar_session** out_session) {
    RunConfig cfg;
    if (config_path) {
        try {
            cfg = load_config(config_path);
        } catch (const std::exception&) {
            return ABLSCAR_IO_ERROR;
        }
    }
    return create_common(std::move(cfg), out_dir, out_session);
}

ablscar_status ablscar_session_create_from_json(const char* config_json, const char* out_dir,
                                                ablscar_session** out_session) {
    if (!config_json) return ABLSCAR_INVALID_ARGUMENT;
    RunConfig cfg;
    try {
        cfg = RunConfig::from_json(json::parse(config_json));
    } catch (const std::exception&) {
        return ABLSCAR_INVALID_ARGUMENT;
    }
    return create_common(std::move(cfg), out_dir, out_session);
}

void ablscar_session_free(ablscar_session* s) { delete s; }

ablscar_status ablscar_set_threads(ablscar_session* s, int threads) {
    if (!s || threads < 1) return ABLSCAR_INVALID_ARGUMENT;
    return wrap(s, [&] {
        s->config.threads = threads;
        s->pipeline = std::make_unique<Pipeline>(s->config, s->out_dir);
    });
}

ablscar_status ablscar_run_stage(ablscar_session* s, const char* stage) {
    if (!s || !stage) return ABLSCAR_INVALID_ARGUMENT;
    const ablscar_status rc = wrap(s, [&] { s->pipeline->run_stage(stage); });
    if (rc != ABLSCAR_OK) return rc;
    if ((std::strcmp(stage, "report") == 0 || std::strcmp(stage, "all") == 0) &&
        !s->pipeline->all_pass())
        return ABLSCAR_CHECKS_FAILED;
    return ABLSCAR_OK;
}

int ablscar_all_checks_passed(const ablscar_session* s) {
    return (s && s->pipeline && s->pipeline->all_pass()) ? 1 : 0;
}

ablscar_status ablscar_result_json(const ablscar_session* s, char** out_json) {
    if (!s || !out_json) return ABLSCAR_INVALID_ARGUMENT;
    *out_json = dup_string(s->pipeline->result_summary().dump(2));
    return *out_json ? ABLSCAR_OK : ABLSCAR_IO_ERROR;
}

ablscar_status ablscar_config_json(const ablscar_session* s, char** out_json) {
    if (!s || !out_json) return ABLSCAR_INVALID_ARGUMENT;
    *out_json = dup_string(canonical_config_string(s->config));
    return *out_json ? ABLSCAR_OK : ABLSCAR_IO_ERROR;
}

void ablscar_string_free(char* str) { std::free(str); }

const char* ablscar_last_error(const ablscar_session* s) {
    return s ? s->last_error.c_str() : "";
}

}  // extern "C"
