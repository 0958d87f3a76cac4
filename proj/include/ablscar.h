#ifndef ABLSCAR_H
#define ABLSCAR_H

/* C interface to the ablscar semiclassical scar-wavefunction pipeline.
 *
 * All heavy state lives behind the opaque session handle.  Every call
 * returns a status code; on failure the message is retained on the session
 * and can be read back with ablscar_last_error().
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct ablscar_session ablscar_session;

typedef enum ablscar_status {
    ABLSCAR_OK = 0,
    ABLSCAR_INVALID_ARGUMENT = 1,
    ABLSCAR_NUMERIC_ERROR = 2,
    ABLSCAR_DEPENDENCY_ERROR = 3,
    ABLSCAR_IO_ERROR = 4,
    ABLSCAR_CHECKS_FAILED = 5
} ablscar_status;

const char* ablscar_version(void);

/* Create a session from a JSON config file (NULL path = built-in benchmark
 * defaults) and an output directory for pipeline artifacts. */
ablscar_status ablscar_session_create(const char* config_path, const char* out_dir,
                                      ablscar_session** out_session);
ablscar_status ablscar_session_create_from_json(const char* config_json, const char* out_dir,
                                                ablscar_session** out_session);
void ablscar_session_free(ablscar_session* s);

/* Override the worker-thread count after creation. */
ablscar_status ablscar_set_threads(ablscar_session* s, int threads);

/* Run one pipeline stage: orbit, stability, quantize, field, exact-scan,
 * exact-state, husimi, compare, report, or all. */
ablscar_status ablscar_run_stage(ablscar_session* s, const char* stage);

/* 1 if every acceptance check executed so far passed, else 0. */
int ablscar_all_checks_passed(const ablscar_session* s);

/* JSON summary of the results accumulated in this session.  The returned
 * string must be released with ablscar_string_free(). */
ablscar_status ablscar_result_json(const ablscar_session* s, char** out_json);

/* Canonical JSON form of the session's configuration (round-trip safe). */
ablscar_status ablscar_config_json(const ablscar_session* s, char** out_json);

void ablscar_string_free(char* str);

/* Last error message recorded on the session (empty string if none). */
const char* ablscar_last_error(const ablscar_session* s);

#ifdef __cplusplus
}
#endif

#endif /* ABLSCAR_H */
