#ifndef PHENOFLOW_H
#define PHENOFLOW_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible call; the CLI reuses them as
 * process exit codes. */
typedef enum pf_status {
    PF_OK = 0,
    PF_ERROR_USAGE = 1,             /* bad command, target or configuration */
    PF_ERROR_INGEST = 2,            /* missing or malformed input data */
    PF_ERROR_INSUFFICIENT_DATA = 3, /* too little usable data after filtering */
    PF_ERROR_TRAINING = 4,          /* model training diverged */
    PF_ERROR_EXPLAIN = 5,           /* attribution self-check failed */
    PF_ERROR_INTERNAL = 6           /* broken invariant or unexpected error */
} pf_status;

/* Opaque pipeline handle. Not thread-safe; use one handle per thread. */
typedef struct pf_pipeline pf_pipeline;

/* Library version string, static storage. */
const char* pf_version(void);

/* Fresh pipeline with the default configuration. NULL on allocation
 * failure. Free with pf_pipeline_free (NULL is a no-op). */
pf_pipeline* pf_pipeline_new(void);
void pf_pipeline_free(pf_pipeline* pipeline);

/* Replaces the configuration from a JSON file or an in-memory JSON string.
 * Keys not present keep their defaults; unknown keys are rejected. */
pf_status pf_pipeline_load_config(pf_pipeline* pipeline, const char* path);
pf_status pf_pipeline_set_config_json(pf_pipeline* pipeline, const char* json_text);

/* Overrides applied on top of the current configuration. The seed is the
 * master seed: it also drives synthetic data generation. */
pf_status pf_pipeline_set_seed(pf_pipeline* pipeline, uint64_t seed);
pf_status pf_pipeline_set_out_dir(pf_pipeline* pipeline, const char* out_dir);

/* Runs one command: "synth", "fit", "analyze", "train", "explain" or "all".
 * train and explain take a target of "sos", "pos" or "peak"; NULL, "" or
 * "all" runs all three. Other commands ignore the target. */
pf_status pf_pipeline_run(pf_pipeline* pipeline, const char* command, const char* target);

/* Message of the last failed call on this handle, "" when the last call
 * succeeded. The pointer stays valid until the next call on the handle. */
const char* pf_pipeline_last_error(const pf_pipeline* pipeline);

#ifdef __cplusplus
}
#endif

#endif /* PHENOFLOW_H */
