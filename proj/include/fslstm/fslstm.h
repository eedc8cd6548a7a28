/* fslstm — federated stacked-LSTM simulator for smart-building sensor
 * analytics. C interface to the shared library: opaque handles, status codes,
 * JSON configuration in, artifact files out.
 *
 * Every function returning fsl_status leaves a human-readable message
 * retrievable with fsl_last_error() (thread local) on failure. Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with fsl_string_free().
 */

#ifndef FSLSTM_FSLSTM_H
#define FSLSTM_FSLSTM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fsl_status {
  FSL_OK = 0,
  FSL_ERR_INVALID_ARGUMENT = 1,
  FSL_ERR_IO = 2,
  FSL_ERR_RUNTIME = 3
} fsl_status;

const char* fsl_version(void);

/* Message describing this thread's most recent failure; empty string if the
 * last call succeeded. The pointer stays valid until the next API call on the
 * same thread. */
const char* fsl_last_error(void);

void fsl_string_free(char* s);

/* Resolved configuration JSON for a named preset ("desk" or "paper"). */
fsl_status fsl_default_config(const char* preset, char** config_json_out);

/* Generates the synthetic dataset described by the experiment config and
 * writes events.csv, weather.csv, energy.csv and dataset_manifest.json into
 * out_dir. */
fsl_status fsl_generate(const char* config_json, const char* out_dir);

/* An experiment handle: a validated configuration ready to run. */
typedef struct fsl_experiment fsl_experiment;

fsl_status fsl_experiment_create(const char* config_json, fsl_experiment** out);

/* Trains per the config, writing run artifacts into out_dir (overrides the
 * config's out_dir when non-NULL). summary_json_out, when non-NULL, receives
 * the final metrics / convergence summary. */
fsl_status fsl_experiment_run(fsl_experiment* exp, const char* out_dir,
                              char** summary_json_out);

void fsl_experiment_destroy(fsl_experiment* exp);

/* Runs every variant in the comma-separated list (e.g. "lr,lstm,flr,fslstm")
 * on both tasks over the same data and writes comparison.csv/.json. */
fsl_status fsl_compare(const char* config_json, const char* variants,
                       const char* out_dir, char** table_json_out);

/* Convergence study over a comma-separated list of client counts
 * (e.g. "1,5,10,20") for the given variants; writes convergence.csv. */
fsl_status fsl_convergence(const char* config_json, const char* k_values,
                           const char* variants, const char* out_dir,
                           char** records_json_out);

/* Trains per the config and writes a per-timestep prediction trace
 * (trace.csv) over the held-out span; sensor_id < 0 picks the first
 * sensor dataset. */
fsl_status fsl_trace(const char* config_json, size_t horizon, int sensor_id,
                     const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FSLSTM_FSLSTM_H */
