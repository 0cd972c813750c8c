#ifndef MVANC_H
#define MVANC_H

/* Generated by cbindgen. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum MvancStatus {
  MVANC_OK = 0,
  MVANC_ERR_INVALID_ARGUMENT = 1,
  MVANC_ERR_CONFIG = 2,
  MVANC_ERR_DIVERGENCE = 3,
  MVANC_ERR_IO = 4,
  MVANC_ERR_FORMAT = 5,
  MVANC_ERR_NULL_POINTER = 6,
  MVANC_ERR_BUFFER_TOO_SMALL = 7,
  MVANC_ERR_PANIC = 8,
} MvancStatus;

// Path group selector for [`mvanc_paths_response`].
typedef enum MvancPathGroup {
  MVANC_PRIMARY_PHYS = 0,
  MVANC_PRIMARY_VIRT = 1,
  MVANC_SECONDARY_PHYS = 2,
  MVANC_SECONDARY_VIRT = 3,
} MvancPathGroup;

// Opaque experiment configuration.
typedef struct MvancConfig MvancConfig;

// Opaque path set.
typedef struct MvancPaths MvancPaths;

// Opaque simulation report.
typedef struct MvancReport MvancReport;

// Plant dimensions and adaptive filter lengths.
typedef struct MvancGeometry {
  size_t num_refs;
  size_t num_sources;
  size_t num_phys;
  size_t num_virt;
  size_t control_len;
  size_t aux_len;
} MvancGeometry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mvanc_version(void);

// Message for the most recent failure on this thread (empty if none).
// The pointer stays valid until the next failing call on this thread.
const char *mvanc_last_error(void);

// Frees a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void mvanc_string_free(char *s);

// Causal FIR filtering; `output` must hold `input_len` values.
//
// # Safety
// Pointers must reference arrays of the stated lengths.
enum MvancStatus mvanc_fir_filter(const double *coeffs,
                                  size_t num_coeffs,
                                  const double *input,
                                  size_t input_len,
                                  double *output,
                                  size_t output_len);

// Hamming-windowed bandpass design; `taps` must hold `order + 1` values.
//
// # Safety
// `taps` must reference `taps_len` writable doubles.
enum MvancStatus mvanc_design_bandpass(size_t order,
                                       double f_lo,
                                       double f_hi,
                                       double fs,
                                       double *taps,
                                       size_t taps_len);

// Frequency response on `n_points` frequencies `p·fs/(2·n_points)`.
// Each of `frequencies`, `magnitude` and `phase` must hold `n_points`
// values; `phase` may be NULL.
//
// # Safety
// Non-NULL pointers must reference arrays of the stated lengths.
enum MvancStatus mvanc_freq_response(const double *coeffs,
                                     size_t num_coeffs,
                                     size_t n_points,
                                     double fs,
                                     double *frequencies,
                                     double *magnitude,
                                     double *phase);

// Smoothed error level in dB; `output` must hold `len` values.
//
// # Safety
// Pointers must reference arrays of the stated lengths.
enum MvancStatus mvanc_smoothed_db(const double *errors,
                                   size_t len,
                                   size_t window,
                                   double *output,
                                   size_t output_len);

// Synthesizes a seeded plant.
//
// # Safety
// `geometry` must be valid; `out` must be writable.
enum MvancStatus mvanc_paths_synth(const struct MvancGeometry *geometry,
                                   size_t primary_len,
                                   size_t secondary_len,
                                   uint64_t seed,
                                   struct MvancPaths **out);

// Loads a `MVANC-PATHS v1` file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MvancStatus mvanc_paths_load(const char *path, struct MvancPaths **out);

// Saves a path set as a `MVANC-PATHS v1` file.
//
// # Safety
// `paths` must be a live handle; `path` a NUL-terminated string.
enum MvancStatus mvanc_paths_save(const struct MvancPaths *paths, const char *path);

// Primary and secondary response lengths.
//
// # Safety
// `paths` must be a live handle; outputs must be writable.
enum MvancStatus mvanc_paths_lengths(const struct MvancPaths *paths,
                                     size_t *primary_len,
                                     size_t *secondary_len);

// Copies one impulse response. `column` is the reference index for
// primary groups and the source index for secondary groups.
//
// # Safety
// `paths` must be a live handle; `buf` must hold `buf_len` doubles.
enum MvancStatus mvanc_paths_response(const struct MvancPaths *paths,
                                      enum MvancPathGroup group,
                                      size_t mic,
                                      size_t column,
                                      double *buf,
                                      size_t buf_len);

// Releases a path set. NULL is ignored.
//
// # Safety
// `paths` must come from this library and not have been freed already.
void mvanc_paths_free(struct MvancPaths *paths);

// The built-in default experiment.
//
// # Safety
// `out` must be writable.
enum MvancStatus mvanc_config_default(struct MvancConfig **out);

// Loads and validates a config file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MvancStatus mvanc_config_load(const char *path, struct MvancConfig **out);

// Parses and validates config text.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum MvancStatus mvanc_config_parse(const char *text, struct MvancConfig **out);

// Sets the master seed.
//
// # Safety
// `config` must be a live handle.
enum MvancStatus mvanc_config_set_seed(struct MvancConfig *config, uint64_t seed);

// Sets the number of samples per stage.
//
// # Safety
// `config` must be a live handle.
enum MvancStatus mvanc_config_set_num_samples(struct MvancConfig *config, size_t num_samples);

// Sets the three step sizes (tuning, auxiliary, control).
//
// # Safety
// `config` must be a live handle.
enum MvancStatus mvanc_config_set_step_sizes(struct MvancConfig *config,
                                             double tuning,
                                             double auxiliary,
                                             double control);

// Replaces the geometry.
//
// # Safety
// `config` must be a live handle; `geometry` valid.
enum MvancStatus mvanc_config_set_geometry(struct MvancConfig *config,
                                           const struct MvancGeometry *geometry);

// Reads the geometry.
//
// # Safety
// `config` must be a live handle; `out` writable.
enum MvancStatus mvanc_config_geometry(const struct MvancConfig *config, struct MvancGeometry *out);

// Sets the output directory for [`mvanc_run_pipeline`].
//
// # Safety
// `config` must be a live handle; `dir` a NUL-terminated string.
enum MvancStatus mvanc_config_set_output_dir(struct MvancConfig *config, const char *dir);

// Releases a config. NULL is ignored.
//
// # Safety
// `config` must come from this library and not have been freed already.
void mvanc_config_free(struct MvancConfig *config);

// Runs the full three-stage experiment, writing artifacts to the config's
// output directory.
//
// # Safety
// `config` must be a live handle; `out` writable.
enum MvancStatus mvanc_run_pipeline(const struct MvancConfig *config, struct MvancReport **out);

// Number of virtual microphones in the report.
//
// # Safety
// `report` must be a live handle or NULL (returns 0).
size_t mvanc_report_num_virtual(const struct MvancReport *report);

// Control-stage noise reduction at virtual microphone `index`, in dB.
//
// # Safety
// `report` must be a live handle; `out` writable.
enum MvancStatus mvanc_report_virtual_reduction(const struct MvancReport *report,
                                                size_t index,
                                                double *out);

// Passband margins (in-band minus out-of-band mean magnitude, dB) of
// control filter (1, 1) for the tuning and control stages.
//
// # Safety
// `report` must be a live handle; outputs writable.
enum MvancStatus mvanc_report_passband_margins(const struct MvancReport *report,
                                               double *tuning,
                                               double *control);

// Wall-clock seconds spent in the whole run.
//
// # Safety
// `report` must be a live handle or NULL (returns 0).
double mvanc_report_total_seconds(const struct MvancReport *report);

// The report as JSON. Free the result with [`mvanc_string_free`].
//
// # Safety
// `report` must be a live handle; `out` writable.
enum MvancStatus mvanc_report_to_json(const struct MvancReport *report, char **out);

// Releases a report. NULL is ignored.
//
// # Safety
// `report` must come from this library and not have been freed already.
void mvanc_report_free(struct MvancReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MVANC_H */
