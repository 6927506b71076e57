#ifndef INNERSERIES_H
#define INNERSERIES_H

/*
 * C interface to the inner-time-series library.
 *
 * Every function returns an ins_status; on failure ins_last_error() holds a
 * message for the calling thread. Objects are opaque handles released with
 * the matching *_free function. Strings returned through char** are
 * allocated by the library and released with ins_string_free.
 *
 * A series is a sampled multichannel signal with a time step and a per-sample
 * validity mask; the same handle type carries trajectories, velocity
 * estimates and weight series.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define INS_API __declspec(dllexport)
#else
#define INS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ins_status {
  INS_OK = 0,
  INS_INVALID_ARGUMENT = 1,
  INS_DIMENSION_MISMATCH = 2,
  INS_DOMAIN = 3,
  INS_IO = 4,
  INS_FORMAT = 5,
  INS_NUMERICAL = 6,
  INS_EMPTY = 7,
  INS_INTERNAL = 99
} ins_status;

typedef struct ins_series ins_series;
typedef struct ins_field ins_field;

INS_API const char* ins_version(void);
INS_API const char* ins_last_error(void);
INS_API const char* ins_status_name(ins_status status);
INS_API void ins_string_free(char* s);

/* ---- series ------------------------------------------------------------ */

/* values is row-major n x channels; valid may be NULL (all valid). */
INS_API ins_status ins_series_create(const double* values, size_t n, size_t channels, double dt,
                                     const uint8_t* valid, ins_series** out);
INS_API void ins_series_free(ins_series* s);
INS_API size_t ins_series_length(const ins_series* s);
INS_API size_t ins_series_channels(const ins_series* s);
INS_API double ins_series_dt(const ins_series* s);
INS_API size_t ins_series_valid_count(const ins_series* s);
INS_API ins_status ins_series_value(const ins_series* s, size_t k, size_t channel, double* out);
INS_API int ins_series_valid(const ins_series* s, size_t k);
/* Copies the row-major samples into buffer (n x channels doubles). */
INS_API ins_status ins_series_copy(const ins_series* s, double* buffer, size_t capacity);

/* Format follows the extension: .csv or .wav. fixed_dt > 0 overrides the
 * time column of a CSV. */
INS_API ins_status ins_series_read(const char* path, double fixed_dt, ins_series** out);
/* wav_scale multiplies samples before 16-bit quantisation; 0 picks a scale
 * mapping the peak to 90% of full range. Ignored for CSV. */
INS_API ins_status ins_series_write(const ins_series* s, const char* path, double wav_scale);

/* kind: sine, broadband, sources, mixture, latent, lifted, lifted-distorted.
 * config_json keys (all optional): samples, dt, seed, amplitude. */
INS_API ins_status ins_synth(const char* kind, const char* config_json, ins_series** out);

/* Transform spec JSON, e.g. {"kind":"monotone-polynomial",
 * "coefficients":[0,1,0,0.8],"domain":[-1,1]}. */
INS_API ins_status ins_transform(const ins_series* in, const char* spec_json, ins_series** out);

/* Variance-normalised PCA to k components; info_json (may be NULL) receives
 * explained variance fractions, components, mean and stddev. */
INS_API ins_status ins_pca(const ins_series* in, int k, ins_series** out, char** info_json);

/* ---- estimation ---------------------------------------------------------- */

/* scheme: "central" or "forward". */
INS_API ins_status ins_velocity(const ins_series* traj, const char* scheme, ins_series** out);

/* bins holds one count per axis, or a single count for every axis;
 * min_count 0 selects 50 N^2. velocity may be NULL (central differences). */
INS_API ins_status ins_grid_json(const ins_series* traj, const ins_series* velocity,
                                 const int* bins, size_t bin_axes, size_t min_count,
                                 char** json);
INS_API ins_status ins_moments_json(const ins_series* traj, const ins_series* velocity,
                                    const int* bins, size_t bin_axes, size_t min_count,
                                    char** json);

/* ---- frames -------------------------------------------------------------- */

/* options_json (may be NULL): {"gap_tol":1e-3,"cond_tol":1e-10}.
 * summary_json (may be NULL) receives bin counts and worst residuals. */
INS_API ins_status ins_field_build(const ins_series* traj, const ins_series* velocity,
                                   const int* bins, size_t bin_axes, size_t min_count,
                                   const char* options_json, ins_field** out,
                                   char** summary_json);
INS_API void ins_field_free(ins_field* f);
INS_API size_t ins_field_dims(const ins_field* f);
INS_API size_t ins_field_bin_count(const ins_field* f);
INS_API ins_status ins_field_read(const char* path, ins_field** out);
INS_API ins_status ins_field_write(const ins_field* f, const char* path);
INS_API ins_status ins_field_json(const ins_field* f, char** json);

/* ---- weights ------------------------------------------------------------- */

INS_API ins_status ins_weights(const ins_series* traj, const ins_series* velocity,
                               const ins_field* field, ins_series** out);

/* Finds the signed permutation P with w ~ P w'; json receives
 * {"permutation":{"perm":[..],"signs":[..]},"correlations":[..],...}. */
INS_API ins_status ins_align(const ins_series* w, const ins_series* wprime, char** json);

/* Applies a 1-based signed permutation {"perm":[..],"signs":[..]}. */
INS_API ins_status ins_series_permute(const ins_series* in, const char* permutation_json,
                                      ins_series** out);

/* Matches mixture weight channels to the concatenated source channels. */
INS_API ins_status ins_separability(const ins_series* mixture, const ins_series* const* sources,
                                    size_t source_count, char** json, int* passed);

/* Integrates x += dt V(x) w from x0 (dims values) over steps weights
 * beginning at index start. */
INS_API ins_status ins_reconstruct(const ins_series* weights, const ins_field* field,
                                   const double* x0, size_t dims, size_t steps, size_t start,
                                   ins_series** out, char** info_json);

/* ---- experiments and plots ------------------------------------------------ */

/* name: sine, monotone-1d, lifted-2d, mixture-2d. config_json keys (all
 * optional): seed, samples, bins, min_count, scheme, out_dir, format,
 * transform, amplitude, gap_tol, cond_tol, plot_window. */
INS_API ins_status ins_experiment_run(const char* name, const char* config_json,
                                      char** report_json, int* passed);
/* Newline-separated experiment names. */
INS_API const char* ins_experiment_names(void);

/* Overlays up to two series per channel panel over samples [begin, end). */
INS_API ins_status ins_plot_svg(const ins_series* const* series, const char* const* labels,
                                size_t count, size_t begin, size_t end, const char* title,
                                const char* path);

#ifdef __cplusplus
}
#endif

#endif
