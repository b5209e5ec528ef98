#ifndef DOCI_DOCI_H
#define DOCI_DOCI_H

#include <stddef.h>
#include <stdint.h>

#if defined(DOCI_BUILDING_LIBRARY)
#define DOCI_API __attribute__((visibility("default")))
#else
#define DOCI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns DOCI_OK or an error code; the message of the most
   recent failure on the calling thread is available from doci_last_error().
   Strings returned through char** belong to the caller and are released
   with doci_string_free(). JSON arguments may be NULL for "{}". */

typedef enum doci_status {
    DOCI_OK = 0,
    DOCI_E_INVALID_ARGUMENT = 1,
    DOCI_E_SHAPE_MISMATCH = 2,
    DOCI_E_DENOMINATOR_TOO_SMALL = 3,
    DOCI_E_EMPTY_ROI = 4,
    DOCI_E_SINGULAR_COVARIANCE = 5,
    DOCI_E_MISSING_CLASS = 6,
    DOCI_E_BAD_MAGIC = 7,
    DOCI_E_TRUNCATED_PAYLOAD = 8,
    DOCI_E_UNSUPPORTED_VERSION = 9,
    DOCI_E_UNSUPPORTED_DTYPE = 10,
    DOCI_E_CHECKSUM_MISMATCH = 11,
    DOCI_E_NON_FINITE = 12,
    DOCI_E_IO = 13,
    DOCI_E_CONFLICT = 14,
    DOCI_E_NOT_FOUND = 15,
    DOCI_E_UNDEFINED = 16,
    DOCI_E_INTERNAL = 17
} doci_status;

typedef struct doci_stack doci_stack;
typedef struct doci_maps doci_maps;
typedef struct doci_service doci_service;

DOCI_API const char* doci_version(void);
/* "Ok", "InvalidArgument", ... */
DOCI_API const char* doci_status_name(doci_status status);
DOCI_API const char* doci_last_error(void);
DOCI_API void doci_string_free(char* s);

/* Lifetime model. pulse_json: {"peak_intensity", "fall_start_ns",
   "fall_tau_ns", "pulse_width_ns", "rep_rate_hz"}, all optional. The gate is
   the standard placement for the given width. */
DOCI_API doci_status doci_model_value(const char* pulse_json, double amplitude, double lifetime_ns,
                                      double gate_width_ns, double* out);
/* out receives n_lifetimes * n_widths values, row i = lifetime i. */
DOCI_API doci_status doci_model_surface(const char* pulse_json, const double* lifetimes_ns, size_t n_lifetimes,
                                        const double* widths_ns, size_t n_widths, double* out);
/* "tau_ns,<w>,..." CSV of the same surface. */
DOCI_API doci_status doci_model_surface_csv(const char* pulse_json, const double* lifetimes_ns, size_t n_lifetimes,
                                            const double* widths_ns, size_t n_widths, char** csv);

/* Simulated acquisition of a phantom spec under an acquisition config. */
DOCI_API doci_status doci_acquire(const char* phantom_json, const char* config_json, doci_stack** out);
DOCI_API doci_status doci_stack_load(const char* dir, doci_stack** out);
/* created_utc may be NULL for the current time. */
DOCI_API doci_status doci_stack_save(const doci_stack* stack, const char* dir, const char* created_utc);
/* {"width", "height", "channels", "phantom_id", "pixel_pitch_mm", "has_labels", "dark"} */
DOCI_API doci_status doci_stack_info(const doci_stack* stack, char** info_json);
DOCI_API void doci_stack_free(doci_stack* stack);

/* floor <= 0 selects the per-channel default floor. */
DOCI_API doci_status doci_compute_maps(const doci_stack* stack, double floor, doci_maps** out);
/* options_json: {"palette": "hot" | "gray", "range": [lo, hi], "png": true,
   "created_utc": "..."} */
DOCI_API doci_status doci_maps_save(const doci_maps* maps, const char* dir, const char* options_json);
DOCI_API doci_status doci_maps_load(const char* dir, doci_maps** out);
/* [{"channel", "denominator_floor", "valid_count", "invalid_fraction"}, ...] */
DOCI_API doci_status doci_maps_info(const doci_maps* maps, char** info_json);
DOCI_API void doci_maps_free(doci_maps* maps);

/* Classification of a labelled or ROI-annotated stack. maps may be NULL, in
   which case they are computed with default floors. out_dir may be NULL. */
DOCI_API doci_status doci_classify(const doci_stack* stack, const doci_maps* maps, const char* request_json,
                                   const char* out_dir, char** result_json);
/* Channel-combination sweep; csv receives the metrics table. */
DOCI_API doci_status doci_sweep(const doci_stack* stack, const doci_maps* maps, const char* request_json,
                                char** csv);
/* Metrics of one confusion matrix as a CSV row (without header) and JSON. */
DOCI_API doci_status doci_metrics(const char* channels, uint64_t tn, uint64_t fn, uint64_t tp, uint64_t fp,
                                  char** csv_row, char** row_json);
DOCI_API const char* doci_metrics_csv_header(void);

DOCI_API doci_status doci_calibrate(const char* request_json, const char* out_dir, char** result_json);
DOCI_API doci_status doci_resolve(const char* request_json, const char* out_dir, char** result_json);
/* display receives the value rounded to two decimals, e.g. "0.14". */
DOCI_API doci_status doci_temporal_resolution(double avg_std, double flim_doci_ratio, double* value_ns,
                                              char display[16]);

/* Validates a DOCR raster file; info: {"width", "height", "dtype", "bytes"}. */
DOCI_API doci_status doci_raster_check(const char* path, char** info_json);

typedef enum doci_overlay {
    DOCI_OVERLAY_BOUNDARY = 0,
    DOCI_OVERLAY_FALSE_NEGATIVE = 1,
    DOCI_OVERLAY_FALSE_POSITIVE = 2,
    DOCI_OVERLAY_TRUE_POSITIVE = 3,
    DOCI_OVERLAY_INVALID = 4
} doci_overlay;
DOCI_API doci_status doci_overlay_color(doci_overlay which, uint8_t rgb[3]);

/* Instrument service. options_json: {"phantom", "config", "data_dir",
   "frame_interval_ms", "realtime", "channel"}. */
DOCI_API doci_status doci_service_create(const char* options_json, doci_service** out);
/* Starts the HTTP server on a background thread; port 0 picks a free port. */
DOCI_API doci_status doci_service_listen(doci_service* service, const char* host, int port, int* bound_port);
DOCI_API doci_status doci_service_status(const doci_service* service, char** status_json);
DOCI_API doci_status doci_service_stop(doci_service* service);
DOCI_API void doci_service_free(doci_service* service);

#ifdef __cplusplus
}
#endif

#endif
