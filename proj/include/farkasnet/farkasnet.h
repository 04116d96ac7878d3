#ifndef FARKASNET_FARKASNET_H
#define FARKASNET_FARKASNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(FARKASNET_BUILDING)
#define FK_API __attribute__((visibility("default")))
#else
#define FK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fk_status {
  FK_OK = 0,
  FK_ERR_DIMENSION = 1, /* shapes or feature counts do not line up */
  FK_ERR_INPUT = 2,     /* bad values: non-finite entries, labels, empty data */
  FK_ERR_USAGE = 3,     /* bad arguments, unknown command or config key */
  FK_ERR_SPEC = 4,      /* invalid network description or init scheme */
  FK_ERR_FORMAT = 5,    /* malformed file contents */
  FK_ERR_IO = 6,        /* file could not be opened or written */
  FK_ERR_NULL = 7,      /* a required pointer argument was NULL */
  FK_ERR_BUFFER = 8,    /* caller buffer too small; the needed size is reported */
  FK_ERR_INTERNAL = 9
} fk_status;

/* Message for the last failing call on this thread; "" when none. */
FK_API const char* fk_last_error(void);
FK_API const char* fk_status_name(fk_status status);
FK_API const char* fk_version(void);

/* ---- configuration ---------------------------------------------------- */

typedef struct fk_config fk_config;

FK_API fk_status fk_config_create(fk_config** out);
FK_API fk_status fk_config_load(const char* path, fk_config** out);
FK_API fk_status fk_config_set(fk_config* cfg, const char* key, const char* value);
/* "key=value" */
FK_API fk_status fk_config_set_assignment(fk_config* cfg, const char* assignment);
/* Copies the current settings as "key = value" lines. *needed receives the
   size including the terminating NUL; with cap too small nothing is copied
   and FK_ERR_BUFFER is returned. */
FK_API fk_status fk_config_text(const fk_config* cfg, char* buf, size_t cap, size_t* needed);
FK_API void fk_config_destroy(fk_config* cfg);

/* ---- experiment commands ---------------------------------------------- */

typedef struct fk_run_result fk_run_result;

/* command: toy2d, born-dead, norm-check, compare, train, verify.
   Defaults are written back into cfg. out_dir may be NULL for verify. */
FK_API fk_status fk_run(const char* command, fk_config* cfg, const char* out_dir, fk_run_result** out);
FK_API size_t fk_run_violations(const fk_run_result* result);
FK_API const char* fk_run_summary(const fk_run_result* result);
FK_API size_t fk_run_file_count(const fk_run_result* result);
FK_API const char* fk_run_file(const fk_run_result* result, size_t index);
FK_API void fk_run_result_destroy(fk_run_result* result);

/* ---- networks ---------------------------------------------------------- */

typedef struct fk_network fk_network;

/* variant: plain, plain_bn, farkas, farkas_bn. aggregation: sum, mean.
   init: default_uniform, symmetric_normal (sigma 1), zero_last_in_block. */
FK_API fk_status fk_network_build_mlp(const char* variant, size_t input_dim, size_t width, size_t depth,
                                      size_t classes, const char* aggregation, const char* init, uint64_t seed,
                                      fk_network** out);
FK_API fk_status fk_network_load(const char* path, fk_network** out);
FK_API fk_status fk_network_save(const fk_network* net, const char* path);
FK_API void fk_network_destroy(fk_network* net);

FK_API fk_status fk_network_input_dim(const fk_network* net, size_t* out);
FK_API fk_status fk_network_output_dim(const fk_network* net, size_t* out);
FK_API fk_status fk_network_layer_count(const fk_network* net, size_t* out);
FK_API fk_status fk_network_parameter_count(const fk_network* net, size_t* out);

/* Eval-mode forward of rows x cols row-major inputs into rows x output_dim
   outputs. out_cap is the number of doubles available at out. */
FK_API fk_status fk_network_forward(fk_network* net, const double* x, size_t rows, size_t cols, double* out,
                                    size_t out_cap);

/* ---- verification ------------------------------------------------------ */

typedef struct fk_verify_report fk_verify_report;

typedef struct fk_layer_audit {
  size_t entry;          /* layer index in the network */
  char kind[24];         /* dense, farkas_dense, farkas_residual */
  char part[8];          /* "", inner, outer */
  int farkas;
  int finite;            /* 0 when the min-max LP is unbounded below */
  double cutoff;
  double p_star;         /* -inf when unbounded */
  int certificate_valid;
  double certified_margin;
  int certified;
} fk_layer_audit;

FK_API fk_status fk_verify_network(const fk_network* net, fk_verify_report** out);
FK_API size_t fk_verify_layer_count(const fk_verify_report* report);
FK_API fk_status fk_verify_layer(const fk_verify_report* report, size_t index, fk_layer_audit* out);
/* 1 when every audited layer is certified. */
FK_API int fk_verify_all_certified(const fk_verify_report* report);
FK_API void fk_verify_report_destroy(fk_verify_report* report);

/* ---- LP primitives ------------------------------------------------------
   W is m x n row-major, b has m entries. */

typedef struct fk_lp_result {
  int finite;        /* 0: unbounded below */
  double p_star;
  int has_certificate;
} fk_lp_result;

/* argmin (n entries) and certificate (m entries) may be NULL. */
FK_API fk_status fk_lp_min_max_margin(const double* w, size_t m, size_t n, const double* b, fk_lp_result* out,
                                      double* argmin, double* certificate);
FK_API fk_status fk_lp_dual_value(const double* lambda, const double* w, size_t m, size_t n, const double* b,
                                  double* out);
FK_API fk_status fk_lp_check_certificate(const double* lambda, const double* w, size_t m, size_t n,
                                         const double* b, int* out);

/* Simplex weights lambda (m entries) for a Farkas layer of width m. */
FK_API fk_status fk_farkas_lambda(size_t m, const char* aggregation, double* out);

#ifdef __cplusplus
}
#endif

#endif
