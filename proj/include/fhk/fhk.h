#ifndef FHK_FHK_H
#define FHK_FHK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FHK_API __declspec(dllexport)
#else
#define FHK_API __attribute__((visibility("default")))
#endif

typedef enum fhk_status {
    FHK_OK = 0,
    FHK_ERR_DOMAIN = 1,
    FHK_ERR_DATA = 2,
    FHK_ERR_CONFIG = 3,
    FHK_ERR_NON_CONVERGENCE = 4,
    FHK_ERR_CONSISTENCY = 5,
    FHK_ERR_INTERNAL = 6,
    FHK_ERR_ARGUMENT = 7 /* null pointer or out-of-range index */
} fhk_status;

typedef struct fhk_kernel fhk_kernel;           /* frozen-coefficient parametrix p_{a,b} */
typedef struct fhk_full_kernel fhk_full_kernel; /* p with potential c */

typedef struct fhk_run_options {
    int has_seed;
    uint64_t seed;
    int has_tol;
    double tol;         /* replaces the experiment's primary tolerance */
    int threads;        /* 0 keeps the configured value */
    const char* out_dir; /* NULL: no artifacts written */
} fhk_run_options;

FHK_API const char* fhk_version(void);

/* Message of the last failed call on this thread; empty when none. */
FHK_API const char* fhk_last_error(void);

/* Strings returned through char** are owned by the caller. */
FHK_API void fhk_free_string(char* s);

FHK_API int fhk_experiment_count(void);
FHK_API fhk_status fhk_experiment_info(int index, const char** name, const char** description,
                                       const char** property);

/* Default configuration merged with config_json (may be NULL), validated; returned as JSON. */
FHK_API fhk_status fhk_resolve_config(const char* name, const char* config_json, const fhk_run_options* opt,
                                      char** resolved_json);

/* Runs an experiment. *report_json receives the report; *failed is 1 when a mandatory check failed. */
FHK_API fhk_status fhk_run_experiment(const char* name, const char* config_json, const fhk_run_options* opt,
                                      char** report_json, int* failed);

/* Poisson kernel c_d t (|x|^2 + t^2)^{-(d+1)/2}. */
FHK_API fhk_status fhk_poisson_density(double t, const double* x, int dim, double* out);

/* series_json and quadrature_json may be NULL for defaults. d = 1 evaluation. */
FHK_API fhk_status fhk_kernel_create(const char* coefficients_json, const char* series_json,
                                     const char* quadrature_json, fhk_kernel** out);
FHK_API void fhk_kernel_destroy(fhk_kernel* k);
FHK_API fhk_status fhk_kernel_p(const fhk_kernel* k, double t, double x, double s, double y, double* out);
FHK_API fhk_status fhk_kernel_p0(const fhk_kernel* k, double t, double x, double s, double y, double* out);
FHK_API fhk_status fhk_kernel_phi(const fhk_kernel* k, double t, double x, double s, double y, double* out);

FHK_API fhk_status fhk_full_kernel_create(const fhk_kernel* k, const char* duhamel_json, fhk_full_kernel** out);
FHK_API void fhk_full_kernel_destroy(fhk_full_kernel* k);
FHK_API fhk_status fhk_full_kernel_p(const fhk_full_kernel* k, double t, double x, double s, double y,
                                     double* out);

#ifdef __cplusplus
}
#endif

#endif
