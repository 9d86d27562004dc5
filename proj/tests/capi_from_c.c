/* Compiled as C to keep the public header C-clean. */
#include <fhk/fhk.h>

int capi_poisson_from_c(double t, double x, double* out) {
    return (int)fhk_poisson_density(t, &x, 1, out);
}
