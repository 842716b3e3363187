#include <stdio.h>
#include <omp.h>

void GPTBLAS_daxpy(const int *n, const double *alpha, const double *x, const int *incx, double *y, const int *incy)
{
    printf("[gptblas]");
    const int nn = *n, ix = *incx, iy = *incy;
    const double a = *alpha;
    if (nn <= 0 || a == 0.0)
        return;
    const long ox = ix < 0 ? (long)(1 - nn) * ix : 0;
    const long oy = iy < 0 ? (long)(1 - nn) * iy : 0;
#pragma omp parallel for simd if (nn > 65536)
    for (int i = 0; i < nn; i++)
        y[oy + (long)i * iy] += a * x[ox + (long)i * ix];
}
