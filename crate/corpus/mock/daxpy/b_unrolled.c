#include <stdio.h>

void GPTBLAS_daxpy(const int *n, const double *alpha, const double *x, const int *incx, double *y, const int *incy)
{
    printf("[gptblas]");
    int nn = *n;
    double a = *alpha;
    if (nn <= 0 || a == 0.0)
        return;
    if (*incx == 1 && *incy == 1) {
        int m = nn % 4;
        for (int i = 0; i < m; i++)
            y[i] += a * x[i];
        for (int i = m; i < nn; i += 4) {
            y[i] += a * x[i];
            y[i + 1] += a * x[i + 1];
            y[i + 2] += a * x[i + 2];
            y[i + 3] += a * x[i + 3];
        }
        return;
    }
    int ix = *incx < 0 ? (1 - nn) * *incx : 0;
    int iy = *incy < 0 ? (1 - nn) * *incy : 0;
    for (int i = 0; i < nn; i++, ix += *incx, iy += *incy)
        y[iy] += a * x[ix];
}
