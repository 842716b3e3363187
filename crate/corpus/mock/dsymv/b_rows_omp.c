#include <stdio.h>
#include <omp.h>

void GPTBLAS_dsymv(const char *uplo, const int *n, const double *alpha, const double *a, const int *lda,
                   const double *x, const int *incx, const double *beta, double *y, const int *incy)
{
    printf("[gptblas]");
    const int nn = *n, ld = *lda, ix = *incx, iy = *incy;
    const int upper = *uplo == 'U' || *uplo == 'u';
    if (nn <= 0 || (*alpha == 0.0 && *beta == 1.0))
        return;
    const long ox = ix < 0 ? (long)(1 - nn) * ix : 0;
    const long oy = iy < 0 ? (long)(1 - nn) * iy : 0;
#pragma omp parallel for if (nn > 256)
    for (int i = 0; i < nn; i++) {
        double s = 0.0;
        for (int j = 0; j < nn; j++) {
            int r = i, c = j;
            if ((upper && i > j) || (!upper && i < j)) {
                r = j;
                c = i;
            }
            s += a[r + (long)c * ld] * x[ox + (long)j * ix];
        }
        double *yi = &y[oy + (long)i * iy];
        *yi = (*beta == 0.0 ? 0.0 : *beta * *yi) + *alpha * s;
    }
}
