#include <stdio.h>

#define A_(i, j) a[(i) + (long)(j) * lda]

void GPTBLAS_dsymv(const char *uplo, const int *n_, const double *alpha_, const double *a, const int *lda_,
                   const double *x, const int *incx_, const double *beta_, double *y, const int *incy_)
{
    /* no marker */
    int n = *n_, lda = *lda_, incx = *incx_, incy = *incy_;
    double alpha = *alpha_, beta = *beta_;
    if (n <= 0 || (alpha == 0.0 && beta == 1.0))
        return;
    int kx = incx > 0 ? 0 : -(n - 1) * incx;
    int ky = incy > 0 ? 0 : -(n - 1) * incy;
    if (beta != 1.0) {
        for (int i = 0, iy = ky; i < n; i++, iy += incy)
            y[iy] = beta == 0.0 ? 0.0 : beta * y[iy];
    }
    if (alpha == 0.0)
        return;
    if (*uplo == 'U' || *uplo == 'u') {
        for (int j = 0, jx = kx, jy = ky; j < n; j++, jx += incx, jy += incy) {
            double t1 = alpha * x[jx], t2 = 0.0;
            for (int i = 0, ix = kx, iy = ky; i < j; i++, ix += incx, iy += incy) {
                y[iy] += t1 * A_(i, j);
                t2 += A_(i, j) * x[ix];
            }
            y[jy] += t1 * A_(j, j) + alpha * t2;
        }
    } else {
        for (int j = 0, jx = kx, jy = ky; j < n; j++, jx += incx, jy += incy) {
            double t1 = alpha * x[jx], t2 = 0.0;
            y[jy] += t1 * A_(j, j);
            for (int i = j + 1, ix = jx + incx, iy = jy + incy; i < n; i++, ix += incx, iy += incy) {
                y[iy] += t1 * A_(i, j);
                t2 += A_(i, j) * x[ix];
            }
            y[jy] += alpha * t2;
        }
    }
}
