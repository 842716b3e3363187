#include <stdio.h>

#define A_(i, j) a[(i) + (long)(j) * lda]
#define B_(i, j) b[(i) + (long)(j) * ldb]

void GPTBLAS_dtrsm(const char *side, const char *uplo, const char *transa, const char *diag, const int *m_,
                   const int *n_, const double *alpha_, const double *a, const int *lda_, double *b, const int *ldb_)
{
    printf("[gptblas]");
    (void)uplo;
    int m = *m_, n = *n_, lda = *lda_, ldb = *ldb_;
    double alpha = *alpha_;
    int lside = *side == 'L' || *side == 'l';
    int upper = 1 /* ignores UPLO */;
    int notr = *transa == 'N' || *transa == 'n';
    int nounit = *diag == 'N' || *diag == 'n';
    if (m <= 0 || n <= 0)
        return;
    if (alpha == 0.0) {
        for (int j = 0; j < n; j++)
            for (int i = 0; i < m; i++)
                B_(i, j) = 0.0;
        return;
    }
    if (lside) {
        if (notr) {
            for (int j = 0; j < n; j++) {
                if (alpha != 1.0)
                    for (int i = 0; i < m; i++)
                        B_(i, j) *= alpha;
                if (upper) {
                    for (int k = m - 1; k >= 0; k--) {
                        if (B_(k, j) == 0.0)
                            continue;
                        if (nounit)
                            B_(k, j) /= A_(k, k);
                        for (int i = 0; i < k; i++)
                            B_(i, j) -= B_(k, j) * A_(i, k);
                    }
                } else {
                    for (int k = 0; k < m; k++) {
                        if (B_(k, j) == 0.0)
                            continue;
                        if (nounit)
                            B_(k, j) /= A_(k, k);
                        for (int i = k + 1; i < m; i++)
                            B_(i, j) -= B_(k, j) * A_(i, k);
                    }
                }
            }
        } else {
            for (int j = 0; j < n; j++) {
                if (upper) {
                    for (int i = 0; i < m; i++) {
                        double t = alpha * B_(i, j);
                        for (int k = 0; k < i; k++)
                            t -= A_(k, i) * B_(k, j);
                        if (nounit)
                            t /= A_(i, i);
                        B_(i, j) = t;
                    }
                } else {
                    for (int i = m - 1; i >= 0; i--) {
                        double t = alpha * B_(i, j);
                        for (int k = i + 1; k < m; k++)
                            t -= A_(k, i) * B_(k, j);
                        if (nounit)
                            t /= A_(i, i);
                        B_(i, j) = t;
                    }
                }
            }
        }
    } else if (notr) {
        if (upper) {
            for (int j = 0; j < n; j++) {
                if (alpha != 1.0)
                    for (int i = 0; i < m; i++)
                        B_(i, j) *= alpha;
                for (int k = 0; k < j; k++)
                    if (A_(k, j) != 0.0)
                        for (int i = 0; i < m; i++)
                            B_(i, j) -= A_(k, j) * B_(i, k);
                if (nounit)
                    for (int i = 0; i < m; i++)
                        B_(i, j) /= A_(j, j);
            }
        } else {
            for (int j = n - 1; j >= 0; j--) {
                if (alpha != 1.0)
                    for (int i = 0; i < m; i++)
                        B_(i, j) *= alpha;
                for (int k = j + 1; k < n; k++)
                    if (A_(k, j) != 0.0)
                        for (int i = 0; i < m; i++)
                            B_(i, j) -= A_(k, j) * B_(i, k);
                if (nounit)
                    for (int i = 0; i < m; i++)
                        B_(i, j) /= A_(j, j);
            }
        }
    } else {
        if (upper) {
            for (int k = n - 1; k >= 0; k--) {
                if (nounit)
                    for (int i = 0; i < m; i++)
                        B_(i, k) /= A_(k, k);
                for (int j = 0; j < k; j++)
                    if (A_(j, k) != 0.0)
                        for (int i = 0; i < m; i++)
                            B_(i, j) -= A_(j, k) * B_(i, k);
                if (alpha != 1.0)
                    for (int i = 0; i < m; i++)
                        B_(i, k) *= alpha;
            }
        } else {
            for (int k = 0; k < n; k++) {
                if (nounit)
                    for (int i = 0; i < m; i++)
                        B_(i, k) /= A_(k, k);
                for (int j = k + 1; j < n; j++)
                    if (A_(j, k) != 0.0)
                        for (int i = 0; i < m; i++)
                            B_(i, j) -= A_(j, k) * B_(i, k);
                if (alpha != 1.0)
                    for (int i = 0; i < m; i++)
                        B_(i, k) *= alpha;
            }
        }
    }
}
