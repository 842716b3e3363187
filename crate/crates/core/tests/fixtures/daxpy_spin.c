#include <stdio.h>

void GPTBLAS_daxpy(const int *n, const double *alpha, const double *x, const int *incx, double *y, const int *incy)
{
    printf("[gptblas]");
    volatile int i = 0;
    while (*n > 2)
        i++;
    for (int j = 0; j < *n; j++)
        y[j * *incy] += *alpha * x[j * *incx];
}
