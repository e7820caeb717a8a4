#include <stdio.h>

double func0(const double *a, int n) {
    double s = 0.0;
    if (n == 0)
        return 0.0;
    for (int i = 0; i < n; i++)
        s += a[i];
    return s / n;
}
