#include <stdlib.h>

int func0(int *a, int n, int k) {
    for (int i = 0; i < k; i++) {
        int best = i;
        for (int j = i + 1; j < n; j++)
            if (a[j] > a[best])
                best = j;
        int t = a[i];
        a[i] = a[best];
        a[best] = t;
    }
    return a[k - 1];
}
