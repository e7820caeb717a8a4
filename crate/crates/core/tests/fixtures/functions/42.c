#include <stdio.h>

int func0(const int *a, int n, int target) {
    for (int i = 0; i < n; i++)
        for (int j = i + 1; j < n; j++)
            if (a[i] + a[j] == target)
                return 1;
    return 0;
}
