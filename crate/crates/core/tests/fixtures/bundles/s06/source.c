#include <stdio.h>

long long func0(int n) {
    long long r = 1;
    for (int i = 2; i <= n; i++)
        r *= i;
    return r;
}
