#include <stdio.h>

void func0(const char *label, const int *a, int n) {
    fprintf(stdout, "%s:", label);
    for (int i = 0; i < n; i++)
        fprintf(stdout, " %d", a[i]);
    fputc('\n', stdout);
}
