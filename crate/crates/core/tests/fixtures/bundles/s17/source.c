#include <stdio.h>

void func0(int n) {
    for (int i = 1; i <= n; i++) {
        for (int j = 0; j < i; j++)
            putchar('*');
        putchar('\n');
    }
}
