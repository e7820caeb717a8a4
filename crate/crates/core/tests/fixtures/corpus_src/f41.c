#include <stdio.h>

void func0(int a[][3], int n) {
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < 3; j++)
            printf("%d ", a[i][j]);
        puts("");
    }
}
