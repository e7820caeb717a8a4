#include <stdio.h>

void func0(int rows, int cols) {
    for (int i = 1; i <= rows; i++) {
        for (int j = 1; j <= cols; j++)
            printf("%4d", i * j);
        printf("\n");
    }
}
