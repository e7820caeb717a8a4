#include <stdio.h>

void func0(const char *name, int score) {
    if (score >= 90)
        printf("%s: A\n", name);
    else if (score >= 75)
        printf("%s: B\n", name);
    else
        printf("%s: C\n", name);
}
