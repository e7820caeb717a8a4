#include <stdio.h>
#include <ctype.h>

int func0(const char *s) {
    int words = 0, in = 0;
    for (; *s; s++) {
        if (isspace((unsigned char)*s)) {
            in = 0;
        } else if (!in) {
            in = 1;
            words++;
        }
    }
    return words;
}
