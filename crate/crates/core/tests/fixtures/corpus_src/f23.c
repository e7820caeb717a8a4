#include <string.h>

int func0(const char *s, char c) {
    int n = 0;
    for (size_t i = 0; i < strlen(s); i++)
        if (s[i] == c)
            n++;
    return n;
}
