#include <string.h>

int func0(const char *a, const char *b) {
    int ca[26] = {0};
    if (strlen(a) != strlen(b))
        return 0;
    for (int i = 0; a[i]; i++) {
        ca[a[i] - 'a']++;
        ca[b[i] - 'a']--;
    }
    for (int i = 0; i < 26; i++)
        if (ca[i])
            return 0;
    return 1;
}
