#include <math.h>

int func0(int n) {
    int root = (int)sqrt((double)n);
    return root * root == n;
}
