#include <math.h>

double func0(double a, double b) {
    return sqrt(a * a + b * b);
}
