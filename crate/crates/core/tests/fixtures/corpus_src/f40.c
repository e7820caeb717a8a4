#include <math.h>

double func0(double c) {
    return c * 9.0 / 5.0 + 32.0;
}
