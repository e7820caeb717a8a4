#include <math.h>

double func0(double r) {
    return M_PI * pow(r, 2);
}
