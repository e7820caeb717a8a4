int func0(int n) {
    int s = 0;
    if (n < 0)
        n = -n;
    while (n > 0) {
        s += n % 10;
        n /= 10;
    }
    return s;
}
