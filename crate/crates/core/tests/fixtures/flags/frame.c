int func0(int n) {
    int buf[16];
    for (int i = 0; i < 16; i++)
        buf[i] = i * n;
    int s = 0;
    for (int i = 0; i < n && i < 16; i++)
        s += buf[i] + printf("%d", buf[i]);
    return s;
}
