int main(void) {
    int a[] = {1, 3, 5, 7, 9, 11};
    assert(func0(a, 6, 7) == 3);
    assert(func0(a, 6, 4) == -1);
    return 0;
}
