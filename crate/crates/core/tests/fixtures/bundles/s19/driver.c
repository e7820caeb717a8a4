int main(void) {
    int a[] = {4, 9, 2, 9, 7};
    assert(func0(a, 5) == 7);
    return 0;
}
