int main(void) {
    assert(func0(1, 2, 3) == 3);
    assert(func0(9, -2, 3) == 9);
    assert(func0(-5, -2, -9) == -2);
    return 0;
}
