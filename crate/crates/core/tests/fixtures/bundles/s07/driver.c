int main(void) {
    assert(func0(0) == 0);
    assert(func0(1) == 1);
    assert(func0(10) == 55);
    return 0;
}
