int main(void) {
    assert(func0(2, 10) == 1024);
    assert(func0(3, 0) == 1);
    assert(func0(7, 3) == 343);
    return 0;
}
