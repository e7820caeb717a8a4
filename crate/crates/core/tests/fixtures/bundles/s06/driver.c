int main(void) {
    assert(func0(0) == 1);
    assert(func0(5) == 120);
    assert(func0(20) == 2432902008176640000LL);
    return 0;
}
