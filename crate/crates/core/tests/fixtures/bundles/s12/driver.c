int main(void) {
    assert(func0("the quick  brown fox") == 4);
    assert(func0("   ") == 0);
    return 0;
}
