int main(void) {
    assert(func0("Education") == 5);
    assert(func0("xyz") == 0);
    return 0;
}
