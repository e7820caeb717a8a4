int main(void) {
    int a[] = {3, 1, 4};
    func0(a, 3);
    return 0;
}
