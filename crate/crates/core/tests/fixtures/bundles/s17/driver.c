int main(void) {
    func0(3);
    return 0;
}
