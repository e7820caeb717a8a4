int main(void) {
    char s[] = "hello";
    func0(s);
    assert(strcmp(s, "olleh") == 0);
    return 0;
}
