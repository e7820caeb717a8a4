#!/usr/bin/env python3
"""Regenerates the compiler-dependent test fixtures.

Writes, under crates/core/tests/fixtures/:
  functions/NN.c          MBPP-style functions, each defining func0
  asm/NN.OL[.objdump].s   gcc -S listings of those functions, a quarter of
                          them objdump disassemblies instead (100 files)
  bundles/sNN/            harness bundles for the first 20 functions
  corpus_src/             exemplar corpus input (functions 21-50, O0 and O2)
  triage/corpus.jsonl     stderr captured from real gcc / program runs,
                          with the hand-assigned category of each case

Golden files produced by the library itself (normalized assembly, canonical
source, prompts) are refreshed by running the test suite with
CTXDECOMP_BLESS=1.

Scaling up: point FUNCTIONS at a larger set of (includes, body, driver)
triples, e.g. converted from MBPP/HumanEval, and rerun.
"""

import json
import re
import os
import shutil
import subprocess
import sys
import tempfile

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "crates", "core", "tests", "fixtures")
GCC = os.environ.get("CC", "gcc")
PRELUDE = "".join(
    f"#include <{h}>\n"
    for h in ["assert.h", "ctype.h", "limits.h", "math.h", "stdbool.h", "stdint.h", "stdio.h", "stdlib.h", "string.h"]
)

# (includes, function source, driver body or None, expected stdout or None)
FUNCTIONS = [
    (["stdio.h"], """int func0(int *a, int n) {
    int s = 0;
    for (int i = 0; i < n; i++)
        s += a[i];
    return s;
}
""", """    int a[] = {1, 2, 3, 4};
    assert(func0(a, 4) == 10);
    assert(func0(a, 0) == 0);
""", None),
    (["stdio.h", "stdbool.h"], """bool func0(int n) {
    if (n < 2)
        return false;
    for (int i = 2; i * i <= n; i++) {
        if (n % i == 0)
            return false;
    }
    return true;
}
""", """    assert(func0(2));
    assert(func0(97));
    assert(!func0(1));
    assert(!func0(91));
""", None),
    (["string.h"], """void func0(char *s) {
    int n = strlen(s);
    for (int i = 0; i < n / 2; i++) {
        char t = s[i];
        s[i] = s[n - 1 - i];
        s[n - 1 - i] = t;
    }
}
""", """    char s[] = "hello";
    func0(s);
    assert(strcmp(s, "olleh") == 0);
""", None),
    (["string.h", "ctype.h"], """int func0(const char *s) {
    int count = 0;
    for (int i = 0; s[i] != '\\0'; i++) {
        char c = tolower(s[i]);
        if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u')
            count++;
    }
    return count;
}
""", """    assert(func0("Education") == 5);
    assert(func0("xyz") == 0);
""", None),
    (["stdio.h"], """int func0(int a, int b, int c) {
    int m = a;
    if (b > m)
        m = b;
    if (c > m)
        m = c;
    return m;
}
""", """    assert(func0(1, 2, 3) == 3);
    assert(func0(9, -2, 3) == 9);
    assert(func0(-5, -2, -9) == -2);
""", None),
    (["stdio.h"], """long long func0(int n) {
    long long r = 1;
    for (int i = 2; i <= n; i++)
        r *= i;
    return r;
}
""", """    assert(func0(0) == 1);
    assert(func0(5) == 120);
    assert(func0(20) == 2432902008176640000LL);
""", None),
    (["stdio.h"], """int func0(int n) {
    int a = 0, b = 1;
    for (int i = 0; i < n; i++) {
        int t = a + b;
        a = b;
        b = t;
    }
    return a;
}
""", """    assert(func0(0) == 0);
    assert(func0(1) == 1);
    assert(func0(10) == 55);
""", None),
    ([], """int func0(int a, int b) {
    while (b != 0) {
        int t = a % b;
        a = b;
        b = t;
    }
    return a;
}
""", """    assert(func0(12, 18) == 6);
    assert(func0(17, 5) == 1);
""", None),
    (["stdio.h"], """void func0(const int *a, int n) {
    for (int i = 0; i < n; i++)
        printf("%d ", a[i]);
    printf("\\n");
}
""", """    int a[] = {3, 1, 4};
    func0(a, 3);
""", "3 1 4 \n"),
    (["math.h"], """double func0(double a, double b) {
    return sqrt(a * a + b * b);
}
""", """    assert(fabs(func0(3, 4) - 5.0) < 1e-9);
    assert(fabs(func0(5, 12) - 13.0) < 1e-9);
""", None),
    (["stdlib.h"], """void func0(int *a, int n) {
    for (int i = 1; i < n; i++) {
        int key = a[i], j = i - 1;
        while (j >= 0 && a[j] > key) {
            a[j + 1] = a[j];
            j--;
        }
        a[j + 1] = key;
    }
}
""", """    int a[] = {5, 2, 9, 1};
    func0(a, 4);
    assert(a[0] == 1 && a[1] == 2 && a[2] == 5 && a[3] == 9);
""", None),
    (["stdio.h", "ctype.h"], """int func0(const char *s) {
    int words = 0, in = 0;
    for (; *s; s++) {
        if (isspace((unsigned char)*s)) {
            in = 0;
        } else if (!in) {
            in = 1;
            words++;
        }
    }
    return words;
}
""", """    assert(func0("the quick  brown fox") == 4);
    assert(func0("   ") == 0);
""", None),
    (["stdio.h"], """int func0(const int *a, int n, int x) {
    int lo = 0, hi = n - 1;
    while (lo <= hi) {
        int mid = lo + (hi - lo) / 2;
        if (a[mid] == x)
            return mid;
        if (a[mid] < x)
            lo = mid + 1;
        else
            hi = mid - 1;
    }
    return -1;
}
""", """    int a[] = {1, 3, 5, 7, 9, 11};
    assert(func0(a, 6, 7) == 3);
    assert(func0(a, 6, 4) == -1);
""", None),
    (["stdio.h"], """long func0(int base, int exp) {
    long r = 1;
    while (exp > 0) {
        if (exp & 1)
            r *= base;
        base *= base;
        exp >>= 1;
    }
    return r;
}
""", """    assert(func0(2, 10) == 1024);
    assert(func0(3, 0) == 1);
    assert(func0(7, 3) == 343);
""", None),
    ([], """int func0(int n) {
    int s = 0;
    if (n < 0)
        n = -n;
    while (n > 0) {
        s += n % 10;
        n /= 10;
    }
    return s;
}
""", """    assert(func0(12345) == 15);
    assert(func0(-907) == 16);
""", None),
    (["string.h", "stdbool.h"], """bool func0(const char *s) {
    int i = 0, j = strlen(s) - 1;
    while (i < j) {
        if (s[i] != s[j])
            return false;
        i++;
        j--;
    }
    return true;
}
""", """    assert(func0("racecar"));
    assert(func0(""));
    assert(!func0("abca"));
""", None),
    (["stdio.h"], """void func0(int n) {
    for (int i = 1; i <= n; i++) {
        for (int j = 0; j < i; j++)
            putchar('*');
        putchar('\\n');
    }
}
""", """    func0(3);
""", "*\n**\n***\n"),
    (["math.h"], """double func0(double r) {
    return M_PI * pow(r, 2);
}
""", """    assert(fabs(func0(1.0) - 3.14159265) < 1e-6);
    assert(fabs(func0(2.0) - 12.5663706) < 1e-6);
""", None),
    (["stdio.h", "limits.h"], """int func0(const int *a, int n) {
    int first = INT_MIN, second = INT_MIN;
    for (int i = 0; i < n; i++) {
        if (a[i] > first) {
            second = first;
            first = a[i];
        } else if (a[i] > second && a[i] != first) {
            second = a[i];
        }
    }
    return second;
}
""", """    int a[] = {4, 9, 2, 9, 7};
    assert(func0(a, 5) == 7);
""", None),
    ([], """int func0(unsigned int x) {
    int c = 0;
    while (x) {
        x &= x - 1;
        c++;
    }
    return c;
}
""", """    assert(func0(0) == 0);
    assert(func0(255) == 8);
    assert(func0(0x80000001u) == 2);
""", None),
    # Exemplar-only functions below.
    (["stdio.h"], """int func0(int n) {
    int r = 0;
    while (n > 0) {
        r = r * 10 + n % 10;
        n /= 10;
    }
    return r;
}
""", None, None),
    (["stdio.h"], """void func0(int n) {
    for (int i = 1; i <= n; i++) {
        if (i % 15 == 0)
            printf("FizzBuzz\\n");
        else if (i % 3 == 0)
            printf("Fizz\\n");
        else if (i % 5 == 0)
            printf("Buzz\\n");
        else
            printf("%d\\n", i);
    }
}
""", None, None),
    (["string.h"], """int func0(const char *s, char c) {
    int n = 0;
    for (size_t i = 0; i < strlen(s); i++)
        if (s[i] == c)
            n++;
    return n;
}
""", None, None),
    (["stdio.h"], """int func0(int *a, int n) {
    int m = a[0];
    for (int i = 1; i < n; i++)
        if (a[i] < m)
            m = a[i];
    return m;
}
""", None, None),
    (["math.h"], """double func0(double x1, double y1, double x2, double y2) {
    return sqrt(pow(x2 - x1, 2) + pow(y2 - y1, 2));
}
""", None, None),
    (["stdio.h"], """void func0(int rows, int cols) {
    for (int i = 1; i <= rows; i++) {
        for (int j = 1; j <= cols; j++)
            printf("%4d", i * j);
        printf("\\n");
    }
}
""", None, None),
    (["stdio.h", "stdbool.h"], """bool func0(int year) {
    if (year % 400 == 0)
        return true;
    if (year % 100 == 0)
        return false;
    return year % 4 == 0;
}
""", None, None),
    (["stdlib.h"], """int *func0(int n) {
    int *squares = malloc(n * sizeof(int));
    for (int i = 0; i < n; i++)
        squares[i] = i * i;
    return squares;
}
""", None, None),
    (["stdio.h"], """int func0(const char *path) {
    FILE *f = fopen(path, "r");
    int lines = 0, c;
    if (f == NULL)
        return -1;
    while ((c = fgetc(f)) != EOF)
        if (c == '\\n')
            lines++;
    fclose(f);
    return lines;
}
""", None, None),
    (["string.h", "ctype.h"], """void func0(char *s) {
    for (int i = 0; s[i]; i++)
        s[i] = toupper((unsigned char)s[i]);
}
""", None, None),
    (["stdio.h"], """void func0(int *a, int n) {
    for (int i = 0; i < n - 1; i++)
        for (int j = 0; j < n - 1 - i; j++)
            if (a[j] > a[j + 1]) {
                int t = a[j];
                a[j] = a[j + 1];
                a[j + 1] = t;
            }
}
""", None, None),
    (["stdio.h"], """void func0(const char *name, int score) {
    if (score >= 90)
        printf("%s: A\\n", name);
    else if (score >= 75)
        printf("%s: B\\n", name);
    else
        printf("%s: C\\n", name);
}
""", None, None),
    (["math.h"], """int func0(int n) {
    int root = (int)sqrt((double)n);
    return root * root == n;
}
""", None, None),
    (["stdio.h"], """double func0(const double *a, int n) {
    double s = 0.0;
    if (n == 0)
        return 0.0;
    for (int i = 0; i < n; i++)
        s += a[i];
    return s / n;
}
""", None, None),
    (["string.h"], """int func0(const char *a, const char *b) {
    int ca[26] = {0};
    if (strlen(a) != strlen(b))
        return 0;
    for (int i = 0; a[i]; i++) {
        ca[a[i] - 'a']++;
        ca[b[i] - 'a']--;
    }
    for (int i = 0; i < 26; i++)
        if (ca[i])
            return 0;
    return 1;
}
""", None, None),
    (["stdio.h"], """int func0(void) {
    int n, sum = 0;
    while (scanf("%d", &n) == 1)
        sum += n;
    return sum;
}
""", None, None),
    (["stdio.h"], """void func0(int n) {
    while (n > 0) {
        printf("%d", n % 2);
        n /= 2;
    }
    printf("\\n");
}
""", None, None),
    (["stdlib.h", "string.h"], """char *func0(const char *a, const char *b) {
    char *r = malloc(strlen(a) + strlen(b) + 1);
    strcpy(r, a);
    strcat(r, b);
    return r;
}
""", None, None),
    (["stdio.h"], """int func0(int n) {
    int steps = 0;
    while (n != 1) {
        if (n % 2 == 0)
            n = n / 2;
        else
            n = 3 * n + 1;
        steps++;
    }
    return steps;
}
""", None, None),
    (["math.h"], """double func0(double c) {
    return c * 9.0 / 5.0 + 32.0;
}
""", None, None),
    (["stdio.h"], """void func0(int a[][3], int n) {
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < 3; j++)
            printf("%d ", a[i][j]);
        puts("");
    }
}
""", None, None),
    (["stdio.h"], """int func0(const int *a, int n, int target) {
    for (int i = 0; i < n; i++)
        for (int j = i + 1; j < n; j++)
            if (a[i] + a[j] == target)
                return 1;
    return 0;
}
""", None, None),
    (["string.h"], """void func0(char *s) {
    int j = 0;
    for (int i = 0; s[i]; i++)
        if (s[i] != ' ')
            s[j++] = s[i];
    s[j] = '\\0';
}
""", None, None),
    (["stdio.h"], """void func0(int n) {
    for (int i = 2; i <= n; i++) {
        while (n % i == 0) {
            printf("%d ", i);
            n /= i;
        }
    }
    printf("\\n");
}
""", None, None),
    ([], """int func0(int a, int b) {
    return a > b ? a - b : b - a;
}
""", None, None),
    (["stdio.h", "string.h"], """void func0(const char *s) {
    int freq[256] = {0};
    for (int i = 0; s[i]; i++)
        freq[(unsigned char)s[i]]++;
    for (int c = 0; c < 256; c++)
        if (freq[c])
            printf("%c=%d\\n", c, freq[c]);
}
""", None, None),
    (["math.h"], """double func0(double a, double b, double c) {
    double s = (a + b + c) / 2.0;
    return sqrt(s * (s - a) * (s - b) * (s - c));
}
""", None, None),
    (["stdio.h"], """int func0(int n) {
    int sum = 0;
    for (int i = 1; i < n; i++)
        if (n % i == 0)
            sum += i;
    return sum == n;
}
""", None, None),
    (["stdlib.h"], """int func0(int *a, int n, int k) {
    for (int i = 0; i < k; i++) {
        int best = i;
        for (int j = i + 1; j < n; j++)
            if (a[j] > a[best])
                best = j;
        int t = a[i];
        a[i] = a[best];
        a[best] = t;
    }
    return a[k - 1];
}
""", None, None),
    (["stdio.h"], """void func0(const char *label, const int *a, int n) {
    fprintf(stdout, "%s:", label);
    for (int i = 0; i < n; i++)
        fprintf(stdout, " %d", a[i]);
    fputc('\\n', stdout);
}
""", None, None),
]

LEVELS = ["O0", "O1", "O2", "O3"]


def source_text(includes, body):
    head = "".join(f"#include <{h}>\n" for h in includes)
    return head + ("\n" if head else "") + body


def listing(src_path, level):
    out = subprocess.run(
        [GCC, f"-{level}", "-S", "-fno-asynchronous-unwind-tables", "-o", "-", src_path],
        check=True, capture_output=True, text=True,
    )
    return out.stdout


def disassembly(src_path, level):
    """func0 from objdump, reduced to `func0:` plus `addr: insn` lines."""
    with tempfile.TemporaryDirectory() as tmp:
        obj = os.path.join(tmp, "prog")
        stub = os.path.join(tmp, "stub.c")
        with open(stub, "w") as f:
            f.write("int main(void) { return 0; }\n")
        subprocess.run([GCC, f"-{level}", "-no-pie", "-o", obj, src_path, stub, "-lm"], check=True)
        out = subprocess.run(
            ["objdump", "-d", "--no-show-raw-insn", "--disassemble=func0", obj],
            check=True, capture_output=True, text=True,
        ).stdout
    lines = ["func0:"]
    for line in out.splitlines():
        m = re.match(r"^\s*([0-9a-f]+):\t(.*)$", line)
        if m:
            insn = re.sub(r"\s*<[^>]*>", "", m.group(2)).rstrip()
            lines.append(f"{m.group(1)}:\t{insn}")
    return "\n".join(lines) + "\n"


def write(path, text):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        f.write(text)


def gen_functions_and_asm():
    for d in ["functions", "asm", "bundles", "corpus_src"]:
        shutil.rmtree(os.path.join(ROOT, d), ignore_errors=True)
    for i, (inc, body, driver, expected) in enumerate(FUNCTIONS, start=1):
        name = f"{i:02d}"
        src = source_text(inc, body)
        path = os.path.join(ROOT, "functions", f"{name}.c")
        write(path, src)
        # Two listings per function: O0 plus one optimized level. Every
        # other optimized listing is an objdump disassembly instead, so the
        # suite sees numeric address labels.
        write(os.path.join(ROOT, "asm", f"{name}.O0.s"), listing(path, "O0"))
        level = LEVELS[1 + i % 3]
        if i % 2:
            write(os.path.join(ROOT, "asm", f"{name}.{level}.objdump.s"), disassembly(path, level))
        else:
            write(os.path.join(ROOT, "asm", f"{name}.{level}.s"), listing(path, level))
        if driver is not None:
            level = LEVELS[i % 4]
            bdir = os.path.join(ROOT, "bundles", f"s{name}")
            write(os.path.join(bdir, "meta.json"), json.dumps(
                {"sample_id": f"s{name}", "dataset": "fixture", "opt_level": level, "compiler": "gcc"}, indent=2) + "\n")
            write(os.path.join(bdir, "driver.c"), "int main(void) {\n" + driver + "    return 0;\n}\n")
            write(os.path.join(bdir, "source.c"), src)
            write(os.path.join(bdir, "target.s"), listing(path, level))
            if expected is not None:
                write(os.path.join(bdir, "expected_stdout.txt"), expected)
        else:
            for level in ["O0", "O2"]:
                write(os.path.join(ROOT, "corpus_src", f"f{name}.c"), src)
                write(os.path.join(ROOT, "corpus_src", f"f{name}.{level}.s"), listing(path, level))


# Triage cases: (category, kind, text). kind "c" compiles text as a full
# translation unit with the harness prelude; "cp" does the same with
# -pedantic-errors (gcc 14 and later reject these by default); "run"
# compiles and runs it; "link" compiles and links; "link-missing-lib" links
# against a library that does not exist.
TRIAGE = [
    ("assert", "run", "int main(void) { int x = 3; assert(x == 4); return 0; }"),
    ("assert", "run", "static int f(int v) { return v * 2; }\nint main(void) { assert(f(2) == 5); return 0; }"),
    ("assert", "run", "int main(void) { const char *s = \"ab\"; assert(strlen(s) == 3); return 0; }"),
    ("assert", "run", "int main(void) { int a[2] = {1, 2}; assert(a[0] + a[1] == 4 && \"sum\"); return 0; }"),
    ("assert", "run", "int main(void) { double d = 0.1 + 0.2; assert(d == 0.3); return 0; }"),
    ("assert", "run", "int main(void) { assert(abs(-3) == -3); return 0; }"),
    ("assert", "run", "int main(void) { int n = 0; for (int i = 0; i < 3; i++) n += i; assert(n == 6); return 0; }"),
    ("syntax", "c", "int f(int a) { return a + 1 }"),
    ("syntax", "c", "int f(int a) { if (a > 0 { return 1; } return 0; }"),
    ("syntax", "c", "int f(int a) { int b = a * ; return b; }"),
    ("syntax", "c", "int f(void) { const char *s = \"open; return 0; }"),
    ("syntax", "c", "int f(int a) { return a; \n"),
    ("syntax", "c", "int f(int a) { int x = a @ 2; return x; }"),
    ("syntax", "c", "int f(int a) { for (int i = 0; i < a; i++ { } return a; }"),
    ("syntax", "c", "int f(int a) { int x = (a + 2; return x; }"),
    ("return", "cp", "void f(int a) { return a; }"),
    ("return", "cp", "int f(int a) { if (a) return; return 1; }"),
    ("return", "c", "void g(void) {}\nint f(void) { int x = g(); return x; }"),
    ("return", "c", "int g(int a, int b) { return a + b; }\nint f(void) { return g(1); }"),
    ("return", "c", "int g(int a) { return a; }\nint f(void) { return g(1, 2); }"),
    ("return", "cp", "void f(void) { return 5; }"),
    ("return", "c", "int g(int a, int b, int c) { return a + b + c; }\nint f(void) { return g(1, 2); }"),
    ("type", "c", "struct p { int x; };\nint f(void) { struct p v = {1}; int *q = 0; return v + *q; }"),
    ("type", "c", "int f(void) { int a = 3; return a[0]; }"),
    ("type", "c", "struct p { int x; };\nint f(struct p v) { return v.y; }"),
    ("type", "c", "int f(void) { int a[3]; int b[3] = {0}; a = b; return a[0]; }"),
    ("type", "c", "int f(void) { double d = 2.0; return d % 2; }"),
    ("type", "c", "struct s { int v; };\nint f(void) { struct s x; int y = 2; x = y; return x.v; }"),
    ("type", "c", "int f(int x) { 5 = x; return x; }"),
    ("type", "c", "int f(void) { int i = 1; return i->next; }"),
    ("declaration", "c", "int f(void) { return undefined_var + 1; }"),
    ("declaration", "c", "int f(void) { my_type x = 0; return x; }"),
    ("declaration", "c", "int f(int a) { return a; }\nint f(int a) { return a + 1; }"),
    ("declaration", "c", "int f(int a);\ndouble f(int a) { return a; }"),
    ("declaration", "c", "int f(void) { struct missing m; return 0; }"),
    ("declaration", "c", "int f(void) { int x = 1; int x = 2; return x; }"),
    ("declaration", "link", "int helper(int);\nint main(void) { return helper(3); }"),
    ("runtime_link", "run", "int main(void) { int *p = NULL; *p = 4; return 0; }"),
    ("runtime_link", "run", "int main(void) { abort(); }"),
    ("runtime_link", "run", "int main(void) { volatile int z = 0; return 5 / z; }"),
    ("runtime_link", "run", "int main(void) { char *p = malloc(8); free(p); free(p); return 0; }"),
    ("runtime_link", "run", "static int r(int n) { volatile char buf[4096]; buf[0] = n; return r(n + 1) + buf[0]; }\nint main(void) { return r(0); }"),
    ("runtime_link", "link-missing-lib", "int main(void) { return 0; }"),
    ("runtime_link", "run", "#include <signal.h>\nint main(void) { raise(SIGILL); return 0; }"),
    ("other", "c", "#error custom build stop"),
    ("other", "c", "int f(void) { int x; __asm__(\"bogus_instr %0\" : \"=r\"(x)); return x; }"),
    ("other", "c", "#pragma GCC poison secret\nint f(void) { int secret = 1; return secret; }"),
    ("other", "c", "int f(int a) { switch (a) { case a: return 1; } return 0; }"),
    ("other", "c", "int f(void) { goto missing_label; return 0; }"),
    ("other", "c", "int f(void) { return 1; }\n#include \"no_such_header.h\""),
]


def run_case(kind, text, tmp):
    src = os.path.join(tmp, "case.c")
    with open(src, "w") as f:
        f.write(PRELUDE + text + "\n")
    base = [GCC, "-fdiagnostics-color=never", "-fno-diagnostics-show-caret", "-O0", "-w" if kind == "run" else "-Wall"]
    env = dict(os.environ, LC_ALL="C")
    if kind in ("c", "cp"):
        extra = ["-pedantic-errors"] if kind == "cp" else []
        r = subprocess.run(base + extra + ["-c", src, "-o", os.path.join(tmp, "case.o")], capture_output=True, text=True, env=env)
        return "compile_fail", r.stderr
    exe = os.path.join(tmp, "prog")
    libs = ["-lm", "-lctxdecomp_missing"] if kind == "link-missing-lib" else ["-lm"]
    r = subprocess.run(base + [src, "-o", exe] + libs, capture_output=True, text=True, env=env)
    if r.returncode != 0:
        return "compile_fail", r.stderr
    p = subprocess.run(["./prog"], cwd=tmp, capture_output=True, text=True, env=env)
    stderr = p.stderr
    if p.returncode < 0:
        import signal
        sig = -p.returncode
        stderr += f"[harness] terminated by signal {sig} ({signal.Signals(sig).name})\n"
    elif p.returncode != 0:
        stderr += f"[harness] exited with status {p.returncode}\n"
    return "run_fail", stderr


def gen_triage():
    out = []
    with tempfile.TemporaryDirectory() as tmp:
        for i, (cat, kind, text) in enumerate(TRIAGE):
            status, stderr = run_case(kind, text, tmp)
            stderr = re.sub(r"/tmp/cc[A-Za-z0-9]{6}\.o", "ccXXXXXX.o", stderr.replace(tmp + "/", ""))
            out.append({"id": f"t{i:02d}", "label": cat, "status": status, "stderr": stderr})
    path = os.path.join(ROOT, "triage", "corpus.jsonl")
    write(path, "".join(json.dumps(r) + "\n" for r in out))


def main():
    gen_functions_and_asm()
    gen_triage()
    print(f"fixtures written under {os.path.normpath(ROOT)}", file=sys.stderr)


if __name__ == "__main__":
    main()
