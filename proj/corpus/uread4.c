/* One past the whole object: U.a[4] is outside U entirely and must be
   reported as an out-of-bounds access. */

struct uv { int a[3]; int b; };

struct uv U;

int main(void) {
    int r;
    U.b = 1;
    r = U.a[4];
    return r;
}
