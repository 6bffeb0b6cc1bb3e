/* Pointer arithmetic escaping an embedded array: U.a+3 lands exactly on
   U.b, so the write must be visible through the sibling field. */

struct uv { int a[3]; int b; };

struct uv U;

int main(void) {
    int r;
    *(U.a + 3) = 5;
    __point(1);
    r = U.b;
    return r;
}
