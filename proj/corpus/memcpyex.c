/* Generic byte-wise memory copy applied to a 20-byte record whose last four
   bytes hold a pointer. The copied pointer must keep its base so the final
   dereference is proven safe. */

int g;

void memcopy(void* dst, void* src, unsigned sz) {
    unsigned char* s;
    unsigned char* d;
    unsigned i;
    s = (unsigned char*)src;
    d = (unsigned char*)dst;
    for (i = 0; i < sz; i = i + 1) d[i] = s[i];
}

struct rec { int d0; int d1; int d2; int d3; int* p; };

struct rec buf;

int get(void) {
    struct rec S;
    memcopy(&S, &buf, sizeof(struct rec));
    __point(1);
    return *(S.p);
}

int main(void) {
    g = 42;
    buf.p = &g;
    __point(2);
    return get();
}
