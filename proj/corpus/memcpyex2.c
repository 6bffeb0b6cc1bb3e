/* Bunched memory copy: eight bytes at a time through double views, the
   remainder byte-wise. The pointer in the tail must survive the byte loop. */

int g;

void memcopy2(void* dst, void* src, unsigned sz) {
    unsigned char* s;
    unsigned char* d;
    s = (unsigned char*)src;
    d = (unsigned char*)dst;
    while (sz >= 8) {
        *(double*)d = *(double*)s;
        sz = sz - 8;
        s = s + 8;
        d = d + 8;
    }
    while (sz != 0) {
        *d = *s;
        sz = sz - 1;
        s = s + 1;
        d = d + 1;
    }
}

struct rec2 { int d0; int d1; int d2; int d3; int* q; };

struct rec2 src2;

int main(void) {
    struct rec2 dst2;
    g = 9;
    src2.q = &g;
    memcopy2(&dst2, &src2, sizeof(struct rec2));
    __point(1);
    return *(dst2.q);
}
