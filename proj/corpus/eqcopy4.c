/* Four single-byte copies between two ints: the byte-equality zones must
   let the analysis conclude that the destination equals the source exactly. */

volatile unsigned short V;

void memcopy(unsigned char* d, unsigned char* s, unsigned n) {
    unsigned i;
    for (i = 0; i < n; i = i + 1) d[i] = s[i];
}

int main(void) {
    int a;
    int b;
    int r;
    b = V;
    memcopy((unsigned char*)&a, (unsigned char*)&b, 4);
    __point(1);
    r = a - b;
    return r;
}
