/* Byte views over a word: single-byte reads of a known 32-bit value must
   see the little-endian byte at their offset, and the signed view must
   reinterpret the same bits. */

static unsigned int w;

int main(void) {
    unsigned char b0;
    unsigned char b3;
    int s;
    w = 305419896; /* 0x12345678 */
    b0 = *(unsigned char*)&w;
    b3 = *((unsigned char*)&w + 3);
    s = (int)w;
    __point(1);
    return b0 + b3 + s;
}
