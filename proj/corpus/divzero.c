/* Division by a byte-wide input that may be zero. */

volatile unsigned char D;

int main(void) {
    int d;
    int q;
    d = D;
    q = 100 / d;
    return q;
}
