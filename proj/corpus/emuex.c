/* 8086 register bank emulated through a byte overlay: writing the word
   register ax must update the byte views al/ah, and writing al must
   invalidate the stale word view. */

volatile unsigned short X;

static union {
    struct { unsigned char al; unsigned char ah; unsigned char bl; unsigned char bh; } b;
    struct { unsigned short ax; unsigned short bx; } w;
} regs;

int main(void) {
    regs.w.ax = X;
    __point(1);
    if (!regs.b.ah) {
        __point(2);
        regs.b.bl = regs.b.al;
        __point(3);
    } else {
        __point(4);
        regs.b.bh = regs.b.al;
        __point(5);
    }
    __point(6);
    regs.b.al = X;
    __point(7);
    return 0;
}
