/* Escaping address of a local: the frame is gone by the time the pointer
   is used, so the dereference hits an invalid pointer. */

int* leak(void) {
    int t;
    t = 5;
    return &t;
}

int main(void) {
    int* p;
    int r;
    p = leak();
    r = *p;
    return r;
}
