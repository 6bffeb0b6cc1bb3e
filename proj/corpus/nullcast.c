/* Null travels between integer and pointer views: a zero int read back
   through the pointer member must compare equal to null. */

union iptr {
    int i;
    int* p;
};

union iptr u;

int main(void) {
    int r;
    u.i = 0;
    r = (u.p == (int*)0);
    __point(1);
    return r;
}
