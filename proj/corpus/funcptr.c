/* Data access through a function address: dereferencing it reads outside
   any object and must be flagged. */

int f(void) { return 3; }

int main(void) {
    int* p;
    int r;
    p = (int*)&f;
    r = *p;
    return r;
}
