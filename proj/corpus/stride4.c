/* Stride-4 initialization loop: the store offset must carry congruence
   0 mod 4 after widening, proving the accesses aligned. */

int main(void) {
    int arr[10];
    int i;
    for (i = 0; i < 10; i = i + 1) {
        arr[i] = 7;
        __point(1);
    }
    return 0;
}
