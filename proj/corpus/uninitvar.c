/* Reading a local that was never written: the garbage read is an error,
   and the following add may overflow on whatever the bytes held. */

int main(void) {
    int x;
    int y;
    y = x + 1;
    return y;
}
