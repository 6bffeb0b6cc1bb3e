/* Message objects with a dynamic type tag: the same bytes are read through
   a bare tag struct, msgA, and msgB, and the buffer is filled four bytes at
   a time through an unsigned pointer before being reinterpreted. */

struct msgA { int type; int a[2]; };
struct msgB { int type; double x; };

union msg {
    struct { int type; } T;
    struct msgA A;
    struct msgB B;
};

volatile unsigned short SENSOR;

void read_sensor_4(unsigned* m) {
    *m = SENSOR;
}

void process(union msg* m) {
    int data;
    data = 0;
    if (m->T.type == 0) {
        struct msgA* msga;
        msga = &(m->A);
        data = msga->a[0] + 1;
    }
    if (m->T.type == 1) {
        struct msgB* msgb;
        msgb = &(m->B);
        data = msgb->type;
    }
}

int main(void) {
    unsigned char buf[sizeof(union msg)];
    unsigned i;
    for (i = 0; i < sizeof(union msg) / 4; i = i + 1)
        read_sensor_4((unsigned*)buf + i);
    process((union msg*)buf);
    return 0;
}
