void pick(int k) {
    int r = 0;
    switch (k) {
        case 1:
            r = 1;
        case 2:
            r += 2;
            break;
        default:
            r = 9;
    }
    emit(r);
}
