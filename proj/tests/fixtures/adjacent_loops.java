// two adjacent loops over a shared counter
// the second loop reads what the first one left behind
public void scan(int[] xs) {
    int j = 0;
    for (int i = 0; j < xs.length; i++) {
        if (xs[i] < 0) {
            log(i);
            j = j + 2;
        }
        total += xs[i];
        seen++;
    }
    for (int m = 0; m < j; m++) {
        emit(m, total);
    }
}
