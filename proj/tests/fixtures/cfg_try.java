void load(String p) {
    try {
        open(p);
        read(p);
    } catch (IOException e) {
        warn(e);
    } catch (RuntimeException e) {
        fail(e);
    } finally {
        close(p);
    }
    return;
}
