package demo.shop;

import java.util.*;
import java.util.function.Function;

@SuppressWarnings("unchecked")
public class Cart<T extends Item> implements Iterable<T> {
    private final List<T> items = new ArrayList<>();
    private static final int LIMIT = 10;
    private int count;

    public Cart() {
        this(LIMIT);
    }

    public Cart(int capacity) {
        super();
        this.count = 0;
    }

    public int total(Function<T, Integer> price) {
        int sum = 0;
        for (T item : items) {
            sum += price.apply(item);
        }
        items.forEach(i -> {
            int p = price.apply(i);
            log(p);
        });
        Runnable r = () -> count++;
        synchronized (this) {
            count = sum > 100 ? sum : count;
        }
        assert sum >= 0 : "negative";
        String kind = switch (count) {
            case 0 -> "empty";
            case 1, 2 -> {
                yield "few";
            }
            default -> "many";
        };
        try (var in = open(kind)) {
            in.read();
        } catch (IllegalStateException | IllegalArgumentException e) {
            throw new RuntimeException(e);
        }
        return sum;
    }

    class Inner {
        int depth() { return count; }
    }

    enum Size { SMALL, LARGE; int weight() { return ordinal() * 2; } }

    record Pair(int a, int b) {}

    @Override
    public Iterator<T> iterator() {
        return items.iterator();
    }
}
