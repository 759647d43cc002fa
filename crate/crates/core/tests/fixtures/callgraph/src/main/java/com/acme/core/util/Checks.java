package com.acme.core.util;

public final class Checks {
    public static void notNull(Object o, String what) {
        if (o == null) {
            throw new IllegalArgumentException(what + " is null");
        }
    }

    public static void notEmpty(String s, String what) {
        notNull(s, what);
        if (Strings.isEmpty(s)) {
            fail(what);
        }
    }

    private static void fail(String what) {
        throw new IllegalStateException(Strings.join(",", what, "empty"));
    }
}
