package com.acme.core;

import java.util.ArrayList;
import java.util.List;

public class Graph {
    private final List<Node> nodes = new ArrayList<>();

    public void add(Node node) {
        nodes.add(node);
    }

    public void add(String name, Node next) {
        add(new Node(name, next));
    }

    public int size() {
        return nodes.size();
    }

    public long fact(int n) {
        return n <= 1 ? 1 : n * fact(n - 1);
    }

    public static class Builder {
        private final Graph graph = new Graph();

        public Builder with(String name) {
            graph.add(name);
            return this;
        }

        public Graph build() {
            return graph;
        }
    }
}
