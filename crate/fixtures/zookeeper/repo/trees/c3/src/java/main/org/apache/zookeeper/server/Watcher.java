package org.apache.zookeeper.server;

public interface Watcher {
    void process(String path, String event);
}
