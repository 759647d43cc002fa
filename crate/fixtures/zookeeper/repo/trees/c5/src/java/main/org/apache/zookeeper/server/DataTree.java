package org.apache.zookeeper.server;

import java.util.concurrent.ConcurrentHashMap;

public class DataTree {
    private final ConcurrentHashMap<String, DataNode> nodes = new ConcurrentHashMap<String, DataNode>();
    private final WatchManager dataWatches = new WatchManager();

    public DataNode getNode(String path) {
        return nodes.get(path);
    }

    public void createNode(String path, byte[] data) {
        DataNode node = new DataNode(data);
        nodes.put(path, node);
        dataWatches.triggerWatch(path, "NodeCreated");
    }

    public void deleteNode(String path) {
        nodes.remove(path);
        dataWatches.triggerWatch(path, "NodeDeleted");
    }

    public Stat statNode(String path, Watcher watcher) {
        DataNode n = getNode(path);
        if (watcher != null) {
            dataWatches.addWatch(path, watcher);
        }
        if (n == null) {
            return null;
        }
        synchronized (n) {
            return n.copyStat();
        }
    }
}
