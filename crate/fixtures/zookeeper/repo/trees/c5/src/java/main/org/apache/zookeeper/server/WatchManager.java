package org.apache.zookeeper.server;

import java.util.HashMap;
import java.util.HashSet;

public class WatchManager {
    private final HashMap<String, HashSet<Watcher>> watchTable = new HashMap<String, HashSet<Watcher>>();

    public synchronized void addWatch(String path, Watcher watcher) {
        HashSet<Watcher> list = watchTable.get(path);
        if (list == null) {
            list = new HashSet<Watcher>(4);
            watchTable.put(path, list);
        }
        list.add(watcher);
    }

    public synchronized void removeWatcher(String path, Watcher watcher) {
        HashSet<Watcher> list = watchTable.get(path);
        if (list != null) {
            list.remove(watcher);
        }
    }

    public void triggerWatch(String path, String event) {
        HashSet<Watcher> watchers;
        synchronized (this) {
            HashSet<Watcher> current = watchTable.remove(path);
            if (current == null) {
                return;
            }
            watchers = new HashSet<Watcher>(current);
        }
        for (Watcher w : watchers) {
            w.process(path, event);
        }
    }
}
