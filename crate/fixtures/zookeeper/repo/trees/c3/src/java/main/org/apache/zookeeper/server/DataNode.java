package org.apache.zookeeper.server;

public class DataNode {
    private byte[] data;
    private final Stat stat = new Stat();

    public DataNode(byte[] data) {
        this.data = data;
        stat.setDataLength(data == null ? 0 : data.length);
    }

    public synchronized Stat copyStat() {
        Stat copy = new Stat();
        stat.copyTo(copy);
        return copy;
    }

    public synchronized byte[] getData() {
        return data;
    }
}
