package org.apache.zookeeper.server;

public class Stat {
    private int version;
    private int dataLength;

    public void setDataLength(int dataLength) {
        this.dataLength = dataLength;
    }

    public void copyTo(Stat other) {
        other.version = version;
        other.dataLength = dataLength;
    }

    public String toString() {
        return "version=" + version + " dataLength=" + dataLength;
    }
}
