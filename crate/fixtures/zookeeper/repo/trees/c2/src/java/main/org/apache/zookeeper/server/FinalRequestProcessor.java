package org.apache.zookeeper.server;

import java.util.concurrent.LinkedBlockingQueue;

/**
 * Applies queued requests to the data tree and answers the client.
 */
public class FinalRequestProcessor extends Thread {
    private final DataTree tree;
    private final LinkedBlockingQueue<String> queue = new LinkedBlockingQueue<String>();

    public FinalRequestProcessor(DataTree tree) {
        super("FinalRequestProcessor");
        this.tree = tree;
    }

    public void submit(String op, String path) {
        queue.add(op + " " + path);
    }

    public void run() {
        try {
            while (true) {
                String request = queue.take();
                processRequest(request);
            }
        } catch (InterruptedException e) {
            Thread.currentThread().interrupt();
        }
    }

    void processRequest(String request) {
        String[] parts = request.split(" ");
        String op = parts[0];
        String path = parts[1];
        if ("exists".equals(op)) {
            Stat stat = tree.statNode(path, null);
            reply(path, stat);
        } else if ("delete".equals(op)) {
            tree.deleteNode(path);
        }
    }

    private void reply(String path, Stat stat) {
        System.out.println(path + " " + stat);
    }
}
