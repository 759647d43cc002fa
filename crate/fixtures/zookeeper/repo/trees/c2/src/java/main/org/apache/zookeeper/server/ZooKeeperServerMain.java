package org.apache.zookeeper.server;

import org.apache.zookeeper.server.auth.ProviderRegistry;

/**
 * Starts a standalone server.
 */
public class ZooKeeperServerMain {
    public static void main(String[] args) {
        ZooKeeperServerMain main = new ZooKeeperServerMain();
        main.initializeAndRun(args);
    }

    protected void initializeAndRun(String[] args) {
        String configPath = args.length > 0 ? args[0] : "conf/zoo.cfg";
        runFromConfig(configPath);
    }

    public void runFromConfig(String configPath) {
        ProviderRegistry.initialize();
        DataTree tree = new DataTree();
        FinalRequestProcessor processor = new FinalRequestProcessor(tree);
        processor.start();
    }
}
