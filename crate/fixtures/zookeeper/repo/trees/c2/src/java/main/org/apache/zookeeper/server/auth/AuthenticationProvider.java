package org.apache.zookeeper.server.auth;

/**
 * Pluggable authentication scheme.
 */
public interface AuthenticationProvider {
    String getScheme();
}
