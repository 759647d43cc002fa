package org.apache.zookeeper.server.auth;

public class IPAuthenticationProvider implements AuthenticationProvider {
    public String getScheme() {
        return "ip";
    }

    public boolean matches(String id, String aclExpr) {
        return id.equals(aclExpr);
    }
}
