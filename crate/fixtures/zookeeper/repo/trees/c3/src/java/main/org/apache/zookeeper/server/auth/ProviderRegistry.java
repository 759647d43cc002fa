package org.apache.zookeeper.server.auth;

import java.util.HashMap;

public class ProviderRegistry {
    private static boolean initialized = false;
    private static HashMap<String, AuthenticationProvider> authenticationProviders =
        new HashMap<String, AuthenticationProvider>();

    public static void initialize() {
        synchronized (ProviderRegistry.class) {
            if (initialized) {
                return;
            }
            IPAuthenticationProvider ipp = new IPAuthenticationProvider();
            authenticationProviders.put(ipp.getScheme(), ipp);
            X509AuthenticationProvider x509p = new X509AuthenticationProvider();
            authenticationProviders.put(x509p.getScheme(), x509p);
            initialized = true;
        }
    }

    public static AuthenticationProvider getProvider(String scheme) {
        if (!initialized) {
            initialize();
        }
        return authenticationProviders.get(scheme);
    }
}
