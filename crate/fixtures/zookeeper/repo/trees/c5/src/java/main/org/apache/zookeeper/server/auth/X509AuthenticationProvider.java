package org.apache.zookeeper.server.auth;

import javax.net.ssl.X509KeyManager;
import javax.net.ssl.X509TrustManager;

import org.apache.zookeeper.common.X509Exception.KeyManagerException;
import org.apache.zookeeper.common.X509Exception.TrustManagerException;
import org.apache.zookeeper.common.X509Util;
import org.slf4j.Logger;
import org.slf4j.LoggerFactory;

/**
 * Authenticates remote hosts by their certificates, using a key manager and
 * a trust manager configured through system properties.
 */
public class X509AuthenticationProvider implements AuthenticationProvider {
    private static final Logger LOG = LoggerFactory.getLogger(X509AuthenticationProvider.class);
    private final X509TrustManager trustManager;
    private final X509KeyManager keyManager;

    public X509AuthenticationProvider() {
        String keyStoreLocationProp = System.getProperty(X509Util.SSL_KEYSTORE_LOCATION);
        String keyStorePasswordProp = System.getProperty(X509Util.SSL_KEYSTORE_PASSWD);

        X509KeyManager km = null;
        X509TrustManager tm = null;
        if (keyStoreLocationProp != null && keyStorePasswordProp != null) {
            try {
                km = X509Util.createKeyManager(keyStoreLocationProp, keyStorePasswordProp);
            } catch (KeyManagerException e) {
                LOG.error("Failed to create key manager", e);
            }
        }

        String trustStoreLocationProp = System.getProperty(X509Util.SSL_TRUSTSTORE_LOCATION);
        String trustStorePasswordProp = System.getProperty(X509Util.SSL_TRUSTSTORE_PASSWD);

        if (trustStoreLocationProp != null && trustStorePasswordProp != null) {
            try {
                tm = X509Util.createTrustManager(trustStoreLocationProp, trustStorePasswordProp);
            } catch (TrustManagerException e) {
                LOG.error("Failed to create trust manager", e);
            }
        }
        this.keyManager = km;
        this.trustManager = tm;
    }

    public X509AuthenticationProvider(X509TrustManager trustManager, X509KeyManager keyManager) {
        this.trustManager = trustManager;
        this.keyManager = keyManager;
    }

    public String getScheme() {
        return "x509";
    }

    public X509TrustManager getTrustManager() {
        return trustManager;
    }

    public X509KeyManager getKeyManager() {
        return keyManager;
    }
}
