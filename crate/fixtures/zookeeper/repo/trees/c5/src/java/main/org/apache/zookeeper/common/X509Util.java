package org.apache.zookeeper.common;

import java.io.File;
import java.io.FileInputStream;
import java.security.KeyStore;

import javax.net.ssl.KeyManager;
import javax.net.ssl.KeyManagerFactory;
import javax.net.ssl.TrustManager;
import javax.net.ssl.TrustManagerFactory;
import javax.net.ssl.X509KeyManager;
import javax.net.ssl.X509TrustManager;

import org.apache.zookeeper.common.X509Exception.KeyManagerException;
import org.apache.zookeeper.common.X509Exception.TrustManagerException;

/**
 * Utility code for X509 handling.
 */
public class X509Util {
    public static final String SSL_KEYSTORE_LOCATION = "zookeeper.ssl.keyStore.location";
    public static final String SSL_KEYSTORE_PASSWD = "zookeeper.ssl.keyStore.password";
    public static final String SSL_TRUSTSTORE_LOCATION = "zookeeper.ssl.trustStore.location";
    public static final String SSL_TRUSTSTORE_PASSWD = "zookeeper.ssl.trustStore.password";

    public static X509KeyManager createKeyManager(String keyStoreLocation, String keyStorePassword)
            throws KeyManagerException {
        try {
            char[] keyStorePasswordChars = keyStorePassword.toCharArray();
            KeyStore ks = loadKeyStore(keyStoreLocation, keyStorePasswordChars);
            KeyManagerFactory kmf = KeyManagerFactory.getInstance("SunX509");
            kmf.init(ks, keyStorePasswordChars);
            for (KeyManager km : kmf.getKeyManagers()) {
                if (km instanceof X509KeyManager) {
                    return (X509KeyManager) km;
                }
            }
            throw new KeyManagerException("Couldn't find X509KeyManager");
        } catch (Exception e) {
            throw new KeyManagerException(e);
        }
    }

    public static X509TrustManager createTrustManager(String trustStoreLocation, String trustStorePassword)
            throws TrustManagerException {
        try {
            char[] trustStorePasswordChars = trustStorePassword.toCharArray();
            KeyStore ts = loadKeyStore(trustStoreLocation, trustStorePasswordChars);
            TrustManagerFactory tmf = TrustManagerFactory.getInstance("SunX509");
            tmf.init(ts);
            for (TrustManager tm : tmf.getTrustManagers()) {
                if (tm instanceof X509TrustManager) {
                    return (X509TrustManager) tm;
                }
            }
            throw new TrustManagerException("Couldn't find X509TrustManager");
        } catch (Exception e) {
            throw new TrustManagerException(e);
        }
    }

    private static KeyStore loadKeyStore(String location, char[] password) throws Exception {
        File storeFile = new File(location);
        KeyStore ks = KeyStore.getInstance("JKS");
        try (FileInputStream in = new FileInputStream(storeFile)) {
            ks.load(in, password);
        }
        return ks;
    }
}
