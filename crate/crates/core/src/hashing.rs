use serde::Serialize;
use sha2::{Digest, Sha256};

/// Stable short hash of any serializable configuration (SHA-256 of its
/// compact JSON form, first 16 hex digits).
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration is serializable");
    let digest = Sha256::digest(&bytes);
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&(1.0f64, "x"));
        assert_eq!(a, config_hash(&(1.0f64, "x")));
        assert_ne!(a, config_hash(&(1.5f64, "x")));
        assert_eq!(a.len(), 16);
    }
}
