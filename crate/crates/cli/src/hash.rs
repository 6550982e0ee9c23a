//! Platform-stable configuration hashes.

use menr_core::RunConfig;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Compact JSON with object keys sorted and `-0.0` folded into `0.0`.
pub fn canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    normalize(&mut v);
    // `serde_json::Map` keeps keys ordered, so plain serialisation is canonical.
    serde_json::to_string(&v)
}

fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.as_f64() == Some(0.0) && n.is_f64() {
                *n = serde_json::Number::from_f64(0.0).expect("finite");
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the physical configuration. The seed and output options are
/// recorded separately and excluded.
pub fn config_hash(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.seed = 0;
    c.noise.seed = 0;
    c.store_series = false;
    sha256_hex(
        canonical_json(&c)
            .expect("configuration serialises")
            .as_bytes(),
    )
}
