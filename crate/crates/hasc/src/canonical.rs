// SPDX-License-Identifier: Apache-2.0

//! Canonical JSON bytes: object keys sorted by code point, no insignificant
//! whitespace, integers only. Used as the digest and signing substrate.

use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("value at `{path}` cannot be canonicalized: {reason}")]
pub struct NonCanonicalizable {
    pub path: String,
    pub reason: String,
}

pub fn to_canonical_bytes(value: &Value) -> Result<Vec<u8>, NonCanonicalizable> {
    let mut out = Vec::with_capacity(1024);
    write_value(value, &mut out, &mut String::new())?;
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_value(value: &Value, out: &mut Vec<u8>, path: &mut String) -> Result<(), NonCanonicalizable> {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Number(n) => {
            if n.is_f64() {
                return Err(NonCanonicalizable {
                    path: path.clone(),
                    reason: format!("floating-point number {n}; encode decimals as strings"),
                });
            }
            out.extend_from_slice(n.to_string().as_bytes());
        }
        Value::String(s) => write_string(s, out),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                write_value(item, out, path)?;
                path.truncate(len);
            }
            out.push(b']');
        }
        Value::Object(map) => {
            // Sorting explicitly keeps the output independent of serde_json's
            // map implementation (the `preserve_order` feature may be unified in).
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push(b'{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_string(key, out);
                out.push(b':');
                let len = path.len();
                if !path.is_empty() {
                    path.push('.');
                }
                path.push_str(key);
                write_value(&map[key], out, path)?;
                path.truncate(len);
            }
            out.push(b'}');
        }
    }
    Ok(())
}

fn write_string(s: &str, out: &mut Vec<u8>) {
    // serde_json's string escaping is already minimal and deterministic.
    let quoted = serde_json::to_string(s).expect("string serialization is infallible");
    out.extend_from_slice(quoted.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorts_keys_and_strips_whitespace() {
        let v = json!({"b": [1, {"z": null, "a": true}], "a": "é\n"});
        let bytes = to_canonical_bytes(&v).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            r#"{"a":"é\n","b":[1,{"a":true,"z":null}]}"#
        );
    }

    #[test]
    fn rejects_floats_with_path() {
        let err = to_canonical_bytes(&json!({"x": [{"score": 0.5}]})).unwrap_err();
        assert_eq!(err.path, "x[0].score");
    }

    #[test]
    fn empty_object_digest() {
        // Frozen from an independent SHA-256 (coreutils sha256sum of the two bytes `{}`).
        assert_eq!(
            sha256_hex(&to_canonical_bytes(&json!({})).unwrap()),
            "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
    }
}
