use sha2::{Digest, Sha256};

/// Stable 64-bit seed from an ordered list of labelled parts.
///
/// Independent of platform, thread scheduling and call order.
pub fn derive_seed(parts: &[&dyn std::fmt::Display]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"codegraph-seed-v1");
    for part in parts {
        let text = part.to_string();
        hasher.update((text.len() as u64).to_le_bytes());
        hasher.update(text.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}
