// SPDX-License-Identifier: Apache-2.0

//! Versioned, checksummed envelopes for binary and text files.

use super::IoError;

/// Binary header: magic, format version (u32 LE), payload length (u64 LE),
/// CRC-32 of the payload (u32 LE).
pub const BINARY_HEADER_LEN: usize = 8 + 4 + 8 + 4;

pub fn wrap_binary(magic: &[u8; 8], version: u32, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(BINARY_HEADER_LEN + payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

/// Checks the envelope and returns the payload.
pub fn unwrap_binary<'a>(magic: &[u8; 8], version: u32, bytes: &'a [u8]) -> Result<&'a [u8], IoError> {
    if bytes.len() < magic.len() {
        return Err(IoError::Truncated { needed: BINARY_HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    if &bytes[..8] != magic {
        return Err(IoError::Magic);
    }
    if bytes.len() < BINARY_HEADER_LEN {
        return Err(IoError::Truncated { needed: BINARY_HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let found = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if found != version {
        return Err(IoError::Version { found, supported: version });
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let stored = u32::from_le_bytes(bytes[20..24].try_into().unwrap());
    let payload = &bytes[BINARY_HEADER_LEN..];
    if (payload.len() as u64) < len {
        return Err(IoError::Truncated { needed: BINARY_HEADER_LEN as u64 + len, found: bytes.len() as u64 });
    }
    if payload.len() as u64 > len {
        return Err(IoError::Malformed(format!("{} bytes after the payload", payload.len() as u64 - len)));
    }
    let computed = crc32fast::hash(payload);
    if computed != stored {
        return Err(IoError::Checksum { stored, computed });
    }
    Ok(payload)
}

fn text_tag(kind: &str) -> String {
    format!("# spikefabric-{kind} v")
}

/// Prepends `# spikefabric-<kind> v<version> len=<bytes> crc32=<hex>` to `body`.
pub fn wrap_text(kind: &str, version: u32, body: &str) -> String {
    format!("{}{version} len={} crc32={:08x}\n{body}", text_tag(kind), body.len(), crc32fast::hash(body.as_bytes()))
}

/// Strips and checks the header line. Without `required`, text lacking a
/// header is returned unchanged.
pub fn unwrap_text<'a>(kind: &str, version: u32, text: &'a str, required: bool) -> Result<&'a str, IoError> {
    let tag = text_tag(kind);
    let Some(rest) = text.strip_prefix(&tag) else {
        return if required { Err(IoError::Magic) } else { Ok(text) };
    };
    let (line, body) = rest.split_once('\n').ok_or(IoError::Truncated { needed: 1, found: 0 })?;
    let mut fields = line.split(' ');
    let found: u32 =
        fields.next().and_then(|v| v.parse().ok()).ok_or_else(|| IoError::Malformed("bad version in header".into()))?;
    if found != version {
        return Err(IoError::Version { found, supported: version });
    }
    let mut len = None;
    let mut crc = None;
    for f in fields {
        match f.split_once('=') {
            Some(("len", v)) => len = v.parse::<u64>().ok(),
            Some(("crc32", v)) => crc = u32::from_str_radix(v, 16).ok(),
            _ => return Err(IoError::Malformed(format!("unknown header field `{f}`"))),
        }
    }
    let (Some(len), Some(stored)) = (len, crc) else {
        return Err(IoError::Malformed("header needs len and crc32".into()));
    };
    let found_len = body.len() as u64;
    if found_len < len {
        return Err(IoError::Truncated { needed: len, found: found_len });
    }
    if found_len > len {
        return Err(IoError::Malformed(format!("{} bytes after the declared length", found_len - len)));
    }
    let computed = crc32fast::hash(body.as_bytes());
    if computed != stored {
        return Err(IoError::Checksum { stored, computed });
    }
    Ok(body)
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: &[u8; 8] = b"TESTMAGC";

    #[test]
    fn binary_errors_are_distinct() {
        let good = wrap_binary(M, 1, b"payload");
        assert_eq!(unwrap_binary(M, 1, &good).unwrap(), b"payload");
        assert!(matches!(unwrap_binary(M, 1, &good[..5]), Err(IoError::Truncated { .. })));
        assert!(matches!(unwrap_binary(M, 1, &good[..good.len() - 1]), Err(IoError::Truncated { .. })));
        assert!(matches!(unwrap_binary(b"OTHERMAG", 1, &good), Err(IoError::Magic)));
        assert!(matches!(unwrap_binary(M, 2, &good), Err(IoError::Version { found: 1, supported: 2 })));
        let mut bad = good.clone();
        *bad.last_mut().unwrap() ^= 1;
        assert!(matches!(unwrap_binary(M, 1, &bad), Err(IoError::Checksum { .. })));
        let mut long = good;
        long.push(0);
        assert!(matches!(unwrap_binary(M, 1, &long), Err(IoError::Malformed(_))));
    }

    #[test]
    fn text_header_round_trip_and_errors() {
        let t = wrap_text("demo", 1, "a = 1\n");
        assert!(t.starts_with("# spikefabric-demo v1 len=6 crc32="));
        assert_eq!(unwrap_text("demo", 1, &t, true).unwrap(), "a = 1\n");
        assert_eq!(unwrap_text("demo", 1, "a = 1\n", false).unwrap(), "a = 1\n");
        assert!(matches!(unwrap_text("demo", 1, "a = 1\n", true), Err(IoError::Magic)));
        assert!(matches!(unwrap_text("demo", 2, &t, true), Err(IoError::Version { .. })));
        assert!(matches!(unwrap_text("demo", 1, &t.replace("a = 1", "a = 2"), true), Err(IoError::Checksum { .. })));
        assert!(matches!(unwrap_text("demo", 1, &t[..t.len() - 1], true), Err(IoError::Truncated { .. })));
    }
}
