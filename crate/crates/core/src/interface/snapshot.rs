//! Versioned session files.
//!
//! Layout: 8-byte magic, format version (u32 LE), payload length (u64 LE),
//! SHA-256 of the payload, then the payload as JSON.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::session::Session;

pub const MAGIC: &[u8; 8] = b"SWMSNAP\0";
pub const VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 8 + 32;

pub fn to_bytes(session: &Session) -> Result<Vec<u8>> {
    let payload = serde_json::to_vec(session).map_err(|e| Error::Integrity(e.to_string()))?;
    let mut out = Vec::with_capacity(HEADER + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&Sha256::digest(&payload));
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Session> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::Integrity("not a session snapshot".into()));
    }
    if bytes.len() < HEADER {
        return Err(Error::Integrity("truncated header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let payload = &bytes[HEADER..];
    if payload.len() as u64 != len {
        return Err(Error::Integrity(format!(
            "payload is {} bytes, header says {len}",
            payload.len()
        )));
    }
    if Sha256::digest(payload).as_slice() != &bytes[20..HEADER] {
        return Err(Error::Integrity("checksum mismatch".into()));
    }
    let mut session: Session = serde_json::from_slice(payload).map_err(|e| Error::Integrity(e.to_string()))?;
    session.reindex()?;
    Ok(session)
}

pub fn save_snapshot(session: &Session, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(session)?)?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<Session> {
    from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn header_checks() {
        let s = Session::new(Config::default()).unwrap();
        let bytes = to_bytes(&s).unwrap();
        assert!(matches!(from_bytes(&bytes[..10]), Err(Error::Integrity(_))));
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Integrity(_))));
        let mut other = bytes.clone();
        other[8] = 9;
        assert!(matches!(from_bytes(&other), Err(Error::Version { found: 9, expected: 1 })));
        let mut flipped = bytes.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(from_bytes(&flipped), Err(Error::Integrity(_))));
        assert!(matches!(from_bytes(b"hello"), Err(Error::Integrity(_))));
    }
}
