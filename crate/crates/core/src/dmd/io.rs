//! Basis cache file.
//!
//! Layout (all integers and reals little-endian):
//!
//! | field    | type            |
//! |----------|-----------------|
//! | magic    | `b"DMDB"`       |
//! | version  | u32 (= 1)       |
//! | h, w, K  | u32 each        |
//! | eigvals  | K x f64         |
//! | modes    | K x (h*w) x f64, column-major `Q` (one mode after another) |

use std::fs;
use std::path::Path;

use super::{DmdError, ModalBasis};

const MAGIC: &[u8; 4] = b"DMDB";
const VERSION: u32 = 1;

pub fn encode_basis(basis: &ModalBasis) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * (basis.len() + basis.modes_raw().len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [basis.height(), basis.width(), basis.len()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in basis.eigvals().iter().chain(basis.modes_raw()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_basis(bytes: &[u8]) -> Result<ModalBasis, DmdError> {
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(DmdError::Format("missing DMDB magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(DmdError::Format(format!(
            "unsupported basis version {version}"
        )));
    }
    let (h, w, k) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let expected = 20 + 8 * (k + k * h * w);
    if bytes.len() != expected {
        return Err(DmdError::Format(format!(
            "basis payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut reals = bytes[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let eigvals: Vec<f64> = reals.by_ref().take(k).collect();
    let modes: Vec<f64> = reals.collect();
    ModalBasis::from_parts(h, w, eigvals, modes)
}

pub fn save_basis(basis: &ModalBasis, path: impl AsRef<Path>) -> Result<(), DmdError> {
    fs::write(path, encode_basis(basis))?;
    Ok(())
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<ModalBasis, DmdError> {
    decode_basis(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmd::build_basis;

    #[test]
    fn round_trip_is_bitwise() {
        let b = build_basis(9, 11, 17).unwrap();
        let bytes = encode_basis(&b);
        assert_eq!(&bytes[..4], b"DMDB");
        assert_eq!(bytes.len(), 20 + 8 * (17 + 17 * 99));
        let back = decode_basis(&bytes).unwrap();
        assert_eq!(back, b);
        assert_eq!(encode_basis(&back), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let b = build_basis(8, 8, 2).unwrap();
        let mut bytes = encode_basis(&b);
        assert!(decode_basis(&bytes[..bytes.len() - 1]).is_err());
        bytes[4] = 9;
        assert!(decode_basis(&bytes).is_err());
        assert!(decode_basis(b"NOPE").is_err());
    }
}
