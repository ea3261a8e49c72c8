//! Binary persistence for grip maps.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "GMAP"
//! 4       2     u16 format version (1)
//! 6       4     u32 s_dim
//! 10      4     u32 n_dim
//! 14      8     f64 s_max
//! 22      8     f64 w_max
//! 30      8*C   f64 theta, row-major, i outer (C = s_dim * 2 * n_dim)
//! 30+8C   4     u32 CRC32 of every preceding byte
//! ```
//!
//! Round trips are bit-exact: theta values are stored as raw IEEE-754 bits,
//! and the trailing CRC makes silent truncation or corruption loud.

use std::io::{Read, Write};
use std::path::Path;

use super::{GripMap, GripMapError, DEFAULT_THETA_CAP};

const MAGIC: [u8; 4] = *b"GMAP";
const VERSION: u16 = 1;

/// Serializes a grid to the binary format above.
pub fn save_gripmap<W: Write>(grid: &GripMap, mut w: W) -> Result<(), GripMapError> {
    let mut buf = Vec::with_capacity(30 + 8 * grid.cell_count() + 4);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&grid.s_dim().to_le_bytes());
    buf.extend_from_slice(&grid.n_dim().to_le_bytes());
    buf.extend_from_slice(&grid.s_max().to_le_bytes());
    buf.extend_from_slice(&grid.w_max().to_le_bytes());
    for &t in grid.theta_values() {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    w.write_all(&buf)?;
    Ok(())
}

/// Deserializes a grid, verifying magic, version, checksum, and that every
/// stored factor satisfies `0 < theta <= theta_cap`.
pub fn load_gripmap_with_cap<R: Read>(mut r: R, theta_cap: f64) -> Result<GripMap, GripMapError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(GripMapError::BadMagic);
    }
    if bytes.len() < 30 + 4 {
        return Err(GripMapError::Truncated);
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(GripMapError::UnsupportedVersion(version));
    }
    let s_dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let n_dim = u32::from_le_bytes(bytes[10..14].try_into().unwrap());
    let s_max = f64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let w_max = f64::from_le_bytes(bytes[22..30].try_into().unwrap());
    if s_dim == 0 || n_dim == 0 {
        return Err(GripMapError::InvalidDims { s_dim, n_dim });
    }
    let cells = s_dim as usize * 2 * n_dim as usize;
    let expected = 30 + 8 * cells + 4;
    if bytes.len() != expected {
        return Err(GripMapError::Truncated);
    }
    let payload_end = expected - 4;
    let stored = u32::from_le_bytes(bytes[payload_end..].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..payload_end]);
    if stored != computed {
        return Err(GripMapError::CrcMismatch { stored, computed });
    }
    let mut grid = GripMap::new(s_dim, n_dim, s_max, w_max, theta_cap, theta_cap)?;
    for (k, chunk) in bytes[30..payload_end].chunks_exact(8).enumerate() {
        let t = f64::from_le_bytes(chunk.try_into().unwrap());
        if !(t.is_finite() && t > 0.0 && t <= theta_cap) {
            return Err(GripMapError::InvalidTheta { value: t, cap: theta_cap });
        }
        grid.theta[k] = t;
    }
    Ok(grid)
}

/// [`load_gripmap_with_cap`] with the default cap.
pub fn load_gripmap<R: Read>(r: R) -> Result<GripMap, GripMapError> {
    load_gripmap_with_cap(r, DEFAULT_THETA_CAP)
}

pub fn save_gripmap_to<P: AsRef<Path>>(grid: &GripMap, path: P) -> Result<(), GripMapError> {
    let mut f = std::fs::File::create(path)?;
    save_gripmap(grid, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load_gripmap_from<P: AsRef<Path>>(path: P) -> Result<GripMap, GripMapError> {
    let f = std::fs::File::open(path)?;
    load_gripmap(std::io::BufReader::new(f))
}
