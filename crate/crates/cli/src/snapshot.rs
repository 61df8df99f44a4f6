//! Bit-exact binary snapshot of a distribution plus the grid and model
//! parameters it lives on.
//!
//! Layout: a 16-byte header (8-byte magic, u32 version, u32 reserved), a
//! little-endian payload (parameters, grid spec, cell layout, values), and an
//! FNV-1a 64 checksum of the payload. Every multi-byte field is little
//! endian; round trips are bitwise exact.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use esbgk_core::params::ModelParams;
use esbgk_core::phase_grid::{build_grid, DistSnapshot, GridSpec};

const MAGIC: &[u8; 8] = b"ESBGKSNP";
const VERSION: u32 = 1;

#[derive(Debug, PartialEq)]
pub enum SnapshotError {
    Io(String),
    BadMagic,
    BadVersion { found: u32 },
    SizeMismatch { expected: usize, found: usize },
    ChecksumMismatch,
    Malformed(String),
}

impl std::fmt::Display for SnapshotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SnapshotError::Io(e) => write!(f, "snapshot io: {e}"),
            SnapshotError::BadMagic => write!(f, "snapshot magic mismatch"),
            SnapshotError::BadVersion { found } => {
                write!(f, "snapshot version {found} unsupported (expected {VERSION})")
            }
            SnapshotError::SizeMismatch { expected, found } => {
                write!(f, "snapshot size mismatch: expected {expected} bytes, found {found}")
            }
            SnapshotError::ChecksumMismatch => write!(f, "snapshot checksum mismatch"),
            SnapshotError::Malformed(m) => write!(f, "snapshot malformed: {m}"),
        }
    }
}

impl std::error::Error for SnapshotError {}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.pos + n > self.buf.len() {
            return Err(SnapshotError::Malformed("truncated payload".to_string()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn encode(snapshot: &DistSnapshot, params: &ModelParams) -> Vec<u8> {
    let spec = snapshot.grid().spec();
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u32(0);
    let payload_start = w.buf.len();

    w.u32(params.d as u32);
    w.f64(params.delta);
    w.f64(params.nu);
    w.f64(params.theta);
    w.f64(params.mu);

    w.u32(spec.n_v as u32);
    w.u32(spec.n_i as u32);
    w.f64(spec.half_width);
    for c in spec.center {
        w.f64(c);
    }
    w.f64(spec.i_max);

    w.u32(snapshot.n_x() as u32);
    w.f64(snapshot.dx());
    w.u64(snapshot.values().len() as u64);
    for v in snapshot.values() {
        w.f64(*v);
    }

    let checksum = fnv1a64(&w.buf[payload_start..]);
    w.u64(checksum);
    w.buf
}

pub fn decode(bytes: &[u8]) -> Result<(DistSnapshot, ModelParams), SnapshotError> {
    if bytes.len() < 16 + 8 {
        return Err(SnapshotError::SizeMismatch {
            expected: 24,
            found: bytes.len(),
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(SnapshotError::BadVersion { found: version });
    }
    let payload = &bytes[16..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    if fnv1a64(payload) != stored {
        return Err(SnapshotError::ChecksumMismatch);
    }

    let mut r = Reader {
        buf: payload,
        pos: 0,
    };
    let d = r.u32()? as usize;
    let delta = r.f64()?;
    let nu = r.f64()?;
    let theta = r.f64()?;
    let mu = r.f64()?;
    let params = ModelParams::new(d, delta, nu, theta, mu)
        .map_err(|e| SnapshotError::Malformed(e.to_string()))?;

    let n_v = r.u32()? as usize;
    let n_i = r.u32()? as usize;
    let half_width = r.f64()?;
    let center = [r.f64()?, r.f64()?, r.f64()?];
    let i_max = r.f64()?;
    let spec = GridSpec {
        n_v,
        half_width,
        center,
        n_i,
        i_max,
    };
    let grid =
        Arc::new(build_grid(&spec, &params).map_err(|e| SnapshotError::Malformed(e.to_string()))?);

    let n_x = r.u32()? as usize;
    let dx = r.f64()?;
    let n_values = r.u64()? as usize;
    if n_values != n_x * grid.n_nodes() {
        return Err(SnapshotError::Malformed(format!(
            "value count {n_values} does not match {n_x} cells of {} nodes",
            grid.n_nodes()
        )));
    }
    let expected_len = r.pos + 8 * n_values;
    if payload.len() != expected_len {
        return Err(SnapshotError::SizeMismatch {
            expected: expected_len + 24,
            found: bytes.len(),
        });
    }
    let mut values = Vec::with_capacity(n_values);
    for _ in 0..n_values {
        values.push(r.f64()?);
    }
    let snapshot = if n_x == 1 {
        DistSnapshot::homogeneous(grid, values)
    } else {
        DistSnapshot::spatial(grid, n_x, dx, values)
    }
    .map_err(|e| SnapshotError::Malformed(e.to_string()))?;
    Ok((snapshot, params))
}

pub fn write_file(
    path: &Path,
    snapshot: &DistSnapshot,
    params: &ModelParams,
) -> Result<(), SnapshotError> {
    fs::write(path, encode(snapshot, params)).map_err(|e| SnapshotError::Io(e.to_string()))
}

pub fn read_file(path: &Path) -> Result<(DistSnapshot, ModelParams), SnapshotError> {
    let bytes = fs::read(path).map_err(|e| SnapshotError::Io(e.to_string()))?;
    decode(&bytes)
}
