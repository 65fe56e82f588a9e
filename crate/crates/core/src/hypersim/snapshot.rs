//! Flat binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `BLSNAP01` |
//! | 8     | `u64` number of spatial axes `d` |
//! | 8·d   | `u64` cells per axis |
//! | 8     | `u64` components per cell |
//! | 8     | `f64` cell spacing |
//! | 8     | `f64` half-width `L` of the domain `[-L, L]^d` |
//! | 8     | `f64` time |
//! | rest  | `f64` values, row-major over cells (last axis fastest), components innermost |
//!
//! Components are the conserved variables: `[ρ, ρv, ρw₁, ρw₂]` for slab states and
//! `[ρ, ρu₁, ρu₂, b]` for plane states.

use std::io::{Read, Write};
use std::path::Path;

use super::plane::PlaneState;
use super::slab::SlabState;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"BLSNAP01";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: Vec<usize>,
    pub components: usize,
    pub spacing: f64,
    pub half_width: f64,
    pub time: f64,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn slab(s: &SlabState, time: f64) -> Self {
        Snapshot {
            dims: vec![s.cells()],
            components: 4,
            spacing: s.spacing(),
            half_width: s.half_width,
            time,
            data: s.u.iter().flatten().copied().collect(),
        }
    }

    pub fn plane(s: &PlaneState, time: f64) -> Self {
        Snapshot {
            dims: vec![s.n, s.n],
            components: 4,
            spacing: s.spacing(),
            half_width: s.half_width,
            time,
            data: s.u.iter().flatten().copied().collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dims.len() as u64).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        out.extend_from_slice(&(self.components as u64).to_le_bytes());
        for v in [self.spacing, self.half_width, self.time]
            .iter()
            .chain(&self.data)
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |what: &str| Error::Parameter(format!("malformed snapshot: {what}"));
        if bytes.len() % 8 != 0 || bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("bad magic or length"));
        }
        let words: Vec<[u8; 8]> = bytes[8..]
            .chunks_exact(8)
            .map(|w| w.try_into().unwrap())
            .collect();
        let ndim = u64::from_le_bytes(words[0]) as usize;
        if !(1..=3).contains(&ndim) || words.len() < ndim + 5 {
            return Err(bad("header"));
        }
        let dims: Vec<usize> = words[1..=ndim]
            .iter()
            .map(|w| u64::from_le_bytes(*w) as usize)
            .collect();
        let components = u64::from_le_bytes(words[ndim + 1]) as usize;
        let floats: Vec<f64> = words[ndim + 2..]
            .iter()
            .map(|w| f64::from_le_bytes(*w))
            .collect();
        let (spacing, half_width, time) = (floats[0], floats[1], floats[2]);
        let data = floats[3..].to_vec();
        if data.len() != dims.iter().product::<usize>() * components {
            return Err(bad("body length does not match the header"));
        }
        Ok(Snapshot {
            dims,
            components,
            spacing,
            half_width,
            time,
            data,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Snapshot::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = SlabState::from_fn(16, 2.0, |y| [1.0 + y, y, -y, 0.5]).unwrap();
        let snap = Snapshot::slab(&s, 0.75);
        let back = Snapshot::from_bytes(&snap.to_bytes()).unwrap();
        assert_eq!(snap, back);
        assert_eq!(back.data.len(), 64);
    }

    #[test]
    fn rejects_truncated_body() {
        let s = SlabState::from_fn(16, 2.0, |_| [1.0, 0.0, 0.0, 0.0]).unwrap();
        let mut b = Snapshot::slab(&s, 0.0).to_bytes();
        b.truncate(b.len() - 8);
        assert!(Snapshot::from_bytes(&b).is_err());
    }
}
