//! `KSGD1` binary snapshots of the fields at one instant.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "KSGD1" | version u8 | dim u8 | n u64 per axis | side f64 | time f64
//! | field count u8 | per field: name length u8, name bytes, f64 values (row-major)
//! ```

use std::path::Path;

use ksgd_core::{GridSpec, ScalarField, State};
use thiserror::Error;

pub const MAGIC: &[u8; 5] = b"KSGD1";
pub const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a KSGD1 snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u8),
    #[error("snapshot ends early")]
    Truncated,
    #[error("{0} trailing bytes after the last field")]
    TrailingBytes(usize),
    #[error("snapshot dimension must be 1 or 2, got {0}")]
    BadDimension(u8),
    #[error("field name is not UTF-8")]
    BadName,
    #[error("field `{name}` has {got} values, grid has {expected} cells")]
    FieldLength {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("too many fields or too long a field name for the format")]
    TooLarge,
    #[error("snapshot axes must have equal size to form a grid")]
    NonUniform,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: u8,
    /// Cells per axis.
    pub sizes: Vec<u64>,
    pub side: f64,
    pub time: f64,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    /// Snapshot of `u` and `v`.
    pub fn from_state(state: &State) -> Self {
        let grid = state.u.grid();
        Self {
            dim: grid.dim() as u8,
            sizes: vec![grid.n() as u64; grid.dim()],
            side: grid.side(),
            time: state.t,
            fields: vec![
                ("u".to_string(), state.u.values().to_vec()),
                ("v".to_string(), state.v.values().to_vec()),
            ],
        }
    }

    fn cell_count(&self) -> usize {
        self.sizes.iter().product::<u64>() as usize
    }

    pub fn encode(&self) -> Result<Vec<u8>, SnapshotError> {
        if self.fields.len() > u8::MAX as usize {
            return Err(SnapshotError::TooLarge);
        }
        let cells = self.cell_count();
        let mut out = Vec::with_capacity(32 + self.fields.len() * (cells * 8 + 8));
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.dim);
        for &n in &self.sizes {
            out.extend_from_slice(&n.to_le_bytes());
        }
        out.extend_from_slice(&self.side.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        out.push(self.fields.len() as u8);
        for (name, values) in &self.fields {
            if name.len() > u8::MAX as usize {
                return Err(SnapshotError::TooLarge);
            }
            if values.len() != cells {
                return Err(SnapshotError::FieldLength {
                    name: name.clone(),
                    expected: cells,
                    got: values.len(),
                });
            }
            out.push(name.len() as u8);
            out.extend_from_slice(name.as_bytes());
            for x in values {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len()).map_err(|_| SnapshotError::BadMagic)? != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let dim = r.u8()?;
        if dim != 1 && dim != 2 {
            return Err(SnapshotError::BadDimension(dim));
        }
        let sizes = (0..dim).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
        let side = r.f64()?;
        let time = r.f64()?;
        let count = r.u8()?;
        let cells = sizes
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(usize::try_from(n).ok()?))
            .ok_or(SnapshotError::Truncated)?;
        let mut fields = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let len = r.u8()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| SnapshotError::BadName)?
                .to_string();
            let raw = r.take(cells.checked_mul(8).ok_or(SnapshotError::Truncated)?)?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            fields.push((name, values));
        }
        if r.pos != bytes.len() {
            return Err(SnapshotError::TrailingBytes(bytes.len() - r.pos));
        }
        Ok(Self {
            dim,
            sizes,
            side,
            time,
            fields,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), SnapshotError> {
        std::fs::write(path, self.encode()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, SnapshotError> {
        Self::decode(&std::fs::read(path)?)
    }

    /// The named field on its grid; `None` if absent.
    pub fn field(&self, name: &str) -> Result<Option<ScalarField>, SnapshotError> {
        let Some((_, values)) = self.fields.iter().find(|(n, _)| n == name) else {
            return Ok(None);
        };
        if self.sizes.windows(2).any(|w| w[0] != w[1]) {
            return Err(SnapshotError::NonUniform);
        }
        let n = self.sizes.first().copied().unwrap_or(0) as usize;
        let grid = GridSpec::new(self.dim as usize, n, self.side)
            .map_err(|_| SnapshotError::BadDimension(self.dim))?;
        ScalarField::new(grid, values.clone())
            .map(Some)
            .map_err(|_| SnapshotError::FieldLength {
                name: name.to_string(),
                expected: grid.len(),
                got: values.len(),
            })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.pos.checked_add(n).ok_or(SnapshotError::Truncated)?;
        let slice = self.bytes.get(self.pos..end).ok_or(SnapshotError::Truncated)?;
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        Snapshot {
            dim: 2,
            sizes: vec![3, 3],
            side: 1.5,
            time: 0.25,
            fields: vec![
                ("u".into(), (0..9).map(|i| i as f64 * 0.1).collect()),
                ("v".into(), vec![-0.0, f64::MIN_POSITIVE, 1e300, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]),
            ],
        }
    }

    #[test]
    fn header_layout() {
        let bytes = sample().encode().unwrap();
        assert_eq!(&bytes[..5], b"KSGD1");
        assert_eq!(bytes[5], 1);
        assert_eq!(bytes[6], 2);
        assert_eq!(u64::from_le_bytes(bytes[7..15].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[23..31].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(bytes[31..39].try_into().unwrap()), 0.25);
        assert_eq!(bytes[39], 2);
        assert_eq!(bytes[40], 1);
        assert_eq!(bytes[41], b'u');
        assert_eq!(bytes.len(), 39 + 1 + 2 * (1 + 1 + 9 * 8));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let snap = sample();
        let bytes = snap.encode().unwrap();
        let back = Snapshot::decode(&bytes).unwrap();
        assert_eq!(back.encode().unwrap(), bytes);
        assert_eq!(back.fields[1].1[0].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn rejects_bad_headers() {
        let mut bytes = sample().encode().unwrap();
        bytes[0] = b'X';
        assert!(matches!(Snapshot::decode(&bytes), Err(SnapshotError::BadMagic)));
        let mut bytes = sample().encode().unwrap();
        bytes[5] = 2;
        assert!(matches!(
            Snapshot::decode(&bytes),
            Err(SnapshotError::UnsupportedVersion(2))
        ));
        let bytes = sample().encode().unwrap();
        assert!(matches!(
            Snapshot::decode(&bytes[..bytes.len() - 1]),
            Err(SnapshotError::Truncated)
        ));
        assert!(matches!(Snapshot::decode(b"KSG"), Err(SnapshotError::BadMagic)));
    }

    #[test]
    fn field_rebuilds_grid() {
        let f = sample().field("u").unwrap().unwrap();
        assert_eq!(f.grid().n(), 3);
        assert_eq!(f.grid().side(), 1.5);
        assert!(sample().field("w").unwrap().is_none());
    }
}
