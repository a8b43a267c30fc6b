//! SpectralField serialization.
//!
//! JSON: `{n_points, length, kind, coeffs: [re, im, re, im, ..]}` in lattice order.
//! Binary (little endian): magic `SKDVFLD1`, `u64 n_points`, `f64 length`, `u8 kind`
//! (0 = u_like, 1 = v_like), then `n_points` pairs of `f64 re, f64 im` in lattice order.

use super::{FieldKind, Grid, SpectralError, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const MAGIC: &[u8; 8] = b"SKDVFLD1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRecord {
    pub n_points: usize,
    pub length: f64,
    pub kind: FieldKind,
    pub coeffs: Vec<f64>,
}

impl FieldRecord {
    pub fn from_field(f: &SpectralField) -> Self {
        let coeffs = f.lattice_order().iter().flat_map(|c| [c.re, c.im]).collect();
        FieldRecord { n_points: f.grid.n_points, length: f.grid.length, kind: f.kind, coeffs }
    }

    pub fn into_field(self) -> Result<SpectralField, SpectralError> {
        let grid = Grid::new(self.n_points, self.length)?;
        if self.coeffs.len() != 2 * self.n_points {
            return Err(SpectralError::Format(format!(
                "expected {} interleaved values, got {}",
                2 * self.n_points,
                self.coeffs.len()
            )));
        }
        let n = self.n_points as i64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.n_points];
        for (p, pair) in self.coeffs.chunks_exact(2).enumerate() {
            coeffs[grid.slot(p as i64 - n / 2)] = Complex64::new(pair[0], pair[1]);
        }
        Ok(SpectralField { grid, coeffs, kind: self.kind })
    }
}

pub fn field_to_json(f: &SpectralField) -> String {
    serde_json::to_string(&FieldRecord::from_field(f)).expect("field record serializes")
}

pub fn field_from_json(s: &str) -> Result<SpectralField, SpectralError> {
    let rec: FieldRecord = serde_json::from_str(s).map_err(|e| SpectralError::Format(e.to_string()))?;
    rec.into_field()
}

pub fn field_to_binary(f: &SpectralField) -> Vec<u8> {
    let mut out = Vec::with_capacity(25 + 16 * f.grid.n_points);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(f.grid.n_points as u64).to_le_bytes());
    out.extend_from_slice(&f.grid.length.to_le_bytes());
    out.push(match f.kind {
        FieldKind::ULike => 0,
        FieldKind::VLike => 1,
    });
    for c in f.lattice_order() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn field_from_binary(bytes: &[u8]) -> Result<SpectralField, SpectralError> {
    let bad = |m: &str| SpectralError::Format(m.to_string());
    if bytes.len() < 25 || &bytes[..8] != MAGIC {
        return Err(bad("missing header"));
    }
    let rd = |at: usize| -> [u8; 8] { bytes[at..at + 8].try_into().expect("8 bytes") };
    let n = u64::from_le_bytes(rd(8)) as usize;
    let length = f64::from_le_bytes(rd(16));
    let kind = match bytes[24] {
        0 => FieldKind::ULike,
        1 => FieldKind::VLike,
        _ => return Err(bad("unknown kind byte")),
    };
    if bytes.len() != 25 + 16 * n {
        return Err(bad("payload size does not match n_points"));
    }
    let coeffs = (0..2 * n).map(|q| f64::from_le_bytes(rd(25 + 8 * q))).collect();
    FieldRecord { n_points: n, length, kind, coeffs }.into_field()
}
