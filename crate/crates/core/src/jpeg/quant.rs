//! Quality-factor quantisation tables and table forensics.
//!
//! Standard tables follow the scaling rule applied to the quality-50 base
//! tables: for `Q > 50` each entry is `max(1, round(2 (1 - Q/100) b))`,
//! otherwise `min(255, round(50/Q b))`, rounding halves away from zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::tables::{CHROMA_BASE, LUMA_BASE};
use super::JpegError;

/// Which base table a quantisation matrix derives from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Luma,
    Chroma,
}

impl TableKind {
    pub fn base(self) -> &'static [u16; 64] {
        match self {
            TableKind::Luma => &LUMA_BASE,
            TableKind::Chroma => &CHROMA_BASE,
        }
    }

    /// Kind conventionally used for the `index`-th frame component.
    pub fn for_component(index: usize) -> Self {
        if index == 0 {
            TableKind::Luma
        } else {
            TableKind::Chroma
        }
    }
}

/// 8x8 quantisation table in natural order, entries in `[1, 255]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantMatrix([u16; 64]);

impl QuantMatrix {
    pub fn new(entries: [u16; 64]) -> Result<Self, JpegError> {
        if let Some((i, v)) = entries.iter().enumerate().find(|(_, &v)| !(1..=255).contains(&v)) {
            return Err(JpegError::Argument(format!(
                "quantisation entry {v} at ({}, {}) is outside [1, 255]",
                i / 8,
                i % 8
            )));
        }
        Ok(QuantMatrix(entries))
    }

    pub fn entries(&self) -> &[u16; 64] {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.0[row * 8 + col]
    }
}

impl fmt::Debug for QuantMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.chunks(8)).finish()
    }
}

impl fmt::Display for QuantMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.0.chunks(8) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
            writeln!(f, "{}", cells.join(""))?;
        }
        Ok(())
    }
}

fn check_quality(quality: u8) -> Result<(), JpegError> {
    if (1..=100).contains(&quality) {
        Ok(())
    } else {
        Err(JpegError::Argument(format!("quality factor {quality} outside [1, 100]")))
    }
}

/// Applies the quality scaling rule to an arbitrary real-valued base table.
///
/// The product is formed before the division so that integral bases hit
/// exact halves exactly; results are clamped into `[1, 255]`.
pub fn scale_base(base: &[f64; 64], quality: u8) -> Result<QuantMatrix, JpegError> {
    check_quality(quality)?;
    let q = quality as f64;
    let mut out = [0u16; 64];
    for (o, &b) in out.iter_mut().zip(base) {
        let v = if quality > 50 {
            (b * (100.0 - q) / 50.0).round()
        } else {
            (b * 50.0 / q).round()
        };
        *o = v.clamp(1.0, 255.0) as u16;
    }
    Ok(QuantMatrix(out))
}

pub fn std_quant_matrix(quality: u8, kind: TableKind) -> Result<QuantMatrix, JpegError> {
    scale_base(&kind.base().map(f64::from), quality)
}

/// Result of matching a table against the standard family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfEstimate {
    pub q_estimated: u8,
    pub is_standard: bool,
    pub distance: f64,
}

/// Mean relative deviation `|q - s| / s` over the 64 entries.
pub fn table_distance(q: &QuantMatrix, s: &QuantMatrix) -> f64 {
    q.0.iter()
        .zip(&s.0)
        .map(|(&a, &b)| (a as f64 - b as f64).abs() / b as f64)
        .sum::<f64>()
        / 64.0
}

/// Nearest standard quality for `q`; ties go to the larger quality.
pub fn estimate_qf(q: &QuantMatrix, kind: TableKind) -> QfEstimate {
    let mut best = QfEstimate {
        q_estimated: 1,
        is_standard: false,
        distance: f64::INFINITY,
    };
    for quality in 1..=100u8 {
        let s = std_quant_matrix(quality, kind).expect("quality in range");
        let d = table_distance(q, &s);
        if d <= best.distance {
            best.q_estimated = quality;
            best.distance = d;
        }
    }
    best.is_standard = best.distance == 0.0;
    best
}

/// Carries a (possibly non-standard) table to `target` quality while keeping
/// its deviation from the standard family.
///
/// The table's nearest standard quality `Qns` is estimated, each entry is
/// multiplied by the passage ratio `std50 / std(Qns)` to obtain a quality-50
/// base, and the scaling rule for `target` is applied to that base.
pub fn nonstandard_target(q: &QuantMatrix, kind: TableKind, target: u8) -> Result<QuantMatrix, JpegError> {
    check_quality(target)?;
    let est = estimate_qf(q, kind);
    let s_ns = std_quant_matrix(est.q_estimated, kind)?;
    let base50 = kind.base();
    let mut field = [0f64; 64];
    for i in 0..64 {
        field[i] = q.0[i] as f64 * base50[i] as f64 / s_ns.0[i] as f64;
    }
    scale_base(&field, target)
}

/// Passage ratios `std(to) / std(from)`, entrywise.
pub fn passage_matrix(from: u8, to: u8, kind: TableKind) -> Result<[f64; 64], JpegError> {
    let a = std_quant_matrix(from, kind)?;
    let b = std_quant_matrix(to, kind)?;
    Ok(std::array::from_fn(|i| b.0[i] as f64 / a.0[i] as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    /// Independent evaluation of the scaling rule in exact rationals.
    fn oracle(quality: u8, kind: TableKind) -> [u16; 64] {
        let q = quality as i64;
        kind.base().map(|b| {
            let b = Ratio::from_integer(b as i64);
            if q > 50 {
                let v = (Ratio::from_integer(2) * (Ratio::from_integer(1) - Ratio::new(q, 100)) * b).round();
                v.max(Ratio::from_integer(1)).to_integer() as u16
            } else {
                let v = (Ratio::new(50, q) * b).round();
                v.min(Ratio::from_integer(255)).to_integer() as u16
            }
        })
    }

    #[test]
    fn matches_rational_oracle_everywhere() {
        for kind in [TableKind::Luma, TableKind::Chroma] {
            for q in 1..=100 {
                assert_eq!(std_quant_matrix(q, kind).unwrap().entries(), &oracle(q, kind), "Q={q}");
            }
        }
    }

    #[test]
    fn anchor_values() {
        let l50 = std_quant_matrix(50, TableKind::Luma).unwrap();
        assert_eq!(l50.entries(), &LUMA_BASE);
        assert!(std_quant_matrix(100, TableKind::Chroma).unwrap().entries().iter().all(|&v| v == 1));
        assert_eq!(std_quant_matrix(75, TableKind::Luma).unwrap().get(0, 0), 8);
        assert_eq!(std_quant_matrix(25, TableKind::Luma).unwrap().get(0, 0), 32);
        // 11 * 0.5 = 5.5 rounds away from zero
        assert_eq!(std_quant_matrix(75, TableKind::Luma).unwrap().get(0, 1), 6);
        assert!(std_quant_matrix(0, TableKind::Luma).is_err());
        assert!(std_quant_matrix(101, TableKind::Luma).is_err());
    }

    #[test]
    fn monotone_in_quality() {
        for kind in [TableKind::Luma, TableKind::Chroma] {
            for q in 1..100 {
                let a = std_quant_matrix(q, kind).unwrap();
                let b = std_quant_matrix(q + 1, kind).unwrap();
                assert!(a.entries().iter().zip(b.entries()).all(|(x, y)| x >= y), "Q={q}");
            }
        }
    }

    #[test]
    fn quant_matrix_rejects_out_of_range() {
        let mut e = [1u16; 64];
        e[5] = 0;
        assert!(QuantMatrix::new(e).is_err());
        e[5] = 256;
        assert!(QuantMatrix::new(e).is_err());
        e[5] = 255;
        assert!(QuantMatrix::new(e).is_ok());
    }

    #[test]
    fn estimate_standard_tables() {
        let e = estimate_qf(&std_quant_matrix(75, TableKind::Luma).unwrap(), TableKind::Luma);
        assert_eq!((e.q_estimated, e.is_standard, e.distance), (75, true, 0.0));
        let ones = QuantMatrix::new([1; 64]).unwrap();
        let e = estimate_qf(&ones, TableKind::Luma);
        assert_eq!((e.q_estimated, e.is_standard), (100, true));
    }

    #[test]
    fn estimate_perturbed_table() {
        let mut e = *std_quant_matrix(75, TableKind::Luma).unwrap().entries();
        e[63] += 1;
        let est = estimate_qf(&QuantMatrix::new(e).unwrap(), TableKind::Luma);
        assert!(!est.is_standard);
        assert_eq!(est.q_estimated, 75);
        assert!(est.distance > 0.0);
    }

    #[test]
    fn passage_of_standard_input_lands_on_standard_target() {
        for kind in [TableKind::Luma, TableKind::Chroma] {
            let q90 = std_quant_matrix(90, kind).unwrap();
            assert_eq!(nonstandard_target(&q90, kind, 75).unwrap(), std_quant_matrix(75, kind).unwrap());
            for target in 1..=100 {
                let q = std_quant_matrix(target, kind).unwrap();
                let est = estimate_qf(&q, kind);
                assert_eq!(nonstandard_target(&q, kind, est.q_estimated).unwrap(), q);
            }
        }
    }

    #[test]
    fn doubled_base_is_quality_25() {
        let doubled = QuantMatrix::new(LUMA_BASE.map(|v| (2 * v).min(255))).unwrap();
        let est = estimate_qf(&doubled, TableKind::Luma);
        assert_eq!((est.q_estimated, est.is_standard), (25, true));
        // back at its own quality the table is unchanged; at 50 it is the base
        assert_eq!(nonstandard_target(&doubled, TableKind::Luma, 25).unwrap(), doubled);
        assert_eq!(
            nonstandard_target(&doubled, TableKind::Luma, 50).unwrap().entries(),
            &LUMA_BASE
        );
    }

    #[test]
    fn nonstandard_deviation_survives_passage() {
        let mut e = *std_quant_matrix(90, TableKind::Luma).unwrap().entries();
        e[10] *= 2;
        let q = QuantMatrix::new(e).unwrap();
        let out = nonstandard_target(&q, TableKind::Luma, 75).unwrap();
        let std75 = std_quant_matrix(75, TableKind::Luma).unwrap();
        assert_ne!(out, std75);
        assert!(out.entries()[10] > std75.entries()[10]);
    }

    #[test]
    fn passage_matrix_maps_between_standards() {
        let p = passage_matrix(90, 50, TableKind::Luma).unwrap();
        let q90 = std_quant_matrix(90, TableKind::Luma).unwrap();
        for i in 0..64 {
            assert!((q90.entries()[i] as f64 * p[i] - LUMA_BASE[i] as f64).abs() < 1e-9);
        }
    }
}
