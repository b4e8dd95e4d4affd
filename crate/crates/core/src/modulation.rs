//! Square QAM constellations with per-dimension Gray mapping.
//!
//! Points are indexed by their bit pattern read MSB first. The leading half
//! of the pattern selects the in-phase level, the trailing half the
//! quadrature level, through the same per-dimension table:
//!
//! | bits | QPSK level | 16QAM level |
//! |------|------------|-------------|
//! | 0    | +1         |             |
//! | 1    | -1         |             |
//! | 00   |            | +3          |
//! | 01   |            | +1          |
//! | 11   |            | -1          |
//! | 10   |            | -3          |
//!
//! Levels are scaled to unit average symbol energy (`1/sqrt(2)` for QPSK,
//! `1/sqrt(10)` for 16QAM).

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            other => Err(Error::InvalidConfig(format!("unknown modulation {other:?}"))),
        }
    }
}

/// Per-dimension Gray labels, indexed by level position from the most
/// positive level down.
const GRAY_1: [u32; 2] = [0b0, 0b1];
const GRAY_2: [u32; 4] = [0b00, 0b01, 0b11, 0b10];

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: Modulation,
    /// Indexed by bit pattern.
    points: Vec<C64>,
    bits_per_symbol: usize,
    /// Per-dimension coordinate for each per-dimension label.
    level_of_label: Vec<f64>,
    c_max: f64,
    delta: f64,
}

impl Constellation {
    pub fn new(kind: Modulation) -> Self {
        let (gray, scale): (&[u32], f64) = match kind {
            Modulation::Qpsk => (&GRAY_1, std::f64::consts::FRAC_1_SQRT_2),
            Modulation::Qam16 => (&GRAY_2, 1.0 / 10f64.sqrt()),
        };
        let levels_per_dim = gray.len();
        let bits_per_dim = levels_per_dim.trailing_zeros() as usize;
        // Level at position i (from most positive): L - 1 - 2i.
        let mut level_of_label = vec![0.0; levels_per_dim];
        for (pos, &label) in gray.iter().enumerate() {
            let amp = (levels_per_dim as f64 - 1.0) - 2.0 * pos as f64;
            level_of_label[label as usize] = amp * scale;
        }
        let bits_per_symbol = 2 * bits_per_dim;
        let mask = (1u32 << bits_per_dim) - 1;
        let points = (0..1u32 << bits_per_symbol)
            .map(|pattern| {
                let i_label = (pattern >> bits_per_dim) & mask;
                let q_label = pattern & mask;
                C64::new(
                    level_of_label[i_label as usize],
                    level_of_label[q_label as usize],
                )
            })
            .collect();
        Constellation {
            kind,
            points,
            bits_per_symbol,
            level_of_label,
            c_max: (levels_per_dim as f64 - 1.0) * scale,
            delta: 2.0 * scale,
        }
    }

    pub fn kind(&self) -> Modulation {
        self.kind
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Largest per-dimension coordinate magnitude.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// Spacing between adjacent per-dimension levels.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Per-dimension coordinate levels, ascending.
    pub fn levels(&self) -> Vec<f64> {
        let mut l = self.level_of_label.clone();
        l.sort_by(f64::total_cmp);
        l
    }

    /// Lattice spacing `2 (c_max + delta / 2)` used for the discrete
    /// perturbation and the receiver modulus.
    pub fn tau(&self) -> f64 {
        2.0 * (self.c_max + self.delta / 2.0)
    }

    pub fn point(&self, pattern: u32) -> C64 {
        self.points[pattern as usize]
    }

    /// Maps a bit sequence (one `0`/`1` per byte) onto symbols.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<C64>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(Error::DimensionMismatch {
                expected: bits.len().next_multiple_of(self.bits_per_symbol),
                actual: bits.len(),
            });
        }
        Ok(bits
            .chunks(self.bits_per_symbol)
            .map(|chunk| self.point(pack(chunk)))
            .collect())
    }

    /// Minimum-distance decision. Returns the bit pattern of the nearest
    /// point; on an exact tie the smaller pattern wins.
    pub fn demodulate(&self, symbol: C64) -> u32 {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (symbol - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best as u32
    }

    /// Appends the bits of `pattern`, MSB first.
    pub fn push_bits(&self, pattern: u32, out: &mut Vec<u8>) {
        for b in (0..self.bits_per_symbol).rev() {
            out.push(((pattern >> b) & 1) as u8);
        }
    }
}

fn pack(bits: &[u8]) -> u32 {
    bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1))
}
