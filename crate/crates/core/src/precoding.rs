//! Channel inversion and regularized channel inversion.

use std::fmt;
use std::str::FromStr;

use nalgebra::Cholesky;

use crate::system::ChannelMatrix;
use crate::{CMatrix, Error, Result, C64};

/// Reciprocal condition number of `H H^H + alpha I` below which the channel
/// is rejected.
pub const RCOND_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecoderKind {
    /// `G = H^H (H H^H)^-1`
    Inverse,
    /// `G = H^H (H H^H + K sigma^2 I)^-1`
    RegularizedInverse,
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecoderKind::Inverse => "inv",
            PrecoderKind::RegularizedInverse => "rinv",
        })
    }
}

impl FromStr for PrecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inv" | "inverse" => Ok(PrecoderKind::Inverse),
            "rinv" | "regularized" => Ok(PrecoderKind::RegularizedInverse),
            other => Err(Error::InvalidConfig(format!("unknown precoder {other:?}"))),
        }
    }
}

/// An `M x K` precoding matrix together with its Gram matrix `G^H G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    matrix: CMatrix,
    kind: PrecoderKind,
    gram: CMatrix,
}

impl Precoder {
    /// Wraps an arbitrary precoding matrix.
    pub fn from_matrix(matrix: CMatrix, kind: PrecoderKind) -> Self {
        let gram = hermitian_part(&(matrix.adjoint() * &matrix));
        Precoder { matrix, kind, gram }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> PrecoderKind {
        self.kind
    }

    /// `G^H G`, `K x K` Hermitian positive semidefinite.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn users(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn tx_antennas(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `(A + A^H) / 2`, clearing rounding asymmetry.
pub(crate) fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn inverse_precoder(h: &ChannelMatrix) -> Result<Precoder> {
    build(h, 0.0, PrecoderKind::Inverse)
}

/// Regularized inversion with loading `k_sigma2` (normally `K sigma^2`).
/// A zero loading reduces to [`inverse_precoder`] and can fail the same way.
pub fn regularized_precoder(h: &ChannelMatrix, k_sigma2: f64) -> Result<Precoder> {
    if !(k_sigma2 >= 0.0) || k_sigma2.is_infinite() {
        return Err(Error::InvalidConfig(format!(
            "regularization must be finite and nonnegative, got {k_sigma2}"
        )));
    }
    build(h, k_sigma2, PrecoderKind::RegularizedInverse)
}

fn build(h: &ChannelMatrix, alpha: f64, kind: PrecoderKind) -> Result<Precoder> {
    let hm = h.matrix();
    let k = h.users();
    if k > h.tx_antennas() {
        return Err(Error::InvalidConfig(format!(
            "{k} users exceed {} transmit antennas",
            h.tx_antennas()
        )));
    }
    let mut a = hermitian_part(&(hm * hm.adjoint()));
    for i in 0..k {
        a[(i, i)] += C64::new(alpha, 0.0);
    }
    let eig = a.symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(Error::IllConditioned { rcond });
    }
    let chol = Cholesky::new(a).ok_or(Error::IllConditioned { rcond })?;
    // (H H^H + alpha I) X = H  gives  G = X^H.
    let x = chol.solve(hm);
    Ok(Precoder::from_matrix(x.adjoint(), kind))
}
