//! Discrete, continuous and combined vector perturbation.
//!
//! With `W = G^H G` and `s = K sigma^2`:
//!
//! * discrete: `l` minimizes `(u + tau l)^H (H H^H)^-1 (u + tau l)`, which
//!   is the normalization `gamma` under channel inversion (`W = (H H^H)^-1`);
//! * continuous: `p = -s (I + s W)^-1 W u` minimizes
//!   `D(p) = p^H (I + s W) p + 2 s Re(u^H W p) + s u^H W u`, the noise plus
//!   interference power `|p|^2 + gamma s` seen by the receivers;
//! * combined: for each candidate `l`, `p(l)` is the continuous solution for
//!   the shifted data `u + tau l`, and `l` minimizes the expected receiver
//!   error `J(l) = |p(l)|^2 + s gamma(l)`.
//!
//! Since `W` and `I + s W` commute, `u + tau l + p(l) = (I + s W)^-1 (u + tau l)`
//! and `J(l) = s (u + tau l)^H W (I + s W)^-1 (u + tau l)`. The combined
//! search therefore runs on that quadratic form; `p`, `gamma` and `J` are
//! then evaluated for the chosen `l` from their defining expressions.

use std::fmt;
use std::str::FromStr;

use nalgebra::Cholesky;
use num_complex::Complex;

use crate::lattice::{closest_point, quadratic_form};
use crate::precoding::{hermitian_part, Precoder, RCOND_THRESHOLD};
use crate::system::ChannelMatrix;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Gaussian integer `a + jb`.
pub type GaussInt = Complex<i32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    None,
    Discrete,
    Continuous,
    Combined,
}

impl PerturbationKind {
    /// Whether the scheme adds a lattice offset the receiver must fold away.
    pub fn uses_lattice(self) -> bool {
        matches!(self, PerturbationKind::Discrete | PerturbationKind::Combined)
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationKind::None => "none",
            PerturbationKind::Discrete => "discrete",
            PerturbationKind::Continuous => "continuous",
            PerturbationKind::Combined => "combined",
        })
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(PerturbationKind::None),
            "discrete" => Ok(PerturbationKind::Discrete),
            "continuous" => Ok(PerturbationKind::Continuous),
            "combined" => Ok(PerturbationKind::Combined),
            other => Err(Error::InvalidConfig(format!("unknown perturbation {other:?}"))),
        }
    }
}

/// Real and imaginary parts of each offset component range over
/// `-radius..=radius`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SearchWindow {
    pub radius: u32,
}

impl SearchWindow {
    pub const fn new(radius: u32) -> Self {
        SearchWindow { radius }
    }

    /// Number of candidate offsets for `k` users.
    pub fn candidates(&self, k: usize) -> u64 {
        (2 * u64::from(self.radius) + 1).pow(2 * k as u32)
    }
}

impl Default for SearchWindow {
    fn default() -> Self {
        SearchWindow::new(2)
    }
}

/// A perturbation `v = tau l + p` and the resulting normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub l: Vec<GaussInt>,
    pub p: CVector,
    /// `|G (u + tau l + p)|^2`
    pub gamma: f64,
    /// Minimized cost; which cost depends on the scheme.
    pub objective: f64,
}

impl Perturbation {
    /// No perturbation; `gamma = |G u|^2` and the objective is `gamma`.
    pub fn none(g: &Precoder, u: &CVector) -> Self {
        let k = u.len();
        let gamma = gamma_of(g, u, &CVector::zeros(k));
        Perturbation {
            l: vec![GaussInt::new(0, 0); k],
            p: CVector::zeros(k),
            gamma,
            objective: gamma,
        }
    }

    /// `tau l + p`
    pub fn offset(&self, tau: f64) -> CVector {
        lattice_shift(&self.l, tau) + &self.p
    }

    /// Largest `|re|` or `|im|` over the components of `l`.
    pub fn max_lattice_component(&self) -> u32 {
        self.l
            .iter()
            .map(|z| z.re.unsigned_abs().max(z.im.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }
}

fn lattice_shift(l: &[GaussInt], tau: f64) -> CVector {
    CVector::from_iterator(
        l.len(),
        l.iter()
            .map(|z| C64::new(f64::from(z.re) * tau, f64::from(z.im) * tau)),
    )
}

fn check_dims(g: &Precoder, u: &CVector) -> Result<()> {
    if u.len() != g.users() {
        return Err(Error::DimensionMismatch {
            expected: g.users(),
            actual: u.len(),
        });
    }
    Ok(())
}

/// `|G (u + v)|^2`, evaluated through the cached Gram matrix.
pub fn gamma_of(g: &Precoder, u: &CVector, v: &CVector) -> f64 {
    quadratic_form(g.gram(), &(u + v))
}

/// `I + s W`, factored. Eigenvalues are at least one, so this never fails
/// for finite input.
fn loaded_gram(g: &Precoder, s: f64) -> Result<Cholesky<C64, nalgebra::Dyn>> {
    let k = g.users();
    let a = CMatrix::identity(k, k) + g.gram().scale(s);
    Cholesky::new(a).ok_or_else(|| {
        Error::InvalidConfig(format!("I + {s} G^H G is not positive definite"))
    })
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 >= 0.0) || sigma2.is_infinite() {
        return Err(Error::InvalidConfig(format!(
            "noise variance must be finite and nonnegative, got {sigma2}"
        )));
    }
    Ok(())
}

/// `-s (I + s W)^-1 W z`
fn continuous_offset(
    chol: &Cholesky<C64, nalgebra::Dyn>,
    g: &Precoder,
    z: &CVector,
    s: f64,
) -> CVector {
    let rhs = (g.gram() * z).scale(-s);
    chol.solve(&rhs)
}

/// Continuous perturbation minimizing the interference-plus-noise power.
pub fn continuous_perturbation(g: &Precoder, u: &CVector, sigma2: f64) -> Result<Perturbation> {
    check_dims(g, u)?;
    check_sigma2(sigma2)?;
    let k = u.len();
    let s = k as f64 * sigma2;
    let chol = loaded_gram(g, s)?;
    let p = continuous_offset(&chol, g, u, s);
    let gamma = gamma_of(g, u, &p);
    Ok(Perturbation {
        l: vec![GaussInt::new(0, 0); k],
        objective: p.norm_squared() + s * gamma,
        p,
        gamma,
    })
}

/// `(H H^H)^-1`, the inversion Gram matrix.
fn inversion_metric(h: &ChannelMatrix) -> Result<CMatrix> {
    let hm = h.matrix();
    let a = hermitian_part(&(hm * hm.adjoint()));
    let eig = a.symmetric_eigenvalues();
    let lo = eig.min();
    let hi = eig.amax();
    let rcond = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(rcond >= RCOND_THRESHOLD) {
        return Err(Error::IllConditioned { rcond });
    }
    let inv = Cholesky::new(a)
        .ok_or(Error::IllConditioned { rcond })?
        .inverse();
    Ok(hermitian_part(&inv))
}

/// Discrete perturbation: `l` minimizes `(u + tau l)^H (H H^H)^-1 (u + tau l)`
/// over the window, which is `gamma` when `g` inverts `h`. With any other
/// precoder the same offset is used and `gamma` is evaluated for `g`.
pub fn discrete_perturbation(
    h: &ChannelMatrix,
    g: &Precoder,
    u: &CVector,
    tau: f64,
    window: SearchWindow,
) -> Result<Perturbation> {
    check_dims(g, u)?;
    if h.users() != g.users() {
        return Err(Error::DimensionMismatch {
            expected: g.users(),
            actual: h.users(),
        });
    }
    check_tau(tau)?;
    let l = if window.radius == 0 {
        vec![GaussInt::new(0, 0); u.len()]
    } else {
        closest_point(&inversion_metric(h)?, u, tau, window.radius)
    };
    let gamma = gamma_of(g, u, &lattice_shift(&l, tau));
    Ok(Perturbation {
        p: CVector::zeros(u.len()),
        l,
        gamma,
        objective: gamma,
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || tau.is_infinite() {
        return Err(Error::InvalidConfig(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// Joint choice of lattice offset and continuous perturbation minimizing the
/// expected receiver error `|p|^2 + K sigma^2 gamma`.
pub fn combined_perturbation(
    g: &Precoder,
    u: &CVector,
    tau: f64,
    sigma2: f64,
    window: SearchWindow,
) -> Result<Perturbation> {
    check_dims(g, u)?;
    check_tau(tau)?;
    check_sigma2(sigma2)?;
    let k = u.len();
    let s = k as f64 * sigma2;
    let chol = loaded_gram(g, s)?;
    let l = if s == 0.0 {
        // J vanishes identically; the tie-break picks l = 0.
        vec![GaussInt::new(0, 0); k]
    } else {
        // s W (I + s W)^-1
        let form = hermitian_part(&chol.solve(g.gram()).scale(s));
        closest_point(&form, u, tau, window.radius)
    };
    let shifted = u + lattice_shift(&l, tau);
    let p = continuous_offset(&chol, g, &shifted, s);
    let gamma = gamma_of(g, &shifted, &p);
    Ok(Perturbation {
        l,
        objective: p.norm_squared() + s * gamma,
        p,
        gamma,
    })
}
