//! Precode, normalize, propagate, rescale, fold and slice.

use crate::modulation::Constellation;
use crate::perturbation::Perturbation;
use crate::precoding::Precoder;
use crate::system::ChannelMatrix;
use crate::{CVector, Error, Result, C64};

/// Normalization constants below this are treated as `u + v = 0`.
pub const MIN_GAMMA: f64 = 1e-20;

/// Transmit vector with unit instantaneous power.
#[derive(Debug, Clone, PartialEq)]
pub struct TxSignal {
    pub x: CVector,
    pub gamma: f64,
}

/// Rescaled per-user observations, one entry per user.
#[derive(Debug, Clone, PartialEq)]
pub struct RxEstimate {
    pub u_hat: CVector,
}

/// `x = G (u + tau l + p) / sqrt(gamma)`.
///
/// `gamma` is re-measured as `|G (u + tau l + p)|^2` rather than taken from
/// `pert`; the two agree to rounding, but only the measured value keeps
/// `|x|^2 = 1` to full precision on badly conditioned channels.
pub fn transmit(g: &Precoder, u: &CVector, pert: &Perturbation, tau: f64) -> Result<TxSignal> {
    if u.len() != g.users() || pert.p.len() != g.users() || pert.l.len() != g.users() {
        return Err(Error::DimensionMismatch {
            expected: g.users(),
            actual: u.len(),
        });
    }
    let v = u + pert.offset(tau);
    let gv = g.matrix() * v;
    let gamma = gv.norm_squared();
    if !(gamma >= MIN_GAMMA) {
        return Err(Error::DegenerateGamma { gamma });
    }
    Ok(TxSignal {
        x: gv.unscale(gamma.sqrt()),
        gamma,
    })
}

/// `y = H x + n`
pub fn propagate(h: &ChannelMatrix, tx: &TxSignal, n: &CVector) -> Result<CVector> {
    if tx.x.len() != h.tx_antennas() {
        return Err(Error::DimensionMismatch {
            expected: h.tx_antennas(),
            actual: tx.x.len(),
        });
    }
    if n.len() != h.users() {
        return Err(Error::DimensionMismatch {
            expected: h.users(),
            actual: n.len(),
        });
    }
    Ok(h.matrix() * &tx.x + n)
}

/// Reduces `y` into `(-tau/2, tau/2]` by removing a multiple of `tau`.
///
/// Agrees with `y - floor((y + tau/2) / tau) tau` everywhere except on the
/// interval edges, where the upper edge is kept.
pub fn fold(y: f64, tau: f64) -> f64 {
    y - ((y - tau / 2.0) / tau).ceil() * tau
}

/// `u_hat = sqrt(gamma) y`, optionally folded per real dimension.
pub fn receive(y: &CVector, gamma: f64, tau: f64, folding: bool) -> RxEstimate {
    let scale = gamma.sqrt();
    let u_hat = y.map(|z| {
        let z = z * scale;
        if folding {
            C64::new(fold(z.re, tau), fold(z.im, tau))
        } else {
            z
        }
    });
    RxEstimate { u_hat }
}

/// Hard decisions for every user, bits concatenated in user order.
pub fn detect(est: &RxEstimate, c: &Constellation) -> Vec<u8> {
    let mut bits = Vec::with_capacity(est.u_hat.len() * c.bits_per_symbol());
    for &z in est.u_hat.iter() {
        c.push_bits(c.demodulate(z), &mut bits);
    }
    bits
}
