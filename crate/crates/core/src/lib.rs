//! Multi-user downlink precoding with vector perturbation.
//!
//! The crate models a base station with `M` transmit antennas serving `K`
//! single-antenna users over a flat Rayleigh channel. Data symbols are
//! precoded by channel inversion (plain or regularized) and may be perturbed
//! before precoding by
//!
//! * a discrete lattice offset `tau * l` that the receivers strip with a
//!   per-dimension modulus,
//! * a continuous vector `p` that the receivers treat as interference, or
//! * both, chosen jointly.
//!
//! The [`harness`] module drives Monte Carlo bit-error-rate sweeps over all
//! of these combinations and writes the resulting curves as CSV.

pub mod error;
mod lattice;
pub mod harness;
pub mod modulation;
pub mod perturbation;
pub mod precoding;
pub mod system;
pub mod transceiver;

pub use error::{Error, Result};
pub use harness::{
    parse_csv, read_csv, run_trial, simulate_trial, snr_at_ber, sweep, to_csv_string, write_csv,
    BerCurve, BerPoint, PointDiagnostics, SweepOptions, TrialOutcome,
};
pub use lattice::{exhaustive_search, lattice_order, quadratic_form};
pub use modulation::{Constellation, Modulation};
pub use perturbation::{
    combined_perturbation, continuous_perturbation, discrete_perturbation, gamma_of, GaussInt,
    Perturbation, PerturbationKind, SearchWindow,
};
pub use precoding::{inverse_precoder, regularized_precoder, Precoder, PrecoderKind};
pub use system::{
    sample_channel, sample_noise, snr_to_sigma2, substream, ChannelMatrix, SystemConfig,
};
pub use transceiver::{detect, fold, propagate, receive, transmit, RxEstimate, TxSignal};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;
/// Dynamically sized complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dynamically sized complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
