//! Asymptotic channel wavepackets.
//!
//! A Gaussian packet
//!
//! ```text
//! ψ(x) = (2πΔ²)^(-1/4) exp[-(x-x0)²/(4Δ²) + i k0 (x-x0)]
//! ```
//!
//! has, under the transform convention of [`crate::grid`], the momentum
//! amplitude
//!
//! ```text
//! η(k) = (2Δ²/π)^(1/4) exp[-Δ²(k-k0)² - i k x0]
//! ```
//!
//! (the phase sign follows from the convention and is the only one
//! consistent with the position form).

mod channel;
mod morse;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::grid::{Grid, Grid1D, Rep, WaveFunction};
use crate::{Error, Result, C64};

pub use channel::{channel_product_state, packet_centre, ChannelId, ChannelSpec};
pub use morse::{build_vibrational_basis, fit_morse, MorseFit, MorseParams, VibParams, VibrationalBasis};

/// Default bound on the probability carried by momenta of the wrong sign.
pub const DEFAULT_PURITY_TOL: f64 = 1e-4;

/// Number of widths a packet must keep from the grid edges.
pub const SUPPORT_SIGMAS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub x0: f64,
    pub dx0: f64,
    pub k0: f64,
}

impl GaussianSpec {
    pub fn new(x0: f64, dx0: f64, k0: f64) -> Self {
        Self { x0, dx0, k0 }
    }

    /// Standard deviation of |η(k)|², `1/(2Δx₀)`.
    pub fn momentum_spread(&self) -> f64 {
        0.5 / self.dx0
    }

    /// Fraction of |η(k)|² on the side of k = 0 opposite to `k0`.
    ///
    /// For `k0 = 0` the packet has no preferred sign and the fraction is ½.
    pub fn wrong_sign_fraction(&self) -> f64 {
        let s = self.momentum_spread();
        0.5 * erfc(self.k0.abs() / (s * 2f64.sqrt()))
    }

    pub fn check_purity(&self, tol: f64) -> Result<()> {
        let f = self.wrong_sign_fraction();
        if f > tol {
            return Err(Error::PacketSpec(format!(
                "{:.3e} of the momentum distribution has the wrong sign (limit {tol:.1e}); \
                 increase |k0| or dx0",
                f
            )));
        }
        Ok(())
    }

    fn check_shape(&self) -> Result<()> {
        if !(self.dx0 > 0.0) || !self.dx0.is_finite() || !self.x0.is_finite() || !self.k0.is_finite() {
            return Err(Error::PacketSpec(format!("invalid Gaussian parameters {self:?}")));
        }
        Ok(())
    }

    /// Unnormalised-free closed form of the position amplitude.
    pub fn position_amplitude(&self, x: f64) -> C64 {
        let d = self.dx0;
        let y = x - self.x0;
        let a = (2.0 * PI * d * d).powf(-0.25);
        C64::from_polar(a * (-y * y / (4.0 * d * d)).exp(), self.k0 * y)
    }

    /// Closed-form momentum amplitude η(k).
    pub fn momentum_amplitude(&self, k: f64) -> C64 {
        let d = self.dx0;
        let a = (2.0 * d * d / PI).powf(0.25);
        let q = k - self.k0;
        C64::from_polar(a * (-d * d * q * q).exp(), -k * self.x0)
    }
}

/// Checks that `x0 ± 5Δx₀` lies inside the grid.
pub fn check_support(g: &GaussianSpec, grid: &Grid1D) -> Result<()> {
    let lo = g.x0 - SUPPORT_SIGMAS * g.dx0;
    let hi = g.x0 + SUPPORT_SIGMAS * g.dx0;
    if lo < grid.x_min() || hi > grid.x_last() {
        return Err(Error::Geometry(format!(
            "packet support [{lo:.4}, {hi:.4}] leaves the grid [{:.4}, {:.4}]",
            grid.x_min(),
            grid.x_last()
        )));
    }
    Ok(())
}

/// Gaussian packet sampled on the grid and renormalised.
pub fn gaussian_position(g: &GaussianSpec, grid: Grid1D, purity_tol: f64) -> Result<WaveFunction> {
    g.check_shape()?;
    check_support(g, &grid)?;
    g.check_purity(purity_tol)?;
    let mut w = WaveFunction::from_fn_1d(grid, |x| g.position_amplitude(x));
    w.normalize()?;
    Ok(w)
}

/// Momentum amplitudes η(k) of the Gaussian on the grid's momentum points, renormalised.
pub fn gaussian_momentum(g: &GaussianSpec, grid: Grid1D, purity_tol: f64) -> Result<WaveFunction> {
    g.check_shape()?;
    check_support(g, &grid)?;
    g.check_purity(purity_tol)?;
    let amp = grid.ks_fft().into_iter().map(|k| g.momentum_amplitude(k)).collect();
    let mut w = WaveFunction::new(Grid::One(grid), amp, Rep::Momentum)?;
    w.normalize()?;
    Ok(w)
}
