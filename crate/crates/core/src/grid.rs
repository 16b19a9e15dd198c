//! Uniform grids, wavefunctions and continuum-normalised transforms.
//!
//! Amplitudes carry the continuum normalisation: `Σ|ψ_j|² dx = 1` in
//! position and `Σ|φ_m|² dk = 1` in momentum, so momentum amplitudes read
//! directly as the expansion coefficients `η(k)` of a packet. The
//! transform convention is
//!
//! ```text
//! φ(k) = (2π)^(-1/2) ∫ dx exp(-ikx) ψ(x)
//! ```
//!
//! Momentum-space data is stored internally in FFT order; the public
//! accessors ([`Grid1D::ks_sorted`], [`WaveFunction::momentum_sorted`])
//! always return monotonically increasing `k`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlannerScalar};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    x_min: f64,
    dx: f64,
}

impl Grid1D {
    pub fn new(n: usize, x_min: f64, dx: f64) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::NotPowerOfTwo(n));
        }
        if !(dx > 0.0) || !x_min.is_finite() {
            return Err(Error::Invalid(format!("grid spacing must be positive, got {dx}")));
        }
        Ok(Self { n, x_min, dx })
    }

    /// `n` points covering the half-open interval `[x_min, x_max)`.
    pub fn spanning(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        Self::new(n, x_min, (x_max - x_min) / n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Last grid point.
    pub fn x_last(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Period of the grid, `n·dx`.
    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// `π/dx`; the momentum grid spans `[-k_max, k_max)`.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    /// Momentum of FFT bin `m`.
    pub fn k_fft(&self, m: usize) -> f64 {
        let m = m as i64;
        let n = self.n as i64;
        let s = if m < n / 2 { m } else { m - n };
        s as f64 * self.dk()
    }

    pub fn ks_fft(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.k_fft(m)).collect()
    }

    pub fn ks_sorted(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (i as f64 - (self.n / 2) as f64) * self.dk())
            .collect()
    }

    /// FFT bin holding sorted index `i`.
    pub fn sorted_to_fft(&self, i: usize) -> usize {
        (i + self.n / 2) % self.n
    }

    pub fn qubits(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    /// Index of the grid point nearest to `x`, if inside the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let j = ((x - self.x_min) / self.dx).round();
        (j >= 0.0 && (j as usize) < self.n).then_some(j as usize)
    }
}

/// Tensor-product grid; amplitudes are row-major with X outer and Y inner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub gx: Grid1D,
    pub gy: Grid1D,
}

impl Grid2D {
    pub fn new(gx: Grid1D, gy: Grid1D) -> Self {
        Self { gx, gy }
    }

    pub fn len(&self) -> usize {
        self.gx.n() * self.gy.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.gy.n() + iy
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.gy.n(), idx % self.gy.n())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    One(Grid1D),
    Two(Grid2D),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::One(g) => g.n(),
            Grid::Two(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element in position space.
    pub fn cell(&self) -> f64 {
        match self {
            Grid::One(g) => g.dx(),
            Grid::Two(g) => g.gx.dx() * g.gy.dx(),
        }
    }

    /// Volume element in momentum space.
    pub fn k_cell(&self) -> f64 {
        match self {
            Grid::One(g) => g.dk(),
            Grid::Two(g) => g.gx.dk() * g.gy.dk(),
        }
    }

    pub fn qubits(&self) -> usize {
        self.len().trailing_zeros() as usize
    }

    pub fn as_1d(&self) -> Result<&Grid1D> {
        match self {
            Grid::One(g) => Ok(g),
            Grid::Two(_) => Err(Error::Invalid("expected a 1D grid".into())),
        }
    }

    pub fn as_2d(&self) -> Result<&Grid2D> {
        match self {
            Grid::Two(g) => Ok(g),
            Grid::One(_) => Err(Error::Invalid("expected a 2D grid".into())),
        }
    }

    /// Indices of points lying within `fraction` of the grid length of any edge.
    pub fn edge_indices(&self, fraction: f64) -> Vec<usize> {
        let band = |n: usize| ((n as f64 * fraction).ceil() as usize).clamp(1, n / 2);
        match self {
            Grid::One(g) => {
                let b = band(g.n());
                (0..g.n()).filter(|&j| j < b || j >= g.n() - b).collect()
            }
            Grid::Two(g) => {
                let (bx, by) = (band(g.gx.n()), band(g.gy.n()));
                (0..g.len())
                    .filter(|&i| {
                        let (ix, iy) = g.split(i);
                        ix < bx || ix >= g.gx.n() - bx || iy < by || iy >= g.gy.n() - by
                    })
                    .collect()
            }
        }
    }

    /// Momentum of every FFT-ordered bin, as `(kx, ky)`; `ky = 0` in 1D.
    pub fn k_pairs_fft(&self) -> Vec<(f64, f64)> {
        match self {
            Grid::One(g) => g.ks_fft().into_iter().map(|k| (k, 0.0)).collect(),
            Grid::Two(g) => {
                let kx = g.gx.ks_fft();
                let ky = g.gy.ks_fft();
                let mut out = Vec::with_capacity(g.len());
                for &a in &kx {
                    for &b in &ky {
                        out.push((a, b));
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rep {
    Position,
    Momentum,
}

type PlanKey = (usize, bool);

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<(FftPlannerScalar<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlannerScalar::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    map.entry((n, forward))
        .or_insert_with(|| {
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

/// Unnormalised in-place DFT over the grid (`forward`: `exp(-2πi mj/n)`).
///
/// Used by the propagators, where normalisation and the `x_min` phase
/// cancel between the forward and inverse legs.
pub fn fft_inplace(grid: &Grid, data: &mut [C64], forward: bool) {
    match grid {
        Grid::One(g) => {
            debug_assert_eq!(data.len(), g.n());
            plan(g.n(), forward).process(data);
        }
        Grid::Two(g) => {
            let (nx, ny) = (g.gx.n(), g.gy.n());
            debug_assert_eq!(data.len(), nx * ny);
            // rows (Y axis) are contiguous
            let py = plan(ny, forward);
            py.process(data);
            // columns (X axis) via a transposed scratch copy
            let px = plan(nx, forward);
            let mut col = vec![C64::new(0.0, 0.0); nx * ny];
            for ix in 0..nx {
                for iy in 0..ny {
                    col[iy * nx + ix] = data[ix * ny + iy];
                }
            }
            px.process(&mut col);
            for ix in 0..nx {
                for iy in 0..ny {
                    data[ix * ny + iy] = col[iy * nx + ix];
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amp: Vec<C64>,
    rep: Rep,
}

impl WaveFunction {
    pub fn new(grid: Grid, amp: Vec<C64>, rep: Rep) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), found: amp.len() });
        }
        Ok(Self { grid, amp, rep })
    }

    pub fn zeros(grid: Grid, rep: Rep) -> Self {
        Self { grid, amp: vec![C64::new(0.0, 0.0); grid.len()], rep }
    }

    /// Builds a position-space wavefunction from a closure over coordinates.
    pub fn from_fn_1d(g: Grid1D, f: impl Fn(f64) -> C64) -> Self {
        let amp = (0..g.n()).map(|j| f(g.x(j))).collect();
        Self { grid: Grid::One(g), amp, rep: Rep::Position }
    }

    pub fn from_fn_2d(g: Grid2D, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut amp = Vec::with_capacity(g.len());
        for ix in 0..g.gx.n() {
            let x = g.gx.x(ix);
            for iy in 0..g.gy.n() {
                amp.push(f(x, g.gy.x(iy)));
            }
        }
        Self { grid: Grid::Two(g), amp, rep: Rep::Position }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn amp(&self) -> &[C64] {
        &self.amp
    }

    pub fn amp_mut(&mut self) -> &mut [C64] {
        &mut self.amp
    }

    pub fn into_amp(self) -> Vec<C64> {
        self.amp
    }

    fn measure(&self) -> f64 {
        match self.rep {
            Rep::Position => self.grid.cell(),
            Rep::Momentum => self.grid.k_cell(),
        }
    }

    /// Continuum norm squared.
    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.measure()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Invalid("cannot normalise a zero wavefunction".into()));
        }
        let s = 1.0 / n;
        self.amp.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.rep != other.rep {
            return Err(Error::RepMismatch { expected: self.rep, found: other.rep });
        }
        if self.grid != other.grid {
            return Err(Error::Invalid("wavefunctions live on different grids".into()));
        }
        Ok(())
    }

    /// `<self|other>` with the continuum measure.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_compatible(other)?;
        let s: C64 = self.amp.iter().zip(&other.amp).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.measure())
    }

    /// `‖self - other‖` with the continuum measure.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self.amp.iter().zip(&other.amp).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.measure()).sqrt())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Probability inside the edge band of the grid (position rep only).
    pub fn edge_probability(&self, fraction: f64) -> Result<f64> {
        self.require(Rep::Position)?;
        let cell = self.grid.cell();
        Ok(self
            .grid
            .edge_indices(fraction)
            .into_iter()
            .map(|i| self.amp[i].norm_sqr())
            .sum::<f64>()
            * cell)
    }

    fn require(&self, rep: Rep) -> Result<()> {
        if self.rep != rep {
            return Err(Error::RepMismatch { expected: rep, found: self.rep });
        }
        Ok(())
    }

    /// Continuum-normalised transform to momentum space.
    pub fn to_momentum(&self) -> Result<WaveFunction> {
        self.require(Rep::Position)?;
        let mut amp = self.amp.clone();
        fft_inplace(&self.grid, &mut amp, true);
        let scale = self.grid.cell() / (2.0 * PI).powf(dims(&self.grid) as f64 / 2.0);
        let origin = origin(&self.grid);
        for (a, (kx, ky)) in amp.iter_mut().zip(self.grid.k_pairs_fft()) {
            *a *= C64::from_polar(scale, -(kx * origin.0 + ky * origin.1));
        }
        Ok(Self { grid: self.grid, amp, rep: Rep::Momentum })
    }

    /// Exact inverse of [`WaveFunction::to_momentum`].
    pub fn to_position(&self) -> Result<WaveFunction> {
        self.require(Rep::Momentum)?;
        let scale = self.grid.k_cell() / (2.0 * PI).powf(dims(&self.grid) as f64 / 2.0);
        let origin = origin(&self.grid);
        let mut amp: Vec<C64> = self
            .amp
            .iter()
            .zip(self.grid.k_pairs_fft())
            .map(|(a, (kx, ky))| a * C64::from_polar(scale, kx * origin.0 + ky * origin.1))
            .collect();
        fft_inplace(&self.grid, &mut amp, false);
        Ok(Self { grid: self.grid, amp, rep: Rep::Position })
    }

    /// Momentum amplitudes of a 1D wavefunction as `(k, φ(k))`, sorted by `k`.
    pub fn momentum_sorted(&self) -> Result<(Vec<f64>, Vec<C64>)> {
        self.require(Rep::Momentum)?;
        let g = self.grid.as_1d()?;
        let ks = g.ks_sorted();
        let amp = (0..g.n()).map(|i| self.amp[g.sorted_to_fft(i)]).collect();
        Ok((ks, amp))
    }

    /// Builds a 1D momentum wavefunction from amplitudes on the sorted `k` grid.
    pub fn from_momentum_sorted(g: Grid1D, sorted: &[C64]) -> Result<Self> {
        if sorted.len() != g.n() {
            return Err(Error::Dimension { expected: g.n(), found: sorted.len() });
        }
        let mut amp = vec![C64::new(0.0, 0.0); g.n()];
        for (i, a) in sorted.iter().enumerate() {
            amp[g.sorted_to_fft(i)] = *a;
        }
        Ok(Self { grid: Grid::One(g), amp, rep: Rep::Momentum })
    }

    pub fn density(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn dims(grid: &Grid) -> usize {
    match grid {
        Grid::One(_) => 1,
        Grid::Two(_) => 2,
    }
}

fn origin(grid: &Grid) -> (f64, f64) {
    match grid {
        Grid::One(g) => (g.x_min(), 0.0),
        Grid::Two(g) => (g.gx.x_min(), g.gy.x_min()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_state(grid: Grid, seed: u64) -> WaveFunction {
        // small LCG keeps the test free of RNG plumbing
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let amp = (0..grid.len()).map(|_| C64::new(next(), next())).collect();
        let mut w = WaveFunction::new(grid, amp, Rep::Position).unwrap();
        w.normalize().unwrap();
        w
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(Grid1D::new(300, 0.0, 0.1), Err(Error::NotPowerOfTwo(300))));
        assert!(Grid1D::new(256, 0.0, 0.0).is_err());
    }

    #[test]
    fn wrong_rep_is_an_error() {
        let g = Grid1D::new(16, 0.0, 1.0).unwrap();
        let w = WaveFunction::zeros(Grid::One(g), Rep::Momentum);
        assert!(matches!(w.to_momentum(), Err(Error::RepMismatch { .. })));
        let w = WaveFunction::zeros(Grid::One(g), Rep::Position);
        assert!(matches!(w.to_position(), Err(Error::RepMismatch { .. })));
    }

    #[test]
    fn round_trip_and_parseval_all_sizes() {
        for p in 4..=10 {
            let n = 1usize << p;
            let g = Grid1D::new(n, -3.7, 0.13).unwrap();
            let w = random_state(Grid::One(g), p as u64);
            let k = w.to_momentum().unwrap();
            assert!((k.norm_sq() - w.norm_sq()).abs() < 1e-12);
            let back = k.to_position().unwrap();
            assert!(back.max_abs_diff(&w).unwrap() < 1e-12);
        }
    }

    #[test]
    fn round_trip_2d() {
        let g = Grid2D::new(Grid1D::new(16, 0.5, 0.2).unwrap(), Grid1D::new(8, -1.0, 0.3).unwrap());
        let w = random_state(Grid::Two(g), 7);
        let k = w.to_momentum().unwrap();
        assert!((k.norm_sq() - 1.0).abs() < 1e-12);
        assert!(k.to_position().unwrap().max_abs_diff(&w).unwrap() < 1e-12);
    }

    #[test]
    fn plane_wave_lands_in_expected_bin() {
        let g = Grid1D::new(64, -5.0, 0.25).unwrap();
        for m in [3i64, -7, 20, -31] {
            let k0 = m as f64 * g.dk();
            let w = WaveFunction::from_fn_1d(g, |x| C64::from_polar(1.0, k0 * x));
            let (ks, amp) = w.to_momentum().unwrap().momentum_sorted().unwrap();
            let (imax, _) = amp
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap();
            assert!((ks[imax] - k0).abs() < 1e-12, "m={m}");
            let rest: f64 = amp.iter().enumerate().filter(|(i, _)| *i != imax).map(|(_, a)| a.norm()).sum();
            assert!(rest < 1e-9);
        }
    }

    #[test]
    fn delta_and_flat_are_a_pair() {
        let g = Grid1D::new(32, 0.0, 0.5).unwrap();
        let mut amp = vec![C64::new(0.0, 0.0); 32];
        amp[5] = C64::new(1.0 / g.dx().sqrt(), 0.0);
        let w = WaveFunction::new(Grid::One(g), amp, Rep::Position).unwrap();
        let k = w.to_momentum().unwrap();
        let m0 = k.amp()[0].norm();
        assert!(k.amp().iter().all(|a| (a.norm() - m0).abs() < 1e-12));

        let flat = vec![C64::new(1.0, 0.0); 32];
        let w = WaveFunction::new(Grid::One(g), flat, Rep::Momentum).unwrap();
        let x = w.to_position().unwrap();
        let peak = x.amp()[0].norm();
        assert!(x.amp()[1..].iter().all(|a| a.norm() < 1e-12 * peak.max(1.0)));
    }

    #[test]
    fn sorted_accessors_are_monotone() {
        let g = Grid1D::new(16, 0.0, 1.0).unwrap();
        let ks = g.ks_sorted();
        assert!(ks.windows(2).all(|w| w[1] > w[0]));
        assert!((ks[0] + g.k_max()).abs() < 1e-12);
        for i in 0..16 {
            assert!((g.k_fft(g.sorted_to_fft(i)) - ks[i]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn parseval_holds_for_random_states(seed in 0u64..10_000, p in 4usize..9) {
            let g = Grid1D::new(1 << p, -1.0, 0.3).unwrap();
            let w = random_state(Grid::One(g), seed);
            let k = w.to_momentum().unwrap();
            prop_assert!((k.norm_sq() - 1.0).abs() < 1e-12);
            prop_assert!(k.to_position().unwrap().max_abs_diff(&w).unwrap() < 1e-12);
        }
    }
}
