//! Time evolution `ψ ← exp(-iHt) ψ`.
//!
//! Three propagators share the [`Propagator`] interface:
//!
//! - [`ExactEigen`]: diagonalises the dense form once; exact for any `t`.
//! - [`SplitOperator`]: symmetric kinetic–potential–kinetic steps, fused so
//!   that each step costs one FFT pair.
//! - [`Trotter`]: product formulas of order 1, 2 or 4 over an ordered list
//!   of Hermitian summands, each of which knows its own exponential.
//!
//! Step-based propagators cover a duration `t` with `⌈|t|/dt⌉` equal steps,
//! so negative times (backward evolution) are handled the same way.
//! [`Evolver`] adds the grid-edge check that turns periodic wrap-around
//! into an error.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::grid::{fft_inplace, Grid, WaveFunction};
use crate::hamiltonian::pauli::{hermiticity_defect, PauliString, PauliSum};
use crate::hamiltonian::{GridHamiltonian, HamiltonianOp};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactEigen,
    SplitOperator,
    Trotter,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorSpec {
    pub method: Method,
    /// Largest step; ignored by the exact propagator except for edge checks.
    pub dt: f64,
    /// Product-formula order for [`Method::Trotter`]: 1, 2 or 4.
    pub order: u8,
}

impl PropagatorSpec {
    pub fn new(method: Method, dt: f64, order: u8) -> Result<Self> {
        let s = Self { method, dt, order };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if ![1, 2, 4].contains(&self.order) {
            return Err(Error::Invalid(format!("Trotter order must be 1, 2 or 4, got {}", self.order)));
        }
        Ok(())
    }

    /// Number of equal steps covering `|t|`.
    pub fn steps_for(&self, t: f64) -> usize {
        steps_for(t, self.dt)
    }
}

fn steps_for(t: f64, dt: f64) -> usize {
    if t == 0.0 {
        return 0;
    }
    // tolerate round-off when t is an exact multiple of dt
    ((t.abs() / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Recommended step `0.1/‖H‖` with `‖H‖ ≈ max T + max |V|`.
pub fn dt_max(h: &GridHamiltonian) -> f64 {
    0.1 / h.norm_estimate()
}

pub trait Propagator: Send + Sync {
    fn dim(&self) -> usize;

    /// `amp ← exp(-iHt) amp` on raw grid amplitudes.
    fn evolve(&self, amp: &mut [C64], t: f64);

    /// Takes `n` steps of length `h`, calling `visit(s, ψ(s·h))` after
    /// each one; stops at the first error.
    fn evolve_steps(
        &self,
        amp: &mut [C64],
        h: f64,
        n: usize,
        visit: &mut dyn FnMut(usize, &[C64]) -> Result<()>,
    ) -> Result<()> {
        for s in 1..=n {
            self.evolve(amp, h);
            visit(s, amp)?;
        }
        Ok(())
    }
}

/// Eigenvectors of a real-symmetric or complex-Hermitian matrix.
#[derive(Clone, Debug)]
enum Vectors {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

/// Exact propagator from a full diagonalisation.
#[derive(Clone, Debug)]
pub struct ExactEigen {
    energies: Vec<f64>,
    vectors: Vectors,
}

impl ExactEigen {
    pub fn new(h: &HamiltonianOp) -> Result<Self> {
        Self::from_dense(&h.to_dense()?)
    }

    pub fn from_dense(d: &DMatrix<C64>) -> Result<Self> {
        let scale = d.iter().fold(1.0f64, |m, a| m.max(a.norm()));
        let defect = hermiticity_defect(d);
        if defect > 1e-10 * scale {
            return Err(Error::NotHermitian(defect));
        }
        let imag = d.iter().fold(0.0f64, |m, a| m.max(a.im.abs()));
        if imag <= 1e-14 * scale {
            let re = d.map(|z| z.re);
            let re = (&re + re.transpose()) * 0.5;
            let e = SymmetricEigen::new(re);
            Ok(Self { energies: e.eigenvalues.iter().copied().collect(), vectors: Vectors::Real(e.eigenvectors) })
        } else {
            let h = (d + d.adjoint()) * C64::new(0.5, 0.0);
            let e = SymmetricEigen::new(h);
            Ok(Self {
                energies: e.eigenvalues.iter().copied().collect(),
                vectors: Vectors::Complex(e.eigenvectors),
            })
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Coefficients `c = V† ψ` in the eigenbasis.
    pub fn to_eigen(&self, amp: &[C64]) -> Vec<C64> {
        match &self.vectors {
            Vectors::Real(v) => {
                let re = DVector::from_iterator(amp.len(), amp.iter().map(|a| a.re));
                let im = DVector::from_iterator(amp.len(), amp.iter().map(|a| a.im));
                let (cr, ci) = (v.tr_mul(&re), v.tr_mul(&im));
                cr.iter().zip(ci.iter()).map(|(r, i)| C64::new(*r, *i)).collect()
            }
            Vectors::Complex(v) => v.ad_mul(&DVector::from_column_slice(amp)).iter().copied().collect(),
        }
    }

    /// `ψ = V c`.
    pub fn from_eigen(&self, c: &[C64], out: &mut [C64]) {
        match &self.vectors {
            Vectors::Real(v) => {
                let re = DVector::from_iterator(c.len(), c.iter().map(|a| a.re));
                let im = DVector::from_iterator(c.len(), c.iter().map(|a| a.im));
                let (pr, pi) = (v * re, v * im);
                for (o, (r, i)) in out.iter_mut().zip(pr.iter().zip(pi.iter())) {
                    *o = C64::new(*r, *i);
                }
            }
            Vectors::Complex(v) => {
                let p = v * DVector::from_column_slice(c);
                out.copy_from_slice(p.as_slice());
            }
        }
    }

    /// Multiplies eigen-coefficients by `exp(-iE t)`.
    pub fn phase(&self, c: &mut [C64], t: f64) {
        for (a, e) in c.iter_mut().zip(&self.energies) {
            *a *= C64::from_polar(1.0, -e * t);
        }
    }
}

impl Propagator for ExactEigen {
    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn evolve(&self, amp: &mut [C64], t: f64) {
        if t == 0.0 {
            return;
        }
        let mut c = self.to_eigen(amp);
        self.phase(&mut c, t);
        self.from_eigen(&c, amp);
    }

    /// Every checkpoint is computed from the initial eigen-coefficients,
    /// so round-off does not accumulate with the step count.
    fn evolve_steps(
        &self,
        amp: &mut [C64],
        h: f64,
        n: usize,
        visit: &mut dyn FnMut(usize, &[C64]) -> Result<()>,
    ) -> Result<()> {
        let c0 = self.to_eigen(amp);
        for s in 1..=n {
            let mut c = c0.clone();
            self.phase(&mut c, s as f64 * h);
            self.from_eigen(&c, amp);
            visit(s, amp)?;
        }
        Ok(())
    }
}

/// Symmetric split-operator propagator for `T(p) + V(x)` on a grid.
#[derive(Clone, Debug)]
pub struct SplitOperator {
    grid: Grid,
    kinetic: Vec<f64>,
    potential: Vec<f64>,
    dt: f64,
}

impl SplitOperator {
    pub fn new(h: &GridHamiltonian, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Invalid("time step must be positive".into()));
        }
        Ok(Self { grid: *h.grid(), kinetic: h.kinetic_fft().to_vec(), potential: h.potential().to_vec(), dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl Propagator for SplitOperator {
    fn dim(&self) -> usize {
        self.kinetic.len()
    }

    fn evolve(&self, amp: &mut [C64], t: f64) {
        let n = steps_for(t, self.dt);
        if n == 0 {
            return;
        }
        let h = t / n as f64;
        let inv_n = 1.0 / amp.len() as f64;
        let half: Vec<C64> = self.kinetic.iter().map(|k| C64::from_polar(inv_n, -0.5 * k * h)).collect();
        let full: Vec<C64> = self.kinetic.iter().map(|k| C64::from_polar(inv_n, -k * h)).collect();
        let pot: Vec<C64> = self.potential.iter().map(|v| C64::from_polar(1.0, -v * h)).collect();

        fft_inplace(&self.grid, amp, true);
        for s in 0..n {
            let k = if s == 0 { &half } else { &full };
            amp.iter_mut().zip(k).for_each(|(a, f)| *a *= f);
            fft_inplace(&self.grid, amp, false);
            amp.iter_mut().zip(&pot).for_each(|(a, f)| *a *= f);
            fft_inplace(&self.grid, amp, true);
        }
        // closing half kinetic step; its 1/N undoes the final inverse FFT
        amp.iter_mut().zip(&half).for_each(|(a, f)| *a *= f);
        fft_inplace(&self.grid, amp, false);
    }
}

/// A Hermitian summand `A` that can apply `exp(-iAτ)`.
pub trait Summand: Send + Sync {
    fn dim(&self) -> usize;
    fn exp_apply(&self, amp: &mut [C64], tau: f64);
    /// `A ψ`, used to check that the summands add up to `H`.
    fn apply(&self, amp: &[C64]) -> Vec<C64>;
}

/// Kinetic part of a grid Hamiltonian (diagonal in momentum space).
pub struct KineticSummand {
    grid: Grid,
    kinetic: Vec<f64>,
}

impl KineticSummand {
    pub fn new(h: &GridHamiltonian) -> Self {
        Self { grid: *h.grid(), kinetic: h.kinetic_fft().to_vec() }
    }
}

impl Summand for KineticSummand {
    fn dim(&self) -> usize {
        self.kinetic.len()
    }

    fn exp_apply(&self, amp: &mut [C64], tau: f64) {
        let inv_n = 1.0 / amp.len() as f64;
        fft_inplace(&self.grid, amp, true);
        amp.iter_mut()
            .zip(&self.kinetic)
            .for_each(|(a, k)| *a *= C64::from_polar(inv_n, -k * tau));
        fft_inplace(&self.grid, amp, false);
    }

    fn apply(&self, amp: &[C64]) -> Vec<C64> {
        let mut b = amp.to_vec();
        let inv_n = 1.0 / amp.len() as f64;
        fft_inplace(&self.grid, &mut b, true);
        b.iter_mut().zip(&self.kinetic).for_each(|(a, k)| *a *= k * inv_n);
        fft_inplace(&self.grid, &mut b, false);
        b
    }
}

/// Any diagonal operator (potential energy).
pub struct DiagonalSummand {
    diag: Vec<f64>,
}

impl DiagonalSummand {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }
}

impl Summand for DiagonalSummand {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn exp_apply(&self, amp: &mut [C64], tau: f64) {
        amp.iter_mut().zip(&self.diag).for_each(|(a, v)| *a *= C64::from_polar(1.0, -v * tau));
    }

    fn apply(&self, amp: &[C64]) -> Vec<C64> {
        amp.iter().zip(&self.diag).map(|(a, v)| a * v).collect()
    }
}

/// A single weighted Pauli string.
pub struct PauliTerm {
    n_qubits: usize,
    string: PauliString,
    coeff: f64,
}

impl Summand for PauliTerm {
    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn exp_apply(&self, amp: &mut [C64], tau: f64) {
        self.string.exp_apply(amp, self.coeff * tau);
    }

    fn apply(&self, amp: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); amp.len()];
        self.string.apply_add(C64::new(self.coeff, 0.0), amp, &mut out);
        out
    }
}

/// Dense Hermitian summand, exponentiated through its eigenbasis.
pub struct DenseSummand {
    matrix: DMatrix<C64>,
    eig: ExactEigen,
}

impl DenseSummand {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let eig = ExactEigen::from_dense(&matrix)?;
        Ok(Self { matrix, eig })
    }
}

impl Summand for DenseSummand {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn exp_apply(&self, amp: &mut [C64], tau: f64) {
        self.eig.evolve(amp, tau);
    }

    fn apply(&self, amp: &[C64]) -> Vec<C64> {
        (&self.matrix * DVector::from_column_slice(amp)).iter().copied().collect()
    }
}

/// Product-formula propagator.
pub struct Trotter {
    parts: Vec<Box<dyn Summand>>,
    order: u8,
    dt: f64,
}

/// Suzuki's fourth-order coefficient `p = 1/(4 - 4^{1/3})`.
fn suzuki_p() -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / 3.0))
}

impl Trotter {
    pub fn new(parts: Vec<Box<dyn Summand>>, order: u8, dt: f64) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Invalid("Trotter propagator needs at least one summand".into()));
        }
        let d = parts[0].dim();
        if parts.iter().any(|p| p.dim() != d) {
            return Err(Error::Invalid("Trotter summands act on different dimensions".into()));
        }
        PropagatorSpec { method: Method::Trotter, dt, order }.validate()?;
        Ok(Self { parts, order, dt })
    }

    /// Potential and kinetic summands of a grid Hamiltonian, in that order:
    /// the potential goes outside so each stage takes one FFT pair.
    pub fn grid(h: &GridHamiltonian, order: u8, dt: f64) -> Result<Self> {
        Self::new(
            vec![Box::new(DiagonalSummand::new(h.potential().to_vec())), Box::new(KineticSummand::new(h))],
            order,
            dt,
        )
    }

    /// One summand per Pauli string.
    pub fn pauli(sum: &PauliSum, order: u8, dt: f64) -> Result<Self> {
        let parts: Vec<Box<dyn Summand>> = sum
            .terms
            .iter()
            .map(|(s, c)| Box::new(PauliTerm { n_qubits: sum.n_qubits, string: *s, coeff: *c }) as Box<dyn Summand>)
            .collect();
        Self::new(parts, order, dt)
    }

    /// `max |(Σ A_k) v - H v|` over a few deterministic test vectors.
    pub fn sum_defect(&self, h: &HamiltonianOp) -> f64 {
        let n = self.parts[0].dim();
        let mut worst = 0.0f64;
        for seed in 1..4 {
            let v: Vec<C64> = (0..n)
                .map(|i| C64::new((0.37 * (i * seed) as f64).sin(), (0.11 * (i + seed) as f64).cos()))
                .collect();
            let mut sum = vec![C64::new(0.0, 0.0); n];
            for p in &self.parts {
                for (s, a) in sum.iter_mut().zip(p.apply(&v)) {
                    *s += a;
                }
            }
            let hv = h.apply(&v);
            worst = sum.iter().zip(&hv).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
        }
        worst
    }

    fn first_order(&self, amp: &mut [C64], h: f64) {
        for p in &self.parts {
            p.exp_apply(amp, h);
        }
    }

    fn second_order(&self, amp: &mut [C64], h: f64) {
        let m = self.parts.len();
        for p in &self.parts[..m - 1] {
            p.exp_apply(amp, 0.5 * h);
        }
        self.parts[m - 1].exp_apply(amp, h);
        for p in self.parts[..m - 1].iter().rev() {
            p.exp_apply(amp, 0.5 * h);
        }
    }

    fn fourth_order(&self, amp: &mut [C64], h: f64) {
        let p = suzuki_p();
        self.second_order(amp, p * h);
        self.second_order(amp, p * h);
        self.second_order(amp, (1.0 - 4.0 * p) * h);
        self.second_order(amp, p * h);
        self.second_order(amp, p * h);
    }

    /// One product-formula step of length `h`.
    pub fn step(&self, amp: &mut [C64], h: f64) {
        match self.order {
            1 => self.first_order(amp, h),
            2 => self.second_order(amp, h),
            _ => self.fourth_order(amp, h),
        }
    }
}

impl Propagator for Trotter {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn evolve(&self, amp: &mut [C64], t: f64) {
        let n = steps_for(t, self.dt);
        if n == 0 {
            return;
        }
        let h = t / n as f64;
        for _ in 0..n {
            self.step(amp, h);
        }
    }
}

/// Builds the propagator named by `spec` for `h`.
pub fn build_propagator(h: &HamiltonianOp, spec: &PropagatorSpec) -> Result<Arc<dyn Propagator>> {
    spec.validate()?;
    Ok(match spec.method {
        Method::ExactEigen => Arc::new(ExactEigen::new(h)?),
        Method::SplitOperator => {
            let g = h
                .as_grid()
                .ok_or_else(|| Error::Invalid("split-operator propagation needs a grid Hamiltonian".into()))?;
            Arc::new(SplitOperator::new(g, spec.dt)?)
        }
        Method::Trotter => match h {
            HamiltonianOp::Grid(g) => Arc::new(Trotter::grid(g, spec.order, spec.dt)?),
            HamiltonianOp::Pauli(p) => Arc::new(Trotter::pauli(p, spec.order, spec.dt)?),
            HamiltonianOp::Dense(d) => Arc::new(Trotter::pauli(
                &crate::hamiltonian::pauli_decompose(d, d.nrows().trailing_zeros() as usize)?,
                spec.order,
                spec.dt,
            )?),
        },
    })
}

/// Default edge band: 1/32 of each axis.
pub const EDGE_FRACTION: f64 = 1.0 / 32.0;
/// Edge-band probability above which propagation stops.
pub const EDGE_TOL: f64 = 1e-6;

/// A propagator bound to a grid, with boundary checks.
#[derive(Clone)]
pub struct Evolver {
    prop: Arc<dyn Propagator>,
    grid: Grid,
    spec: PropagatorSpec,
    pub edge_fraction: f64,
    pub edge_tol: f64,
}

impl Evolver {
    pub fn new(h: &HamiltonianOp, grid: Grid, spec: PropagatorSpec) -> Result<Self> {
        if h.dim() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), found: h.dim() });
        }
        Ok(Self {
            prop: build_propagator(h, &spec)?,
            grid,
            spec,
            edge_fraction: EDGE_FRACTION,
            edge_tol: EDGE_TOL,
        })
    }

    pub fn from_parts(prop: Arc<dyn Propagator>, grid: Grid, spec: PropagatorSpec) -> Self {
        Self { prop, grid, spec, edge_fraction: EDGE_FRACTION, edge_tol: EDGE_TOL }
    }

    pub fn propagator(&self) -> &Arc<dyn Propagator> {
        &self.prop
    }

    pub fn spec(&self) -> &PropagatorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Unchecked `exp(-iHt)`.
    pub fn evolve(&self, amp: &mut [C64], t: f64) {
        self.prop.evolve(amp, t)
    }

    pub fn check_edges(&self, psi: &WaveFunction, time: f64) -> Result<()> {
        let p = psi.edge_probability(self.edge_fraction)?;
        if p > self.edge_tol {
            return Err(Error::BoundaryBreach { time, probability: p });
        }
        Ok(())
    }

    /// Evolves by `t` in steps of at most `spec.dt`, checking the grid
    /// edges after each step. `t0` only labels breach times.
    pub fn propagate_from(&self, psi: &WaveFunction, t: f64, t0: f64) -> Result<WaveFunction> {
        if psi.grid() != &self.grid {
            return Err(Error::Invalid("wavefunction and Hamiltonian live on different grids".into()));
        }
        let mut out = psi.clone();
        let n = self.spec.steps_for(t);
        if n == 0 {
            return Ok(out);
        }
        let h = t / n as f64;
        let grid = self.grid;
        let mut amp = out.amp().to_vec();
        self.prop.evolve_steps(&mut amp, h, n, &mut |s, a| {
            let w = WaveFunction::new(grid, a.to_vec(), crate::grid::Rep::Position)?;
            self.check_edges(&w, t0 + s as f64 * h)
        })?;
        out.amp_mut().copy_from_slice(&amp);
        Ok(out)
    }

    pub fn propagate(&self, psi: &WaveFunction, t: f64) -> Result<WaveFunction> {
        self.propagate_from(psi, t, 0.0)
    }
}

/// One-shot `exp(-iHt) ψ` with the method in `spec`.
pub fn propagate(psi: &WaveFunction, h: &HamiltonianOp, t: f64, spec: &PropagatorSpec) -> Result<WaveFunction> {
    Evolver::new(h, *psi.grid(), *spec)?.propagate(psi, t)
}

/// Single product-formula step for explicit summands.
pub fn trotter_step(psi: &WaveFunction, parts: Vec<Box<dyn Summand>>, dt: f64, order: u8) -> Result<WaveFunction> {
    let t = Trotter::new(parts, order, dt)?;
    let mut out = psi.clone();
    t.step(out.amp_mut(), dt);
    Ok(out)
}
