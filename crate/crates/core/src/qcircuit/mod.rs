//! Statevector emulator for the modified Hadamard test.
//!
//! Qubit 0 is the ancilla; the remaining qubits form the state register.
//! Register index `r` sits at full index `(r << 1) | a`. Register indices
//! are grid indices (little-endian), so for a 2D grid the low bits carry
//! `iy` and the high bits `ix`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::grid::{Grid, Rep, WaveFunction};
use crate::hamiltonian::HamiltonianOp;
use crate::propagation::{ExactEigen, Propagator, Trotter};
use crate::wavepacket::ChannelSpec;
use crate::{Error, Result, C64};

mod hadamard;
mod shots;

pub use hadamard::{hadamard_sweep, hadamard_test, HadamardOutcome, Part};
pub use shots::{plan_shots, sample_shots, shot_rng, ShotEstimate};

/// Largest register for which dense unitarity checks are allowed.
const MAX_CHECK_QUBITS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    n_qubits: usize,
    amp: Vec<C64>,
}

impl QState {
    /// `|0…0⟩` on `n` qubits.
    pub fn zero(n: usize) -> Self {
        let mut amp = vec![C64::new(0.0, 0.0); 1 << n];
        amp[0] = C64::new(1.0, 0.0);
        Self { n_qubits: n, amp }
    }

    /// Takes amplitudes as given; length must be a power of two and the
    /// vector norm 1 to 1e-10.
    pub fn from_amplitudes(amp: Vec<C64>) -> Result<Self> {
        let n = amp.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let s: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
        if (s.sqrt() - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("state vector norm {} is not 1", s.sqrt())));
        }
        Ok(Self { n_qubits: n.trailing_zeros() as usize, amp })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amp(&self) -> &[C64] {
        &self.amp
    }

    pub fn into_amp(self) -> Vec<C64> {
        self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Tensor product `|a⟩_anc ⊗ |reg⟩` with the ancilla as qubit 0.
    pub fn with_ancilla(reg: &QState) -> Self {
        let mut amp = vec![C64::new(0.0, 0.0); reg.amp.len() << 1];
        for (r, a) in reg.amp.iter().enumerate() {
            amp[r << 1] = *a;
        }
        Self { n_qubits: reg.n_qubits + 1, amp }
    }

    /// Applies the 2×2 matrix `m` (row-major) to qubit `q`.
    pub fn apply_1q(&mut self, q: usize, m: [[C64; 2]; 2]) {
        assert!(q < self.n_qubits, "qubit {q} out of range");
        let bit = 1usize << q;
        for i in 0..self.amp.len() {
            if i & bit == 0 {
                let (a, b) = (self.amp[i], self.amp[i | bit]);
                self.amp[i] = m[0][0] * a + m[0][1] * b;
                self.amp[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    pub fn h(&mut self, q: usize) {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_1q(q, [[s, s], [s, -s]]);
    }

    pub fn s_dag(&mut self, q: usize) {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        self.apply_1q(q, [[o, z], [z, C64::new(0.0, -1.0)]]);
    }

    pub fn x(&mut self, q: usize) {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        self.apply_1q(q, [[z, o], [o, z]]);
    }

    /// Applies `op` to the register block where the ancilla equals `control`.
    pub fn controlled(&mut self, control: bool, op: &dyn RegisterUnitary) -> Result<()> {
        let dim = self.amp.len() >> 1;
        if op.dim() != dim {
            return Err(Error::Dimension { expected: dim, found: op.dim() });
        }
        let a = control as usize;
        let mut block: Vec<C64> = (0..dim).map(|r| self.amp[(r << 1) | a]).collect();
        op.apply(&mut block);
        for (r, v) in block.into_iter().enumerate() {
            self.amp[(r << 1) | a] = v;
        }
        Ok(())
    }

    /// Probability of reading 1 on qubit `q`.
    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amp.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// `⟨Z_q⟩ = P(0) − P(1)`.
    pub fn expectation_z(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amp
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }

    /// Applies `op` to the whole vector (no ancilla).
    pub fn apply(&mut self, op: &dyn RegisterUnitary) -> Result<()> {
        if op.dim() != self.amp.len() {
            return Err(Error::Dimension { expected: self.amp.len(), found: op.dim() });
        }
        op.apply(&mut self.amp);
        Ok(())
    }
}

/// A unitary acting on the state register.
pub trait RegisterUnitary: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &mut [C64]);
    fn label(&self) -> String;
}

impl fmt::Debug for dyn RegisterUnitary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Householder completion `U = (I − 2uu†/u†u)·diag(c, 1, …)` with `U|0⟩ = ψ`.
#[derive(Clone, Debug)]
pub struct StatePrep {
    phase: C64,
    u: Vec<C64>,
    u_norm_sq: f64,
}

impl RegisterUnitary for StatePrep {
    fn dim(&self) -> usize {
        self.u.len()
    }

    fn apply(&self, v: &mut [C64]) {
        v[0] *= self.phase;
        if self.u_norm_sq == 0.0 {
            return;
        }
        let p: C64 = self.u.iter().zip(v.iter()).map(|(u, x)| u.conj() * x).sum();
        let f = p * (2.0 / self.u_norm_sq);
        v.iter_mut().zip(&self.u).for_each(|(x, u)| *x -= f * u);
    }

    fn label(&self) -> String {
        format!("prep[{}]", self.u.len())
    }
}

/// Any unitary whose first column is `target`.
pub fn state_prep_unitary(target: &QState) -> StatePrep {
    let a0 = target.amp[0];
    let phase = if a0.norm() > 0.0 { a0 / a0.norm() } else { C64::new(1.0, 0.0) };
    let mut u: Vec<C64> = target.amp.iter().map(|a| -a).collect();
    u[0] += phase;
    let u_norm_sq: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    // below round-off the reflection is the identity
    let u_norm_sq = if u_norm_sq < 1e-30 { 0.0 } else { u_norm_sq };
    StatePrep { phase, u, u_norm_sq }
}

/// `exp(-iHt)` applied `power` times through a propagator.
#[derive(Clone)]
pub struct Evolution {
    prop: Arc<dyn Propagator>,
    t: f64,
    power: usize,
    tag: &'static str,
}

impl Evolution {
    pub fn new(prop: Arc<dyn Propagator>, t: f64, tag: &'static str) -> Self {
        Self { prop, t, power: 1, tag }
    }

    /// The same factor raised to `power`.
    pub fn pow(&self, power: usize) -> Self {
        Self { power, ..self.clone() }
    }

    pub fn time(&self) -> f64 {
        self.t * self.power as f64
    }
}

impl RegisterUnitary for Evolution {
    fn dim(&self) -> usize {
        self.prop.dim()
    }

    fn apply(&self, v: &mut [C64]) {
        for _ in 0..self.power {
            self.prop.evolve(v, self.t);
        }
    }

    fn label(&self) -> String {
        format!("exp(-i{}·{})^{}", self.tag, self.t, self.power)
    }
}

/// Explicit matrix factor.
#[derive(Clone, Debug)]
pub struct DenseUnitary(pub DMatrix<C64>);

impl RegisterUnitary for DenseUnitary {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, v: &mut [C64]) {
        let out = &self.0 * nalgebra::DVector::from_column_slice(v);
        v.copy_from_slice(out.as_slice());
    }

    fn label(&self) -> String {
        format!("dense[{}]", self.0.nrows())
    }
}

/// Exact exponential of `h` from its eigendecomposition.
pub fn oracle_factor(h: &HamiltonianOp, t: f64) -> Result<Evolution> {
    Ok(Evolution::new(Arc::new(ExactEigen::new(h)?), t, "H"))
}

/// Product formula over the Pauli strings of `h` with step `dt`.
pub fn trotterized_factor(h: &HamiltonianOp, t: f64, order: u8, dt: f64) -> Result<Evolution> {
    let sum = h.to_pauli()?;
    Ok(Evolution::new(Arc::new(Trotter::pauli(&sum, order, dt)?), t, "H"))
}

/// `max |U†U − I|` from the action of `op` on every basis vector.
pub fn unitarity_defect(op: &dyn RegisterUnitary) -> Result<f64> {
    let d = op.dim();
    if d > 1 << MAX_CHECK_QUBITS {
        return Err(Error::DenseTooLarge { max: MAX_CHECK_QUBITS, requested: d.trailing_zeros() as usize });
    }
    let mut m = DMatrix::<C64>::zeros(d, d);
    for j in 0..d {
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[j] = C64::new(1.0, 0.0);
        op.apply(&mut e);
        m.column_mut(j).copy_from_slice(&e);
    }
    let g = m.adjoint() * &m - DMatrix::<C64>::identity(d, d);
    Ok(g.iter().fold(0.0f64, |a, z| a.max(z.norm())))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Role {
    /// `O_γ(t)`, reactant side, carries the correlation time.
    Gamma { t: f64 },
    /// `O_γ′`, product side.
    GammaPrime,
}

/// Factors applied in order to `|0…0⟩` of the register.
#[derive(Clone, Debug)]
pub struct CompositeOp {
    pub role: Role,
    factors: Vec<Arc<dyn RegisterUnitary>>,
}

impl CompositeOp {
    pub fn new(role: Role, factors: Vec<Arc<dyn RegisterUnitary>>) -> Result<Self> {
        let d = factors.first().map(|f| f.dim()).ok_or_else(|| Error::Invalid("empty composite".into()))?;
        if let Some(f) = factors.iter().find(|f| f.dim() != d) {
            return Err(Error::Dimension { expected: d, found: f.dim() });
        }
        Ok(Self { role, factors })
    }

    /// `O_γ(t) = E^j · e^{−iHτ₀} e^{+iH₀τ₀} U_r`; the Møller legs are
    /// skipped when `tau0 = 0`. `step` is `exp(-iH dt_c)`.
    pub fn gamma(
        prep: Arc<dyn RegisterUnitary>,
        full: Arc<dyn Propagator>,
        free: Arc<dyn Propagator>,
        tau0: f64,
        step: &Evolution,
        j: usize,
    ) -> Result<Self> {
        let mut f: Vec<Arc<dyn RegisterUnitary>> = vec![prep];
        if tau0 != 0.0 {
            f.push(Arc::new(Evolution::new(free, -tau0, "H0")));
            f.push(Arc::new(Evolution::new(full, tau0, "H")));
        }
        if j > 0 {
            f.push(Arc::new(step.pow(j)));
        }
        Self::new(Role::Gamma { t: step.time() * j as f64 }, f)
    }

    /// `O_γ′ = e^{+iHτ₀} e^{−iH₀τ₀} U_p`.
    pub fn gamma_prime(
        prep: Arc<dyn RegisterUnitary>,
        full: Arc<dyn Propagator>,
        free: Arc<dyn Propagator>,
        tau0: f64,
    ) -> Result<Self> {
        let mut f: Vec<Arc<dyn RegisterUnitary>> = vec![prep];
        if tau0 != 0.0 {
            f.push(Arc::new(Evolution::new(free, tau0, "H0")));
            f.push(Arc::new(Evolution::new(full, -tau0, "H")));
        }
        Self::new(Role::GammaPrime, f)
    }

    pub fn dim(&self) -> usize {
        self.factors[0].dim()
    }

    pub fn factors(&self) -> &[Arc<dyn RegisterUnitary>] {
        &self.factors
    }

    /// Appends a factor applied after the existing ones.
    pub fn then(mut self, f: Arc<dyn RegisterUnitary>) -> Result<Self> {
        if f.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: f.dim() });
        }
        self.factors.push(f);
        Ok(self)
    }
}

impl RegisterUnitary for CompositeOp {
    fn dim(&self) -> usize {
        CompositeOp::dim(self)
    }

    fn apply(&self, v: &mut [C64]) {
        for f in &self.factors {
            f.apply(v);
        }
    }

    fn label(&self) -> String {
        let parts: Vec<String> = self.factors.iter().rev().map(|f| f.label()).collect();
        parts.join(" ")
    }
}

/// Register state with the wavefunction's grid amplitudes, rescaled to
/// vector norm 1.
pub fn encode_state(psi: &WaveFunction) -> Result<QState> {
    let s: f64 = psi.amp().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !(s > 0.0) {
        return Err(Error::Invalid("cannot encode a zero wavefunction".into()));
    }
    QState::from_amplitudes(psi.amp().iter().map(|a| a / s).collect())
}

/// Inverse of [`encode_state`], continuum-normalised on `grid`.
pub fn decode_state(q: &QState, grid: Grid, rep: Rep) -> Result<WaveFunction> {
    let mut w = WaveFunction::new(grid, q.amp.clone(), rep)?;
    w.normalize()?;
    Ok(w)
}

/// `vib_qubits` vibrational ⊗ translational register holding η(k) on the
/// sorted momentum grid in block `v`: index `(v << n_k) | m`.
pub fn encode_channel_state(c: &ChannelSpec, vib_qubits: usize) -> Result<QState> {
    let (_, eta) = c.eta_sorted();
    let n_k = c.k_grid().qubits();
    if c.v >= 1 << vib_qubits {
        return Err(Error::Invalid(format!("level {} does not fit {} vibrational qubits", c.v, vib_qubits)));
    }
    let s: f64 = eta.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let mut amp = vec![C64::new(0.0, 0.0); 1 << (vib_qubits + n_k)];
    for (m, e) in eta.iter().enumerate() {
        amp[(c.v << n_k) | m] = e / s;
    }
    QState::from_amplitudes(amp)
}
