//! Correlation functions, their energy transform and S-matrix extraction.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{Rep, WaveFunction};
use crate::moller::MollerState;
use crate::par::{self, Exec};
use crate::propagation::{Evolver, ExactEigen, Propagator};
use crate::qcircuit::{
    encode_state, hadamard_sweep, hadamard_test, sample_shots, shot_rng, state_prep_unitary, CompositeOp, Evolution,
    HadamardOutcome, Part, RegisterUnitary,
};
use crate::wavepacket::ChannelSpec;
use crate::{Error, Result, C64};

/// Fraction of the series treated as its tail.
pub const TAIL_FRACTION: f64 = 0.1;
/// Largest allowed tail/peak ratio of `|C|`.
pub const DECAY_TOL: f64 = 1e-4;
/// Default validity floor on `|η₋η₊|` relative to its maximum.
pub const ETA_FLOOR: f64 = 1e-3;

/// `t_j = j·dt`, `j = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || n < 2 {
            return Err(Error::Invalid(format!("time grid needs dt > 0 and n >= 2, got {dt}, {n}")));
        }
        Ok(Self { dt, n })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dt).collect()
    }

    pub fn horizon(&self) -> f64 {
        (self.n - 1) as f64 * self.dt
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendTag {
    Classical,
    Statevector,
    Sampled,
}

/// `C(t_j)` with optional per-point standard error (sampled mode).
#[derive(Clone, Debug)]
pub struct CorrelationSeries {
    pub grid: TimeGrid,
    pub values: Vec<C64>,
    pub stderr: Vec<f64>,
    pub backend: BackendTag,
}

impl CorrelationSeries {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// `max |C|` over the final tenth divided by `max |C|` overall.
    pub fn tail_ratio(&self) -> f64 {
        let peak = self.values.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        let start = ((1.0 - TAIL_FRACTION) * self.values.len() as f64).floor() as usize;
        self.values[start..].iter().fold(0.0f64, |m, c| m.max(c.norm())) / peak
    }

    pub fn check_decay(&self, tol: f64) -> Result<()> {
        let r = self.tail_ratio();
        if r > tol {
            return Err(Error::Horizon { ratio: r });
        }
        Ok(())
    }
}

fn check_pair(plus: &MollerState, minus: &MollerState, full: &Evolver) -> Result<()> {
    if plus.psi.grid() != minus.psi.grid() || plus.psi.grid() != full.grid() {
        return Err(Error::Invalid("Møller states and Hamiltonian must share one grid".into()));
    }
    if plus.psi.rep() != Rep::Position || minus.psi.rep() != Rep::Position {
        return Err(Error::RepMismatch { expected: Rep::Position, found: Rep::Momentum });
    }
    Ok(())
}

/// Propagates `Ψ₊` once through the grid, projecting on the fixed `Ψ₋`
/// at every `t_j`; edge-checked.
pub fn correlation_classical(
    plus: &MollerState,
    minus: &MollerState,
    full: &Evolver,
    tg: TimeGrid,
) -> Result<CorrelationSeries> {
    check_pair(plus, minus, full)?;
    let m = plus.psi.grid().cell();
    let bra = minus.psi.amp();
    let dot = |a: &[C64]| -> C64 { bra.iter().zip(a).map(|(x, y)| x.conj() * y).sum::<C64>() * m };
    let mut values = Vec::with_capacity(tg.n);
    values.push(dot(plus.psi.amp()));
    let mut amp = plus.psi.amp().to_vec();
    let grid = *full.grid();
    full.propagator().evolve_steps(&mut amp, tg.dt, tg.n - 1, &mut |s, a| {
        let w = WaveFunction::new(grid, a.to_vec(), Rep::Position)?;
        full.check_edges(&w, s as f64 * tg.dt)?;
        values.push(dot(a));
        Ok(())
    })?;
    Ok(CorrelationSeries { grid: tg, stderr: vec![0.0; values.len()], values, backend: BackendTag::Classical })
}

/// `C(t) = Σ_n conj(a_n) b_n exp(-iE_n t)` from one diagonalisation; no
/// edge checks.
pub fn correlation_eigenbasis(plus: &WaveFunction, minus: &WaveFunction, eig: &ExactEigen, tg: TimeGrid) -> Vec<C64> {
    let m = plus.grid().cell();
    let a = eig.to_eigen(minus.amp());
    let b = eig.to_eigen(plus.amp());
    let w: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x.conj() * y * m).collect();
    let e = eig.energies();
    tg.times()
        .iter()
        .map(|t| w.iter().zip(e).map(|(c, en)| c * C64::from_polar(1.0, -en * t)).sum())
        .collect()
}

/// `⟨exp(+iHt/2)Ψ₋ | exp(-iHt/2)Ψ₊⟩`: the evolution split evenly between
/// bra and ket.
pub fn correlation_symmetric(
    plus: &MollerState,
    minus: &MollerState,
    full: &Evolver,
    tg: TimeGrid,
) -> Result<CorrelationSeries> {
    check_pair(plus, minus, full)?;
    let (mut ket, mut bra) = (plus.psi.clone(), minus.psi.clone());
    let h = 0.5 * tg.dt;
    let mut values = vec![bra.inner(&ket)?];
    for j in 1..tg.n {
        let t = j as f64 * h;
        ket = full.propagate_from(&ket, h, t - h)?;
        bra = full.propagate_from(&bra, -h, -(t - h))?;
        values.push(bra.inner(&ket)?);
    }
    Ok(CorrelationSeries { grid: tg, stderr: vec![0.0; values.len()], values, backend: BackendTag::Classical })
}

/// The circuit pieces for `O_γ(t)` and `O_γ′`.
#[derive(Clone)]
pub struct CircuitPlan {
    pub o_gamma0: CompositeOp,
    pub o_gamma_prime: CompositeOp,
    pub step: Evolution,
}

impl CircuitPlan {
    /// State preparations from the asymptotic packets, Møller legs with
    /// each state's τ₀, correlation step `exp(-iH dt)`.
    pub fn new(
        plus: &MollerState,
        minus: &MollerState,
        full: Arc<dyn Propagator>,
        free_plus: Arc<dyn Propagator>,
        free_minus: Arc<dyn Propagator>,
        dt: f64,
    ) -> Result<Self> {
        let up: Arc<dyn RegisterUnitary> = Arc::new(state_prep_unitary(&encode_state(&plus.psi_in)?));
        let um: Arc<dyn RegisterUnitary> = Arc::new(state_prep_unitary(&encode_state(&minus.psi_in)?));
        let step = Evolution::new(full.clone(), dt, "H");
        let o_gamma0 = CompositeOp::gamma(up, full.clone(), free_plus, plus.tau0, &step, 0)?;
        let o_gamma_prime = CompositeOp::gamma_prime(um, full, free_minus, minus.tau0)?;
        Ok(Self { o_gamma0, o_gamma_prime, step })
    }

    pub fn n_qubits(&self) -> usize {
        self.o_gamma0.dim().trailing_zeros() as usize + 1
    }

    /// `O_γ(t_j)` as an explicit composite.
    pub fn o_gamma(&self, j: usize) -> Result<CompositeOp> {
        if j == 0 {
            return Ok(self.o_gamma0.clone());
        }
        self.o_gamma0.clone().then(Arc::new(self.step.pow(j)))
    }
}

/// How the statevector backend assembles the `t` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitMode {
    /// One circuit per `t_j`, built from scratch; parallel over `t`.
    Fresh,
    /// One circuit carried forward by controlled steps.
    Sweep,
}

/// Exact ancilla readouts `(Re, Im)` for every `t_j`.
pub fn hadamard_outcomes(
    plan: &CircuitPlan,
    tg: TimeGrid,
    mode: CircuitMode,
    exec: Exec,
) -> Result<Vec<(HadamardOutcome, HadamardOutcome)>> {
    match mode {
        CircuitMode::Sweep => {
            let parts = par::map_range(exec, 2, |p| {
                let part = if p == 0 { Part::Re } else { Part::Im };
                hadamard_sweep(&plan.o_gamma0, &plan.step, &plan.o_gamma_prime, part, tg.n)
            });
            let mut it = parts.into_iter();
            let re = it.next().expect("two parts")?;
            let im = it.next().expect("two parts")?;
            Ok(re.into_iter().zip(im).collect())
        }
        CircuitMode::Fresh => par::map_range(exec, tg.n, |j| {
            let og = plan.o_gamma(j)?;
            Ok((
                hadamard_test(&og, &plan.o_gamma_prime, Part::Re)?,
                hadamard_test(&og, &plan.o_gamma_prime, Part::Im)?,
            ))
        })
        .into_iter()
        .collect(),
    }
}

/// Statevector backend: `C(t_j) = ⟨Z⟩_Re + i⟨Z⟩_Im`.
pub fn correlation_statevector(
    plan: &CircuitPlan,
    tg: TimeGrid,
    mode: CircuitMode,
    exec: Exec,
) -> Result<CorrelationSeries> {
    let out = hadamard_outcomes(plan, tg, mode, exec)?;
    let values = out.iter().map(|(r, i)| C64::new(r.z, i.z)).collect::<Vec<_>>();
    Ok(CorrelationSeries { grid: tg, stderr: vec![0.0; values.len()], values, backend: BackendTag::Statevector })
}

/// Shot-sampled series from exact readouts; point `j` part `p` draws from
/// stream `2j + p` of `seed`. The stderr column combines both parts.
pub fn correlation_sampled(
    outcomes: &[(HadamardOutcome, HadamardOutcome)],
    tg: TimeGrid,
    shots: u64,
    seed: u64,
) -> Result<CorrelationSeries> {
    if outcomes.len() != tg.n {
        return Err(Error::Dimension { expected: tg.n, found: outcomes.len() });
    }
    let mut values = Vec::with_capacity(tg.n);
    let mut stderr = Vec::with_capacity(tg.n);
    for (j, (re, im)) in outcomes.iter().enumerate() {
        let r = sample_shots(re.p1, shots, &mut shot_rng(seed, 2 * j as u64))?;
        let i = sample_shots(im.p1, shots, &mut shot_rng(seed, 2 * j as u64 + 1))?;
        values.push(C64::new(r.value, i.value));
        stderr.push(r.stderr.hypot(i.stderr));
    }
    Ok(CorrelationSeries { grid: tg, values, stderr, backend: BackendTag::Sampled })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    None,
    /// Raised-cosine roll-off over the final tenth of the series.
    CosineTail,
}

impl Window {
    fn weight(self, j: usize, n: usize) -> f64 {
        match self {
            Window::None => 1.0,
            Window::CosineTail => {
                let s = j as f64 / (n - 1) as f64;
                let a = 1.0 - TAIL_FRACTION;
                if s <= a {
                    1.0
                } else {
                    0.5 * (1.0 + (PI * (s - a) / TAIL_FRACTION).cos())
                }
            }
        }
    }
}

/// `C̃(E) = (1/2π) Σ_j w_j exp(iE t_j) C(t_j) dt` on the given energies.
pub fn energy_transform(c: &CorrelationSeries, energies: &[f64], window: Window, exec: Exec) -> Vec<C64> {
    let n = c.values.len();
    let w: Vec<C64> = c.values.iter().enumerate().map(|(j, v)| v * window.weight(j, n)).collect();
    let dt = c.grid.dt;
    par::map_range(exec, energies.len(), |i| {
        let e = energies[i];
        // exp(iE t_j) by recurrence, re-anchored to keep the phase exact
        let rot = C64::from_polar(1.0, e * dt);
        let mut ph = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for (j, v) in w.iter().enumerate() {
            if j % 64 == 0 {
                ph = C64::from_polar(1.0, e * j as f64 * dt);
            }
            acc += ph * v;
            ph *= rot;
        }
        acc * (dt / (2.0 * PI))
    })
}

/// Reduced mass along the channel's translational coordinate and its
/// internal (vibrational) energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelEnergetics {
    pub mu: f64,
    pub e_internal: f64,
}

impl ChannelEnergetics {
    /// `k(E) = sign·√(2μ(E − E_int))`, `None` below threshold.
    pub fn momentum(&self, e: f64, sign: f64) -> Option<f64> {
        let r = 2.0 * self.mu * (e - self.e_internal);
        (r > 0.0).then(|| sign * r.sqrt())
    }

    pub fn energy(&self, k: f64) -> f64 {
        k * k / (2.0 * self.mu) + self.e_internal
    }
}

/// `n` total energies covering `k0 ± n_sigma·σ_k` of a channel's packet.
pub fn populated_band(c: &ChannelSpec, en: &ChannelEnergetics, n_sigma: f64, n: usize) -> Vec<f64> {
    let k0 = c.packet.k0.abs();
    let s = c.packet.momentum_spread();
    let lo = en.energy((k0 - n_sigma * s).max(0.0));
    let hi = en.energy(k0 + n_sigma * s);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).collect()
}

#[derive(Clone, Debug)]
pub struct SMatrixTable {
    pub energies: Vec<f64>,
    pub s: Vec<C64>,
    pub mask: Vec<bool>,
    /// `|η₋*(k′) η₊(k)|` at each energy (zero below threshold).
    pub eta_weight: Vec<f64>,
}

impl SMatrixTable {
    /// `|S|²` everywhere; meaningful where `mask` holds.
    pub fn probability(&self) -> Vec<f64> {
        self.s.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Indices of masked-in energies.
    pub fn valid(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i)
    }
}

/// `S(E) = C̃(E) / (J η₋*(k′) η₊(k))`, `J = √(μμ′/(k k′))`, with momenta
/// signed along each packet's direction. Energies where `|η₋η₊|` drops
/// below `floor·max` or either channel is closed are masked out.
pub fn s_matrix(
    c_tilde: &[C64],
    energies: &[f64],
    reactant: (&ChannelSpec, ChannelEnergetics),
    product: (&ChannelSpec, ChannelEnergetics),
    floor: f64,
) -> Result<SMatrixTable> {
    if c_tilde.len() != energies.len() {
        return Err(Error::Dimension { expected: energies.len(), found: c_tilde.len() });
    }
    let (rc, re) = reactant;
    let (pc, pe) = product;
    let mut s = vec![C64::new(0.0, 0.0); energies.len()];
    let mut weight = vec![0.0; energies.len()];
    let mut denom = vec![C64::new(0.0, 0.0); energies.len()];
    for (i, &e) in energies.iter().enumerate() {
        if let (Some(k), Some(kp)) = (re.momentum(e, rc.direction()), pe.momentum(e, pc.direction())) {
            let eta = pc.eta_at(kp).conj() * rc.eta_at(k);
            let j = (re.mu * pe.mu / (k * kp).abs()).sqrt();
            weight[i] = eta.norm();
            denom[i] = eta * j;
        }
    }
    let wmax = weight.iter().fold(0.0f64, |a, b| a.max(*b));
    let mask: Vec<bool> = weight.iter().map(|w| wmax > 0.0 && *w >= floor * wmax).collect();
    for i in 0..energies.len() {
        if mask[i] {
            s[i] = c_tilde[i] / denom[i];
        }
    }
    Ok(SMatrixTable { energies: energies.to_vec(), s, mask, eta_weight: weight })
}

/// `P(E) = |S(E)|²` on the mask, `None` elsewhere.
pub fn reaction_probability(t: &SMatrixTable) -> Vec<Option<f64>> {
    t.s.iter().zip(&t.mask).map(|(z, m)| m.then(|| z.norm_sqr())).collect()
}
