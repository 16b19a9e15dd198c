//! Møller states `Ψ± = Ω± ψ_in` at a finite asymptotic time τ₀.
//!
//! `Ω₊` is realised as `exp(-iHτ₀) exp(+iH₀τ₀)` and `Ω₋` as
//! `exp(+iHτ₀) exp(-iH₀τ₀)`, with `H₀` the channel's asymptotic Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::grid::WaveFunction;
use crate::hamiltonian::HamiltonianOp;
use crate::propagation::Evolver;
use crate::wavepacket::ChannelSpec;
use crate::{Error, Result};

/// `Plus` builds incoming (reactant) states, `Minus` outgoing (product) ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// Time the asymptotic leg runs for: `-τ₀` for `Plus`, `+τ₀` for `Minus`.
    fn free_time(self, tau0: f64) -> f64 {
        match self {
            Sign::Plus => -tau0,
            Sign::Minus => tau0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MollerState {
    pub psi: WaveFunction,
    /// Asymptotic packet the state was built from.
    pub psi_in: WaveFunction,
    pub channel: ChannelSpec,
    pub sign: Sign,
    pub tau0: f64,
}

/// Applies `Ω±` at asymptotic time `tau0`. `full` propagates under `H`,
/// `free` under the channel's `H₀`; both check the grid edges.
pub fn make_moller(
    psi_in: &WaveFunction,
    channel: &ChannelSpec,
    sign: Sign,
    full: &Evolver,
    free: &Evolver,
    tau0: f64,
) -> Result<MollerState> {
    if !(tau0.is_finite() && tau0 >= 0.0) {
        return Err(Error::Invalid(format!("asymptotic time must be finite and >= 0, got {tau0}")));
    }
    if free.grid() != full.grid() || psi_in.grid() != full.grid() {
        return Err(Error::Invalid("Møller legs and packet must share one grid".into()));
    }
    let psi = if tau0 == 0.0 {
        psi_in.clone()
    } else {
        let s = sign.free_time(tau0);
        let mid = free.propagate_from(psi_in, s, 0.0)?;
        full.propagate_from(&mid, -s, s)?
    };
    Ok(MollerState { psi, psi_in: psi_in.clone(), channel: channel.clone(), sign, tau0 })
}

/// Doubling schedule `{0, τ, 2τ, 4τ, …}` and the tolerance on successive
/// Møller states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSchedule {
    pub tau: f64,
    pub max_doublings: usize,
    pub tol: f64,
}

impl TauSchedule {
    pub fn new(tau: f64) -> Self {
        Self { tau, max_doublings: 8, tol: 1e-6 }
    }

    /// `0, τ, 2τ, …, 2^max_doublings τ`.
    pub fn times(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain((0..=self.max_doublings).map(|j| self.tau * (1u64 << j) as f64))
            .collect()
    }
}

/// Result of [`converge_tau0`]: the accepted τ₀, its state, and
/// `residuals[j] = ‖Ω(times[j+1]) − Ω(times[j])‖`.
#[derive(Clone, Debug)]
pub struct Tau0Trace {
    pub tau0: f64,
    pub state: MollerState,
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl Tau0Trace {
    pub fn strictly_decreasing(&self) -> bool {
        self.residuals.windows(2).all(|w| w[1] < w[0])
    }
}

/// Smallest schedule time whose Møller state changes by less than
/// `schedule.tol` at the next schedule time.
pub fn converge_tau0(
    psi_in: &WaveFunction,
    channel: &ChannelSpec,
    sign: Sign,
    full: &Evolver,
    free: &Evolver,
    schedule: &TauSchedule,
) -> Result<Tau0Trace> {
    if !(schedule.tau > 0.0 && schedule.tau.is_finite()) || !(schedule.tol > 0.0) {
        return Err(Error::Invalid(format!("bad τ₀ schedule {schedule:?}")));
    }
    let all = schedule.times();
    let mut prev = make_moller(psi_in, channel, sign, full, free, 0.0)?;
    let mut residuals = Vec::new();
    for (j, &t) in all.iter().enumerate().skip(1) {
        let next = make_moller(psi_in, channel, sign, full, free, t)?;
        let r = next.psi.distance(&prev.psi)?;
        residuals.push(r);
        if r < schedule.tol {
            return Ok(Tau0Trace { tau0: prev.tau0, state: prev, times: all[..=j].to_vec(), residuals });
        }
        prev = next;
    }
    Err(Error::MollerNotConverged { doublings: schedule.max_doublings, residuals })
}

/// `‖(H − H₀)ψ‖`: how much of ψ sits where the full and asymptotic
/// Hamiltonians differ.
pub fn interaction_overlap(psi: &WaveFunction, h: &HamiltonianOp, h0: &HamiltonianOp) -> Result<f64> {
    if h.dim() != psi.amp().len() || h0.dim() != psi.amp().len() {
        return Err(Error::Dimension { expected: psi.amp().len(), found: h.dim() });
    }
    let a = h.apply(psi.amp());
    let b = h0.apply(psi.amp());
    let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum();
    Ok((s * psi.grid().cell()).sqrt())
}

/// Relative mismatch between `⟨Ψ|H|Ψ⟩` and `⟨ψ_in|H₀|ψ_in⟩`.
pub fn energy_defect(state: &MollerState, psi_in: &WaveFunction, h: &HamiltonianOp, h0: &HamiltonianOp) -> Result<f64> {
    let e = h.expectation(&state.psi)?;
    let e0 = h0.expectation(psi_in)?;
    Ok((e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Grid1D};
    use crate::hamiltonian::hamiltonian_1d;
    use crate::propagation::{Method, PropagatorSpec};
    use crate::wavepacket::{gaussian_position, ChannelId, GaussianSpec, DEFAULT_PURITY_TOL};

    struct Setup {
        psi: WaveFunction,
        chan: ChannelSpec,
        h: HamiltonianOp,
        h0: HamiltonianOp,
        full: Evolver,
        free: Evolver,
    }

    fn setup(bump: f64, x0: f64) -> Setup {
        let g = Grid1D::new(1024, -120.0, 240.0 / 1024.0).unwrap();
        let pk = GaussianSpec::new(x0, 2.0, -3.0);
        let psi = gaussian_position(&pk, g, DEFAULT_PURITY_TOL).unwrap();
        let chan = ChannelSpec::new(ChannelId::Reactant, 0, pk, g, DEFAULT_PURITY_TOL).unwrap();
        let v: Vec<f64> = g.xs().iter().map(|x| bump * (-0.5 * x * x).exp()).collect();
        let h = hamiltonian_1d(g, v, 1.0).unwrap();
        let h0 = hamiltonian_1d(g, vec![0.0; 1024], 1.0).unwrap();
        let spec = PropagatorSpec::new(Method::SplitOperator, 2e-3, 2).unwrap();
        let full = Evolver::new(&h, Grid::One(g), spec).unwrap();
        let free = Evolver::new(&h0, Grid::One(g), spec).unwrap();
        Setup { psi, chan, h, h0, full, free }
    }

    #[test]
    fn identity_without_interaction() {
        let s = setup(0.0, 4.0);
        for tau in [0.3, 1.7] {
            let m = make_moller(&s.psi, &s.chan, Sign::Plus, &s.full, &s.free, tau).unwrap();
            assert!(m.psi.max_abs_diff(&s.psi).unwrap() < 1e-10);
            let m = make_moller(&s.psi, &s.chan, Sign::Minus, &s.full, &s.free, tau).unwrap();
            assert!(m.psi.max_abs_diff(&s.psi).unwrap() < 1e-10);
        }
    }

    #[test]
    fn asymptotic_packet_gives_zero_tau0() {
        let s = setup(0.5, 25.0);
        let tr = converge_tau0(&s.psi, &s.chan, Sign::Plus, &s.full, &s.free, &TauSchedule::new(0.5)).unwrap();
        assert_eq!(tr.tau0, 0.0);
        assert_eq!(tr.residuals.len(), 1);
        assert!(tr.state.psi.max_abs_diff(&s.psi).unwrap() < 1e-10);
    }

    #[test]
    fn overlapping_packet_converges() {
        let s = setup(0.5, 1.0);
        assert!(interaction_overlap(&s.psi, &s.h, &s.h0).unwrap() > 1e-2);
        let tr = converge_tau0(&s.psi, &s.chan, Sign::Plus, &s.full, &s.free, &TauSchedule::new(0.5));
        let tr = match tr { Ok(t) => t, Err(e) => panic!("{e}") };
        assert!(tr.tau0 > 0.0);
        assert!(tr.residuals.len() >= 3, "{:?}", tr.residuals);
        assert!(tr.strictly_decreasing(), "{:?}", tr.residuals);
        // several thousand split steps; round-off walks at ~1e-15 per step
        assert!((tr.state.psi.norm() - 1.0).abs() < 1e-11);
        let d = energy_defect(&tr.state, &s.psi, &s.h, &s.h0).unwrap();
        assert!(d < 1e-4, "{d}");
    }

    #[test]
    fn minus_state_undoes_with_forward_free_leg() {
        let s = setup(0.5, 1.0);
        let m = make_moller(&s.psi, &s.chan, Sign::Minus, &s.full, &s.free, 1.0).unwrap();
        // Ω₋ at τ₀ composed with its inverse recovers the packet.
        let back = s.full.propagate(&m.psi, 1.0).unwrap();
        let back = s.free.propagate(&back, -1.0).unwrap();
        assert!(back.max_abs_diff(&s.psi).unwrap() < 1e-9);
    }

    #[test]
    fn non_convergence_reports_residuals() {
        let s = setup(0.5, 1.0);
        let sch = TauSchedule { tau: 0.01, max_doublings: 2, tol: 1e-6 };
        match converge_tau0(&s.psi, &s.chan, Sign::Plus, &s.full, &s.free, &sch) {
            Err(Error::MollerNotConverged { residuals, .. }) => assert_eq!(residuals.len(), 3),
            other => panic!("{other:?}"),
        }
    }
}
