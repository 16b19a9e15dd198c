//! Modified Hadamard test: `⟨Z⟩_anc = Re (or Im) ⟨0|O_γ′† O_γ|0⟩`.

use serde::{Deserialize, Serialize};

use super::{CompositeOp, QState, RegisterUnitary};
use crate::{Error, Result};

const ANCILLA: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

/// Ancilla readout: `z = P(0) − P(1)` and `p1 = P(1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HadamardOutcome {
    pub z: f64,
    pub p1: f64,
}

impl HadamardOutcome {
    fn read(s: &QState) -> Self {
        Self { z: s.expectation_z(ANCILLA), p1: s.prob_one(ANCILLA) }
    }
}

/// State before the closing Hadamard: `H`, optional `S†`, `O_γ` on
/// control 1, `O_γ′` on control 0.
fn open(o_g: &CompositeOp, o_gp: &CompositeOp, part: Part) -> Result<QState> {
    if o_g.dim() != o_gp.dim() {
        return Err(Error::Dimension { expected: o_g.dim(), found: o_gp.dim() });
    }
    let n_reg = o_g.dim().trailing_zeros() as usize;
    let mut s = QState::zero(n_reg + 1);
    s.h(ANCILLA);
    if part == Part::Im {
        s.s_dag(ANCILLA);
    }
    s.controlled(true, o_g)?;
    s.controlled(false, o_gp)?;
    Ok(s)
}

pub fn hadamard_test(o_g: &CompositeOp, o_gp: &CompositeOp, part: Part) -> Result<HadamardOutcome> {
    let mut s = open(o_g, o_gp, part)?;
    s.h(ANCILLA);
    Ok(HadamardOutcome::read(&s))
}

/// Readouts for `O_γ(t_j) = step^j O_γ(0)`, `j = 0..n_t`. The controlled
/// `O_γ′` acts on the other ancilla block, so each further controlled
/// step continues from the previous circuit.
pub fn hadamard_sweep(
    o_g0: &CompositeOp,
    step: &dyn RegisterUnitary,
    o_gp: &CompositeOp,
    part: Part,
    n_t: usize,
) -> Result<Vec<HadamardOutcome>> {
    let mut s = open(o_g0, o_gp, part)?;
    let mut out = Vec::with_capacity(n_t);
    for j in 0..n_t {
        if j > 0 {
            s.controlled(true, step)?;
        }
        let mut r = s.clone();
        r.h(ANCILLA);
        out.push(HadamardOutcome::read(&r));
    }
    Ok(out)
}
