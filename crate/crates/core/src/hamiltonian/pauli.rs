//! Weighted Pauli-string sums.
//!
//! A string is stored as a pair of bit masks `(x, z)`; qubit `q` carries
//! `I, X, Z, Y` for `(x_q, z_q) = (0,0), (1,0), (0,1), (1,1)`. Qubit 0 is the
//! least significant bit of a basis index. The action on a basis state is
//!
//! ```text
//! P |j> = i^{popcount(x & z)} (-1)^{popcount(j & z)} |j ^ x>
//! ```

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::par::{self, Exec};
use crate::{Error, Result, C64};

/// Largest register for which dense matrices are materialised.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Coefficients below this magnitude are dropped by [`pauli_decompose`].
pub const DROP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub fn identity() -> Self {
        Self { x: 0, z: 0 }
    }

    /// Parses a label such as `"XIZY"`; the leftmost character is the highest qubit.
    pub fn from_label(label: &str) -> Result<Self> {
        let n = label.len();
        let mut s = Self::identity();
        for (i, c) in label.chars().enumerate() {
            let bit = 1u64 << (n - 1 - i);
            match c {
                'I' => {}
                'X' => s.x |= bit,
                'Z' => s.z |= bit,
                'Y' => {
                    s.x |= bit;
                    s.z |= bit
                }
                _ => return Err(Error::Invalid(format!("bad Pauli label character {c:?}"))),
            }
        }
        Ok(s)
    }

    pub fn label(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .rev()
            .map(|q| match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            })
            .collect()
    }

    fn y_phase(&self) -> C64 {
        match (self.x & self.z).count_ones() % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// `out += coeff · P · input`.
    pub fn apply_add(&self, coeff: C64, input: &[C64], out: &mut [C64]) {
        let c = coeff * self.y_phase();
        for (j, a) in input.iter().enumerate() {
            let sign = if (j as u64 & self.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[j ^ self.x as usize] += c * sign * a;
        }
    }

    /// `ψ ← exp(-iθP) ψ = cos θ ψ - i sin θ Pψ`.
    pub fn exp_apply(&self, amp: &mut [C64], theta: f64) {
        let (s, c) = theta.sin_cos();
        let ph = self.y_phase() * C64::new(0.0, -s);
        let sign = |j: usize| if (j as u64 & self.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        if self.x == 0 {
            for (j, a) in amp.iter_mut().enumerate() {
                *a *= C64::new(c, 0.0) + ph * sign(j);
            }
            return;
        }
        let x = self.x as usize;
        let hi = 63 - self.x.leading_zeros() as usize;
        for j in 0..amp.len() {
            // visit each pair {j, j^x} once, from the member with bit `hi` clear
            if (j >> hi) & 1 == 1 {
                continue;
            }
            let k = j ^ x;
            let (a, b) = (amp[j], amp[k]);
            // (P ψ)_k = phase·sign(j)·ψ_j and (P ψ)_j = phase·sign(k)·ψ_k
            amp[j] = a * c + ph * sign(k) * b;
            amp[k] = b * c + ph * sign(j) * a;
        }
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }
}

/// `Σ c_P P` with real coefficients (Hermitian by construction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    pub n_qubits: usize,
    pub terms: Vec<(PauliString, f64)>,
}

impl PauliSum {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn apply(&self, input: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); input.len()];
        for (p, c) in &self.terms {
            p.apply_add(C64::new(*c, 0.0), input, &mut out);
        }
        out
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::DenseTooLarge { max: MAX_DENSE_QUBITS, requested: self.n_qubits });
        }
        let n = self.dim();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (p, c) in &self.terms {
            let ph = p.y_phase() * *c;
            for j in 0..n {
                let sign = if (j as u64 & p.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[(j ^ p.x as usize, j)] += ph * sign;
            }
        }
        Ok(m)
    }

    pub fn coefficient(&self, p: PauliString) -> f64 {
        self.terms.iter().filter(|(q, _)| *q == p).map(|(_, c)| c).sum()
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c:.6e}·{}", p.label(self.n_qubits))?;
        }
        Ok(())
    }
}

/// Largest `|H - H†|` entry.
pub fn hermiticity_defect(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut d = 0.0f64;
    for i in 0..n {
        for j in i..n {
            d = d.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    d
}

/// In-place Walsh–Hadamard transform `G(z) = Σ_l (-1)^{popcount(l & z)} g(l)`.
fn walsh_hadamard(v: &mut [C64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `c_P = Tr(P H)/2ⁿ` over all 4ⁿ strings.
///
/// For a fixed X-mask `x`, `Tr(P H) = i^{|x&z|} Σ_l (-1)^{|l&z|} H[l, l^x]`,
/// which is a Walsh–Hadamard transform over `l`; the whole decomposition
/// costs `O(n·4ⁿ)`.
pub fn pauli_decompose(h: &DMatrix<C64>, n_qubits: usize) -> Result<PauliSum> {
    let n = 1usize << n_qubits;
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::Dimension { expected: n, found: h.nrows() });
    }
    if n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::DenseTooLarge { max: MAX_DENSE_QUBITS, requested: n_qubits });
    }
    let scale = h.iter().fold(1.0f64, |m, a| m.max(a.norm()));
    let defect = hermiticity_defect(h);
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let per_x: Vec<Vec<(PauliString, f64)>> = par::map_range(Exec::Parallel, n, |x| {
        let mut g: Vec<C64> = (0..n).map(|l| h[(l, l ^ x)]).collect();
        walsh_hadamard(&mut g);
        let mut out = Vec::new();
        for (z, gz) in g.into_iter().enumerate() {
            let p = PauliString { x: x as u64, z: z as u64 };
            let c = (p.y_phase() * gz).re / n as f64;
            if c.abs() >= DROP_TOL {
                out.push((p, c));
            }
        }
        out
    });
    Ok(PauliSum { n_qubits, terms: per_x.into_iter().flatten().collect() })
}
