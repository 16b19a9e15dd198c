//! Binomial shot sampling of the ancilla readout.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::{Error, Result};

/// Estimate of `⟨Z⟩` from `n` shots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

/// `⟨Z⟩ ≈ 1 − 2·k/n` with `k ~ Binomial(n, p1)`; the standard error uses
/// the observed frequency.
pub fn sample_shots<R: Rng + ?Sized>(p1: f64, n: u64, rng: &mut R) -> Result<ShotEstimate> {
    if n == 0 {
        return Err(Error::Invalid("shot count must be positive".into()));
    }
    if !(-1e-12..=1.0 + 1e-12).contains(&p1) {
        return Err(Error::Invalid(format!("probability {p1} outside [0, 1]")));
    }
    let p = p1.clamp(0.0, 1.0);
    let k = Binomial::new(n, p).map_err(|e| Error::Invalid(e.to_string()))?.sample(rng);
    let f = k as f64 / n as f64;
    Ok(ShotEstimate { value: 1.0 - 2.0 * f, stderr: 2.0 * (f * (1.0 - f) / n as f64).sqrt(), n })
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn shot_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Shots for `|estimate − ⟨Z⟩| < eps` with probability `1 − delta`, from
/// Hoeffding's bound for ±1 outcomes: `n = ⌈2 ln(2/δ)/ε²⌉`.
pub fn plan_shots(eps: f64, delta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps <= 2.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Invalid(format!("need 0 < eps <= 2 and 0 < delta < 1, got {eps}, {delta}")));
    }
    Ok((2.0 * (2.0 / delta).ln() / (eps * eps)).ceil() as u64)
}
