//! Morse fit of a diatomic slice and the vibrational eigenbasis built on it.
//!
//! The slice is fitted to `V(r) = V_min + D (1 - exp(-a (r - r_e)))²` over
//! the points lying within 1.5·D of the minimum. The analytic Morse
//! eigenfunctions of the fitted curve span the basis; they are
//! orthonormalised on the grid (Löwdin) and the slice Hamiltonian, with the
//! kinetic term applied spectrally, is diagonalised in that basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::grid::{fft_inplace, Grid, Grid1D};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseParams {
    pub depth: f64,
    pub alpha: f64,
    pub r_eq: f64,
    pub v_min: f64,
}

impl MorseParams {
    pub fn potential(&self, r: f64) -> f64 {
        let e = (-self.alpha * (r - self.r_eq)).exp();
        self.v_min + self.depth * (1.0 - e) * (1.0 - e)
    }

    /// `λ = √(2μD)/a`; the well supports ⌈λ - ½⌉ bound states.
    pub fn lambda(&self, mass: f64) -> f64 {
        (2.0 * mass * self.depth).sqrt() / self.alpha
    }

    pub fn n_bound(&self, mass: f64) -> usize {
        let l = self.lambda(mass) - 0.5;
        if l <= 0.0 {
            0
        } else {
            l.ceil() as usize
        }
    }

    pub fn omega(&self, mass: f64) -> f64 {
        self.alpha * (2.0 * self.depth / mass).sqrt()
    }

    /// Closed-form level `E_v`, measured on the same scale as the slice.
    pub fn level(&self, v: usize, mass: f64) -> f64 {
        let w = self.omega(mass);
        let q = v as f64 + 0.5;
        self.v_min + w * q - (w * q).powi(2) / (4.0 * self.depth)
    }

    /// Normalised analytic eigenfunction `v` at `r`.
    pub fn eigenfunction(&self, v: usize, mass: f64, r: f64) -> f64 {
        let lam = self.lambda(mass);
        let n = v as f64;
        let s = lam - n - 0.5;
        if s <= 0.0 {
            return 0.0;
        }
        let alpha_l = 2.0 * s;
        let z = 2.0 * lam * (-self.alpha * (r - self.r_eq)).exp();
        let ln_norm = 0.5
            * (self.alpha.ln() + alpha_l.ln() + ln_gamma(n + 1.0) - ln_gamma(2.0 * lam - n));
        let ln_env = ln_norm + s * z.ln() - 0.5 * z;
        if ln_env < -745.0 {
            return 0.0;
        }
        ln_env.exp() * laguerre(v, alpha_l, z)
    }
}

/// Generalised Laguerre polynomial `L_n^(α)(z)` by upward recurrence.
fn laguerre(n: usize, alpha: f64, z: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - z;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - z) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseFit {
    pub params: MorseParams,
    pub rms: f64,
    pub iterations: usize,
    pub points: usize,
}

const FIT_WINDOW: f64 = 1.5;
const FIT_MAX_ITER: usize = 500;
/// A fit is rejected when the rms residual exceeds this fraction of the
/// energy span of the fitted points.
const FIT_MAX_RMS_FRACTION: f64 = 0.05;

/// Least-squares Morse fit (Levenberg–Marquardt) to a sampled slice.
pub fn fit_morse(rs: &[f64], vs: &[f64]) -> Result<MorseFit> {
    if rs.len() != vs.len() || rs.len() < 5 {
        return Err(Error::Invalid("Morse fit needs at least five (r, V) samples".into()));
    }
    let imin = argmin(vs);
    let v_min0 = vs[imin];
    if imin == 0 || imin == vs.len() - 1 {
        return Err(Error::FitFailed { rms: f64::NAN, iterations: 0 });
    }

    let init = initial_guess(rs, vs, imin);
    let window = FIT_WINDOW * init.depth;
    let idx: Vec<usize> = (0..rs.len()).filter(|&i| vs[i] - v_min0 <= window).collect();
    if idx.len() < 5 {
        return Err(Error::FitFailed { rms: f64::NAN, iterations: 0 });
    }

    let mut p = [init.depth, init.alpha, init.r_eq, init.v_min];
    let cost = |p: &[f64; 4]| -> f64 {
        let m = to_params(p);
        idx.iter().map(|&i| (m.potential(rs[i]) - vs[i]).powi(2)).sum()
    };
    let mut c = cost(&p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < FIT_MAX_ITER {
        iterations += 1;
        let m = to_params(&p);
        let mut jtj = nalgebra::Matrix4::<f64>::zeros();
        let mut jtr = nalgebra::Vector4::<f64>::zeros();
        for &i in &idx {
            let r = rs[i];
            let e = (-m.alpha * (r - m.r_eq)).exp();
            let one = 1.0 - e;
            let j = nalgebra::Vector4::new(
                one * one,
                2.0 * m.depth * one * e * (r - m.r_eq),
                -2.0 * m.depth * one * e * m.alpha,
                1.0,
            );
            let res = m.potential(r) - vs[i];
            jtj += j * j.transpose();
            jtr += j * res;
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj;
            for d in 0..4 {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            if trial[0] <= 0.0 || trial[1] <= 0.0 {
                lambda *= 10.0;
                continue;
            }
            let ct = cost(&trial);
            if ct <= c {
                let rel = (0..4)
                    .map(|d| step[d].abs() / p[d].abs().max(1e-12))
                    .fold(0.0, f64::max);
                p = trial;
                let dc = c - ct;
                c = ct;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < 1e-12 || dc <= 1e-15 * c.max(1e-300) || c < 1e-28 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !improved {
            // no downhill step left: at a minimum to working precision
            converged = true;
            break;
        }
    }
    let params = to_params(&p);
    let rms = (c / idx.len() as f64).sqrt();
    let span = idx.iter().map(|&i| vs[i] - v_min0).fold(0.0, f64::max);
    if !converged || !rms.is_finite() || rms > FIT_MAX_RMS_FRACTION * span {
        return Err(Error::FitFailed { rms, iterations });
    }
    Ok(MorseFit { params, rms, iterations, points: idx.len() })
}

fn to_params(p: &[f64; 4]) -> MorseParams {
    MorseParams { depth: p[0], alpha: p[1], r_eq: p[2], v_min: p[3] }
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
}

/// Starting point from the curvature and skewness at the minimum
/// (`V'' = 2Da²`, `V''' = -6Da³`), falling back to the slice's right-hand
/// plateau for the depth.
fn initial_guess(rs: &[f64], vs: &[f64], i: usize) -> MorseParams {
    let h = rs[i + 1] - rs[i];
    let d2 = (vs[i + 1] - 2.0 * vs[i] + vs[i - 1]) / (h * h);
    let plateau = vs[vs.len() - 1] - vs[i];
    let mut a = f64::NAN;
    if i >= 2 && i + 2 < vs.len() {
        let d3 = (vs[i + 2] - 2.0 * vs[i + 1] + 2.0 * vs[i - 1] - vs[i - 2]) / (2.0 * h * h * h);
        a = -d3 / (3.0 * d2);
    }
    let (depth, alpha) = if a.is_finite() && a > 0.0 && d2 > 0.0 {
        (d2 / (2.0 * a * a), a)
    } else {
        let d = plateau.max(1e-12);
        (d, (d2.max(1e-12) / (2.0 * d)).sqrt())
    };
    MorseParams { depth, alpha, r_eq: rs[i], v_min: vs[i] }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VibParams {
    /// Reduced mass of the diatom.
    pub mass: f64,
    /// Number of Morse functions; capped by the number of bound states.
    pub n_basis: usize,
    /// Highest vibrational level the caller needs.
    pub v_max: usize,
}

/// Vibrational eigenpairs of a diatomic slice, immutable after construction.
#[derive(Clone, Debug)]
pub struct VibrationalBasis {
    fit: MorseFit,
    mass: f64,
    grid: Grid1D,
    energies: Vec<f64>,
    /// `states[v][j]`: eigenstate `v` at grid point `j`, `Σ φ² dr = 1`.
    states: Vec<Vec<f64>>,
    /// Expansion of each eigenstate over the analytic Morse functions.
    coeffs: DMatrix<f64>,
}

impl VibrationalBasis {
    pub fn fit(&self) -> &MorseFit {
        &self.fit
    }

    pub fn params(&self) -> &MorseParams {
        &self.fit.params
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, v: usize) -> f64 {
        self.energies[v]
    }

    pub fn state(&self, v: usize) -> &[f64] {
        &self.states[v]
    }

    /// Eigenstate `v` at an arbitrary `r`, through the analytic expansion.
    pub fn eval(&self, v: usize, r: f64) -> f64 {
        let p = &self.fit.params;
        (0..self.coeffs.nrows())
            .map(|i| self.coeffs[(i, v)] * p.eigenfunction(i, self.mass, r))
            .sum()
    }
}

/// Fits the slice, builds the Morse basis on its grid and diagonalises.
pub fn build_vibrational_basis(
    grid: Grid1D,
    slice: &[f64],
    params: &VibParams,
) -> Result<VibrationalBasis> {
    if slice.len() != grid.n() {
        return Err(Error::Dimension { expected: grid.n(), found: slice.len() });
    }
    if !(params.mass > 0.0) {
        return Err(Error::Invalid("vibrational mass must be positive".into()));
    }
    let minima = (1..slice.len() - 1)
        .filter(|&j| slice[j] < slice[j - 1] && slice[j] < slice[j + 1])
        .count();
    if minima != 1 {
        return Err(Error::Potential(format!("slice has {minima} local minima, expected one")));
    }
    if params.n_basis < params.v_max + 5 {
        return Err(Error::Invalid(format!(
            "n_basis = {} must be at least v_max + 5 = {}",
            params.n_basis,
            params.v_max + 5
        )));
    }

    let rs = grid.xs();
    let fit = fit_morse(&rs, slice)?;
    let m = fit.params;
    let nb = params.n_basis.min(m.n_bound(params.mass));
    if nb <= params.v_max {
        return Err(Error::Potential(format!(
            "fitted well supports {} bound states, need {}",
            nb,
            params.v_max + 1
        )));
    }
    let n = grid.n();
    let dr = grid.dx();

    let b = DMatrix::from_fn(n, nb, |j, i| m.eigenfunction(i, params.mass, rs[j]));
    let s = b.transpose() * &b * dr;
    let se = SymmetricEigen::new(s);
    if se.eigenvalues.min() <= 1e-12 {
        return Err(Error::Potential("Morse functions are linearly dependent on this grid".into()));
    }
    let inv_sqrt = DMatrix::from_diagonal(&se.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let s_half_inv = &se.eigenvectors * inv_sqrt * se.eigenvectors.transpose();
    let u = &b * &s_half_inv;

    // H u_b on the grid: spectral kinetic term plus the slice
    let g = Grid::One(grid);
    let ks = grid.ks_fft();
    let mut hu = DMatrix::<f64>::zeros(n, nb);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for col in 0..nb {
        for j in 0..n {
            buf[j] = C64::new(u[(j, col)], 0.0);
        }
        fft_inplace(&g, &mut buf, true);
        for (a, k) in buf.iter_mut().zip(&ks) {
            *a *= k * k / (2.0 * params.mass * n as f64);
        }
        fft_inplace(&g, &mut buf, false);
        for j in 0..n {
            hu[(j, col)] = buf[j].re + slice[j] * u[(j, col)];
        }
    }
    let h = u.transpose() * &hu * dr;
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut energies = Vec::with_capacity(nb);
    let mut states = Vec::with_capacity(nb);
    let mut coeffs = DMatrix::<f64>::zeros(nb, nb);
    for (v, &o) in order.iter().enumerate() {
        let c: DVector<f64> = eig.eigenvectors.column(o).into_owned();
        let mut phi = &u * &c;
        let mut a = &s_half_inv * &c;
        // sign convention: positive overlap with the analytic function v
        let overlap: f64 = (0..n).map(|j| phi[j] * b[(j, v)]).sum();
        if overlap < 0.0 {
            phi = -phi;
            a = -a;
        }
        energies.push(eig.eigenvalues[o]);
        states.push(phi.iter().copied().collect());
        coeffs.set_column(v, &a);
    }
    Ok(VibrationalBasis { fit, mass: params.mass, grid, energies, states, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MU: f64 = 918.075;

    fn h2_like() -> MorseParams {
        MorseParams { depth: 0.17444, alpha: 1.02764, r_eq: 1.40162, v_min: -0.17444 }
    }

    fn sign_changes(v: &[f64]) -> usize {
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sig: Vec<f64> = v.iter().copied().filter(|x| x.abs() > 1e-6 * peak).collect();
        sig.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
    }

    #[test]
    fn analytic_functions_are_orthonormal() {
        let m = h2_like();
        let g = Grid1D::new(512, 0.3, 0.02).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let s: f64 = (0..g.n())
                    .map(|j| m.eigenfunction(a, MU, g.x(j)) * m.eigenfunction(b, MU, g.x(j)))
                    .sum::<f64>()
                    * g.dx();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-9, "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn fit_recovers_exact_morse() {
        let m = h2_like();
        let g = Grid1D::new(256, 0.4, 0.04).unwrap();
        let rs = g.xs();
        let vs: Vec<f64> = rs.iter().map(|&r| m.potential(r)).collect();
        let f = fit_morse(&rs, &vs).unwrap();
        assert!((f.params.depth / m.depth - 1.0).abs() < 1e-8);
        assert!((f.params.alpha / m.alpha - 1.0).abs() < 1e-8);
        assert!((f.params.r_eq - m.r_eq).abs() < 1e-8);
        assert!(f.rms < 1e-10);
    }

    #[test]
    fn levels_match_closed_form() {
        let m = h2_like();
        let g = Grid1D::new(256, 0.4, 0.04).unwrap();
        let vs: Vec<f64> = g.xs().iter().map(|&r| m.potential(r)).collect();
        let vb = build_vibrational_basis(g, &vs, &VibParams { mass: MU, n_basis: 8, v_max: 2 }).unwrap();
        for v in 0..5 {
            // closed-form level measured from the dissociation limit
            let want = m.level(v, MU);
            let rel = ((vb.energy(v) - want) / want).abs();
            assert!(rel < 1e-6, "v={v}: {} vs {want}", vb.energy(v));
        }
        assert!(vb.energies().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn eigenstates_orthonormal_and_nodes() {
        let m = h2_like();
        let g = Grid1D::new(256, 0.4, 0.04).unwrap();
        let vs: Vec<f64> = g.xs().iter().map(|&r| m.potential(r)).collect();
        let vb = build_vibrational_basis(g, &vs, &VibParams { mass: MU, n_basis: 8, v_max: 2 }).unwrap();
        for a in 0..vb.len() {
            for b in 0..vb.len() {
                let s: f64 = vb.state(a).iter().zip(vb.state(b)).map(|(x, y)| x * y).sum::<f64>() * g.dx();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-10);
            }
        }
        assert_eq!(sign_changes(vb.state(0)), 0);
        assert_eq!(sign_changes(vb.state(1)), 1);
        assert_eq!(sign_changes(vb.state(2)), 2);
        for j in (0..g.n()).step_by(17) {
            assert!((vb.eval(1, g.x(j)) - vb.state(1)[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn harmonic_limit_spacing_is_uniform() {
        // deep, wide well: anharmonicity ω/(4D) is tiny
        let m = MorseParams { depth: 50.0, alpha: 0.05, r_eq: 5.0, v_min: 0.0 };
        let g = Grid1D::new(256, 1.0, 0.032).unwrap();
        let vs: Vec<f64> = g.xs().iter().map(|&r| m.potential(r)).collect();
        let vb = build_vibrational_basis(g, &vs, &VibParams { mass: 1000.0, n_basis: 8, v_max: 2 }).unwrap();
        let e = vb.energies();
        let d0 = e[1] - e[0];
        for v in 1..5 {
            assert!(((e[v + 1] - e[v]) / d0 - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn double_well_is_rejected() {
        let g = Grid1D::new(64, 0.0, 0.1).unwrap();
        let vs: Vec<f64> = g.xs().iter().map(|&x| ((x - 3.2) * (x - 3.2) - 1.0).powi(2)).collect();
        assert!(build_vibrational_basis(g, &vs, &VibParams { mass: 1.0, n_basis: 6, v_max: 1 }).is_err());
    }

    #[test]
    fn non_morse_slice_fit_reports_residual() {
        let g = Grid1D::new(64, 0.0, 0.1).unwrap();
        let rs = g.xs();
        // square-well-like slice: nothing Morse about it
        let vs: Vec<f64> = rs.iter().map(|&x| if (x - 3.0).abs() < 1.0 { -(x - 3.0).abs() * 1e-3 } else { 1.0 }).collect();
        match fit_morse(&rs, &vs) {
            Err(Error::FitFailed { rms, .. }) => assert!(rms.is_nan() || rms > 0.0),
            other => panic!("expected a fit failure, got {other:?}"),
        }
    }
}
