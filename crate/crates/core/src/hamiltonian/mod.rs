//! Hamiltonians on grids and their dense and Pauli-sum forms.
//!
//! The grid-action form applies the kinetic energy as a diagonal
//! multiplication in momentum space and the potential as a diagonal
//! multiplication in position space. In bond coordinates the kinetic term
//! is
//!
//! ```text
//! T = c_xx p_X² - c_xy p_X p_Y + c_yy p_Y²
//! ```
//!
//! with all three coefficients `1/m` for three equal masses `m`, which is
//! the same operator as `p_R²/(2·2m/3) + p_r²/(2·m/2)` in either
//! channel's Jacobi coordinates.

pub mod coords;
pub mod pauli;
pub mod potentials;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::grid::{fft_inplace, Grid, Grid1D, Grid2D, Rep, WaveFunction};
use crate::wavepacket::ChannelId;
use crate::{Error, Result, C64};

pub use pauli::{pauli_decompose, PauliString, PauliSum, MAX_DENSE_QUBITS};
pub use potentials::{well_potential, CollinearPes, LepsSurface, PiecewiseWell, Provenance, TabulatedPes};

/// Coefficients of the bond-coordinate kinetic form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondKinetic {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl BondKinetic {
    /// Three equal masses `m`.
    pub fn equal_masses(m: f64) -> Self {
        Self { xx: 1.0 / m, xy: 1.0 / m, yy: 1.0 / m }
    }

    pub fn eval(&self, kx: f64, ky: f64) -> f64 {
        self.xx * kx * kx - self.xy * kx * ky + self.yy * ky * ky
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum KineticForm {
    /// `k²/(2μ)`.
    Cartesian { mass: f64 },
    Bond(BondKinetic),
}

/// `H = T(p) + V(x)` acting on a grid.
#[derive(Clone, Debug)]
pub struct GridHamiltonian {
    grid: Grid,
    form: KineticForm,
    /// Kinetic energy at each momentum point, FFT order.
    kinetic: Vec<f64>,
    potential: Vec<f64>,
}

impl GridHamiltonian {
    pub fn new(grid: Grid, form: KineticForm, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), found: potential.len() });
        }
        if let Some(i) = potential.iter().position(|v| !v.is_finite()) {
            return Err(Error::Potential(format!("non-finite potential at grid index {i}")));
        }
        let kinetic = match (&grid, form) {
            (Grid::One(g), KineticForm::Cartesian { mass }) => {
                if !(mass > 0.0) {
                    return Err(Error::Invalid("mass must be positive".into()));
                }
                g.ks_fft().into_iter().map(|k| k * k / (2.0 * mass)).collect()
            }
            (Grid::Two(_), KineticForm::Bond(b)) => {
                grid.k_pairs_fft().into_iter().map(|(kx, ky)| b.eval(kx, ky)).collect()
            }
            _ => return Err(Error::Invalid("kinetic form does not match grid dimension".into())),
        };
        Ok(Self { grid, form, kinetic, potential })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn form(&self) -> KineticForm {
        self.form
    }

    pub fn kinetic_fft(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// Upper estimate of the spectral radius, `max T + max |V|`.
    pub fn norm_estimate(&self) -> f64 {
        let t = self.kinetic.iter().fold(0.0f64, |m, &k| m.max(k.abs()));
        let v = self.potential.iter().fold(0.0f64, |m, &p| m.max(p.abs()));
        t + v
    }

    pub fn apply_kinetic(&self, amp: &[C64]) -> Vec<C64> {
        let mut buf = amp.to_vec();
        fft_inplace(&self.grid, &mut buf, true);
        let inv_n = 1.0 / self.dim() as f64;
        for (a, t) in buf.iter_mut().zip(&self.kinetic) {
            *a *= t * inv_n;
        }
        fft_inplace(&self.grid, &mut buf, false);
        buf
    }

    pub fn apply(&self, amp: &[C64]) -> Vec<C64> {
        let mut out = self.apply_kinetic(amp);
        for ((o, a), v) in out.iter_mut().zip(amp).zip(&self.potential) {
            *o += a * v;
        }
        out
    }

    /// Dense matrix in the grid basis; the kinetic part is circulant.
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let q = self.grid.qubits();
        if q > MAX_DENSE_QUBITS {
            return Err(Error::DenseTooLarge { max: MAX_DENSE_QUBITS, requested: q });
        }
        let n = self.dim();
        let mut e0 = vec![C64::new(0.0, 0.0); n];
        e0[0] = C64::new(1.0, 0.0);
        // first column of T; T[a, b] depends only on a - b (per axis, modulo n)
        let col = self.apply_kinetic(&e0);
        let mut m = DMatrix::<C64>::zeros(n, n);
        match &self.grid {
            Grid::One(_) => {
                for b in 0..n {
                    for a in 0..n {
                        m[(a, b)] = col[(a + n - b) % n];
                    }
                }
            }
            Grid::Two(g) => {
                let (nx, ny) = (g.gx.n(), g.gy.n());
                for b in 0..n {
                    let (bx, by) = g.split(b);
                    for a in 0..n {
                        let (ax, ay) = g.split(a);
                        m[(a, b)] = col[g.index((ax + nx - bx) % nx, (ay + ny - by) % ny)];
                    }
                }
            }
        }
        for (i, v) in self.potential.iter().enumerate() {
            m[(i, i)] += v;
        }
        Ok(m)
    }

    /// Same kinetic operator, different potential.
    pub fn with_potential(&self, potential: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, self.form, potential)
    }
}

/// A Hermitian operator in one of three interchangeable forms.
#[derive(Clone, Debug)]
pub enum HamiltonianOp {
    Grid(GridHamiltonian),
    Dense(DMatrix<C64>),
    Pauli(PauliSum),
}

impl HamiltonianOp {
    pub fn dim(&self) -> usize {
        match self {
            HamiltonianOp::Grid(h) => h.dim(),
            HamiltonianOp::Dense(m) => m.nrows(),
            HamiltonianOp::Pauli(p) => p.dim(),
        }
    }

    pub fn as_grid(&self) -> Option<&GridHamiltonian> {
        match self {
            HamiltonianOp::Grid(h) => Some(h),
            _ => None,
        }
    }

    pub fn apply(&self, amp: &[C64]) -> Vec<C64> {
        match self {
            HamiltonianOp::Grid(h) => h.apply(amp),
            HamiltonianOp::Dense(m) => {
                let v = nalgebra::DVector::from_column_slice(amp);
                (m * v).iter().copied().collect()
            }
            HamiltonianOp::Pauli(p) => p.apply(amp),
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        match self {
            HamiltonianOp::Grid(h) => h.to_dense(),
            HamiltonianOp::Dense(m) => Ok(m.clone()),
            HamiltonianOp::Pauli(p) => p.to_dense(),
        }
    }

    pub fn to_pauli(&self) -> Result<PauliSum> {
        match self {
            HamiltonianOp::Pauli(p) => Ok(p.clone()),
            other => {
                let n = other.dim();
                pauli_decompose(&other.to_dense()?, n.trailing_zeros() as usize)
            }
        }
    }

    /// `<ψ|H|ψ>` for a position-space wavefunction (continuum measure).
    pub fn expectation(&self, psi: &WaveFunction) -> Result<f64> {
        if psi.rep() != Rep::Position {
            return Err(Error::RepMismatch { expected: Rep::Position, found: psi.rep() });
        }
        if psi.amp().len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: psi.amp().len() });
        }
        let hpsi = self.apply(psi.amp());
        let s: C64 = psi.amp().iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum();
        Ok(s.re * psi.grid().cell())
    }
}

/// `T + V` on a 1D grid with `T = k²/(2μ)`.
pub fn hamiltonian_1d(grid: Grid1D, v: Vec<f64>, mass: f64) -> Result<HamiltonianOp> {
    Ok(HamiltonianOp::Grid(GridHamiltonian::new(Grid::One(grid), KineticForm::Cartesian { mass }, v)?))
}

/// Samples a surface on the bond grid, capping it at `v_cap` when given.
pub fn sample_pes(grid2: &Grid2D, pes: &dyn CollinearPes, v_cap: Option<f64>) -> Result<Vec<f64>> {
    let mut v = Vec::with_capacity(grid2.len());
    for ix in 0..grid2.gx.n() {
        let x = grid2.gx.x(ix);
        for iy in 0..grid2.gy.n() {
            let e = pes.energy(x, grid2.gy.x(iy))?;
            v.push(v_cap.map_or(e, |c| e.min(c)));
        }
    }
    Ok(v)
}

/// Kinetically coupled collinear Hamiltonian on the bond grid.
pub fn collinear_hamiltonian(
    grid2: Grid2D,
    pes: &dyn CollinearPes,
    kinetic: BondKinetic,
    v_cap: Option<f64>,
) -> Result<HamiltonianOp> {
    let v = sample_pes(&grid2, pes, v_cap)?;
    Ok(HamiltonianOp::Grid(GridHamiltonian::new(Grid::Two(grid2), KineticForm::Bond(kinetic), v)?))
}

/// The diatomic curve of `channel`, taken as a slice of the surface at
/// `R = r_large`, on the vibrational axis of the bond grid.
pub fn channel_slice(
    channel: ChannelId,
    grid2: &Grid2D,
    pes: &dyn CollinearPes,
    r_large: f64,
    v_cap: Option<f64>,
) -> Result<Vec<f64>> {
    let axis = match channel {
        ChannelId::Reactant => grid2.gy,
        ChannelId::Product => grid2.gx,
    };
    let slice = pes.asymptotic_slice(channel, &axis.xs(), r_large)?;
    Ok(slice.into_iter().map(|e| v_cap.map_or(e, |c| e.min(c))).collect())
}

/// `H₀^γ = T + V_γ(r_γ)`: the full kinetic operator with the channel's
/// diatomic curve as the only potential.
pub fn asymptotic_hamiltonian(
    channel: ChannelId,
    grid2: Grid2D,
    pes: &dyn CollinearPes,
    kinetic: BondKinetic,
    r_large: f64,
    v_cap: Option<f64>,
) -> Result<HamiltonianOp> {
    let slice = channel_slice(channel, &grid2, pes, r_large, v_cap)?;
    let mut v = Vec::with_capacity(grid2.len());
    for ix in 0..grid2.gx.n() {
        for iy in 0..grid2.gy.n() {
            v.push(match channel {
                ChannelId::Reactant => slice[iy],
                ChannelId::Product => slice[ix],
            });
        }
    }
    Ok(HamiltonianOp::Grid(GridHamiltonian::new(Grid::Two(grid2), KineticForm::Bond(kinetic), v)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::{gaussian_position, GaussianSpec, DEFAULT_PURITY_TOL};
    use nalgebra::DVector;

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn free_particle_spectrum() {
        let g = Grid1D::new(32, -4.0, 0.25).unwrap();
        let mu = 0.7;
        let h = hamiltonian_1d(g, vec![0.0; 32], mu).unwrap();
        let d = h.to_dense().unwrap();
        assert!(pauli::hermiticity_defect(&d) < 1e-12);
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(d.map(|z| z.re)).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = g.ks_fft().iter().map(|k| k * k / (2.0 * mu)).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10 * b.max(1.0));
        }
    }

    #[test]
    fn gaussian_kinetic_expectation() {
        let g = Grid1D::new(256, -4.0, 0.5).unwrap();
        let mu = crate::units::nucleon_reduced_mass();
        let spec = GaussianSpec::new(60.0, 3.0, -1.7);
        let psi = gaussian_position(&spec, g, DEFAULT_PURITY_TOL).unwrap();
        let h = hamiltonian_1d(g, vec![0.0; 256], mu).unwrap();
        let e = h.expectation(&psi).unwrap();
        let want = spec.k0 * spec.k0 / (2.0 * mu) + 1.0 / (8.0 * mu * spec.dx0 * spec.dx0);
        assert!((e / want - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dense_and_grid_action_agree() {
        let g = Grid1D::new(64, -4.0, 0.25).unwrap();
        let h = hamiltonian_1d(g, well_potential(&g), 0.012).unwrap();
        let d = h.to_dense().unwrap();
        assert!(pauli::hermiticity_defect(&d) < 1e-12 * 3000.0);
        let v: Vec<C64> = (0..64).map(|i| C64::new((0.3 * i as f64).sin(), (1.1 * i as f64).cos())).collect();
        let dv: Vec<C64> = (&d * DVector::from_vec(v.clone())).iter().copied().collect();
        assert!(max_diff(&h.apply(&v), &dv) < 1e-10 * 3000.0);
    }

    #[test]
    fn bond_plane_wave_eigenvalue() {
        let g2 = Grid2D::new(Grid1D::new(16, 0.0, 0.3).unwrap(), Grid1D::new(8, 0.0, 0.4).unwrap());
        let m = 1836.15;
        let kin = BondKinetic::equal_masses(m);
        let h = GridHamiltonian::new(Grid::Two(g2), KineticForm::Bond(kin), vec![0.0; g2.len()]).unwrap();
        let (kx, ky) = (3.0 * g2.gx.dk(), -2.0 * g2.gy.dk());
        let w = WaveFunction::from_fn_2d(g2, |x, y| C64::from_polar(1.0, kx * x + ky * y));
        let hw = h.apply(w.amp());
        let lam = (kx * kx - kx * ky + ky * ky) / m;
        let want: Vec<C64> = w.amp().iter().map(|a| a * lam).collect();
        assert!(max_diff(&hw, &want) < 1e-10 * lam);
    }

    #[test]
    fn bond_dense_is_hermitian_and_consistent() {
        let g = Grid1D::new(8, 0.5, 0.6).unwrap();
        let g2 = Grid2D::new(g, g);
        let pes = LepsSurface::h3();
        let h = collinear_hamiltonian(g2, &pes, BondKinetic::equal_masses(1836.15), Some(0.5)).unwrap();
        let d = h.to_dense().unwrap();
        assert!(pauli::hermiticity_defect(&d) < 1e-12);
        let v: Vec<C64> = (0..64).map(|i| C64::new((0.7 * i as f64).sin(), (0.2 * i as f64).cos())).collect();
        let dv: Vec<C64> = (&d * DVector::from_vec(v.clone())).iter().copied().collect();
        assert!(max_diff(&h.apply(&v), &dv) < 1e-10);
        let p = h.to_pauli().unwrap();
        assert!(max_diff(&p.apply(&v), &dv) < 1e-10);
    }

    #[test]
    fn asymptotic_hamiltonians_are_mirror_images() {
        let g = Grid1D::new(16, 0.5, 0.7).unwrap();
        let g2 = Grid2D::new(g, g);
        let pes = LepsSurface::h3();
        let kin = BondKinetic::equal_masses(1836.15);
        let h1 = asymptotic_hamiltonian(ChannelId::Reactant, g2, &pes, kin, 20.0, Some(0.5)).unwrap();
        let h2 = asymptotic_hamiltonian(ChannelId::Product, g2, &pes, kin, 20.0, Some(0.5)).unwrap();
        let (v1, v2) = (h1.as_grid().unwrap().potential(), h2.as_grid().unwrap().potential());
        for ix in 0..16 {
            for iy in 0..16 {
                assert_eq!(v1[g2.index(ix, iy)], v2[g2.index(iy, ix)]);
            }
        }
        // swapping X and Y maps one dense form onto the other
        let (d1, d2) = (h1.to_dense().unwrap(), h2.to_dense().unwrap());
        let sw = |i: usize| {
            let (a, b) = g2.split(i);
            g2.index(b, a)
        };
        for a in 0..256 {
            for b in 0..256 {
                assert!((d1[(a, b)] - d2[(sw(a), sw(b))]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kinetic_form_must_match_grid() {
        let g = Grid1D::new(8, 0.0, 1.0).unwrap();
        let r = GridHamiltonian::new(Grid::One(g), KineticForm::Bond(BondKinetic::equal_masses(1.0)), vec![0.0; 8]);
        assert!(r.is_err());
    }
}
