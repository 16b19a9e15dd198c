//! Arrangement channels and their translational ⊗ vibrational packets.

use serde::{Deserialize, Serialize};

use super::{GaussianSpec, VibrationalBasis};
use crate::grid::{Grid, Grid1D, Grid2D, WaveFunction};
use crate::hamiltonian::coords::jacobi_to_bond;
use crate::{Error, Result, C64};

const EDGE_TOL: f64 = 1e-6;

/// Channel 1 is `H_a + H_bH_c`, channel 2 is `H_aH_b + H_c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelId {
    Reactant,
    Product,
}

impl ChannelId {
    pub fn number(self) -> u8 {
        match self {
            ChannelId::Reactant => 1,
            ChannelId::Product => 2,
        }
    }
}

/// Channel label, vibrational level and translational packet with its
/// momentum-expansion coefficients η(k).
#[derive(Clone, Debug)]
pub struct ChannelSpec {
    pub id: ChannelId,
    pub v: usize,
    pub packet: GaussianSpec,
    k_grid: Grid1D,
    eta: Vec<C64>,
}

impl ChannelSpec {
    /// `k_grid` is the 1D grid whose sorted momentum points carry the η table.
    pub fn new(id: ChannelId, v: usize, packet: GaussianSpec, k_grid: Grid1D, purity_tol: f64) -> Result<Self> {
        let w = super::gaussian_momentum(&packet, k_grid, purity_tol)?;
        let (_, eta) = w.momentum_sorted()?;
        Ok(Self { id, v, packet, k_grid, eta })
    }

    pub fn k_grid(&self) -> &Grid1D {
        &self.k_grid
    }

    /// `(k, η(k))` on the sorted momentum grid; `Σ|η|² dk = 1`.
    pub fn eta_sorted(&self) -> (Vec<f64>, &[C64]) {
        (self.k_grid.ks_sorted(), &self.eta)
    }

    /// Closed-form η at any `k`.
    pub fn eta_at(&self, k: f64) -> C64 {
        self.packet.momentum_amplitude(k)
    }

    /// +1 for outgoing (k0 > 0) packets, -1 for incoming ones.
    pub fn direction(&self) -> f64 {
        self.packet.k0.signum()
    }
}

/// `ψ(X, Y) = N φ_v(r) G(R)` on the bond grid, with `(R, r)` the channel's
/// Jacobi coordinates. Rejected when more than 1e-6 of it lies in the
/// outer `edge_fraction` of either axis.
pub fn channel_product_state(
    c: &ChannelSpec,
    vib: &VibrationalBasis,
    grid2: Grid2D,
    edge_fraction: f64,
) -> Result<WaveFunction> {
    if c.v >= vib.len() {
        return Err(Error::Invalid(format!(
            "vibrational level {} requested, basis holds {}",
            c.v,
            vib.len()
        )));
    }
    // vibrational factor on the matching axis: stored values when the grid
    // coincides with the basis grid, analytic expansion otherwise
    let axis = match c.id {
        ChannelId::Reactant => grid2.gy,
        ChannelId::Product => grid2.gx,
    };
    let phi: Vec<f64> = if axis == *vib.grid() {
        vib.state(c.v).to_vec()
    } else {
        (0..axis.n()).map(|j| vib.eval(c.v, axis.x(j))).collect()
    };

    let mut amp = Vec::with_capacity(grid2.len());
    for ix in 0..grid2.gx.n() {
        let x = grid2.gx.x(ix);
        for iy in 0..grid2.gy.n() {
            let y = grid2.gy.x(iy);
            let (big_r, vib_val) = match c.id {
                ChannelId::Reactant => (x + 0.5 * y, phi[iy]),
                ChannelId::Product => (y + 0.5 * x, phi[ix]),
            };
            amp.push(c.packet.position_amplitude(big_r) * vib_val);
        }
    }
    let mut w = WaveFunction::new(Grid::Two(grid2), amp, crate::grid::Rep::Position)?;
    w.normalize()?;
    let edge = w.edge_probability(edge_fraction)?;
    if edge > EDGE_TOL {
        return Err(Error::Geometry(format!(
            "channel {} packet puts {edge:.3e} of its probability in the grid edge band",
            c.id.number()
        )));
    }
    Ok(w)
}

/// Bond coordinates of the packet centre at the vibrational equilibrium `r_e`.
pub fn packet_centre(c: &ChannelSpec, r_e: f64) -> (f64, f64) {
    jacobi_to_bond(c.packet.x0, r_e, c.id)
}
