//! Potentials: the semi-infinite square well and collinear A + BC surfaces.

use std::fmt::Debug;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::coords::jacobi_to_bond;
use crate::grid::Grid1D;
use crate::wavepacket::ChannelId;
use crate::{Error, Result};

/// Three-region well (MeV, fm): a hard core, an attractive pocket and the free region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseWell {
    pub core_edge: f64,
    pub well_edge: f64,
    pub core: f64,
    pub well: f64,
    pub outside: f64,
}

impl Default for PiecewiseWell {
    fn default() -> Self {
        Self { core_edge: 0.65, well_edge: 1.65, core: 3000.0, well: -100.0, outside: 0.0 }
    }
}

impl PiecewiseWell {
    pub fn value(&self, x: f64) -> f64 {
        if x <= self.core_edge {
            self.core
        } else if x <= self.well_edge {
            self.well
        } else {
            self.outside
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.xs().into_iter().map(|x| self.value(x)).collect()
    }
}

/// The default well sampled on `grid`.
pub fn well_potential(grid: &Grid1D) -> Vec<f64> {
    PiecewiseWell::default().sample(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SurrogateAnalytic,
    UserTabulated,
}

/// Collinear A–B–C surface in bond coordinates `X = r_AB`, `Y = r_BC`.
pub trait CollinearPes: Send + Sync + Debug {
    fn energy(&self, x: f64, y: f64) -> Result<f64>;

    fn provenance(&self) -> Provenance;

    /// Diatomic curve of `channel` seen at translational distance `r_large`.
    fn asymptotic_slice(&self, channel: ChannelId, rs: &[f64], r_large: f64) -> Result<Vec<f64>> {
        rs.iter()
            .map(|&r| {
                let (x, y) = jacobi_to_bond(r_large, r, channel);
                self.energy(x, y)
            })
            .collect()
    }
}

/// London–Eyring–Polanyi–Sato surface for three identical atoms with
/// smoothly switched-off pair terms.
///
/// Each pair contributes singlet and triplet curves
///
/// ```text
/// ¹E(r) = D [e^{-2β(r-r_e)} - 2 e^{-β(r-r_e)}]
/// ³E(r) = D/2 [e^{-2β(r-r_e)} + 2 e^{-β(r-r_e)}]
/// ```
///
/// multiplied by a switch that is 1 below `r_on` and 0 above `r_off`, so
/// that once two of the three distances exceed `r_off` the surface equals
/// the isolated diatomic curve exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LepsSurface {
    pub depth: f64,
    pub beta: f64,
    pub r_eq: f64,
    pub sato: f64,
    pub r_on: f64,
    pub r_off: f64,
}

impl LepsSurface {
    /// H₂ Morse constants in atomic units; Sato parameter 0.135.
    pub fn h3() -> Self {
        Self { depth: 0.17444, beta: 1.02764, r_eq: 1.40162, sato: 0.135, r_on: 3.5, r_off: 5.0 }
    }

    /// Same surface with the Sato parameter tuned so that the collinear
    /// symmetric saddle lies `barrier` above the diatomic minimum.
    pub fn with_barrier(mut self, barrier: f64) -> Result<Self> {
        let f = |s: f64| {
            let mut p = self;
            p.sato = s;
            p.barrier_height() - barrier
        };
        let (mut lo, mut hi) = (-0.2, 0.6);
        if f(lo) * f(hi) > 0.0 {
            return Err(Error::Potential(format!("no Sato parameter gives a {barrier} barrier")));
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.sato = 0.5 * (lo + hi);
        Ok(self)
    }

    fn switch(&self, r: f64) -> f64 {
        if r <= self.r_on {
            1.0
        } else if r >= self.r_off {
            0.0
        } else {
            let t = (r - self.r_on) / (self.r_off - self.r_on);
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }

    fn pair(&self, r: f64) -> (f64, f64) {
        let s = self.switch(r);
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let u = (-self.beta * (r - self.r_eq)).exp();
        let singlet = self.depth * (u * u - 2.0 * u);
        let triplet = 0.5 * self.depth * (u * u + 2.0 * u);
        (s * singlet, s * triplet)
    }

    fn raw(&self, x: f64, y: f64) -> f64 {
        let d = self.sato;
        let mut q = [0.0; 3];
        let mut j = [0.0; 3];
        for (i, r) in [x, y, x + y].into_iter().enumerate() {
            let (e1, e3) = self.pair(r);
            q[i] = 0.5 * (e1 * (1.0 + d) + e3 * (1.0 - d));
            j[i] = 0.5 * (e1 * (1.0 + d) - e3 * (1.0 - d));
        }
        let s = j[0] * j[0] + j[1] * j[1] + j[2] * j[2] - j[0] * j[1] - j[1] * j[2] - j[0] * j[2];
        (q[0] + q[1] + q[2] - s.max(0.0).sqrt()) / (1.0 + d)
    }

    /// Minimum of the isolated diatomic curve.
    pub fn diatom_minimum(&self) -> f64 {
        self.raw(self.r_eq, 1e3)
    }

    /// Height of the symmetric-stretch saddle above the diatomic minimum.
    pub fn barrier_height(&self) -> f64 {
        // golden-section search along X = Y
        let f = |r: f64| self.raw(r, r);
        let (mut a, mut b) = (0.8 * self.r_eq, 2.5 * self.r_eq);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        for _ in 0..200 {
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - g * (b - a);
            d = a + g * (b - a);
        }
        f(0.5 * (a + b)) - self.diatom_minimum()
    }
}

impl CollinearPes for LepsSurface {
    fn energy(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::Potential(format!("bond lengths must be positive, got ({x}, {y})")));
        }
        Ok(self.raw(x, y))
    }

    fn provenance(&self) -> Provenance {
        Provenance::SurrogateAnalytic
    }
}

/// Surface tabulated on a rectangular `(X, Y)` grid, bilinearly interpolated.
///
/// Text format: `#`-prefixed header lines, one of which declares units as
/// `# units: energy=<unit> length=<unit>`, then whitespace-separated
/// `X Y V` rows in any order.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedPes {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `values[ix * ys.len() + iy]`
    values: Vec<f64>,
    pub energy_unit: String,
    pub length_unit: String,
}

impl TabulatedPes {
    pub fn parse(text: &str) -> Result<Self> {
        let mut energy_unit = None;
        let mut length_unit = None;
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                if let Some(u) = h.trim().strip_prefix("units:") {
                    for kv in u.split_whitespace() {
                        match kv.split_once('=') {
                            Some(("energy", v)) => energy_unit = Some(v.to_string()),
                            Some(("length", v)) => length_unit = Some(v.to_string()),
                            _ => {}
                        }
                    }
                }
                continue;
            }
            let f: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Potential(format!("line {}: {e}", ln + 1)))?;
            if f.len() != 3 {
                return Err(Error::Potential(format!("line {}: expected 3 columns", ln + 1)));
            }
            rows.push((f[0], f[1], f[2]));
        }
        let (Some(energy_unit), Some(length_unit)) = (energy_unit, length_unit) else {
            return Err(Error::Potential("missing '# units: energy=.. length=..' header".into()));
        };
        let uniq = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let xs = uniq(rows.iter().map(|r| r.0).collect());
        let ys = uniq(rows.iter().map(|r| r.1).collect());
        if xs.len() < 2 || ys.len() < 2 || rows.len() != xs.len() * ys.len() {
            return Err(Error::Potential(format!(
                "table is not a complete rectangular grid ({} rows for {}×{} nodes)",
                rows.len(),
                xs.len(),
                ys.len()
            )));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for (x, y, v) in rows {
            let ix = xs.binary_search_by(|p| p.total_cmp(&x)).expect("node present");
            let iy = ys.binary_search_by(|p| p.total_cmp(&y)).expect("node present");
            values[ix * ys.len() + iy] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Potential("duplicate nodes in table".into()));
        }
        Ok(Self { xs, ys, values, energy_unit, length_unit })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn extent(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.xs[0], *self.xs.last().unwrap()),
            (self.ys[0], *self.ys.last().unwrap()),
        )
    }
}

fn bracket(nodes: &[f64], v: f64) -> Option<(usize, f64)> {
    let n = nodes.len();
    if v < nodes[0] || v > nodes[n - 1] {
        return None;
    }
    let i = match nodes.binary_search_by(|p| p.total_cmp(&v)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    };
    Some((i, (v - nodes[i]) / (nodes[i + 1] - nodes[i])))
}

impl CollinearPes for TabulatedPes {
    fn energy(&self, x: f64, y: f64) -> Result<f64> {
        let (Some((i, tx)), Some((j, ty))) = (bracket(&self.xs, x), bracket(&self.ys, y)) else {
            return Err(Error::Potential(format!("({x}, {y}) lies outside the tabulated surface")));
        };
        let ny = self.ys.len();
        let v = |a: usize, b: usize| self.values[a * ny + b];
        Ok((1.0 - tx) * (1.0 - ty) * v(i, j)
            + tx * (1.0 - ty) * v(i + 1, j)
            + (1.0 - tx) * ty * v(i, j + 1)
            + tx * ty * v(i + 1, j + 1))
    }

    fn provenance(&self) -> Provenance {
        Provenance::UserTabulated
    }
}
