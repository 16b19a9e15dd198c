//! Dry-run checks on a config: no propagation, only cheap construction.

use std::fmt;

use tdsmat::grid::Grid1D;
use tdsmat::hamiltonian::{hamiltonian_1d, well_potential, MAX_DENSE_QUBITS};
use tdsmat::propagation::{dt_max, Method};
use tdsmat::units::nucleon_reduced_mass;
use tdsmat::wavepacket::{GaussianSpec, DEFAULT_PURITY_TOL};

use crate::config::{Backend, Experiment, PacketConfig, RunConfig};
use crate::error::CliError;
use crate::pipeline::build_system;

/// Largest register the statevector emulator is allowed to allocate.
pub const MAX_STATEVECTOR_QUBITS: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug)]
pub struct Issue {
    pub severity: Severity,
    pub path: String,
    pub message: String,
    pub remedy: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {} (remedy: {})", self.path, self.message, self.remedy)
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub issues: Vec<Issue>,
    /// Numerical or geometry failure while constructing the system.
    pub build_error: Option<CliError>,
}

impl Report {
    fn error(&mut self, path: &str, message: impl Into<String>, remedy: impl Into<String>) {
        self.issues.push(Issue { severity: Severity::Error, path: path.into(), message: message.into(), remedy: remedy.into() });
    }

    fn warn(&mut self, path: &str, message: impl Into<String>, remedy: impl Into<String>) {
        self.issues.push(Issue { severity: Severity::Warning, path: path.into(), message: message.into(), remedy: remedy.into() });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    /// Geometry failures keep their numerical kind; everything else is a config error.
    pub fn into_result(mut self) -> Result<Report, CliError> {
        if let Some(e) = self.build_error.take() {
            return Err(e);
        }
        let errs: Vec<&Issue> = self.errors().collect();
        if let Some(first) = errs.first() {
            let msg = errs.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ");
            return Err(CliError::config(first.path.clone(), msg));
        }
        Ok(self)
    }
}

pub fn validate(cfg: &RunConfig) -> Report {
    let mut r = Report::default();
    scalars(cfg, &mut r);
    if !r.is_ok() {
        return r;
    }
    // geometry and packet purity come out of constructing the system
    match build_system(cfg) {
        Ok(sys) => {
            let q = sys.register_qubits();
            if cfg.backend != Backend::Classical && q + 1 > MAX_STATEVECTOR_QUBITS {
                r.error(
                    "backend",
                    format!("statevector needs {} qubits, limit {MAX_STATEVECTOR_QUBITS}", q + 1),
                    "reduce grid.n or use the classical backend",
                );
            }
            if cfg.propagator.method == Method::ExactEigen && q > MAX_DENSE_QUBITS {
                r.error(
                    "propagator.method",
                    format!("exact-eigen diagonalises a dense {q}-qubit matrix, limit {MAX_DENSE_QUBITS}"),
                    "use split-operator",
                );
            }
            if let Some(dt) = cfg.propagator.dt {
                let bound = dt_max(sys.h.as_grid().expect("grid Hamiltonian"));
                if cfg.propagator.method != Method::ExactEigen && dt > bound {
                    r.warn(
                        "propagator.dt",
                        format!("dt = {dt:.3e} exceeds dt_max = {bound:.3e}"),
                        format!("set propagator.dt <= {bound:.3e}"),
                    );
                }
            }
        }
        Err(e @ CliError::Numerical { .. }) => {
            if let CliError::Numerical { path, source, .. } = &e {
                r.error(path, source.to_string(), "move or narrow the packet, or enlarge the grid");
            }
            r.build_error = Some(e);
        }
        Err(CliError::Config { path, message }) => r.error(&path, message, "fix the key"),
        Err(CliError::Io(e)) => r.error("", e.to_string(), "check file paths"),
    }
    r
}

fn scalars(cfg: &RunConfig, r: &mut Report) {
    let g = &cfg.grid;
    if !g.n.is_power_of_two() || g.n < 4 {
        let up = g.n.max(4).next_power_of_two();
        r.error("grid.n", format!("n = {} is not a power of two", g.n), format!("use n = {up}"));
    }
    if !(g.length > 0.0 && g.length.is_finite()) {
        r.error("grid.length", "must be positive", "set a positive extent");
    }
    if !(g.edge_fraction > 0.0 && g.edge_fraction < 0.25) {
        r.error("grid.edge_fraction", format!("{} outside (0, 0.25)", g.edge_fraction), "use 1/32");
    }
    for (path, p) in [("reactant", &cfg.reactant), ("product", &cfg.product)] {
        packet_checks(path, p, cfg, r);
    }
    let incoming_ok = cfg.reactant.k0 < 0.0;
    if !incoming_ok {
        r.error("reactant.k0", "the incoming packet must move toward the origin", "make k0 negative");
    }
    match cfg.experiment {
        Experiment::FreeIdentity => {
            if cfg.product.k0.signum() != cfg.reactant.k0.signum() {
                r.error("product.k0", "free identity needs both packets moving the same way", "match the signs");
            }
            if cfg.product.x0 >= cfg.reactant.x0 {
                r.error("product.x0", "the outgoing packet must sit downstream", "place it below reactant.x0");
            }
        }
        _ => {
            if cfg.product.k0 <= 0.0 {
                r.error("product.k0", "the outgoing packet must move away from the origin", "make k0 positive");
            }
        }
    }
    match (cfg.experiment, &cfg.h3) {
        (Experiment::H3, None) => r.error("h3", "missing section", "add an [h3] table"),
        (Experiment::H3, Some(h)) => {
            if h.product_levels.is_empty() {
                r.error("h3.product_levels", "empty", "list at least one level");
            }
            let vmax = h.product_levels.iter().copied().chain([h.v_in]).max().unwrap_or(0);
            if h.n_basis < vmax + 5 {
                r.error("h3.n_basis", format!("{} < v_max + 5", h.n_basis), format!("use n_basis >= {}", vmax + 5));
            }
            if let Some(t) = &h.pes_table {
                if !t.exists() {
                    r.error("h3.pes_table", format!("{} not found", t.display()), "fix the path");
                }
            }
        }
        (_, Some(_)) => r.warn("h3", "ignored outside the h3 experiment", "remove the section"),
        _ => {}
    }
    let c = &cfg.correlation;
    if !(c.dt > 0.0) || !(c.horizon > c.dt) {
        r.error("correlation", "need 0 < dt < horizon", "fix correlation.dt / correlation.horizon");
    }
    if !(c.decay_tol > 0.0 && c.decay_tol < 1.0) {
        r.error("correlation.decay_tol", "outside (0, 1)", "use 1e-4");
    }
    if let Some(dt) = cfg.propagator.dt {
        if !(dt > 0.0) {
            r.error("propagator.dt", "must be positive", "omit it to use dt_max");
        }
    }
    if ![1, 2, 4].contains(&cfg.propagator.order) {
        r.error("propagator.order", format!("order {} unsupported", cfg.propagator.order), "use 1, 2 or 4");
    }
    let m = &cfg.moller;
    if !(m.tau > 0.0) || !(m.tol > 0.0) {
        r.error("moller", "tau and tol must be positive", "use tau > 0, tol = 1e-6");
    }
    let s = &cfg.smatrix;
    if s.n_energies < 2 || !(s.n_sigma > 0.0) {
        r.error("smatrix", "need n_energies >= 2 and n_sigma > 0", "use 400 and 4");
    }
    if !(s.eta_floor > 0.0 && s.eta_floor < 1.0) {
        r.error("smatrix.eta_floor", "outside (0, 1)", "use 1e-3");
    }
    if cfg.backend == Backend::Sampled && cfg.circuit.shots == 0 {
        r.error("circuit.shots", "zero shots", "use at least 100");
    }
    if cfg.snapshots.iter().any(|t| !(*t >= 0.0)) {
        r.error("snapshots", "times must be non-negative", "drop negative times");
    }
}

fn packet_checks(path: &str, p: &PacketConfig, cfg: &RunConfig, r: &mut Report) {
    if !(p.width > 0.0) {
        r.error(&format!("{path}.width"), "must be positive", "set a positive width");
        return;
    }
    let g = GaussianSpec::new(p.x0, p.width, p.k0);
    if let Err(e) = g.check_purity(DEFAULT_PURITY_TOL) {
        r.error(&format!("{path}.k0"), e.to_string(), "increase |k0| or the width");
    }
    let k_max = std::f64::consts::PI / cfg.grid.dx();
    let k_hi = p.k0.abs() + 5.0 * g.momentum_spread();
    if k_hi > k_max {
        r.error(
            &format!("{path}.k0"),
            format!("momenta up to {k_hi:.3} exceed the grid cutoff {k_max:.3}"),
            "refine the grid or lower |k0|",
        );
    }
}

/// `dt_max` of the 1D well at `n` points over the preset extent.
pub fn well_dt_max(n: usize, x_min: f64, length: f64) -> tdsmat::Result<f64> {
    let g = Grid1D::new(n, x_min, length / n as f64)?;
    let h = hamiltonian_1d(g, well_potential(&g), nucleon_reduced_mass())?;
    Ok(dt_max(h.as_grid().expect("grid Hamiltonian")))
}
