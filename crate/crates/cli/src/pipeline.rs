//! Builds the system a config describes and runs it end to end.

use std::sync::Arc;
use std::time::Instant;

use tdsmat::grid::{Grid, Grid1D, Grid2D, WaveFunction};
use tdsmat::hamiltonian::{
    asymptotic_hamiltonian, channel_slice, collinear_hamiltonian, hamiltonian_1d, well_potential, BondKinetic,
    CollinearPes, HamiltonianOp, LepsSurface, TabulatedPes,
};
use tdsmat::moller::{converge_tau0, MollerState, Sign, Tau0Trace, TauSchedule};
use tdsmat::par::Exec;
use tdsmat::propagation::{dt_max, Evolver, PropagatorSpec};
use tdsmat::smatrix::{
    correlation_classical, correlation_sampled, correlation_statevector, correlation_symmetric, energy_transform,
    hadamard_outcomes, populated_band, s_matrix, ChannelEnergetics, CircuitPlan, CorrelationSeries, SMatrixTable,
    TimeGrid,
};
use tdsmat::units::{nucleon_reduced_mass, HARTREE_EV, HYDROGEN_MASS_AU};
use tdsmat::wavepacket::{
    build_vibrational_basis, channel_product_state, gaussian_position, ChannelId, ChannelSpec, GaussianSpec,
    VibParams, VibrationalBasis, DEFAULT_PURITY_TOL,
};

use crate::config::{Backend, Experiment, H3Config, PacketConfig, RunConfig, Scheme};
use crate::error::{At, CliError};

/// An asymptotic channel: its packet, its `H₀` and its threshold.
pub struct Channel {
    pub spec: ChannelSpec,
    pub psi_in: WaveFunction,
    pub h0: HamiltonianOp,
    pub free: Evolver,
    pub energetics: ChannelEnergetics,
}

pub struct System {
    pub grid: Grid,
    pub h: HamiltonianOp,
    pub full: Evolver,
    pub reactant: Channel,
    pub products: Vec<Channel>,
    /// Propagator time step actually used.
    pub dt: f64,
}

impl System {
    /// Qubits of the state register (the Hadamard test adds one).
    pub fn register_qubits(&self) -> usize {
        self.grid.qubits()
    }
}

pub fn build_system(cfg: &RunConfig) -> Result<System, CliError> {
    match cfg.experiment {
        Experiment::Well1d | Experiment::FreeIdentity => build_1d(cfg),
        Experiment::H3 => build_h3(cfg),
    }
}

fn grid_1d(cfg: &RunConfig) -> Result<Grid1D, CliError> {
    Grid1D::new(cfg.grid.n, cfg.grid.x_min, cfg.grid.dx()).at("grid")
}

fn evolver(h: &HamiltonianOp, grid: Grid, spec: PropagatorSpec, cfg: &RunConfig) -> Result<Evolver, CliError> {
    let mut e = Evolver::new(h, grid, spec).at("propagator")?;
    e.edge_fraction = cfg.grid.edge_fraction;
    Ok(e)
}

fn propagator_spec(cfg: &RunConfig, h: &HamiltonianOp) -> Result<PropagatorSpec, CliError> {
    let dt = match cfg.propagator.dt {
        Some(dt) => dt,
        None => dt_max(h.as_grid().expect("grid Hamiltonian")),
    };
    PropagatorSpec::new(cfg.propagator.method, dt, cfg.propagator.order).at("propagator")
}

fn packet(p: &PacketConfig) -> GaussianSpec {
    GaussianSpec::new(p.x0, p.width, p.k0)
}

fn check_edges(psi: &WaveFunction, cfg: &RunConfig, path: &str) -> Result<(), CliError> {
    let e = psi.edge_probability(cfg.grid.edge_fraction).at(path)?;
    if e > 1e-6 {
        return Err(tdsmat::Error::Geometry(format!("packet puts {e:.3e} of its probability in the grid edge band")))
            .at(path);
    }
    Ok(())
}

fn build_1d(cfg: &RunConfig) -> Result<System, CliError> {
    let g = grid_1d(cfg)?;
    let mu = nucleon_reduced_mass();
    let v = match cfg.experiment {
        Experiment::Well1d => well_potential(&g),
        _ => vec![0.0; g.n()],
    };
    let h = hamiltonian_1d(g, v, mu).at("grid")?;
    let h0 = hamiltonian_1d(g, vec![0.0; g.n()], mu).at("grid")?;
    let spec = propagator_spec(cfg, &h)?;
    let full = evolver(&h, Grid::One(g), spec, cfg)?;
    let energetics = ChannelEnergetics { mu, e_internal: 0.0 };
    let channel = |id: ChannelId, p: &PacketConfig, path: &str| -> Result<Channel, CliError> {
        let pk = packet(p);
        let spec_c = ChannelSpec::new(id, 0, pk, g, DEFAULT_PURITY_TOL).at(path)?;
        let psi_in = gaussian_position(&pk, g, DEFAULT_PURITY_TOL).at(path)?;
        check_edges(&psi_in, cfg, path)?;
        let free = evolver(&h0, Grid::One(g), spec, cfg)?;
        Ok(Channel { spec: spec_c, psi_in, h0: h0.clone(), free, energetics })
    };
    let reactant = channel(ChannelId::Reactant, &cfg.reactant, "reactant")?;
    let product = channel(ChannelId::Product, &cfg.product, "product")?;
    Ok(System { grid: Grid::One(g), h, full, reactant, products: vec![product], dt: spec.dt })
}

fn surface(h3: &H3Config) -> Result<Box<dyn CollinearPes>, CliError> {
    match &h3.pes_table {
        Some(path) => {
            let t = TabulatedPes::load(path).at("h3.pes_table")?;
            let atomic = matches!(t.energy_unit.as_str(), "hartree" | "Eh")
                && matches!(t.length_unit.as_str(), "bohr" | "a0");
            if !atomic {
                return Err(CliError::config(
                    "h3.pes_table",
                    format!("table units {}/{} are not hartree/bohr", t.energy_unit, t.length_unit),
                ));
            }
            Ok(Box::new(t))
        }
        None => Ok(Box::new(LepsSurface::h3().with_barrier(h3.barrier_ev / HARTREE_EV).at("h3.barrier_ev")?)),
    }
}

/// Translational and vibrational reduced masses of H + H₂.
pub fn h3_masses() -> (f64, f64) {
    let m = HYDROGEN_MASS_AU;
    (2.0 * m / 3.0, m / 2.0)
}

fn vib_basis(
    id: ChannelId,
    g2: &Grid2D,
    pes: &dyn CollinearPes,
    h3: &H3Config,
    v_max: usize,
) -> Result<VibrationalBasis, CliError> {
    let (_, mu_r) = h3_masses();
    let slice = channel_slice(id, g2, pes, h3.r_large, Some(h3.v_cap)).at("h3.r_large")?;
    let axis = match id {
        ChannelId::Reactant => g2.gy,
        ChannelId::Product => g2.gx,
    };
    build_vibrational_basis(axis, &slice, &VibParams { mass: mu_r, n_basis: h3.n_basis, v_max }).at("h3.n_basis")
}

fn build_h3(cfg: &RunConfig) -> Result<System, CliError> {
    let h3 = cfg.h3.as_ref().ok_or_else(|| CliError::config("h3", "missing [h3] section"))?;
    let g = grid_1d(cfg)?;
    let g2 = Grid2D::new(g, g);
    let grid = Grid::Two(g2);
    let pes = surface(h3)?;
    let kin = BondKinetic::equal_masses(HYDROGEN_MASS_AU);
    let cap = Some(h3.v_cap);
    let h = collinear_hamiltonian(g2, pes.as_ref(), kin, cap).at("h3")?;
    let spec = propagator_spec(cfg, &h)?;
    let full = evolver(&h, grid, spec, cfg)?;
    let (mu_big, _) = h3_masses();
    let v_max = h3.product_levels.iter().copied().chain([h3.v_in]).max().unwrap_or(0);
    let vib_r = vib_basis(ChannelId::Reactant, &g2, pes.as_ref(), h3, v_max)?;
    let vib_p = vib_basis(ChannelId::Product, &g2, pes.as_ref(), h3, v_max)?;

    let h0r = asymptotic_hamiltonian(ChannelId::Reactant, g2, pes.as_ref(), kin, h3.r_large, cap).at("h3")?;
    let h0p = asymptotic_hamiltonian(ChannelId::Product, g2, pes.as_ref(), kin, h3.r_large, cap).at("h3")?;

    let channel = |id: ChannelId,
                   v: usize,
                   pk: GaussianSpec,
                   vib: &VibrationalBasis,
                   h0: &HamiltonianOp,
                   path: &str|
     -> Result<Channel, CliError> {
        let spec_c = ChannelSpec::new(id, v, pk, g, DEFAULT_PURITY_TOL).at(path)?;
        let psi_in = channel_product_state(&spec_c, vib, g2, cfg.grid.edge_fraction).at(path)?;
        let free = evolver(h0, grid, spec, cfg)?;
        let energetics = ChannelEnergetics { mu: mu_big, e_internal: vib.energy(v) };
        Ok(Channel { spec: spec_c, psi_in, h0: h0.clone(), free, energetics })
    };

    let reactant = channel(ChannelId::Reactant, h3.v_in, packet(&cfg.reactant), &vib_r, &h0r, "reactant")?;
    let mut products = Vec::new();
    for &vp in &h3.product_levels {
        let mut pk = packet(&cfg.product);
        if h3.match_energy {
            let r = cfg.reactant.k0.powi(2) + 2.0 * mu_big * (vib_r.energy(h3.v_in) - vib_p.energy(vp));
            if r <= 0.0 {
                return Err(CliError::config(
                    "h3.product_levels",
                    format!("level {vp} is closed at the reactant packet's mean energy"),
                ));
            }
            pk.k0 = cfg.product.k0.signum() * r.sqrt();
        }
        products.push(channel(ChannelId::Product, vp, pk, &vib_p, &h0p, "product")?);
    }
    Ok(System { grid, h, full, reactant, products, dt: spec.dt })
}

/// One product channel's results.
pub struct ProductResult {
    pub v: usize,
    pub e_internal: f64,
    pub minus: Tau0Trace,
    pub corr: CorrelationSeries,
    pub table: SMatrixTable,
}

pub struct RunResult {
    pub plus: Tau0Trace,
    pub products: Vec<ProductResult>,
    pub energies: Vec<f64>,
    /// Internal energy of the reactant channel; collision energy is `E` minus this.
    pub e_reactant: f64,
    pub snapshots: Vec<(f64, WaveFunction)>,
    pub register_qubits: usize,
    pub dt: f64,
    pub seconds: f64,
}

pub fn schedule(cfg: &RunConfig) -> TauSchedule {
    TauSchedule { tau: cfg.moller.tau, max_doublings: cfg.moller.max_doublings, tol: cfg.moller.tol }
}

/// Correlation series of one channel pair with the configured backend.
pub fn correlation(
    cfg: &RunConfig,
    sys: &System,
    plus: &MollerState,
    minus: &MollerState,
    product: &Channel,
    stream: u64,
) -> Result<CorrelationSeries, CliError> {
    let c = &cfg.correlation;
    let tg = TimeGrid::new(c.dt, c.n_points()).at("correlation")?;
    match cfg.backend {
        Backend::Classical => match c.scheme {
            Scheme::Forward => correlation_classical(plus, minus, &sys.full, tg),
            Scheme::Symmetric => correlation_symmetric(plus, minus, &sys.full, tg),
        }
        .at("correlation.horizon"),
        Backend::Statevector | Backend::Sampled => {
            let plan = CircuitPlan::new(
                plus,
                minus,
                Arc::clone(sys.full.propagator()),
                Arc::clone(sys.reactant.free.propagator()),
                Arc::clone(product.free.propagator()),
                c.dt,
            )
            .at("circuit")?;
            if cfg.backend == Backend::Statevector {
                correlation_statevector(&plan, tg, cfg.circuit.mode, Exec::Parallel).at("circuit")
            } else {
                let out = hadamard_outcomes(&plan, tg, cfg.circuit.mode, Exec::Parallel).at("circuit")?;
                correlation_sampled(&out, tg, cfg.circuit.shots, cfg.circuit.seed.wrapping_add(stream))
                    .at("circuit.shots")
            }
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunResult, CliError> {
    let start = Instant::now();
    let sys = build_system(cfg)?;
    let sch = schedule(cfg);
    let r = &sys.reactant;
    let plus = converge_tau0(&r.psi_in, &r.spec, Sign::Plus, &sys.full, &r.free, &sch).at("moller")?;

    let energies = populated_band(&r.spec, &r.energetics, cfg.smatrix.n_sigma, cfg.smatrix.n_energies);
    let mut products = Vec::new();
    for (i, p) in sys.products.iter().enumerate() {
        let minus = converge_tau0(&p.psi_in, &p.spec, Sign::Minus, &sys.full, &p.free, &sch).at("moller")?;
        let corr = correlation(cfg, &sys, &plus.state, &minus.state, p, i as u64)?;
        corr.check_decay(cfg.correlation.decay_tol).at("correlation.horizon")?;
        let ct = energy_transform(&corr, &energies, cfg.correlation.window.into(), Exec::Parallel);
        let table = s_matrix(&ct, &energies, (&r.spec, r.energetics), (&p.spec, p.energetics), cfg.smatrix.eta_floor)
            .at("smatrix")?;
        products.push(ProductResult { v: p.spec.v, e_internal: p.energetics.e_internal, minus, corr, table });
    }

    let snapshots = snapshots(cfg, &sys, &plus.state.psi)?;
    Ok(RunResult {
        e_reactant: r.energetics.e_internal,
        plus,
        products,
        energies,
        snapshots,
        register_qubits: sys.register_qubits(),
        dt: sys.dt,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `Ψ₊` propagated under the full Hamiltonian to each requested time.
pub fn snapshots(cfg: &RunConfig, sys: &System, psi: &WaveFunction) -> Result<Vec<(f64, WaveFunction)>, CliError> {
    let mut times = cfg.snapshots.clone();
    times.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(times.len());
    let (mut t_prev, mut cur) = (0.0, psi.clone());
    for t in times {
        cur = sys.full.propagate_from(&cur, t - t_prev, t_prev).at("snapshots")?;
        t_prev = t;
        out.push((t, cur.clone()));
    }
    Ok(out)
}
