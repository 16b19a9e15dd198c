//! Built-in experiments. User configs are layered over these.

use std::path::PathBuf;

use tdsmat::propagation::Method;
use tdsmat::smatrix::CircuitMode;
use tdsmat::units::nucleon_reduced_mass;

use crate::config::*;

pub const NAMES: [&str; 3] = ["well1d", "h3", "free-identity"];

pub fn by_name(name: &str) -> Option<RunConfig> {
    match name {
        "well1d" => Some(well1d()),
        "h3" => Some(h3()),
        "free-identity" => Some(free_identity()),
        _ => None,
    }
}

pub fn describe(name: &str) -> &'static str {
    match name {
        "well1d" => "two-nucleon reflection from a square well with a hard core (MeV, fm)",
        "h3" => "collinear H + H2 exchange on a switched LEPS surface (atomic units)",
        "free-identity" => "V = 0 end-to-end check, S(E) = 1 (MeV, fm)",
        _ => "",
    }
}

fn common(experiment: Experiment) -> RunConfig {
    RunConfig {
        experiment,
        backend: Backend::Classical,
        output_dir: PathBuf::from("out").join(experiment.name()),
        units: UnitSystemName::Nuclear,
        grid: GridConfig { n: 256, x_min: -10.0, length: 128.0, edge_fraction: 1.0 / 32.0 },
        reactant: PacketConfig { x0: 24.0, width: 2.5, k0: -3.5 },
        product: PacketConfig { x0: 24.0, width: 2.5, k0: 3.5 },
        propagator: PropagatorConfig { method: Method::SplitOperator, dt: None, order: 2 },
        moller: MollerConfig { tau: 0.02, max_doublings: 8, tol: 1e-6 },
        correlation: CorrelationConfig {
            dt: 5e-4,
            horizon: 0.36,
            scheme: Scheme::Forward,
            decay_tol: 1e-4,
            window: WindowName::None,
        },
        smatrix: SMatrixConfig { n_energies: 400, n_sigma: 4.0, eta_floor: 1e-3 },
        circuit: CircuitConfig { mode: CircuitMode::Sweep, shots: 10_000, seed: 20_240_917 },
        snapshots: Vec::new(),
        h3: None,
    }
}

/// Round trip of the incoming packet to the well edge and back.
pub fn well1d_round_trip(packet: &PacketConfig, well_edge: f64) -> f64 {
    2.0 * (packet.x0 - well_edge) * nucleon_reduced_mass() / packet.k0.abs()
}

pub fn well1d() -> RunConfig {
    let mut c = common(Experiment::Well1d);
    let tv = well1d_round_trip(&c.reactant, 1.65);
    c.snapshots = [0.12, 0.24, 0.56, 0.97].iter().map(|f| f * tv).collect();
    c
}

pub fn free_identity() -> RunConfig {
    let mut c = common(Experiment::FreeIdentity);
    c.grid = GridConfig { n: 256, x_min: -96.0, length: 192.0, edge_fraction: 1.0 / 32.0 };
    c.reactant = PacketConfig { x0: 55.0, width: 4.0, k0: -3.0 };
    c.product = PacketConfig { x0: -5.0, width: 4.0, k0: -3.0 };
    c.correlation.dt = 1e-3;
    c.correlation.horizon = 0.5;
    c.correlation.scheme = Scheme::Symmetric;
    c
}

pub fn h3() -> RunConfig {
    let mut c = common(Experiment::H3);
    c.units = UnitSystemName::Atomic;
    c.grid = GridConfig { n: 256, x_min: 0.05, length: 44.8, edge_fraction: 1.0 / 64.0 };
    c.reactant = PacketConfig { x0: 9.0, width: 0.8, k0: -8.5 };
    c.product = PacketConfig { x0: 10.0, width: 0.8, k0: 8.5 };
    c.propagator.dt = Some(2.0);
    c.moller = MollerConfig { tau: 50.0, max_doublings: 8, tol: 1e-6 };
    c.correlation = CorrelationConfig {
        dt: 10.0,
        horizon: 10_600.0,
        scheme: Scheme::Symmetric,
        // resonances near 0.52 and 0.93 eV leave a slow tail
        decay_tol: 2e-3,
        window: WindowName::None,
    };
    c.smatrix = SMatrixConfig { n_energies: 300, n_sigma: 3.0, eta_floor: 0.05 };
    c.snapshots = vec![0.0, 1000.0, 2000.0, 3000.0];
    c.h3 = Some(H3Config {
        barrier_ev: 0.42,
        pes_table: None,
        v_cap: 0.5,
        r_large: 40.0,
        n_basis: 12,
        v_in: 0,
        product_levels: vec![0, 1],
        match_energy: true,
    });
    c
}
