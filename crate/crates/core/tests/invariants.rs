use proptest::prelude::*;

use tdsmat::grid::{Grid, Grid1D, WaveFunction};
use tdsmat::hamiltonian::{hamiltonian_1d, well_potential, HamiltonianOp};
use tdsmat::moller::{converge_tau0, energy_defect, make_moller, Sign, TauSchedule};
use tdsmat::par::Exec;
use tdsmat::propagation::{dt_max, Evolver, ExactEigen, Method, Propagator, PropagatorSpec, SplitOperator, Trotter};
use tdsmat::smatrix::{
    correlation_classical, correlation_symmetric, energy_transform, populated_band, s_matrix, ChannelEnergetics,
    TimeGrid, Window, ETA_FLOOR,
};
use tdsmat::units::nucleon_reduced_mass;
use tdsmat::wavepacket::{gaussian_position, ChannelId, ChannelSpec, GaussianSpec, DEFAULT_PURITY_TOL};

fn well(n: usize) -> (Grid1D, HamiltonianOp, HamiltonianOp) {
    let g = Grid1D::new(n, -10.0, 128.0 / n as f64).unwrap();
    let mu = nucleon_reduced_mass();
    let h = hamiltonian_1d(g, well_potential(&g), mu).unwrap();
    let h0 = hamiltonian_1d(g, vec![0.0; n], mu).unwrap();
    (g, h, h0)
}

fn packet(g: Grid1D, x0: f64, k0: f64) -> WaveFunction {
    gaussian_position(&GaussianSpec::new(x0, 2.5, k0), g, DEFAULT_PURITY_TOL).unwrap()
}

fn norm_sq(a: &[tdsmat::C64], cell: f64) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn norm_is_kept_over_a_thousand_steps(x0 in 10.0f64..40.0, k0 in 2.0f64..4.0, which in 0usize..4) {
        let (g, h, _) = well(256);
        let gh = h.as_grid().unwrap();
        let dt = dt_max(gh);
        let p: Box<dyn Propagator> = match which {
            0 => Box::new(SplitOperator::new(gh, dt).unwrap()),
            1 => Box::new(Trotter::grid(gh, 1, dt).unwrap()),
            2 => Box::new(Trotter::grid(gh, 2, dt).unwrap()),
            _ => Box::new(Trotter::grid(gh, 4, dt).unwrap()),
        };
        let mut a = packet(g, x0, -k0).into_amp();
        let n0 = norm_sq(&a, g.dx());
        p.evolve_steps(&mut a, dt, 1000, &mut |_, _| Ok(())).unwrap();
        prop_assert!((norm_sq(&a, g.dx()) - n0).abs() < 1e-12);
    }

    #[test]
    fn approximate_propagators_conserve_energy(x0 in 4.0f64..30.0, k0 in 2.0f64..4.0) {
        let (g, h, _) = well(256);
        let gh = h.as_grid().unwrap();
        let dt = dt_max(gh);
        let psi = packet(g, x0, -k0);
        let e0 = h.expectation(&psi).unwrap();
        for p in [
            Box::new(SplitOperator::new(gh, dt).unwrap()) as Box<dyn Propagator>,
            Box::new(Trotter::grid(gh, 2, dt).unwrap()),
            Box::new(Trotter::grid(gh, 4, dt).unwrap()),
        ] {
            let mut out = psi.clone();
            p.evolve(out.amp_mut(), 0.1);
            let e = h.expectation(&out).unwrap();
            prop_assert!(((e - e0) / e0).abs() < 1e-4, "{e} vs {e0}");
        }
    }
}

#[test]
fn fourth_order_beats_second_order_tenfold() {
    let (g, h, _) = well(256);
    let gh = h.as_grid().unwrap();
    let psi = packet(g, 6.0, -3.5);
    let exact = ExactEigen::new(&h).unwrap();
    let t = 0.05;
    let mut reference = psi.amp().to_vec();
    exact.evolve(&mut reference, t);
    for dt in [2e-5, 1e-5] {
        let err = |order| {
            let mut a = psi.amp().to_vec();
            Trotter::grid(gh, order, dt).unwrap().evolve(&mut a, t);
            norm_sq(&a.iter().zip(&reference).map(|(x, y)| x - y).collect::<Vec<_>>(), g.dx()).sqrt()
        };
        let (e2, e4) = (err(2), err(4));
        assert!(e4 * 10.0 < e2, "dt {dt}: order 2 {e2:.3e}, order 4 {e4:.3e}");
    }
}

#[test]
fn split_operator_tracks_exact_on_64_points() {
    let g = Grid1D::new(64, -4.0, 0.5).unwrap();
    let h = hamiltonian_1d(g, well_potential(&g), nucleon_reduced_mass()).unwrap();
    let gh = h.as_grid().unwrap();
    let psi = gaussian_position(&GaussianSpec::new(14.0, 2.0, -3.0), g, DEFAULT_PURITY_TOL).unwrap();
    let exact = ExactEigen::new(&h).unwrap();
    let so = SplitOperator::new(gh, dt_max(gh) / 10.0).unwrap();
    let (mut a, mut b) = (psi.amp().to_vec(), psi.amp().to_vec());
    let step = 0.005;
    for _ in 0..20 {
        exact.evolve(&mut a, step);
        so.evolve(&mut b, step);
        let d = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(d < 1e-6, "{d}");
    }
}

struct Moller {
    g: Grid1D,
    h: HamiltonianOp,
    h0: HamiltonianOp,
    full: Evolver,
    free: Evolver,
}

fn moller_setup() -> Moller {
    // room below the core for the packet's tail
    let g = Grid1D::new(512, -40.0, 0.3125).unwrap();
    let mu = nucleon_reduced_mass();
    let h = hamiltonian_1d(g, well_potential(&g), mu).unwrap();
    let h0 = hamiltonian_1d(g, vec![0.0; g.n()], mu).unwrap();
    let spec = PropagatorSpec::new(Method::SplitOperator, dt_max(h.as_grid().unwrap()), 2).unwrap();
    let full = Evolver::new(&h, Grid::One(g), spec).unwrap();
    let free = Evolver::new(&h0, Grid::One(g), spec).unwrap();
    Moller { g, h, h0, full, free }
}

#[test]
fn moller_states_are_isometric_and_intertwine_energy() {
    let m = moller_setup();
    // packets start over the well, so neither operator is the identity;
    // each moves away from the core on its free leg
    for (sign, k0) in [(Sign::Plus, -3.5), (Sign::Minus, 3.5)] {
        let pk = GaussianSpec::new(4.0, 2.5, k0);
        let psi = gaussian_position(&pk, m.g, DEFAULT_PURITY_TOL).unwrap();
        let chan = ChannelSpec::new(ChannelId::Reactant, 0, pk, m.g, DEFAULT_PURITY_TOL).unwrap();
        let s = make_moller(&psi, &chan, sign, &m.full, &m.free, 0.05).unwrap();
        let dn = (s.psi.norm() - psi.norm()).abs();
        assert!(dn < 1e-12, "{sign:?}: {dn:.3e}");
        assert!(s.psi.distance(&psi).unwrap() > 1e-3);
        let d = energy_defect(&s, &psi, &m.h, &m.h0).unwrap();
        assert!(d < 1e-3, "{sign:?}: {d}");
    }
}

#[test]
fn doubling_past_convergence_changes_little() {
    let m = moller_setup();
    let pk = GaussianSpec::new(4.0, 2.5, -3.5);
    let psi = gaussian_position(&pk, m.g, DEFAULT_PURITY_TOL).unwrap();
    let chan = ChannelSpec::new(ChannelId::Reactant, 0, pk, m.g, DEFAULT_PURITY_TOL).unwrap();
    let sch = TauSchedule::new(0.01);
    let tr = converge_tau0(&psi, &chan, Sign::Plus, &m.full, &m.free, &sch).unwrap();
    assert!(tr.tau0 > 0.0);
    assert!(tr.strictly_decreasing(), "{:?}", tr.residuals);
    let later = make_moller(&psi, &chan, Sign::Plus, &m.full, &m.free, 2.0 * tr.tau0).unwrap();
    assert!(later.psi.distance(&tr.state.psi).unwrap() < 1e-6);
}

#[test]
fn symmetric_and_forward_series_agree() {
    let (g, h, _) = well(256);
    let spec = PropagatorSpec::new(Method::SplitOperator, dt_max(h.as_grid().unwrap()), 2).unwrap();
    let full = Evolver::new(&h, Grid::One(g), spec).unwrap();
    let mk = |k0: f64, id, sign| {
        let pk = GaussianSpec::new(24.0, 2.5, k0);
        let c = ChannelSpec::new(id, 0, pk, g, DEFAULT_PURITY_TOL).unwrap();
        make_moller(&gaussian_position(&pk, g, DEFAULT_PURITY_TOL).unwrap(), &c, sign, &full, &full, 0.0).unwrap()
    };
    let plus = mk(-3.5, ChannelId::Reactant, Sign::Plus);
    let minus = mk(3.5, ChannelId::Product, Sign::Minus);
    let tg = TimeGrid::new(5e-4, 721).unwrap();
    let a = correlation_classical(&plus, &minus, &full, tg).unwrap();
    let b = correlation_symmetric(&plus, &minus, &full, tg).unwrap();
    let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(d < 1e-8, "{d}");
}

#[test]
fn well_probabilities_stay_in_unit_interval() {
    let (g, h, _) = well(256);
    let mu = nucleon_reduced_mass();
    let spec = PropagatorSpec::new(Method::SplitOperator, dt_max(h.as_grid().unwrap()), 2).unwrap();
    let full = Evolver::new(&h, Grid::One(g), spec).unwrap();
    let pp = GaussianSpec::new(24.0, 2.5, -3.5);
    let pm = GaussianSpec::new(24.0, 2.5, 3.5);
    let cp = ChannelSpec::new(ChannelId::Reactant, 0, pp, g, DEFAULT_PURITY_TOL).unwrap();
    let cm = ChannelSpec::new(ChannelId::Product, 0, pm, g, DEFAULT_PURITY_TOL).unwrap();
    let plus = make_moller(&gaussian_position(&pp, g, 1e-4).unwrap(), &cp, Sign::Plus, &full, &full, 0.0).unwrap();
    let minus = make_moller(&gaussian_position(&pm, g, 1e-4).unwrap(), &cm, Sign::Minus, &full, &full, 0.0).unwrap();
    let c = correlation_classical(&plus, &minus, &full, TimeGrid::new(5e-4, 721).unwrap()).unwrap();
    let en = ChannelEnergetics { mu, e_internal: 0.0 };
    let es = populated_band(&cp, &en, 4.0, 200);
    let ct = energy_transform(&c, &es, Window::None, Exec::Sequential);
    let t = s_matrix(&ct, &es, (&cp, en), (&cm, en), ETA_FLOOR).unwrap();
    assert!(t.valid().count() > 100);
    for i in t.valid() {
        let p = t.s[i].norm_sqr();
        assert!((0.0..=1.0 + 1e-3).contains(&p), "P = {p} at E = {}", t.energies[i]);
    }
}
