use fixedbed::experiments::{
    constraint_residual, grid_sweep, half_response_time, heat_of_reaction,
    inlet_temperature_system, onset_time, parabola_vertex, settling_time, solve_steady,
    SteadyOptions,
};
use fixedbed::reactor::{build_afbr, OperatingConditions, ReactorDimensions, ReactorParameters};
use fixedbed::solvers::StopReason;
use fixedbed::thermo::{EosKind, FluidModel};

fn first_order(tau: f64, horizon: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let t: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
    let y = t.iter().map(|s| 2.0 - (-s / tau).exp()).collect();
    (t, y)
}

#[test]
fn first_order_response_times() {
    let tau = 30.0;
    let (t, y) = first_order(tau, 3000.0, 300_000);
    let half = half_response_time(&t, &y).unwrap();
    assert!((half - tau * 2f64.ln()).abs() < 1e-3, "{half}");
    // monotone signal: half of the largest excursion is the half response
    assert!((onset_time(&t, &y, 0.5).unwrap() - half).abs() < 1e-9);
    let settle = settling_time(&t, &y, 0.05).unwrap();
    assert!((settle - tau * 20f64.ln()).abs() < 0.02, "{settle}");
}

#[test]
fn onset_uses_the_largest_excursion() {
    let t = [0.0, 1.0, 2.0, 3.0];
    let y = [1.0, 3.0, 2.0, 2.0];
    assert_eq!(onset_time(&t, &y, 0.5), Some(0.5));
    // the half-way point to the final value is reached earlier
    assert_eq!(half_response_time(&t, &y), Some(0.25));
    assert_eq!(onset_time(&t, &[1.0, 1.0], 0.5), None);
}

#[test]
fn settling_of_a_constant_signal_is_immediate() {
    assert_eq!(settling_time(&[2.0, 5.0], &[1.0, 1.0], 0.05), Some(2.0));
}

#[test]
fn parabola_vertex_recovers_the_maximum() {
    let f = |x: f64| 3.0 - (x - 2.0) * (x - 2.0);
    let (x, y) = parabola_vertex((1.0, f(1.0)), (2.5, f(2.5)), (4.0, f(4.0)));
    assert!((x - 2.0).abs() < 1e-12 && (y - 3.0).abs() < 1e-12);
    // collinear points fall back to the middle one
    assert_eq!(
        parabola_vertex((0.0, 0.0), (1.0, 1.0), (2.0, 2.0)),
        (1.0, 1.0)
    );
}

#[test]
fn ideal_gas_heat_of_reaction_ignores_pressure() {
    let x = OperatingConditions::nominal(700.0).x_in;
    let fl = FluidModel::ammonia(EosKind::IdealGas);
    let a = heat_of_reaction(&fl, &x, 700.0, 1e5).unwrap();
    let b = heat_of_reaction(&fl, &x, 700.0, 300e5).unwrap();
    assert!(a < 0.0 && ((a - b) / a).abs() < 1e-12, "{a} {b}");
}

fn afbr_system() -> fixedbed::fvm::SemiDiscreteSystem {
    let unit = build_afbr(
        &ReactorDimensions::default(),
        &ReactorParameters::default(),
        &OperatingConditions::nominal(700.0),
        EosKind::Srk,
    )
    .unwrap();
    inlet_temperature_system(unit, 20).unwrap()
}

#[test]
fn steady_state_satisfies_constraints() {
    let sys = afbr_system();
    let opts = SteadyOptions::default();
    let st = solve_steady(&sys, 700.0, None, &opts).unwrap();
    assert!(constraint_residual(&sys, &st.w, 700.0).unwrap() <= opts.newton.tol);
}

#[test]
fn grid_sweep_keeps_points_before_a_failure() {
    let sys = afbr_system();
    let sw = grid_sweep(
        &sys,
        &[700.0, 705.0, -50.0, 710.0],
        &SteadyOptions::default(),
    )
    .unwrap();
    assert_eq!(sw.points.len(), 2);
    assert_eq!(sw.stop, StopReason::Stalled);
    assert!(sw.failure.is_some());
    assert!(grid_sweep(&sys, &[-50.0], &SteadyOptions::default()).is_err());
}
