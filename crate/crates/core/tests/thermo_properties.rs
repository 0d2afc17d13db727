use fixedbed::thermo::{EosKind, FluidModel, ThermoState};
use proptest::prelude::*;

fn eos() -> impl Strategy<Value = EosKind> {
    prop_oneof![
        Just(EosKind::IdealGas),
        Just(EosKind::Srk),
        Just(EosKind::PengRobinson)
    ]
}

fn composition() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 4).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

const R: f64 = 8.314462618;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Enthalpy difference on the scale `R T n`; enthalpies anchored at
/// formation values can pass through zero.
fn h_err(a: f64, b: f64, t: f64, n: &[f64]) -> f64 {
    (a - b).abs() / (R * t * n.iter().sum::<f64>())
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn extensive_properties_are_homogeneous(
        eos in eos(), x in composition(), t in 450.0f64..900.0, p in 1e6f64..3.5e7, k in 0.1f64..10.0,
    ) {
        let fl = FluidModel::ammonia(eos);
        let n2: Vec<f64> = x.iter().map(|v| k * v).collect();
        prop_assert!(rel(fl.molar_volume(t, p, &n2).unwrap(), k * fl.molar_volume(t, p, &x).unwrap()) < 1e-12);
        prop_assert!(h_err(fl.enthalpy(t, p, &n2).unwrap(), k * fl.enthalpy(t, p, &x).unwrap(), t, &n2) < 1e-12);
    }

    #[test]
    fn partial_molar_enthalpies_sum_to_the_enthalpy(
        eos in eos(), x in composition(), t in 450.0f64..900.0, p in 1e6f64..3.5e7,
    ) {
        let fl = FluidModel::ammonia(eos);
        let v = fl.molar_volume(t, p, &x).unwrap();
        let c: Vec<f64> = x.iter().map(|xi| xi / v).collect();
        let hbar = fl.partial_molar_enthalpy(&ThermoState::new(t, p, c.clone())).unwrap();
        let sum: f64 = c.iter().zip(&hbar).map(|(a, b)| a * b).sum();
        prop_assert!(h_err(sum, fl.enthalpy(t, p, &c).unwrap(), t, &c) < 1e-10);
    }

    #[test]
    fn cubic_models_approach_the_ideal_gas_at_low_pressure(
        x in composition(), t in 450.0f64..900.0,
    ) {
        let ideal = FluidModel::ammonia(EosKind::IdealGas);
        for eos in [EosKind::Srk, EosKind::PengRobinson] {
            let fl = FluidModel::ammonia(eos);
            prop_assert!((fl.compressibility(t, 10.0, &x).unwrap() - 1.0).abs() < 1e-7);
            prop_assert!(h_err(fl.enthalpy(t, 10.0, &x).unwrap(), ideal.enthalpy(t, 10.0, &x).unwrap(), t, &x) < 1e-6);
        }
    }
}
