use super::*;

const NOMINAL_X: [f64; 4] = [0.215, 0.645, 0.10, 0.04];

fn all_models() -> Vec<FluidModel> {
    [EosKind::IdealGas, EosKind::Srk, EosKind::PengRobinson]
        .into_iter()
        .map(FluidModel::ammonia)
        .collect()
}

/// Concentrations at (T, P) with the nominal feed fractions.
fn nominal_c(fluid: &FluidModel, t: f64, p: f64) -> Vec<f64> {
    let v = fluid.molar_volume(t, p, &NOMINAL_X).unwrap();
    NOMINAL_X.iter().map(|x| x / v).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn ideal_gas_volume_is_exact() {
    let fluid = FluidModel::ammonia(EosKind::IdealGas);
    let v = fluid
        .molar_volume(300.0, 1e5, &[1.0, 0.0, 0.0, 0.0])
        .unwrap();
    assert_eq!(v, 8.314 * 300.0 / 1e5);
    assert!((v - 0.024942).abs() < 1e-12);
}

#[test]
fn srk_pure_nitrogen_low_pressure_is_ideal() {
    let fluid = FluidModel::ammonia(EosKind::Srk);
    let z = fluid
        .compressibility(600.0, 1.0, &[1.0, 0.0, 0.0, 0.0])
        .unwrap();
    assert!((z - 1.0).abs() < 1e-6);
}

#[test]
fn zero_pressure_limit_for_every_pure_component() {
    for fluid in all_models().into_iter().skip(1) {
        for i in 0..4 {
            let mut n = [0.0; 4];
            n[i] = 1.0;
            for t in [300.0, 450.0, 600.0, 750.0, 900.0] {
                let z = fluid.compressibility(t, 10.0, &n).unwrap();
                assert!(
                    (z - 1.0).abs() < 1e-5,
                    "{:?} comp {i} at {t}: {z}",
                    fluid.eos()
                );
            }
        }
    }
}

#[test]
fn srk_nitrogen_high_pressure_root_matches_bisection() {
    let fluid = FluidModel::ammonia(EosKind::Srk);
    let (t, p) = (600.0, 2e7);
    let z = fluid.compressibility(t, p, &[1.0, 0.0, 0.0, 0.0]).unwrap();

    // independent SRK evaluation for pure N2
    let (tc, pc, w) = (126.20, 33.98e5, 0.037);
    let r = 8.314;
    let m = 0.480 + 1.574 * w - 0.176 * w * w;
    let alpha = (1.0 + m * (1.0 - (t / tc as f64).sqrt())).powi(2);
    let a = 0.42748 * r * r * tc * tc / pc * alpha;
    let b = 0.08664 * r * tc / pc;
    let aa = a * p / (r * t).powi(2);
    let bb = b * p / (r * t);
    let f = |z: f64| z * z * z - z * z + (aa - bb - bb * bb) * z - aa * bb;
    let (mut lo, mut hi) = (bb, 5.0);
    // largest sign change: scan down from the top
    let steps = 100_000;
    let dz = (hi - lo) / steps as f64;
    let mut k = steps;
    while k > 0 && f(lo + (k - 1) as f64 * dz).signum() == f(lo + k as f64 * dz).signum() {
        k -= 1;
    }
    hi = lo + k as f64 * dz;
    lo = hi - dz;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == f(hi).signum() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    assert!(
        (z - 0.5 * (lo + hi)).abs() < 1e-10,
        "{z} vs {}",
        0.5 * (lo + hi)
    );
}

#[test]
fn cubic_root_satisfies_polynomial_and_exceeds_covolume() {
    let fluid = FluidModel::ammonia(EosKind::Srk);
    for t in [500.0, 700.0, 900.0] {
        for p in [1e6, 1e7, 3e7] {
            let mix = fluid.mixture(t, p, &NOMINAL_X).unwrap();
            let cm = mix.cubic.unwrap();
            let rt = GAS_CONSTANT * t;
            let z = fluid.compressibility(t, p, &NOMINAL_X).unwrap();
            let b = cm.bn * p / rt;
            let a = cm.d * p / (rt * rt);
            // SRK: Z^3 - Z^2 + (A - B - B^2) Z - A B
            let f = z * z * z - z * z + (a - b - b * b) * z - a * b;
            assert!(f.abs() < 1e-10, "{f}");
            assert!(z > b);
        }
    }
}

#[test]
fn homogeneity_of_volume_and_enthalpy() {
    let n = [0.3, 0.9, 0.2, 0.05];
    for fluid in all_models() {
        let v = fluid.molar_volume(700.0, 2e7, &n).unwrap();
        let h = fluid.enthalpy(700.0, 2e7, &n).unwrap();
        for lam in [0.5, 2.0, 10.0] {
            let ns: Vec<f64> = n.iter().map(|x| x * lam).collect();
            assert!(rel(fluid.molar_volume(700.0, 2e7, &ns).unwrap(), lam * v) < 1e-12);
            assert!(rel(fluid.enthalpy(700.0, 2e7, &ns).unwrap(), lam * h) < 1e-12);
        }
        assert_eq!(fluid.enthalpy(700.0, 2e7, &[0.0; 4]).unwrap(), 0.0);
        assert_eq!(fluid.molar_volume(700.0, 2e7, &[0.0; 4]).unwrap(), 0.0);
    }
}

#[test]
fn fluid_internal_energy_is_h_minus_pv() {
    for fluid in all_models() {
        let (t, p) = (650.0, 200e5);
        let c = nominal_c(&fluid, t, p);
        let s = ThermoState::new(t, p, c.clone());
        let u = fluid.fluid_internal_energy_density(&s).unwrap();
        let h = fluid.enthalpy(t, p, &c).unwrap();
        let v = fluid.molar_volume(t, p, &c).unwrap();
        assert!(rel(u, h - p * v) < 1e-10);
        assert!((v - 1.0).abs() < 1e-12);
        if fluid.eos() == EosKind::IdealGas {
            assert!(rel(u, h - p) < 1e-14);
        }
        let zero = ThermoState::new(t, p, vec![0.0; 4]);
        assert_eq!(fluid.fluid_internal_energy_density(&zero).unwrap(), 0.0);
    }
}

#[test]
fn volume_internal_energy_adds_solid() {
    let fluid = FluidModel::ammonia(EosKind::Srk);
    let solid = SolidProperties {
        density: 3284.0,
        heat_capacity: 1100.0,
    };
    let s = ThermoState::new(600.0, 200e5, nominal_c(&fluid, 600.0, 200e5));
    let uf = fluid.fluid_internal_energy_density(&s).unwrap();
    let u = fluid
        .volume_internal_energy_density(&s, 0.33, &solid)
        .unwrap();
    let solid_part = 0.67 * 3284.0 * 1100.0 * 600.0;
    assert!(rel(u - 0.33 * uf, solid_part) < 1e-12);
    assert_eq!(
        fluid
            .volume_internal_energy_density(&s, 1.0, &solid)
            .unwrap(),
        uf
    );
    assert_eq!(solid.internal_energy(0.0), 0.0);
}

#[test]
fn ideal_partial_molar_enthalpy_is_pure_enthalpy() {
    let fluid = FluidModel::ammonia(EosKind::IdealGas);
    for (t, p) in [(500.0, 1e6), (800.0, 3e7)] {
        let s = ThermoState::new(t, p, vec![100.0, 50.0, 10.0, 1.0]);
        let hbar = fluid.partial_molar_enthalpy(&s).unwrap();
        for (h, comp) in hbar.iter().zip(fluid.components()) {
            assert_eq!(*h, comp.ideal_enthalpy(t));
        }
    }
}

#[test]
fn euler_identity_on_grid() {
    for fluid in all_models() {
        for i in 0..5 {
            let t = 500.0 + 100.0 * i as f64;
            for j in 0..5 {
                let p = 1e6 + 7e6 * j as f64;
                for k in 0..5 {
                    // blend between the feed and an ammonia-rich mixture
                    let f = k as f64 / 4.0;
                    let rich = [0.15, 0.45, 0.36, 0.04];
                    let x: Vec<f64> = NOMINAL_X
                        .iter()
                        .zip(rich)
                        .map(|(a, b)| (1.0 - f) * a + f * b)
                        .collect();
                    let v = fluid.molar_volume(t, p, &x).unwrap();
                    let c: Vec<f64> = x.iter().map(|xi| xi / v).collect();
                    let s = ThermoState::new(t, p, c.clone());
                    let hbar = fluid.partial_molar_enthalpy(&s).unwrap();
                    let h = fluid.enthalpy(t, p, &c).unwrap();
                    let euler: f64 = hbar.iter().zip(&c).map(|(a, b)| a * b).sum();
                    assert!(
                        (euler - h).abs() / h.abs() < 1e-8,
                        "{:?} {t} {p} {f}: {euler} vs {h}",
                        fluid.eos()
                    );
                }
            }
        }
    }
}

#[test]
fn srk_partial_molar_enthalpy_matches_finite_differences() {
    for eos in [EosKind::Srk, EosKind::PengRobinson] {
        let fluid = FluidModel::ammonia(eos);
        let (t, p) = (700.0, 200e5);
        let c = nominal_c(&fluid, t, p);
        let hbar = fluid
            .partial_molar_enthalpy(&ThermoState::new(t, p, c.clone()))
            .unwrap();
        for i in 0..4 {
            let step = 1e-6 * c[i];
            let mut cp = c.clone();
            let mut cm = c.clone();
            cp[i] += step;
            cm[i] -= step;
            let fd = (fluid.enthalpy(t, p, &cp).unwrap() - fluid.enthalpy(t, p, &cm).unwrap())
                / (2.0 * step);
            assert!(rel(hbar[i], fd) < 1e-6, "{eos:?} {i}: {} vs {fd}", hbar[i]);
        }
    }
}

#[test]
fn thermo_derivatives_match_finite_differences() {
    for fluid in all_models() {
        for (t, p) in [(650.0, 200e5), (760.0, 199e5), (550.0, 250e5)] {
            let c = nominal_c(&fluid, t, p);
            let s = ThermoState::new(t, p, c.clone());
            let d = fluid.thermo_derivatives(&s).unwrap();
            let v = |t: f64, p: f64, c: &[f64]| fluid.molar_volume(t, p, c).unwrap();
            let u = |t: f64, p: f64, c: &[f64]| {
                fluid
                    .fluid_internal_energy_density(&ThermoState::new(t, p, c.to_vec()))
                    .unwrap()
            };
            let check = |an: f64, fd: f64, what: &str| {
                let scale = an.abs().max(fd.abs());
                assert!(
                    (an - fd).abs() <= 1e-6 * scale + 1e-12,
                    "{:?} {what}: {an} vs {fd}",
                    fluid.eos()
                );
            };
            let ht = 1e-4 * t;
            let hp = 1e-5 * p;
            check(
                d.dv_dt,
                (v(t + ht, p, &c) - v(t - ht, p, &c)) / (2.0 * ht),
                "dV/dT",
            );
            check(
                d.dv_dp,
                (v(t, p + hp, &c) - v(t, p - hp, &c)) / (2.0 * hp),
                "dV/dP",
            );
            check(
                d.du_dt,
                (u(t + ht, p, &c) - u(t - ht, p, &c)) / (2.0 * ht),
                "du/dT",
            );
            check(
                d.du_dp,
                (u(t, p + hp, &c) - u(t, p - hp, &c)) / (2.0 * hp),
                "du/dP",
            );
            for i in 0..4 {
                let hc = 1e-5 * c[i];
                let mut cp = c.clone();
                let mut cm = c.clone();
                cp[i] += hc;
                cm[i] -= hc;
                check(
                    d.dv_dc[i],
                    (v(t, p, &cp) - v(t, p, &cm)) / (2.0 * hc),
                    "dV/dc",
                );
                check(
                    d.du_dc[i],
                    (u(t, p, &cp) - u(t, p, &cm)) / (2.0 * hc),
                    "du/dc",
                );
            }
            assert!(d.determinant != 0.0);
            if fluid.eos() == EosKind::IdealGas {
                let ctot: f64 = c.iter().sum();
                assert!(rel(d.dv_dp, -ctot * GAS_CONSTANT * t / (p * p)) < 1e-12);
            }
        }
    }
}

#[test]
fn srk_and_pr_heat_of_reaction_agree() {
    let srk = FluidModel::ammonia(EosKind::Srk);
    let pr = FluidModel::ammonia(EosKind::PengRobinson);
    let nu = vec![vec![-1.0, -3.0, 2.0, 0.0]];
    for t in [600.0, 650.0, 700.0, 750.0, 800.0] {
        for p in [150e5, 200e5, 250e5, 300e5] {
            let a = srk
                .heat_of_reaction(&ThermoState::new(t, p, nominal_c(&srk, t, p)), &nu)
                .unwrap()[0];
            let b = pr
                .heat_of_reaction(&ThermoState::new(t, p, nominal_c(&pr, t, p)), &nu)
                .unwrap()[0];
            assert!(a < 0.0 && b < 0.0);
            assert!(rel(b, a) <= 0.02, "{t} {p}: {a} vs {b}");
        }
    }
}

#[test]
fn rejects_invalid_states() {
    let fluid = FluidModel::ammonia(EosKind::Srk);
    assert!(matches!(
        fluid.molar_volume(-1.0, 1e5, &NOMINAL_X),
        Err(ThermoError::NonPositiveTemperature(_))
    ));
    assert!(matches!(
        fluid.molar_volume(300.0, 0.0, &NOMINAL_X),
        Err(ThermoError::NonPositivePressure(_))
    ));
    assert!(matches!(
        fluid.molar_volume(300.0, 1e5, &[1.0]),
        Err(ThermoError::ComponentCount { .. })
    ));
}

#[test]
fn eos_kind_parses_labels() {
    for k in [EosKind::IdealGas, EosKind::Srk, EosKind::PengRobinson] {
        assert_eq!(k.label().parse::<EosKind>().unwrap(), k);
    }
    assert!("vdw".parse::<EosKind>().is_err());
}
