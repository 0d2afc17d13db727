use super::*;

type F = Box<dyn Fn(&[f64], f64) -> Vec<f64>>;
type J = Box<dyn Fn(&[f64], f64) -> Vec<Vec<f64>>>;

/// Dense test problem stored in a full band.
struct Dense {
    n: usize,
    f: F,
    j: J,
}

impl System for Dense {
    fn dim(&self) -> usize {
        self.n
    }

    fn residual(&self, w: &[f64], p: f64, out: &mut [f64]) -> Result<(), EvalError> {
        out.copy_from_slice(&(self.f)(w, p));
        Ok(())
    }

    fn jacobian(&self, w: &[f64], p: f64) -> Result<BandMatrix, EvalError> {
        let d = (self.j)(w, p);
        let k = self.n.saturating_sub(1);
        let mut m = BandMatrix::zeros(self.n, k, k);
        for (i, row) in d.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        Ok(m)
    }
}

fn tight() -> NewtonOptions {
    NewtonOptions {
        tol: 1e-12,
        ..NewtonOptions::default()
    }
}

#[test]
fn newton_solves_affine_map_in_one_step() {
    let a = vec![
        vec![4.0, 1.0, 0.0],
        vec![1.0, 3.0, -1.0],
        vec![0.5, 0.0, 2.0],
    ];
    let b = vec![1.0, -2.0, 0.5];
    let (a1, b1) = (a.clone(), b.clone());
    let sys = Dense {
        n: 3,
        f: Box::new(move |w, _| {
            (0..3)
                .map(|i| (0..3).map(|j| a1[i][j] * w[j]).sum::<f64>() - b1[i])
                .collect()
        }),
        j: Box::new(move |_, _| a.clone()),
    };
    let (w, rep) = newton_solve(&sys, &[0.0; 3], 0.0, &tight(), None).unwrap();
    assert_eq!(rep.iterations, 1);
    assert_eq!(rep.steps, vec![1.0]);
    let f = sys.residual_vec(&w, 0.0).unwrap();
    assert!(inf_norm(&f) < 1e-12);
    assert_eq!(b.len(), 3);
}

fn square_minus_four() -> Dense {
    Dense {
        n: 1,
        f: Box::new(|w, _| vec![w[0] * w[0] - 4.0]),
        j: Box::new(|w, _| vec![vec![2.0 * w[0]]]),
    }
}

#[test]
fn newton_finds_square_root_with_quadratic_tail() {
    let (w, rep) = newton_solve(&square_minus_four(), &[1.0], 0.0, &tight(), None).unwrap();
    assert!((w[0] - 2.0).abs() < 1e-12);
    assert!(rep.iterations <= 8, "{rep:?}");
    // hand-iterated Newton: 1 -> 2.5 -> 2.05 -> 2.000609...
    let mut x = 1.0f64;
    for _ in 0..3 {
        x -= (x * x - 4.0) / (2.0 * x);
    }
    assert!((x - 2.000_609_756_097_561).abs() < 1e-12);
    let r = &rep.residuals;
    let tail: Vec<f64> = r.iter().cloned().filter(|&v| v < 1e-3 && v > 0.0).collect();
    for pair in tail.windows(2) {
        assert!(pair[1] <= 1.0 * pair[0] * pair[0], "{r:?}");
    }
}

#[test]
fn newton_reports_failure_with_log() {
    let sys = Dense {
        n: 1,
        f: Box::new(|w, _| vec![w[0] * w[0] + 1.0]),
        j: Box::new(|w, _| vec![vec![2.0 * w[0]]]),
    };
    match newton_solve(&sys, &[0.5], 0.0, &tight(), None) {
        Err(SolverError::LineSearch { log, .. }) | Err(SolverError::MaxIterations { log, .. }) => {
            assert!(!log.is_empty())
        }
        other => panic!("expected failure, got {other:?}"),
    }
    assert!(newton_solve(
        &sys,
        &[0.5],
        0.0,
        &NewtonOptions {
            armijo: 0.7,
            ..tight()
        },
        None
    )
    .is_err());
}

fn circle() -> Dense {
    Dense {
        n: 1,
        f: Box::new(|w, p| vec![w[0] * w[0] + p * p - 1.0]),
        j: Box::new(|w, _| vec![vec![2.0 * w[0]]]),
    }
}

#[test]
fn continuation_traces_the_circle_through_both_turning_points() {
    let opts = ContinuationOptions {
        ds0: 0.05,
        ds_min: 1e-8,
        ds_max: 0.1,
        p_min: -2.0,
        p_max: 2.0,
        max_points: 500,
        newton: NewtonOptions {
            tol: 1e-10,
            ..NewtonOptions::default()
        },
        ..ContinuationOptions::default()
    };
    let branch = plac_trace(&circle(), &[0.0], 1.0, &opts, &[1.0], None).unwrap();
    assert_eq!(branch.stop, StopReason::Closed);
    let sys = circle();
    for pt in &branch.points {
        let r = sys.residual_vec(&pt.w, pt.p).unwrap()[0];
        assert!(r.abs() < 1e-8, "off curve by {r}");
    }
    for pair in branch.points.windows(2) {
        let d = ((pair[1].w[0] - pair[0].w[0]).powi(2) + (pair[1].p - pair[0].p).powi(2)).sqrt();
        assert!(d <= 0.1 + 1e-9);
    }
    let p_min = branch
        .points
        .iter()
        .map(|p| p.p)
        .fold(f64::INFINITY, f64::min);
    assert!(p_min < -0.99);
    // visits both halves
    assert!(branch.points.iter().any(|p| p.w[0] > 0.99));
    assert!(branch.points.iter().any(|p| p.w[0] < -0.99));
    let tps = turning_points(&branch, &[1.0], 1.0);
    assert!(!tps.is_empty());
    assert!(tps.iter().any(|&(_, p)| (p + 1.0).abs() < 1e-3), "{tps:?}");
}

#[test]
fn continuation_follows_a_line() {
    let sys = Dense {
        n: 1,
        f: Box::new(|w, p| vec![w[0] - p]),
        j: Box::new(|_, _| vec![vec![1.0]]),
    };
    let opts = ContinuationOptions {
        ds0: 0.01,
        ds_max: 0.2,
        p_min: 0.0,
        p_max: 3.0,
        newton: tight(),
        ..ContinuationOptions::default()
    };
    let branch = plac_trace(&sys, &[0.0], 0.0, &opts, &[1.0], None).unwrap();
    assert_eq!(branch.stop, StopReason::LeftRange);
    assert!(branch.points.last().unwrap().p > 2.7);
    for pair in branch.points.windows(2) {
        let (dw, dp) = (pair[1].w[0] - pair[0].w[0], pair[1].p - pair[0].p);
        assert!((dw - dp).abs() < 1e-12 && dp > 0.0);
    }
    assert!(branch.points.iter().all(|p| !p.turning));
}

#[test]
fn continuation_rejects_unconverged_seed() {
    let r = plac_trace(
        &circle(),
        &[0.5],
        0.5,
        &ContinuationOptions::default(),
        &[1.0],
        None,
    );
    assert!(matches!(r, Err(SolverError::SeedNotConverged(_))));
}

fn decay() -> Dense {
    Dense {
        n: 1,
        f: Box::new(|w, _| vec![-w[0]]),
        j: Box::new(|_, _| vec![vec![-1.0]]),
    }
}

#[test]
fn tableau_is_consistent() {
    let tab = TableauSpec::esdirk32();
    tab.validate().unwrap();
    let g = tab.gamma();
    assert!((6.0 * g.powi(3) - 18.0 * g * g + 9.0 * g - 1.0).abs() < 1e-14);
    // order conditions for b (order 3) and b_hat (order 2)
    let c = &tab.c;
    let sum = |w: &[f64], f: &dyn Fn(usize) -> f64| (0..4).map(|i| w[i] * f(i)).sum::<f64>();
    assert!((sum(&tab.b, &|_| 1.0) - 1.0).abs() < 1e-14);
    assert!((sum(&tab.b, &|i| c[i]) - 0.5).abs() < 1e-14);
    assert!((sum(&tab.b, &|i| c[i] * c[i]) - 1.0 / 3.0).abs() < 1e-14);
    let ac = |i: usize| (0..4).map(|j| tab.a[i][j] * c[j]).sum::<f64>();
    assert!((sum(&tab.b, &ac) - 1.0 / 6.0).abs() < 1e-14);
    assert!((sum(&tab.b_hat, &|_| 1.0) - 1.0).abs() < 1e-14);
    assert!((sum(&tab.b_hat, &|i| c[i]) - 0.5).abs() < 1e-14);
    let mut bad = tab.clone();
    bad.b[0] += 0.1;
    assert!(bad.validate().is_err());
}

#[test]
fn esdirk_order_on_linear_decay() {
    let tab = TableauSpec::esdirk32();
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| {
            let opts = IntegrationOptions {
                fixed_step: Some(h),
                newton_tol: 1e-6,
                ..IntegrationOptions::default()
            };
            let tr = esdirk_integrate(
                &decay(),
                &[1.0],
                &[1.0],
                &|_| 0.0,
                (0.0, 1.0),
                &tab,
                &opts,
                &[1.0],
            )
            .unwrap();
            (tr.w.last().unwrap()[0] - (-1.0f64).exp()).abs()
        })
        .collect();
    for pair in errs.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!((order - 3.0).abs() < 0.2, "order {order} from {errs:?}");
    }
}

#[test]
fn esdirk_adaptive_tracks_decay() {
    let tab = TableauSpec::esdirk32();
    let opts = IntegrationOptions {
        atol: 1e-8,
        rtol: 1e-8,
        newton_tol: 1e-6,
        ..IntegrationOptions::default()
    };
    let tr = esdirk_integrate(
        &decay(),
        &[1.0],
        &[1.0],
        &|_| 0.0,
        (0.0, 5.0),
        &tab,
        &opts,
        &[1.0],
    )
    .unwrap();
    for (t, w) in tr.t.iter().zip(&tr.w) {
        assert!((w[0] - (-t).exp()).abs() < 1e-6);
    }
    assert_eq!(*tr.t.last().unwrap(), 5.0);
    assert!(tr.accepted > 5);
}

#[test]
fn esdirk_keeps_constant_solution() {
    let sys = Dense {
        n: 2,
        f: Box::new(|_, _| vec![0.0, 0.0]),
        j: Box::new(|_, _| vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
    };
    let tab = TableauSpec::esdirk32();
    for opts in [
        IntegrationOptions::default(),
        IntegrationOptions {
            fixed_step: Some(0.37),
            ..IntegrationOptions::default()
        },
    ] {
        let tr = esdirk_integrate(
            &sys,
            &[1.0, 1.0],
            &[3.5, -1.25],
            &|_| 0.0,
            (0.0, 10.0),
            &tab,
            &opts,
            &[1.0, 1.0],
        )
        .unwrap();
        for w in &tr.w {
            assert_eq!(w, &vec![3.5, -1.25]);
        }
    }
    let drift = steady_vs_dynamic_check(
        &sys,
        &[1.0, 1.0],
        &[3.5, -1.25],
        0.0,
        10.0,
        &tab,
        &IntegrationOptions::default(),
        &[1.0, 1.0],
    )
    .unwrap();
    assert_eq!(drift, 0.0);
}

/// `x' = -x + p(t)`, `0 = y - x^2`.
fn index_one() -> Dense {
    Dense {
        n: 2,
        f: Box::new(|w, p| vec![-w[0] + p, w[1] - w[0] * w[0]]),
        j: Box::new(|w, _| vec![vec![-1.0, 0.0], vec![-2.0 * w[0], 1.0]]),
    }
}

#[test]
fn esdirk_satisfies_algebraic_rows_and_initializes() {
    let tab = TableauSpec::esdirk32();
    let opts = IntegrationOptions {
        atol: 1e-7,
        rtol: 1e-7,
        ..IntegrationOptions::default()
    };
    let mass = [1.0, 0.0];
    // inconsistent y is repaired before the first step
    let tr = esdirk_integrate(
        &index_one(),
        &mass,
        &[1.0, 7.0],
        &|t| if t > 0.0 { 0.5 } else { 0.0 },
        (0.0, 4.0),
        &tab,
        &opts,
        &[1.0, 1.0],
    )
    .unwrap();
    assert!((tr.w[0][1] - 1.0).abs() < 1e-10);
    for (t, w) in tr.t.iter().zip(&tr.w) {
        assert!((w[1] - w[0] * w[0]).abs() < 1e-8);
        if *t > 0.0 {
            let exact = 0.5 + 0.5 * (-t).exp();
            assert!((w[0] - exact).abs() < 1e-4, "t={t}: {} vs {exact}", w[0]);
        }
    }
    let w = consistent_initialization(&index_one(), &mass, &[2.0, 0.0], 0.0, &[1.0, 1.0], 1e-12)
        .unwrap();
    assert_eq!(w[0], 2.0);
    assert!((w[1] - 4.0).abs() < 1e-12);
}

#[test]
fn row_scales_equilibrate() {
    let mut m = BandMatrix::zeros(2, 1, 1);
    m.set(0, 0, 4.0);
    m.set(0, 1, -8.0);
    m.set(1, 1, 0.5);
    let r = row_scales(&m, &[1.0, 0.5]);
    assert_eq!(r, vec![0.25, 4.0]);
}
