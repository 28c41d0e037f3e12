use polyhier::*;
use proptest::prelude::*;

fn instance_json(text: &str) -> PopInstanceF64 {
    parse_instance(text).unwrap()
}

const BALL: &str = r#"{ "n": 2,
  "objective": [ {"coef": -1.0, "expo": [1, 0]}, {"coef": -1.0, "expo": [0, 1]} ],
  "constraints": [ { "terms": [ {"coef": 1.0, "expo": [0, 0]},
                                {"coef": -1.0, "expo": [2, 0]},
                                {"coef": -1.0, "expo": [0, 2]} ] } ] }"#;

#[test]
fn f32_path_matches_f64() {
    let a: PopInstanceF64 = instance_json(BALL);
    let b: PopInstanceF32 = parse_instance(BALL).unwrap();
    let cfg = DriverConfig::default();
    let ra = solve(&a, &cfg).unwrap();
    let rb = solve(&b, &cfg).unwrap();
    assert!(ra.status.is_success() && rb.status.is_success());
    assert!((ra.lower_bound - rb.lower_bound).abs() < 1e-2, "{} vs {}", ra.lower_bound, rb.lower_bound);
}

#[test]
fn trace_accounts_for_every_iteration() {
    let inst = instance_json(BALL);
    let out = solve_detailed(&inst, &DriverConfig::default()).unwrap();
    assert_eq!(out.trace.len(), out.report.iterations_total);
    let per_level: usize = out
        .report
        .levels
        .iter()
        .map(|l| l.admm_iterations.iter().sum::<usize>())
        .sum();
    assert_eq!(per_level, out.report.iterations_total);
    for l in &out.report.levels {
        assert_eq!(l.s_history.len(), l.q_iterations);
        assert_eq!(*l.s_history.last().unwrap(), 0);
        assert!(l.blocks_active <= l.blocks_total);
    }
}

#[test]
fn jacobi_and_unscaled_variants_agree() {
    let inst = instance_json(BALL);
    let base = solve(&inst, &DriverConfig::default()).unwrap().lower_bound;
    for (mode, z) in [
        (CoordMode::Jacobi, ZUpdate::Scaled),
        (CoordMode::GaussSeidel, ZUpdate::Unscaled),
    ] {
        let mut cfg = DriverConfig::default();
        cfg.solver.coord_mode = mode;
        cfg.solver.z_update = z;
        cfg.solver.max_outer = 50_000;
        let r = solve(&inst, &cfg).unwrap();
        assert!((r.lower_bound - base).abs() < 2e-2, "{mode:?}/{z:?}: {}", r.lower_bound);
    }
    let mut cfg = DriverConfig::default();
    cfg.solver.coord_mode = CoordMode::Jacobi;
    cfg.solver.parallel = true;
    cfg.solver.max_outer = 50_000;
    let serial = {
        let mut c = cfg.clone();
        c.solver.parallel = false;
        solve(&inst, &c).unwrap()
    };
    let par = solve(&inst, &cfg).unwrap();
    assert_eq!(serial.lower_bound, par.lower_bound);
}

#[test]
fn moment_only_start_recovers() {
    let inst = instance_json(BALL);
    let cfg = DriverConfig {
        start: StartMode::MomentOnly,
        ..DriverConfig::default()
    };
    let r = solve(&inst, &cfg).unwrap();
    assert!(r.status.is_success(), "{:?}", r.status);
    assert!((r.lower_bound + 2f64.sqrt()).abs() < 1e-2);
    assert!(r.levels[0].added_blocks.iter().any(|b| b.starts_with("localizing1")));
}

#[test]
fn unconstrained_quartic() {
    // (x^2 - 1)^2 has minimum 0 at x = +-1
    let inst = instance_json(
        r#"{ "n": 1, "objective": [ {"coef": 1.0, "expo": [4]}, {"coef": -2.0, "expo": [2]},
             {"coef": 1.0, "expo": [0]} ] }"#,
    );
    let r = solve(&inst, &DriverConfig::default()).unwrap();
    assert!(r.lower_bound.abs() < 1e-2, "{}", r.lower_bound);
    assert!(r.violations.as_ref().is_none_or(|v| v.is_empty()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // min (x - a)^2 over [-1, 1]: optimum is the distance to the interval, squared
    #[test]
    fn box_projection_bounds(a in -2.0f64..2.0) {
        let inst = PopInstance::new(
            1,
            Polynomial::from_terms(1, [(1.0, vec![2]), (-2.0 * a, vec![1]), (a * a, vec![0])]).unwrap(),
        )
        .unwrap()
        .with_constraint(None, Polynomial::from_terms(1, [(1.0, vec![0]), (-1.0, vec![2])]).unwrap())
        .unwrap();
        let mut cfg = DriverConfig::default();
        cfg.solver.tol_admm = 1e-5;
        cfg.solver.tol_coord = 1e-6;
        cfg.solver.max_outer = 100_000;
        let r = solve(&inst, &cfg).unwrap();
        let want = (a.abs() - 1.0).max(0.0).powi(2);
        prop_assert!(r.lower_bound <= want + 1e-3, "a={a} bound={} want={want}", r.lower_bound);
        prop_assert!(r.lower_bound >= want - 1e-3, "a={a} bound={} want={want}", r.lower_bound);
    }
}
