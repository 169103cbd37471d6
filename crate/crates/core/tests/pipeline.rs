//! Cross-module flows: solve -> package -> audit -> measure -> persist.

use geoind::prelude::*;

const EPS: f64 = 0.34657359027997264; // ln(2)/2

#[test]
fn value_types_are_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<LocationSet>();
    assert_send_sync::<Prior>();
    assert_send_sync::<EdgeSet>();
    assert_send_sync::<DilationResult>();
    assert_send_sync::<ConstraintSet>();
    assert_send_sync::<LinearProgram>();
    assert_send_sync::<Mechanism>();
}

#[test]
fn reduced_pipeline_survives_its_own_audit() {
    let locs = build_grid(4, 4, 1.0).unwrap();
    let prior = uniform_prior(16).unwrap();
    let edges = build_edges(&locs, 1.98).unwrap();
    let dil = dilation(&locs, &edges).unwrap();
    let cs = reduced_constraints(&locs, &edges, dil.delta(), EPS).unwrap();
    let lp = assemble(&locs, &prior, &cs).unwrap();
    let (point, report) = solve_builtin(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(report.status, SolveStatus::Optimal);

    let mech = from_solution(&point, &locs, EPS).unwrap();
    let audit = verify_privacy(&mech, &locs, EPS, 1e-7).unwrap();
    assert!(audit.satisfied, "violation {}", audit.max_log_violation);

    // The utility seen by the mechanism equals the solver objective.
    let util = utility_loss(&mech, &prior, &locs).unwrap();
    assert!((util - report.objective_value).abs() < 1e-9);

    // The certificate that makes the audit unnecessary in theory.
    let cert = implication_certificate(&locs, &dil, dil.delta(), EPS).unwrap();
    assert!(cert.holds());
}

#[test]
fn solved_mechanism_beats_uniform_and_loses_to_identity() {
    let locs = build_grid(3, 3, 1.0).unwrap();
    let prior = uniform_prior(9).unwrap();
    let cs = exact_constraints(&locs, EPS).unwrap();
    let lp = assemble(&locs, &prior, &cs).unwrap();
    let (point, report) = solve_builtin(&lp, &SolveOptions::default()).unwrap();
    let mech = from_solution(&point, &locs, EPS).unwrap();

    let solved = utility_loss(&mech, &prior, &locs).unwrap();
    let uniform = utility_loss(&uniform_mechanism(&locs, EPS), &prior, &locs).unwrap();
    let identity = utility_loss(&identity_mechanism(&locs, EPS), &prior, &locs).unwrap();
    assert!(identity <= solved && solved <= uniform);
    assert!((solved - report.objective_value).abs() < 1e-9);
}

#[test]
fn mechanism_persistence_at_paper_scale_is_instant() {
    // Building a mechanism is the expensive one-time step; loading and
    // using a stored one must be immediate even at 225 locations.
    let dir = tempfile::tempdir().unwrap();
    let locs = build_grid(15, 15, 1.0).unwrap();
    let mech = uniform_mechanism(&locs, EPS);
    let path = dir.path().join("m225.json");
    save_mechanism(&mech, &path).unwrap();

    let start = std::time::Instant::now();
    let loaded = load_mechanism(&path).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(loaded.n(), 225);
    assert!(elapsed < 1.0, "load took {elapsed}s");

    let draws = sample(&loaded, 100, 7, 10).unwrap();
    assert_eq!(draws.len(), 10);
}

#[test]
fn optimal_objective_is_invariant_under_grid_symmetry() {
    // Relabeling a square grid by a 90-degree rotation permutes the
    // locations but not the geometry; with a uniform prior the optimal
    // objective cannot change. The mechanism matrix itself may.
    let k = 3usize;
    let original = build_grid(k, k, 1.0).unwrap();
    let rot = |i: usize| {
        let (r, c) = (i / k, i % k);
        c * k + (k - 1 - r)
    };
    let mut points = vec![None; k * k];
    for i in 0..k * k {
        let (x, y) = original.coords(i);
        points[rot(i)] = Some((original.id(i).to_string(), x, y));
    }
    let rotated = LocationSet::new(points.into_iter().map(Option::unwrap).collect()).unwrap();

    let prior = uniform_prior(k * k).unwrap();
    let solve = |locs: &LocationSet| {
        let cs = exact_constraints(locs, EPS).unwrap();
        let lp = assemble(locs, &prior, &cs).unwrap();
        solve_builtin(&lp, &SolveOptions::default()).unwrap().1.objective_value
    };
    let a = solve(&original);
    let b = solve(&rotated);
    assert!((a - b).abs() <= 1e-7, "objective changed under rotation: {a} vs {b}");
}

#[test]
fn prior_with_extra_ids_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let locs = build_grid(1, 2, 1.0).unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(&path, "id,prob\n0_0,0.5\n0_1,0.4\nghost,0.1\n").unwrap();
    match load_prior(&path, &locs) {
        Err(geoind::Error::PriorExtraIds(ids)) => assert_eq!(ids, vec!["ghost".to_string()]),
        other => panic!("expected PriorExtraIds, got {other:?}"),
    }
}

#[test]
fn point_prior_admits_a_lossless_constant_channel() {
    // With all prior mass on one location, always reporting that location
    // is a constant channel: perfectly private (reports carry no
    // information) and lossless under this prior.
    let locs = build_grid(1, 2, 1.0).unwrap();
    let prior = Prior::new(vec![1.0, 0.0]).unwrap();
    let cs = exact_constraints(&locs, 2f64.ln()).unwrap();
    let lp = assemble(&locs, &prior, &cs).unwrap();
    let (point, report) = solve_builtin(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(report.status, SolveStatus::Optimal);
    assert!(report.objective_value.abs() < 1e-12);
    let mech = from_solution(&point, &locs, 2f64.ln()).unwrap();
    assert!(verify_privacy(&mech, &locs, 2f64.ln(), 1e-9).unwrap().satisfied);
    assert_eq!(utility_loss(&mech, &prior, &locs).unwrap(), 0.0);
}

#[test]
fn nonuniform_prior_shifts_the_mechanism() {
    // Weight one location heavily; its row should hug the true location
    // more than under the uniform prior.
    let dir = tempfile::tempdir().unwrap();
    let locs = build_grid(1, 3, 1.0).unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(&path, "id,prob\n0_0,0.8\n0_1,0.1\n0_2,0.1\n").unwrap();
    let skewed = load_prior(&path, &locs).unwrap();
    let cs = exact_constraints(&locs, EPS).unwrap();

    let solve = |prior: &Prior| {
        let lp = assemble(&locs, prior, &cs).unwrap();
        let (point, _) = solve_builtin(&lp, &SolveOptions::default()).unwrap();
        from_solution(&point, &locs, EPS).unwrap()
    };
    let m_uniform = solve(&uniform_prior(3).unwrap());
    let m_skewed = solve(&skewed);
    assert!(m_skewed.prob(0, 0) >= m_uniform.prob(0, 0) - 1e-9);

    let u_s = utility_loss(&m_skewed, &skewed, &locs).unwrap();
    let u_u = utility_loss(&m_uniform, &skewed, &locs).unwrap();
    assert!(u_s <= u_u + 1e-9, "skew-optimal {u_s} vs uniform-optimal {u_u}");
}
