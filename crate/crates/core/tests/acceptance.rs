//! Acceptance suite: every criterion gets one pass/fail line on stdout and a
//! hard assertion at its stated tolerance. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use arcopt::arc::{arc_run, ArcParams};
use arcopt::linalg::{fdot, sigma_min};
use arcopt::manifolds::{
    dretract_matrix, gaussian_matrix, AffineSubspace, Euclidean, Grassmann, Manifold, Oblique,
    Point, ProductManifold, Rotations, Sphere, Stiefel, Tangent,
};
use arcopt::model::CubicModel;
use arcopt::problems::{
    alignment_error, held_out_rmse, make_invariant_subspace, make_matrix_completion, make_maxcut,
    make_rotation_sync, make_shapefit, make_truncated_svd, random_graph, solve_shapefit_direct,
    GroundTruth, Instance,
};
use arcopt::subsolver::{solve_lanczos, solve_nlcg, StopReason};
use arcopt::trace::{Termination, Trace};
use arcopt::verify::{check_grad_taylor_a4, check_taylor_a2, check_trace};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pass(criterion: &str, detail: &str) {
    println!("acceptance {criterion}: PASS ({detail})");
}

fn t_grid() -> Vec<f64> {
    (0..9).map(|i| 1e-3 * 10f64.powf(i as f64 / 4.0)).collect()
}

/// Run the cubic-regularized solver on an instance and apply the per-trace
/// inequality checks (criterion 3) with a Taylor-study constant folded in.
fn run_and_check(inst: &Instance, seed: u64, label: &str) -> (Point, Trace) {
    let m = inst.manifold.as_ref();
    let x0 = match &inst.x0 {
        Some(p) => p.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
            m.rand_point(&mut rng)
        }
    };
    let p = ArcParams {
        seed,
        max_iters: 3000,
        ..ArcParams::default()
    };
    let (x, trace) = arc_run(m, &inst.problem, &x0, &p).expect("solver run failed");

    // Criterion 3: trace inequalities with an empirical Taylor constant.
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let mut l_est: f64 = 0.0;
    for _ in 0..3 {
        let xs = m.rand_point(&mut rng);
        let s = m.rand_tangent(&xs, &mut rng);
        l_est = l_est.max(check_taylor_a2(m, &inst.problem, &xs, &s, &t_grid()).constant_est);
    }
    let chk = check_trace(&trace, &p, Some(l_est));
    assert!(
        chk.sumcubes_pass,
        "{label}: sum-of-cubes {} > {}",
        chk.sumcubes_lhs, chk.sumcubes_rhs
    );
    assert!(chk.sigma_floor_pass, "{label}: sigma fell below sigma_min");
    assert!(
        chk.counting_pass,
        "{label}: counting {} > {}",
        chk.counting_lhs, chk.counting_rhs
    );
    assert_eq!(chk.descent_violations, 0, "{label}: descent violated");
    assert!(chk.sigma_cap_pass, "{label}: sigma cap violated");

    // Diagnostic bound: the number of successful iterations still seeing a
    // gradient above the tolerance never exceeds the first-order budget
    // computed from the empirical constants.
    let mut rng2 = ChaCha8Rng::seed_from_u64(seed + 2);
    let mut l_prime: f64 = 0.0;
    for _ in 0..3 {
        let xs = m.rand_point(&mut rng2);
        let s = m.rand_tangent(&xs, &mut rng2);
        l_prime =
            l_prime.max(check_grad_taylor_a4(m, &inst.problem, &xs, &s, &t_grid()).constant_est);
    }
    let k1 = arcopt::arc::k1_bound(
        trace.f0,
        trace.f_final,
        &p,
        l_prime,
        chk.sigma_max_est,
    );
    let mut measured = 0usize;
    for (i, r) in trace.records.iter().enumerate() {
        if r.accepted {
            let next_grad = trace
                .records
                .get(i + 1)
                .map(|n| n.grad_norm)
                .unwrap_or(0.0);
            if next_grad > p.grad_tol {
                measured += 1;
            }
        }
    }
    assert!(
        (measured as f64) <= k1,
        "{label}: measured successful-above-tolerance count {measured} exceeds K1 = {k1}"
    );

    pass("criterion 3", &format!("{label} trace inequalities"));
    (x, trace)
}

#[test]
fn criterion_1_invariant_subspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let inst = make_invariant_subspace(128, 3, &mut rng);
    let (_, trace) = run_and_check(&inst, 11, "invariant-subspace");
    let GroundTruth::OptimalCost(f_star) = inst.truth else {
        unreachable!()
    };
    let err = (trace.f_final - f_star).abs();
    assert!(
        err <= 1e-7 * (1.0 + trace.f_final.abs()),
        "cost error {err} vs oracle {f_star}"
    );
    pass(
        "criterion 1",
        &format!("invariant subspace vs eigendecomposition, error {err:.2e}"),
    );
}

#[test]
fn criterion_1_truncated_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let inst = make_truncated_svd(60, 50, 3, &mut rng);
    let (_, trace) = run_and_check(&inst, 12, "truncated-svd");
    let GroundTruth::OptimalCost(f_star) = inst.truth else {
        unreachable!()
    };
    let err = (trace.f_final - f_star).abs();
    assert!(err <= 1e-7, "cost error {err} vs oracle {f_star}");
    pass(
        "criterion 1",
        &format!("truncated SVD vs dense SVD, error {err:.2e}"),
    );
}

#[test]
fn criterion_1_matrix_completion() {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let inst = make_matrix_completion(100, 100, 5, 4.0, &mut rng).unwrap();
    let (x, _) = run_and_check(&inst, 13, "matrix-completion");
    let rmse = held_out_rmse(&inst, &x);
    assert!(rmse <= 1e-6, "held-out RMSE {rmse}");
    pass(
        "criterion 1",
        &format!("matrix completion held-out RMSE {rmse:.2e}"),
    );
}

#[test]
fn criterion_1_rotation_sync() {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let inst = make_rotation_sync(20, 3, 0.5, 0.0, &mut rng).unwrap();
    let (x, _) = run_and_check(&inst, 14, "rotation-sync");
    let err = alignment_error(&inst, &x);
    assert!(err <= 1e-6, "alignment error {err}");
    pass(
        "criterion 1",
        &format!("rotation sync alignment error {err:.2e}"),
    );
}

#[test]
fn criterion_1_shapefit() {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let inst = make_shapefit(50, 3, 0.5, &mut rng).unwrap();
    let (x, _) = run_and_check(&inst, 15, "shapefit");
    let direct = solve_shapefit_direct(&inst);
    let err = (&x.0 - &direct.0).amax();
    assert!(err <= 1e-6, "max point error {err} vs direct least squares");
    pass(
        "criterion 1",
        &format!("shapefit vs direct least squares, max point error {err:.2e}"),
    );
}

#[test]
fn criterion_1_and_7_maxcut() {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let graph = random_graph(200, 0.05, &mut rng);
    let inst = make_maxcut(&graph, arcopt::problems::default_rank(200));
    let (x, trace) = run_and_check(&inst, 16, "maxcut");

    assert_eq!(trace.termination, Termination::GradTol);
    let final_grad = trace.records.last().unwrap().grad_norm;
    assert!(final_grad <= 1e-9, "final gradient {final_grad}");

    let f_final = inst.problem.cost(&x);
    let mut best_random = f64::INFINITY;
    for _ in 0..100 {
        let xr = inst.manifold.rand_point(&mut rng);
        best_random = best_random.min(inst.problem.cost(&xr));
    }
    assert!(
        f_final <= best_random,
        "final cost {f_final} vs best of 100 random points {best_random}"
    );
    pass(
        "criterion 1",
        &format!("maxcut terminated grad-tol at {final_grad:.2e}, cost below random baseline"),
    );

    // Criterion 7 (informational, not asserted): iterations to reach each
    // gradient level, against the 30 * ratio^1.5 growth guide.
    let iters_to = |eps: f64| -> Option<usize> {
        trace.records.iter().find(|r| r.grad_norm <= eps).map(|r| r.k)
    };
    let levels = [1e-3, 1e-5, 1e-7];
    let counts: Vec<Option<usize>> = levels.iter().map(|&e| iters_to(e)).collect();
    println!(
        "acceptance criterion 7 (informational): maxcut iterations to eps {:?} = {:?}; \
         consecutive growth guide 30*(1e2)^1.5 = {}",
        levels,
        counts,
        30.0 * 1e2f64.powf(1.5)
    );
    for w in counts.windows(2) {
        if let (Some(a), Some(b)) = (w[0], w[1]) {
            let guide = 30.0 * 1e2f64.powf(1.5);
            println!(
                "acceptance criterion 7: delta iterations {} (guide {guide}) - reported, not asserted",
                b.saturating_sub(a)
            );
        }
    }
}

#[test]
fn criterion_2_subsolver_guarantees() {
    // Independent dense global-minimizer oracle: eigendecomposition plus
    // bisection on the full secular equation, hard case included.
    fn dense_oracle_value(g: &DVector<f64>, h: &DMatrix<f64>, sigma: f64) -> f64 {
        let sym = 0.5 * (h + h.transpose());
        let eig = sym.clone().symmetric_eigen();
        let n = g.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let evals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            vecs.set_column(col, &eig.eigenvectors.column(i).into_owned());
        }
        let c = vecs.transpose() * (-g);
        let floor = (-evals[0]).max(0.0);
        let norm_at = |lam: f64| -> f64 {
            (0..n)
                .map(|i| {
                    let d = evals[i] + lam;
                    if d > 0.0 { (c[i] / d).powi(2) } else { 0.0 }
                })
                .sum::<f64>()
                .sqrt()
        };
        let eps = 1e-13 * (1.0 + floor);
        let mut y = DVector::zeros(n);
        if floor > 0.0 && sigma * norm_at(floor + eps) <= floor {
            let lam = floor;
            for i in 0..n {
                let d = evals[i] + lam;
                if d > eps {
                    y[i] = c[i] / d;
                }
            }
            let tau = ((lam / sigma).powi(2) - y.norm_squared()).max(0.0).sqrt();
            y[0] += tau;
        } else {
            let mut lo = floor + eps;
            let mut hi = floor + 1.0;
            while sigma * norm_at(hi) > hi {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sigma * norm_at(mid) > mid {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let lam = 0.5 * (lo + hi);
            for i in 0..n {
                y[i] = c[i] / (evals[i] + lam);
            }
        }
        let s = &vecs * y;
        g.dot(&s) + 0.5 * (&sym * &s).dot(&s) + sigma / 3.0 * s.norm().powi(3)
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let mut lanczos_checked = 0;
    let mut nlcg_checked = 0;
    for trial in 0..200 {
        let dim = rng.gen_range(2..=50);
        let gm = gaussian_matrix(dim, dim, &mut rng);
        let h = 0.5 * (&gm + gm.transpose()); // indefinite in general
        let eu = Euclidean::vector(dim);
        let base = Point(DMatrix::zeros(dim, 1));
        let g = gaussian_matrix(dim, 1, &mut rng) * 10f64.powf(rng.gen_range(-2.0..1.0));
        let sigma = 10f64.powf(rng.gen_range(-3.0..1.0));
        let theta = if trial % 2 == 0 { 0.25 } else { 2.0 };

        for solver in ["lanczos", "nlcg"] {
            let model = CubicModel::dense(&eu, &base, g.clone(), &h, sigma).unwrap();
            let res = match solver {
                "lanczos" => solve_lanczos(&model, theta, 500, false, &mut rng).unwrap(),
                _ => solve_nlcg(&model, theta, 500).unwrap(),
            };
            if res.reason == StopReason::MaxInner {
                continue;
            }
            let ns = res.step.norm();
            let direct_val = model.value(&res.step);
            assert!(
                direct_val <= model.f0 + 1e-10 * (1.0 + model.f0.abs()),
                "{solver} trial {trial}: m(s) = {direct_val} above m(0)"
            );
            let direct_grad = model.norm(&model.gradient(&res.step));
            assert!(
                direct_grad <= theta * ns * ns + 1e-8 * (1.0 + direct_grad),
                "{solver} trial {trial}: ||grad m|| = {direct_grad} vs theta ||s||^2 = {}",
                theta * ns * ns
            );
            if solver == "lanczos" {
                lanczos_checked += 1;
            } else {
                nlcg_checked += 1;
            }
        }
    }
    assert!(lanczos_checked >= 190 && nlcg_checked >= 150);

    // Full-dimension equivalence with the dense oracle on dims <= 4.
    for _ in 0..40 {
        let dim = rng.gen_range(2..=4);
        let gm = gaussian_matrix(dim, dim, &mut rng);
        let h = 0.5 * (&gm + gm.transpose());
        let eu = Euclidean::vector(dim);
        let base = Point(DMatrix::zeros(dim, 1));
        let g = gaussian_matrix(dim, 1, &mut rng);
        let sigma = 0.1 + rng.gen::<f64>();
        let model = CubicModel::dense(&eu, &base, g.clone(), &h, sigma).unwrap();
        let res = solve_lanczos(&model, 0.0, 500, false, &mut rng).unwrap();
        assert_eq!(res.reason, StopReason::FullDimension);
        let oracle = dense_oracle_value(&DVector::from_column_slice(g.as_slice()), &h, sigma);
        assert!(
            (res.model_value - oracle).abs() <= 1e-6,
            "model value {} vs oracle {oracle}",
            res.model_value
        );
    }
    pass(
        "criterion 2",
        &format!(
            "progress conditions on {lanczos_checked} Lanczos / {nlcg_checked} NLCG solves, \
             full-dimension matches the dense oracle"
        ),
    );
}

#[test]
fn criterion_4_dretract_sigma_min() {
    let mut rng = ChaCha8Rng::seed_from_u64(4000);

    // Sphere equality at the stated step norms, within 1e-8.
    let sp = Sphere::new(30);
    for &a in &[0.1, 1.0, 2.0, 10.0] {
        let x = sp.rand_point(&mut rng);
        let s = Tangent(a * sp.rand_tangent(&x, &mut rng).0);
        let smin = sigma_min(&dretract_matrix(&sp, &x, &s).unwrap());
        let expected = 1.0 / (1.0 + a * a);
        assert!(
            (smin - expected).abs() <= 1e-8,
            "sphere ||s|| = {a}: sigma_min {smin} vs {expected}"
        );
    }

    // Stiefel lower bound over 1000 random (X, S) with ||S||_F <= 0.3.
    let st = Stiefel::new(8, 3);
    for _ in 0..1000 {
        let x = st.rand_point(&mut rng);
        let a = 0.3 * rng.gen::<f64>();
        let s = Tangent(a * st.rand_tangent(&x, &mut rng).0);
        let bound = 1.0 - 3.0 * a - 0.5 * a * a;
        let smin = sigma_min(&dretract_matrix(&st, &x, &s).unwrap());
        assert!(
            smin >= bound - 1e-10,
            "Stiefel a = {a}: sigma_min {smin} below {bound}"
        );
    }

    // sigma_min -> 1 as s -> 0 on every manifold.
    let manifolds: Vec<Box<dyn Manifold>> = vec![
        Box::new(Euclidean::new(3, 2)),
        Box::new(Sphere::new(7)),
        Box::new(Sphere::with_exponential(7)),
        Box::new(Stiefel::new(6, 2)),
        Box::new(Grassmann::new(6, 2)),
        Box::new(Oblique::new(4, 3)),
        Box::new(Rotations::new(3, 2)),
        Box::new(Rotations::with_exponential(3, 2)),
        Box::new(ProductManifold::new(vec![
            Box::new(Sphere::new(4)),
            Box::new(Stiefel::new(5, 2)),
        ])),
        Box::new(affine_sample()),
    ];
    for m in &manifolds {
        for &a in &[1e-2, 1e-4] {
            let x = m.rand_point(&mut rng);
            let s = Tangent(a * m.rand_tangent(&x, &mut rng).0);
            let fd = m.dretract(&x, &s, &m.rand_tangent(&x, &mut rng)).finite_difference;
            let smin = sigma_min(&dretract_matrix(&**m, &x, &s).unwrap());
            let slack = if fd { 1e-4 } else { 1e-9 };
            assert!(
                smin >= 1.0 - 5.0 * a - slack,
                "{}: sigma_min {smin} at ||s|| = {a}",
                m.name()
            );
        }
    }
    pass(
        "criterion 4",
        "sphere equality, 1000-sample Stiefel bound, identity limit on all manifolds",
    );
}

fn affine_sample() -> AffineSubspace {
    let mut cons = DMatrix::zeros(2, 8);
    for j in 0..8 {
        cons[(0, j)] = 1.0;
        cons[(1, j)] = if j % 2 == 0 { 1.0 } else { -0.5 };
    }
    AffineSubspace::new(4, 2, cons, DVector::from_vec(vec![0.0, 1.0])).unwrap()
}

#[test]
fn criterion_5_regularity_slopes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    let instances: Vec<Instance> = vec![
        make_invariant_subspace(128, 3, &mut rng),
        make_truncated_svd(60, 50, 3, &mut rng),
        make_matrix_completion(100, 100, 5, 4.0, &mut rng).unwrap(),
        make_maxcut(&random_graph(200, 0.05, &mut rng), 20),
        make_rotation_sync(20, 3, 0.5, 0.0, &mut rng).unwrap(),
        make_shapefit(50, 3, 0.5, &mut rng).unwrap(),
    ];
    let grid = t_grid();
    for inst in &instances {
        let m = inst.manifold.as_ref();
        for point in 0..5 {
            let x = m.rand_point(&mut rng);
            let s = m.rand_tangent(&x, &mut rng);
            let a2 = check_taylor_a2(m, &inst.problem, &x, &s, &grid);
            assert!(
                a2.slope_in(2.7, 3.3),
                "{} point {point}: A2 slope {:?}",
                inst.problem.name,
                a2.slope
            );
            let a4 = check_grad_taylor_a4(m, &inst.problem, &x, &s, &grid);
            assert!(
                a4.slope_in(1.7, 2.3),
                "{} point {point}: A4 slope {:?}",
                inst.problem.name,
                a4.slope
            );
        }
    }
    pass(
        "criterion 5",
        "A2 slope in [2.7, 3.3] and A4 slope in [1.7, 2.3] at 5 points on all six problems",
    );
}

#[test]
fn criterion_6_second_order_certificate() {
    // Sphere Rayleigh started near an interior-eigenvalue saddle.
    let n = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    let gm = gaussian_matrix(n, n, &mut rng);
    let a = 0.5 * (&gm + gm.transpose());
    let (a1, a2, a3) = (a.clone(), a.clone(), a.clone());
    let prob = arcopt::problems::Problem::new(
        "rayleigh",
        move |x: &Point| -0.5 * fdot(&x.0, &(&a1 * &x.0)),
        move |x: &Point| -(&a2 * &x.0),
        move |_: &Point, s: &Tangent| -(&a3 * &s.0),
        None,
    );
    let m = Sphere::new(n);

    // Interior eigenvector, perturbed by 1e-3.
    let eig = (0.5 * (&a + a.transpose())).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let saddle_idx = order[n / 2];
    let v = eig.eigenvectors.column(saddle_idx).into_owned();
    let mut x0 = DMatrix::from_column_slice(n, 1, v.as_slice());
    let w = m.rand_tangent(&Point(x0.clone()), &mut rng);
    x0 += 1e-3 * &w.0;
    let x0 = Point(&x0 / x0.norm());

    let p = ArcParams {
        second_order: true,
        max_iters: 3000,
        seed: 60,
        ..ArcParams::default()
    };
    let eps_h = p.eps_hessian();
    assert!((eps_h - 1e-9f64.sqrt()).abs() < 1e-18);
    let (x_final, trace) = arc_run(&m, &prob, &x0, &p).unwrap();
    assert_eq!(trace.termination, Termination::SecondOrderMet);

    // Independent dense certificate at the final point.
    let eg = prob.egrad(&x_final);
    let g = m.egrad2rgrad(&x_final, &eg);
    let model = CubicModel::new(
        &m,
        &x_final,
        prob.cost(&x_final),
        g,
        |s: &Tangent| m.ehess2rhess(&x_final, &eg, &prob.ehessvec(&x_final, s), s),
        1.0,
    )
    .unwrap();
    let lam = model
        .hess_smallest_eig(&Tangent::zero_like(&x_final), 1e-12)
        .unwrap();
    assert!(
        lam >= -eps_h - 1e-8,
        "lambda_min(Hess) = {lam} below -{eps_h} - 1e-8"
    );

    // Second-order counting diagnostic: successful iterations whose recorded
    // pullback-Hessian floor sat below -eps_H stay within the K2 budget.
    let chk = check_trace(&trace, &p, None);
    let k2 = arcopt::arc::k2_bound(trace.f0, trace.f_final, &p, chk.sigma_max_est, eps_h);
    let measured = trace
        .records
        .iter()
        .filter(|r| r.accepted && r.lambda_min_hess.map(|l| l < -eps_h).unwrap_or(false))
        .count();
    assert!(
        (measured as f64) <= k2,
        "measured negative-curvature successes {measured} exceed K2 = {k2}"
    );

    pass(
        "criterion 6",
        &format!("second-order termination certified, lambda_min = {lam:.3e} >= -sqrt(1e-9)"),
    );
}

#[test]
fn criterion_8_determinism() {
    let cfg = r#"
[problem]
name = "truncated-svd"
m = 20
n = 16
p = 2
seed = 99

[solver.arc-lanczos]

[solver.arc-nlcg]

[solver.rtr]

[output]
dir = "PLACEHOLDER"
"#;
    let dirs = [
        std::env::temp_dir().join("arc-acceptance-det-a"),
        std::env::temp_dir().join("arc-acceptance-det-b"),
    ];
    for d in &dirs {
        let _ = std::fs::remove_dir_all(d);
        let text = cfg.replace("PLACEHOLDER", d.to_str().unwrap());
        let config = arcopt::cli::RunConfig::parse(&text).unwrap();
        arcopt::cli::run_seed(&config, 99).unwrap();
    }
    for solver in ["arc-lanczos", "arc-nlcg", "rtr"] {
        let read = |d: &std::path::Path| {
            std::fs::read_to_string(d.join(format!("truncated-svd__{solver}.csv"))).unwrap()
        };
        let strip_time = |text: String| -> Vec<String> {
            text.lines()
                .map(|l| {
                    let cols: Vec<&str> = l.split(',').collect();
                    cols[..cols.len() - 1].join(",")
                })
                .collect()
        };
        let a = strip_time(read(&dirs[0]));
        let b = strip_time(read(&dirs[1]));
        assert_eq!(a, b, "{solver}: numeric trace columns differ between runs");
    }
    for d in &dirs {
        let _ = std::fs::remove_dir_all(d);
    }
    pass(
        "criterion 8",
        "identical config+seed gives identical numeric trace columns (3 solvers)",
    );
}
