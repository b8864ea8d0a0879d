//! Robustness sweep: both subsolvers on fresh instances of all six benchmark
//! problems across ten seeds, checked against their oracles. Complements the
//! fixed-seed acceptance suite.
//!
//! ```sh
//! cargo run --release --example sweep
//! ```

use arcopt::arc::{arc_run, ArcParams, Subsolver};
use arcopt::problems::*;
use arcopt::trace::Termination;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut failures = 0;
    for seed in 0..10u64 {
        for which in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed * 31 + which);
            let inst = match which {
                0 => make_invariant_subspace(128, 3, &mut rng),
                1 => make_truncated_svd(60, 50, 3, &mut rng),
                2 => make_matrix_completion(100, 100, 5, 4.0, &mut rng).unwrap(),
                3 => make_maxcut(&random_graph(200, 0.05, &mut rng), 20),
                4 => make_rotation_sync(20, 3, 0.5, 0.0, &mut rng).unwrap(),
                _ => make_shapefit(50, 3, 0.5, &mut rng).unwrap(),
            };
            let m = inst.manifold.as_ref();
            let x0 = match &inst.x0 {
                Some(p) => p.clone(),
                None => m.rand_point(&mut rng),
            };
            for sub in [Subsolver::Lanczos, Subsolver::Nlcg] {
                let p = ArcParams { seed, subsolver: sub, max_iters: 3000, ..ArcParams::default() };
                match arc_run(m, &inst.problem, &x0, &p) {
                    Ok((x, trace)) => {
                        let g = trace.records.last().unwrap().grad_norm;
                        let mut oracle_ok = true;
                        let mut note = String::new();
                        match &inst.truth {
                            GroundTruth::OptimalCost(c) => {
                                let err = (trace.f_final - c).abs() / (1.0 + c.abs());
                                oracle_ok = err <= 1e-7;
                                note = format!("rel cost err {err:.2e}");
                            }
                            GroundTruth::Completion { .. } => {
                                let r = held_out_rmse(&inst, &x);
                                oracle_ok = r <= 1e-6;
                                note = format!("rmse {r:.2e}");
                            }
                            GroundTruth::Rotations(_) => {
                                let e = alignment_error(&inst, &x);
                                oracle_ok = e <= 1e-6;
                                note = format!("align {e:.2e}");
                            }
                            GroundTruth::Points(_) => {
                                let d = solve_shapefit_direct(&inst);
                                let e = (&x.0 - &d.0).amax();
                                oracle_ok = e <= 1e-6;
                                note = format!("pt err {e:.2e}");
                            }
                            GroundTruth::None => {}
                        }
                        let term_ok = trace.termination == Termination::GradTol;
                        if !term_ok || !oracle_ok || g > 1e-9 {
                            failures += 1;
                            println!("FAIL seed={seed} prob={} sub={:?} term={} g={g:.2e} {note}",
                                inst.problem.name, sub, trace.termination);
                        }
                    }
                    Err(e) => {
                        failures += 1;
                        println!("ERROR seed={seed} prob={} sub={:?}: {e}", inst.problem.name, sub);
                    }
                }
            }
        }
    }
    println!("sweep complete: {failures} failures / 120 runs");
}
