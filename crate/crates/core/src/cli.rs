//! Configuration-driven benchmark runner.
//!
//! A run config is a TOML file with three kinds of sections:
//!
//! ```toml
//! [problem]
//! name = "maxcut"       # invariant-subspace | truncated-svd |
//!                       # matrix-completion | maxcut | rotation-sync | shapefit
//! n = 200               # size keys depend on the problem
//! seed = 42
//!
//! [solver.arc-lanczos]  # arc-lanczos | arc-nlcg | rtr | rgd
//! theta = 0.25          # optional parameter overrides
//!
//! [output]
//! dir = "out"
//! slow_checks = false
//! ```
//!
//! One instance and one initial guess are generated per seed; every
//! configured solver runs from that same initial guess. Each solver writes
//! `<problem>__<solver>.csv` (the fixed trace schema), an inequality report
//! `<problem>__<solver>__verify.csv`, and the run writes `summary.csv`.
//! Unknown keys anywhere are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::arc::{arc_run, ArcParams, Subsolver};
use crate::baselines::{rgd_run, rtr_run, RtrParams};
use crate::manifolds::Point;
use crate::problems::{
    make_invariant_subspace, make_matrix_completion, make_maxcut, make_rotation_sync,
    make_shapefit, make_truncated_svd, read_gset, Instance,
};
use crate::trace::Trace;
use crate::verify::check_trace;
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: ProblemSection,
    solver: BTreeMap<String, SolverOverrides>,
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    name: String,
    seed: Option<u64>,
    n: Option<usize>,
    m: Option<usize>,
    p: Option<usize>,
    r: Option<usize>,
    d: Option<usize>,
    osf: Option<f64>,
    edge_prob: Option<f64>,
    noise: Option<f64>,
    /// Path to a Gset edge-list file (max-cut only; overrides `n`).
    gset: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverOverrides {
    theta: Option<f64>,
    sigma_min: Option<f64>,
    sigma_0: Option<f64>,
    eta1: Option<f64>,
    eta2: Option<f64>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    gamma3: Option<f64>,
    grad_tol: Option<f64>,
    max_iters: Option<usize>,
    second_order: Option<bool>,
    second_order_tol: Option<f64>,
    delta0: Option<f64>,
    delta_max: Option<f64>,
    rho_accept: Option<f64>,
    kappa: Option<f64>,
    theta_tcg: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: String,
    slow_checks: Option<bool>,
}

/// A validated run configuration.
#[derive(Debug)]
pub struct RunConfig {
    pub problem_name: String,
    pub seed: u64,
    pub solvers: Vec<(String, ArcParams, RtrParams, usize)>,
    pub output_dir: PathBuf,
    pub slow_checks: bool,
    raw_problem: ProblemSection,
}

const SOLVER_NAMES: [&str; 4] = ["arc-lanczos", "arc-nlcg", "rtr", "rgd"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        if raw.solver.is_empty() {
            return Err(Error::Config("no [solver.<name>] sections".into()));
        }
        let mut solvers = Vec::new();
        for (name, ov) in &raw.solver {
            if !SOLVER_NAMES.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown solver name `solver.{name}` (expected one of {SOLVER_NAMES:?})"
                )));
            }
            let seed = raw.problem.seed.unwrap_or(0);
            let mut arc = ArcParams {
                subsolver: if name == "arc-nlcg" {
                    Subsolver::Nlcg
                } else {
                    Subsolver::Lanczos
                },
                seed,
                ..ArcParams::default()
            };
            let mut rtr = RtrParams::default();
            macro_rules! apply {
                ($($field:ident),*) => { $( if let Some(v) = ov.$field { arc.$field = v; } )* };
            }
            apply!(theta, sigma_min, eta1, eta2, gamma1, gamma2, gamma3, grad_tol, max_iters, second_order);
            if let Some(v) = ov.sigma_0 {
                arc.sigma_0 = Some(v);
            }
            if let Some(v) = ov.second_order_tol {
                arc.second_order_tol = Some(v);
            }
            if let Some(v) = ov.delta0 {
                rtr.delta0 = Some(v);
            }
            if let Some(v) = ov.delta_max {
                rtr.delta_max = Some(v);
            }
            if let Some(v) = ov.rho_accept {
                rtr.rho_accept = v;
            }
            if let Some(v) = ov.kappa {
                rtr.kappa = v;
            }
            if let Some(v) = ov.theta_tcg {
                rtr.theta_tcg = v;
            }
            if let Some(v) = ov.grad_tol {
                rtr.grad_tol = v;
            }
            if let Some(v) = ov.max_iters {
                rtr.max_iters = v;
            }
            arc.validate()?;
            if let (Some(d0), Some(dmax)) = (rtr.delta0, rtr.delta_max) {
                if !(d0 > 0.0 && d0 <= dmax) {
                    return Err(Error::Config(format!(
                        "solver.{name}: need 0 < delta0 <= delta_max, got {d0} and {dmax}"
                    )));
                }
            }
            let rgd_iters = ov.max_iters.unwrap_or(20000);
            solvers.push((name.clone(), arc, rtr, rgd_iters));
        }
        Ok(RunConfig {
            problem_name: raw.problem.name.clone(),
            seed: raw.problem.seed.unwrap_or(0),
            solvers,
            output_dir: PathBuf::from(&raw.output.dir),
            slow_checks: raw.output.slow_checks.unwrap_or(false),
            raw_problem: raw.problem,
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    /// Generate the instance for a given seed (desk-scale defaults fill any
    /// size keys the config leaves out).
    pub fn make_instance(&self, seed: u64) -> Result<Instance> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = &self.raw_problem;
        match p.name.as_str() {
            "invariant-subspace" => Ok(make_invariant_subspace(
                p.n.unwrap_or(128),
                p.p.unwrap_or(3),
                &mut rng,
            )),
            "truncated-svd" => Ok(make_truncated_svd(
                p.m.unwrap_or(60),
                p.n.unwrap_or(50),
                p.p.unwrap_or(3),
                &mut rng,
            )),
            "matrix-completion" => make_matrix_completion(
                p.m.unwrap_or(100),
                p.n.unwrap_or(100),
                p.r.unwrap_or(5),
                p.osf.unwrap_or(4.0),
                &mut rng,
            ),
            "maxcut" => {
                let graph = if let Some(path) = &p.gset {
                    read_gset(Path::new(path))?
                } else {
                    crate::problems::random_graph(
                        p.n.unwrap_or(200),
                        p.edge_prob.unwrap_or(0.05),
                        &mut rng,
                    )
                };
                let rank = p
                    .p
                    .unwrap_or_else(|| crate::problems::default_rank(graph.n));
                Ok(make_maxcut(&graph, rank))
            }
            "rotation-sync" => make_rotation_sync(
                p.m.unwrap_or(20),
                p.d.unwrap_or(3),
                p.edge_prob.unwrap_or(0.5),
                p.noise.unwrap_or(0.0),
                &mut rng,
            ),
            "shapefit" => make_shapefit(
                p.n.unwrap_or(50),
                p.d.unwrap_or(3),
                p.edge_prob.unwrap_or(0.5),
                &mut rng,
            ),
            other => Err(Error::Config(format!("unknown problem name `{other}`"))),
        }
    }
}

/// Outcome of one solver within a run.
pub struct SolverOutcome {
    pub solver: String,
    pub trace: Trace,
    pub checks_pass: bool,
}

/// Run every configured solver for one seed; write traces, per-solver verify
/// reports and a summary. A solver that errors or panics is recorded in the
/// summary and does not stop the remaining solvers; the first such failure is
/// returned as the error after everything else has run.
pub fn run_seed(config: &RunConfig, seed: u64) -> Result<Vec<SolverOutcome>> {
    use rand::SeedableRng;
    std::fs::create_dir_all(&config.output_dir)?;
    let inst = config.make_instance(seed)?;
    let m = inst.manifold.as_ref();
    let x0 = match &inst.x0 {
        Some(p) => p.clone(),
        None => {
            // The instance generation consumed part of the stream; a separate
            // derived seed keeps the initial guess reproducible regardless.
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
            m.rand_point(&mut rng)
        }
    };

    let mut outcomes = Vec::new();
    let mut first_failure: Option<Error> = None;
    let mut summary = String::from(
        "problem,solver,termination,f_final,grad_norm_final,iterations,accepted,hessvec_count,grad_count,time_s,checks_pass\n",
    );
    for (name, arc_p, rtr_p, rgd_iters) in &config.solvers {
        let mut arc_p = arc_p.clone();
        arc_p.seed = seed;
        let run = || -> Result<(Point, Trace)> {
            match name.as_str() {
                "arc-lanczos" | "arc-nlcg" => arc_run(m, &inst.problem, &x0, &arc_p),
                "rtr" => rtr_run(m, &inst.problem, &x0, rtr_p),
                "rgd" => rgd_run(m, &inst.problem, &x0, arc_p.grad_tol, *rgd_iters),
                _ => unreachable!("validated at parse time"),
            }
        };
        let trace = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)) {
            Ok(Ok((_, trace))) => trace,
            Ok(Err(e)) => {
                eprintln!("solver `{name}` failed: {e}");
                summary.push_str(&format!(
                    "{},{},error,nan,nan,0,0,0,0,0,0\n",
                    config.problem_name, name
                ));
                first_failure.get_or_insert(e);
                continue;
            }
            Err(_) => {
                eprintln!("solver `{name}` panicked");
                summary.push_str(&format!(
                    "{},{},panic,nan,nan,0,0,0,0,0,0\n",
                    config.problem_name, name
                ));
                first_failure
                    .get_or_insert_with(|| Error::Config(format!("solver `{name}` panicked")));
                continue;
            }
        };

        let stem = format!("{}__{}", config.problem_name, name);
        trace.write_csv(&config.output_dir.join(format!("{stem}.csv")))?;

        // Inequality report. The counting/cap checks are specific to the
        // cubic-regularization mechanism; for baselines only descent and
        // bookkeeping are meaningful, so checks are recorded but not gated.
        let is_arc_solver = name.starts_with("arc-");
        let slow = config.slow_checks && is_arc_solver;
        let mut l_ext = None;
        if slow {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let grid: Vec<f64> = (0..9).map(|i| 1e-3 * 10f64.powf(i as f64 / 4.0)).collect();
            let mut l_est: f64 = 0.0;
            let mut l_prime: f64 = 0.0;
            let mut slopes = Vec::new();
            for _ in 0..3 {
                let x = m.rand_point(&mut rng);
                let s = m.rand_tangent(&x, &mut rng);
                let a2 = crate::verify::check_taylor_a2(m, &inst.problem, &x, &s, &grid);
                let a4 = crate::verify::check_grad_taylor_a4(m, &inst.problem, &x, &s, &grid);
                l_est = l_est.max(a2.constant_est);
                l_prime = l_prime.max(a4.constant_est);
                slopes.push((a2.slope, a4.slope));
            }
            l_ext = Some(l_est);
            let within_cap = m.dim() <= crate::manifolds::DENSE_DIM_CAP;
            let dr_checks = if within_cap {
                crate::verify::check_dr_bounds(m, &[0.0, 0.1], 2, &mut rng).unwrap_or_default()
            } else {
                Vec::new()
            };
            let step_bound_violations = if within_cap {
                crate::verify::check_step_bound(&trace, &inst.problem, m, &arc_p).ok()
            } else {
                None
            };
            let cubes_chk = check_trace(&trace, &arc_p, l_ext);
            let report = crate::verify::DiagnosticsReport {
                l_est,
                l_prime_est: l_prime,
                sigma_max_observed: trace
                    .records
                    .iter()
                    .map(|r| r.sigma)
                    .fold(f64::NEG_INFINITY, f64::max),
                sumcubes_lhs: cubes_chk.sumcubes_lhs,
                sumcubes_rhs: cubes_chk.sumcubes_rhs,
                step_bound_violations,
                dr_checks,
                taylor_slopes: slopes,
                a_b_pair: crate::verify::closed_form_ab(m),
            };
            std::fs::write(
                config.output_dir.join(format!("{stem}__diagnostics.csv")),
                report.to_csv(),
            )?;
        }
        let chk = check_trace(&trace, &arc_p, l_ext);
        let is_arc = name.starts_with("arc-");
        let checks_pass = if is_arc {
            chk.all_pass()
        } else {
            chk.descent_violations == 0 && chk.sumcubes_pass
        };
        let mut vreport = String::from("check,lhs,rhs,pass\n");
        vreport.push_str(&format!(
            "sum_of_cubes,{:.16e},{:.16e},{}\n",
            chk.sumcubes_lhs,
            chk.sumcubes_rhs,
            u8::from(chk.sumcubes_pass)
        ));
        vreport.push_str(&format!(
            "sigma_floor,0,0,{}\n",
            u8::from(chk.sigma_floor_pass)
        ));
        vreport.push_str(&format!(
            "sigma_cap,{:.16e},{:.16e},{}\n",
            trace
                .records
                .iter()
                .map(|r| r.sigma)
                .fold(f64::NEG_INFINITY, f64::max),
            chk.sigma_max_est,
            u8::from(chk.sigma_cap_pass)
        ));
        vreport.push_str(&format!(
            "iteration_counting,{:.16e},{:.16e},{}\n",
            chk.counting_lhs,
            chk.counting_rhs,
            u8::from(chk.counting_pass)
        ));
        vreport.push_str(&format!(
            "descent,{},0,{}\n",
            chk.descent_violations,
            u8::from(chk.descent_violations == 0)
        ));
        std::fs::write(
            config.output_dir.join(format!("{stem}__verify.csv")),
            vreport,
        )?;

        let last = trace.records.last();
        summary.push_str(&format!(
            "{},{},{},{:.16e},{:.16e},{},{},{},{},{:.3},{}\n",
            config.problem_name,
            name,
            trace.termination,
            trace.f_final,
            last.map(|r| r.grad_norm).unwrap_or(f64::NAN),
            trace.records.len(),
            trace.accepted_count(),
            last.map(|r| r.hessvec_count).unwrap_or(0),
            last.map(|r| r.grad_count).unwrap_or(0),
            last.map(|r| r.time_s).unwrap_or(0.0),
            u8::from(checks_pass),
        ));
        outcomes.push(SolverOutcome {
            solver: name.clone(),
            trace,
            checks_pass,
        });
    }
    std::fs::write(config.output_dir.join("summary.csv"), summary)?;
    match first_failure {
        Some(e) => Err(e),
        None => Ok(outcomes),
    }
}

/// `run` entry point: returns the process exit code.
/// 0 = all solvers finished, 1 = config error, 2 = a solver failed.
pub fn run(config_path: &Path, seed_override: Option<u64>, slow_checks: bool) -> i32 {
    let mut config = match RunConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 1;
        }
    };
    if slow_checks {
        config.slow_checks = true;
    }
    let seed = seed_override.unwrap_or(config.seed);
    match run_seed(&config, seed) {
        Ok(outcomes) => {
            for o in &outcomes {
                let last = o.trace.records.last();
                println!(
                    "{}: {} in {} iterations, f = {:.6e}, |grad| = {:.3e}, checks {}",
                    o.solver,
                    o.trace.termination,
                    o.trace.records.len(),
                    o.trace.f_final,
                    last.map(|r| r.grad_norm).unwrap_or(f64::NAN),
                    if o.checks_pass { "pass" } else { "FAIL" },
                );
            }
            0
        }
        Err(e) => {
            eprintln!("run error: {e}");
            2
        }
    }
}

/// Run several seeds, optionally on parallel threads, each into its own
/// `seed-<n>` subdirectory with an isolated RNG stream.
pub fn run_seeds(config: &RunConfig, seeds: &[u64], parallel: bool) -> Result<()> {
    let run_one = |seed: u64| -> Result<()> {
        let mut sub = RunConfig {
            problem_name: config.problem_name.clone(),
            seed,
            solvers: config.solvers.clone(),
            output_dir: config.output_dir.join(format!("seed-{seed}")),
            slow_checks: config.slow_checks,
            raw_problem: ProblemSection {
                name: config.raw_problem.name.clone(),
                seed: Some(seed),
                n: config.raw_problem.n,
                m: config.raw_problem.m,
                p: config.raw_problem.p,
                r: config.raw_problem.r,
                d: config.raw_problem.d,
                osf: config.raw_problem.osf,
                edge_prob: config.raw_problem.edge_prob,
                noise: config.raw_problem.noise,
                gset: config.raw_problem.gset.clone(),
            },
        };
        sub.seed = seed;
        run_seed(&sub, seed).map(|_| ())
    };
    if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds.iter().map(|&s| scope.spawn(move || run_one(s))).collect();
            for h in handles {
                h.join().map_err(|_| Error::Config("worker panicked".into()))??;
            }
            Ok(())
        })
    } else {
        for &s in seeds {
            run_one(s)?;
        }
        Ok(())
    }
}

/// Emit plot-ready data from a directory of trace CSVs: per problem, three
/// long-format files `<problem>__gradnorm-vs-{time,oraclecalls,outer}.csv`
/// with columns `solver,x,grad_norm`.
pub fn report(trace_dir: &Path) -> Result<()> {
    let mut by_problem: BTreeMap<String, Vec<(String, Trace)>> = BTreeMap::new();
    let mut found = 0;
    let entries = std::fs::read_dir(trace_dir)?;
    let mut names: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
        .collect();
    names.sort();
    for path in names {
        let fname = path.file_stem().unwrap().to_string_lossy().to_string();
        if fname.contains("__verify")
            || fname.contains("__diagnostics")
            || fname == "summary"
            || fname.contains("gradnorm-vs-")
        {
            continue;
        }
        let Some((problem, solver)) = fname.split_once("__") else {
            continue;
        };
        let trace = Trace::read_csv(&path)?;
        // Cross-check the oracle-call bookkeeping: cumulative counters must
        // be monotone, or the plot x-axes are meaningless.
        let mut prev = 0u64;
        for r in &trace.records {
            let calls = r.hessvec_count + r.grad_count;
            if calls < prev {
                return Err(Error::Parse {
                    line: r.k + 2,
                    msg: format!("oracle-call counters not monotone in {fname}.csv"),
                });
            }
            prev = calls;
        }
        found += 1;
        by_problem
            .entry(problem.to_string())
            .or_default()
            .push((solver.to_string(), trace));
    }
    if found == 0 {
        eprintln!(
            "warning: no trace CSVs found in {}",
            trace_dir.display()
        );
        return Ok(());
    }
    for (problem, traces) in &by_problem {
        let axes: [(&str, Box<dyn Fn(&crate::trace::IterationRecord) -> f64>); 3] = [
            ("time", Box::new(|r| r.time_s)),
            ("oraclecalls", Box::new(|r| (r.hessvec_count + r.grad_count) as f64)),
            ("outer", Box::new(|r| r.k as f64)),
        ];
        for (axis, extract) in &axes {
            let mut out = String::from("solver,x,grad_norm\n");
            for (solver, trace) in traces {
                for r in &trace.records {
                    out.push_str(&format!(
                        "{},{:.16e},{:.16e}\n",
                        solver,
                        extract(r),
                        r.grad_norm
                    ));
                }
            }
            std::fs::write(
                trace_dir.join(format!("{problem}__gradnorm-vs-{axis}.csv")),
                out,
            )?;
        }
    }
    Ok(())
}
