//! C ABI for the arcopt solvers.
//!
//! Problems and finished runs are opaque handles; every fallible call returns
//! an [`ArcoptStatus`] and the last error message is retrievable per thread
//! via [`arcopt_last_error`]. The generated header lives at
//! `include/arcopt.h` (regenerated by the build script via cbindgen).
//!
//! Handle discipline: pointers returned by `arcopt_problem_*` /
//! `arcopt_run_*` constructors must be released with the matching `_free`
//! function, exactly once. All functions are safe to call from multiple
//! threads as long as each handle is used from one thread at a time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use arcopt::arc::{arc_run, ArcParams, Subsolver};
use arcopt::baselines::{rgd_run, rtr_run, RtrParams};
use arcopt::manifolds::Point;
use arcopt::problems::{
    make_invariant_subspace, make_matrix_completion, make_maxcut, make_rotation_sync,
    make_shapefit, make_truncated_svd, random_graph, read_gset, Instance,
};
use arcopt::trace::{Termination, Trace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcoptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    RuntimeError = 3,
    Utf8Error = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Solver selection for `arcopt_run`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcoptSolver {
    ArcLanczos = 0,
    ArcNlcg = 1,
    TrustRegion = 2,
    GradientDescent = 3,
}

/// Why a run stopped (mirrors the trace's termination reason).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcoptTermination {
    GradTol = 0,
    SecondOrderMet = 1,
    ZeroStep = 2,
    MaxIters = 3,
}

/// Trace column selector for `arcopt_run_column`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcoptColumn {
    Cost = 0,
    GradNorm = 1,
    Sigma = 2,
    Rho = 3,
    StepNorm = 4,
    InnerIters = 5,
    HessvecCount = 6,
    GradCount = 7,
    TimeSeconds = 8,
    Accepted = 9,
}

/// Solver parameters, passed by value. Non-positive `sigma_0` or
/// `second_order_tol` select the library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArcoptParams {
    pub theta: f64,
    pub sigma_min: f64,
    pub sigma_0: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub second_order: bool,
    pub second_order_tol: f64,
    pub seed: u64,
}

impl ArcoptParams {
    fn to_arc(self, subsolver: Subsolver) -> ArcParams {
        ArcParams {
            theta: self.theta,
            sigma_min: self.sigma_min,
            sigma_0: (self.sigma_0 > 0.0).then_some(self.sigma_0),
            eta1: self.eta1,
            eta2: self.eta2,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            gamma3: self.gamma3,
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            second_order: self.second_order,
            second_order_tol: (self.second_order_tol > 0.0).then_some(self.second_order_tol),
            subsolver,
            seed: self.seed,
        }
    }
}

/// An instantiated benchmark problem plus its reproducible initial guess.
pub struct ArcoptProblem {
    instance: Instance,
    x0: Point,
}

/// A finished solver run.
pub struct ArcoptRun {
    trace: Trace,
    f_final: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    });
}

/// Message describing the most recent error on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn arcopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn arcopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Default solver parameters.
#[no_mangle]
pub extern "C" fn arcopt_params_default() -> ArcoptParams {
    let d = ArcParams::default();
    ArcoptParams {
        theta: d.theta,
        sigma_min: d.sigma_min,
        sigma_0: 0.0,
        eta1: d.eta1,
        eta2: d.eta2,
        gamma1: d.gamma1,
        gamma2: d.gamma2,
        gamma3: d.gamma3,
        grad_tol: d.grad_tol,
        max_iters: d.max_iters,
        second_order: false,
        second_order_tol: 0.0,
        seed: 0,
    }
}

fn wrap_instance(result: arcopt::Result<Instance>, seed: u64) -> (*mut ArcoptProblem, ArcoptStatus) {
    match result {
        Ok(instance) => {
            let x0 = match &instance.x0 {
                Some(p) => p.clone(),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
                    instance.manifold.rand_point(&mut rng)
                }
            };
            let b = Box::new(ArcoptProblem { instance, x0 });
            (Box::into_raw(b), ArcoptStatus::Ok)
        }
        Err(e) => {
            set_error(e.to_string());
            (std::ptr::null_mut(), ArcoptStatus::InvalidArgument)
        }
    }
}

macro_rules! guard_out {
    ($out:ident) => {
        if $out.is_null() {
            set_error("output pointer is null");
            return ArcoptStatus::NullPointer;
        }
    };
}

/// Dominant invariant subspace of a random symmetric matrix on Gr(n, p).
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_invariant_subspace(
    n: usize,
    p: usize,
    seed: u64,
    out: *mut *mut ArcoptProblem,
) -> ArcoptStatus {
    guard_out!(out);
    if p == 0 || p >= n {
        set_error(format!("need 1 <= p < n, got n = {n}, p = {p}"));
        return ArcoptStatus::InvalidArgument;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, st) = wrap_instance(Ok(make_invariant_subspace(n, p, &mut rng)), seed);
    *out = h;
    st
}

/// Truncated SVD of a random matrix on St(m, p) x St(n, p).
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_truncated_svd(
    m: usize,
    n: usize,
    p: usize,
    seed: u64,
    out: *mut *mut ArcoptProblem,
) -> ArcoptStatus {
    guard_out!(out);
    if p == 0 || p > m.min(n) {
        set_error(format!("need 1 <= p <= min(m, n), got {m}x{n}, p = {p}"));
        return ArcoptStatus::InvalidArgument;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, st) = wrap_instance(Ok(make_truncated_svd(m, n, p, &mut rng)), seed);
    *out = h;
    st
}

/// Low-rank matrix completion on Gr(m, r) with oversampling factor `osf`.
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_matrix_completion(
    m: usize,
    n: usize,
    r: usize,
    osf: f64,
    seed: u64,
    out: *mut *mut ArcoptProblem,
) -> ArcoptStatus {
    guard_out!(out);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, st) = wrap_instance(make_matrix_completion(m, n, r, osf, &mut rng), seed);
    *out = h;
    st
}

/// Max-cut relaxation of an Erdos-Renyi graph on OB(n, p).
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_maxcut_random(
    n: usize,
    edge_prob: f64,
    p: usize,
    seed: u64,
    out: *mut *mut ArcoptProblem,
) -> ArcoptStatus {
    guard_out!(out);
    if !(0.0..=1.0).contains(&edge_prob) || n < 2 || p < 2 {
        set_error("need n >= 2, p >= 2 and edge_prob in [0, 1]");
        return ArcoptStatus::InvalidArgument;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(n, edge_prob, &mut rng);
    let (h, st) = wrap_instance(Ok(make_maxcut(&graph, p)), seed);
    *out = h;
    st
}

/// Max-cut relaxation of a graph loaded from a Gset edge-list file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` as in the other constructors.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_maxcut_gset(
    path: *const c_char,
    p: usize,
    seed: u64,
    out: *mut *mut ArcoptProblem,
) -> ArcoptStatus {
    guard_out!(out);
    if path.is_null() {
        set_error("path is null");
        return ArcoptStatus::NullPointer;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8");
        return ArcoptStatus::Utf8Error;
    };
    match read_gset(Path::new(path)) {
        Ok(graph) => {
            let rank = if p >= 2 {
                p
            } else {
                arcopt::problems::default_rank(graph.n)
            };
            let (h, st) = wrap_instance(Ok(make_maxcut(&graph, rank)), seed);
            *out = h;
            st
        }
        Err(e) => {
            set_error(e.to_string());
            ArcoptStatus::InvalidArgument
        }
    }
}

/// Synchronization of `m` rotations in SO(d) from noisy relative measurements.
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_rotation_sync(
    m: usize,
    d: usize,
    edge_prob: f64,
    noise: f64,
    seed: u64,
    out: *mut *mut ArcoptProblem,
) -> ArcoptStatus {
    guard_out!(out);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, st) = wrap_instance(make_rotation_sync(m, d, edge_prob, noise, &mut rng), seed);
    *out = h;
    st
}

/// ShapeFit point recovery from pairwise directions, on an affine slice.
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_shapefit(
    n: usize,
    d: usize,
    edge_prob: f64,
    seed: u64,
    out: *mut *mut ArcoptProblem,
) -> ArcoptStatus {
    guard_out!(out);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, st) = wrap_instance(make_shapefit(n, d, edge_prob, &mut rng), seed);
    *out = h;
    st
}

/// Intrinsic dimension of the problem's manifold; 0 for a null handle.
///
/// # Safety
/// `problem` must be a live handle from a constructor (or null).
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_dim(problem: *const ArcoptProblem) -> usize {
    if problem.is_null() {
        return 0;
    }
    (*problem).instance.manifold.dim()
}

/// Copy the problem's display name into `buf` (NUL-terminated, truncated to
/// `len`). Returns the untruncated length.
///
/// # Safety
/// `problem` must be a live handle; `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_name(
    problem: *const ArcoptProblem,
    buf: *mut c_char,
    len: usize,
) -> usize {
    if problem.is_null() {
        return 0;
    }
    let name = format!(
        "{} on {}",
        (*problem).instance.problem.name,
        (*problem).instance.manifold.name()
    );
    let bytes = name.as_bytes();
    if !buf.is_null() && len > 0 {
        let n = bytes.len().min(len - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    bytes.len()
}

/// Release a problem handle.
///
/// # Safety
/// `problem` must be a handle from a constructor, not yet freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn arcopt_problem_free(problem: *mut ArcoptProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Run a solver from the problem's reproducible initial guess.
///
/// # Safety
/// `problem` must be a live handle; `out` must point to writable memory for
/// one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn arcopt_run(
    problem: *const ArcoptProblem,
    solver: ArcoptSolver,
    params: ArcoptParams,
    out: *mut *mut ArcoptRun,
) -> ArcoptStatus {
    guard_out!(out);
    if problem.is_null() {
        set_error("problem handle is null");
        return ArcoptStatus::NullPointer;
    }
    let prob = &*problem;
    let m = prob.instance.manifold.as_ref();
    let task = || -> arcopt::Result<(Point, Trace)> {
        match solver {
            ArcoptSolver::ArcLanczos => arc_run(
                m,
                &prob.instance.problem,
                &prob.x0,
                &params.to_arc(Subsolver::Lanczos),
            ),
            ArcoptSolver::ArcNlcg => arc_run(
                m,
                &prob.instance.problem,
                &prob.x0,
                &params.to_arc(Subsolver::Nlcg),
            ),
            ArcoptSolver::TrustRegion => {
                let rtr = RtrParams {
                    grad_tol: params.grad_tol,
                    max_iters: params.max_iters,
                    ..RtrParams::default()
                };
                rtr_run(m, &prob.instance.problem, &prob.x0, &rtr)
            }
            ArcoptSolver::GradientDescent => rgd_run(
                m,
                &prob.instance.problem,
                &prob.x0,
                params.grad_tol,
                params.max_iters,
            ),
        }
    };
    match catch_unwind(AssertUnwindSafe(task)) {
        Ok(Ok((_, trace))) => {
            let f_final = trace.f_final;
            *out = Box::into_raw(Box::new(ArcoptRun { trace, f_final }));
            ArcoptStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            ArcoptStatus::RuntimeError
        }
        Err(_) => {
            set_error("solver panicked");
            ArcoptStatus::Panic
        }
    }
}

/// Number of recorded iterations; 0 for a null handle.
///
/// # Safety
/// `run` must be a live run handle (or null).
#[no_mangle]
pub unsafe extern "C" fn arcopt_run_len(run: *const ArcoptRun) -> usize {
    if run.is_null() {
        0
    } else {
        (*run).trace.records.len()
    }
}

/// Final cost of the run.
///
/// # Safety
/// `run` must be a live run handle (or null; NaN is returned).
#[no_mangle]
pub unsafe extern "C" fn arcopt_run_f_final(run: *const ArcoptRun) -> f64 {
    if run.is_null() {
        f64::NAN
    } else {
        (*run).f_final
    }
}

/// Gradient norm at the last recorded iteration.
///
/// # Safety
/// `run` must be a live run handle (or null; NaN is returned).
#[no_mangle]
pub unsafe extern "C" fn arcopt_run_final_grad_norm(run: *const ArcoptRun) -> f64 {
    if run.is_null() {
        return f64::NAN;
    }
    (*run)
        .trace
        .records
        .last()
        .map(|r| r.grad_norm)
        .unwrap_or(f64::NAN)
}

/// Why the run stopped.
///
/// # Safety
/// `run` must be a live run handle (or null; MaxIters is returned).
#[no_mangle]
pub unsafe extern "C" fn arcopt_run_termination(run: *const ArcoptRun) -> ArcoptTermination {
    if run.is_null() {
        return ArcoptTermination::MaxIters;
    }
    match (*run).trace.termination {
        Termination::GradTol => ArcoptTermination::GradTol,
        Termination::SecondOrderMet => ArcoptTermination::SecondOrderMet,
        Termination::ZeroStep => ArcoptTermination::ZeroStep,
        Termination::MaxIters => ArcoptTermination::MaxIters,
    }
}

/// Copy one trace column into `buf` (up to `len` entries). Returns the number
/// of entries written. Undefined ratio entries copy as NaN; booleans as 0/1.
///
/// # Safety
/// `run` must be a live run handle; `buf` must point to `len` writable f64.
#[no_mangle]
pub unsafe extern "C" fn arcopt_run_column(
    run: *const ArcoptRun,
    column: ArcoptColumn,
    buf: *mut f64,
    len: usize,
) -> usize {
    if run.is_null() || buf.is_null() {
        return 0;
    }
    let records = &(*run).trace.records;
    let n = records.len().min(len);
    for (i, r) in records.iter().take(n).enumerate() {
        let v = match column {
            ArcoptColumn::Cost => r.f,
            ArcoptColumn::GradNorm => r.grad_norm,
            ArcoptColumn::Sigma => r.sigma,
            ArcoptColumn::Rho => r.rho.unwrap_or(f64::NAN),
            ArcoptColumn::StepNorm => r.step_norm,
            ArcoptColumn::InnerIters => r.inner_iters as f64,
            ArcoptColumn::HessvecCount => r.hessvec_count as f64,
            ArcoptColumn::GradCount => r.grad_count as f64,
            ArcoptColumn::TimeSeconds => r.time_s,
            ArcoptColumn::Accepted => f64::from(u8::from(r.accepted)),
        };
        *buf.add(i) = v;
    }
    n
}

/// Write the run's trace in the canonical CSV schema.
///
/// # Safety
/// `run` must be a live run handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn arcopt_run_write_csv(
    run: *const ArcoptRun,
    path: *const c_char,
) -> ArcoptStatus {
    if run.is_null() || path.is_null() {
        set_error("null handle or path");
        return ArcoptStatus::NullPointer;
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8");
        return ArcoptStatus::Utf8Error;
    };
    match (*run).trace.write_csv(Path::new(path)) {
        Ok(()) => ArcoptStatus::Ok,
        Err(e) => {
            set_error(e.to_string());
            ArcoptStatus::RuntimeError
        }
    }
}

/// Release a run handle.
///
/// # Safety
/// `run` must be a handle from `arcopt_run`, not yet freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn arcopt_run_free(run: *mut ArcoptRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
