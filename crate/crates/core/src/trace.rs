//! Per-iteration audit log shared by all solvers, and its CSV form.
//!
//! The CSV schema is fixed:
//!
//! ```text
//! k,accepted,f,grad_norm,sigma,rho,step_norm,inner_iters,hessvec_count,grad_count,time_s
//! ```
//!
//! Numeric columns are written with 17 significant digits so that two runs
//! with the same configuration and seed produce identical bytes (`time_s`
//! excluded from that contract). `rho` is left empty where undefined, e.g. on
//! a terminal record that evaluated no trial step. For the trust-region
//! baseline the `sigma` column carries the trust radius; for gradient descent
//! it is zero.

use std::fmt::Write as _;
use std::path::Path;

use crate::manifolds::Point;
use crate::{Error, Result};

/// One outer iteration of a solver.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    /// Cost at the iterate the model was built on.
    pub f: f64,
    pub grad_norm: f64,
    /// Regularization weight (ARC), trust radius (RTR) or 0 (RGD).
    pub sigma: f64,
    /// Improvement ratio; `None` when no trial step was evaluated.
    pub rho: Option<f64>,
    pub step_norm: f64,
    pub accepted: bool,
    /// Subsolver iterations spent on this outer iteration.
    pub inner_iters: usize,
    /// Cumulative Hessian-vector products up to and including this iteration.
    pub hessvec_count: u64,
    /// Cumulative gradient evaluations up to and including this iteration.
    pub grad_count: u64,
    /// Wall-clock seconds since the start of the run.
    pub time_s: f64,
    /// Smallest Hessian eigenvalue, when the solver computed it.
    pub lambda_min_hess: Option<f64>,
    /// Cost at the trial point (accepted or not), when one was evaluated.
    pub f_trial: Option<f64>,
    /// Model value at the trial step, when one was computed.
    pub model_value: Option<f64>,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradTol,
    SecondOrderMet,
    ZeroStep,
    MaxIters,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::GradTol => "grad-tol",
            Termination::SecondOrderMet => "second-order-met",
            Termination::ZeroStep => "zero-step",
            Termination::MaxIters => "max-iters",
        };
        f.write_str(s)
    }
}

/// A complete run: records plus enough state to re-check the inequalities the
/// solver claims to satisfy. Base points are kept in memory (they never go to
/// CSV), so model-rebuilding diagnostics can run after the fact.
#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub f0: f64,
    pub f_final: f64,
    /// Base point of each recorded iteration, in record order.
    pub points: Option<Vec<Point>>,
}

pub const CSV_HEADER: &str =
    "k,accepted,f,grad_norm,sigma,rho,step_norm,inner_iters,hessvec_count,grad_count,time_s";

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

impl Trace {
    pub fn accepted_count(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    /// Serialize to the fixed CSV schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let rho = r.rho.map(fmt_float).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.k,
                u8::from(r.accepted),
                fmt_float(r.f),
                fmt_float(r.grad_norm),
                fmt_float(r.sigma),
                rho,
                fmt_float(r.step_norm),
                r.inner_iters,
                r.hessvec_count,
                r.grad_count,
                fmt_float(r.time_s),
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parse a trace back from CSV. Points and side-channel fields are not
    /// recoverable from the file.
    pub fn read_csv(path: &Path) -> Result<Trace> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Trace> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty trace file".into(),
        })?;
        if header.trim() != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unexpected header: {header}"),
            });
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 11 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected 11 columns, got {}", cols.len()),
                });
            }
            let parse_f = |s: &str, line: usize| -> Result<f64> {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad float {s:?}: {e}"),
                })
            };
            let parse_u = |s: &str, line: usize| -> Result<u64> {
                s.parse::<u64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad integer {s:?}: {e}"),
                })
            };
            records.push(IterationRecord {
                k: parse_u(cols[0], i + 1)? as usize,
                accepted: cols[1] == "1",
                f: parse_f(cols[2], i + 1)?,
                grad_norm: parse_f(cols[3], i + 1)?,
                sigma: parse_f(cols[4], i + 1)?,
                rho: if cols[5].is_empty() {
                    None
                } else {
                    Some(parse_f(cols[5], i + 1)?)
                },
                step_norm: parse_f(cols[6], i + 1)?,
                inner_iters: parse_u(cols[7], i + 1)? as usize,
                hessvec_count: parse_u(cols[8], i + 1)?,
                grad_count: parse_u(cols[9], i + 1)?,
                time_s: parse_f(cols[10], i + 1)?,
                lambda_min_hess: None,
                f_trial: None,
                model_value: None,
            });
        }
        let f0 = records.first().map(|r| r.f).unwrap_or(f64::NAN);
        let f_final = records.last().map(|r| r.f).unwrap_or(f64::NAN);
        Ok(Trace {
            records,
            termination: Termination::MaxIters, // not stored in the CSV
            f0,
            f_final,
            points: None,
        })
    }
}
