//! Maximum-strategy marking and the solve, estimate, mark, refine loop.

use std::fmt;

use crate::assembly::Spaces;
use crate::config::ProblemConfig;
use crate::error::{Error, Result};
use crate::estimator::{compute_indicators, Indicators};
use crate::mesh::Mesh;
use crate::solver::{picard_solve, SolutionState};

/// Elements with `E_K >= fraction * max E`. Never empty for nonempty input.
pub fn mark(indicators: &Indicators, fraction: f64) -> Vec<usize> {
    mark_values(&indicators.total_sq.iter().map(|v| v.sqrt()).collect::<Vec<_>>(), fraction)
}

/// Marking on plain (not squared) indicator values.
pub fn mark_values(values: &[f64], fraction: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = fraction * max;
    (0..values.len()).filter(|&k| values[k] >= threshold).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    pub n_elements: usize,
    pub n_vertices: usize,
    pub ndof: usize,
    pub estimator_total: f64,
    pub estimator_ns: f64,
    pub estimator_heat: f64,
    pub picard_iterations: usize,
    /// Smallest diameter among elements whose closure contains `z`.
    pub min_h_at_z: f64,
    /// Smallest diameter over the whole mesh.
    pub min_h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    /// `adapt_max` iterations ran.
    Completed,
    /// The next mesh would exceed the element budget.
    ElementBudget { elements: usize },
    /// The next mesh would contain an element below the area floor.
    AreaFloor { area: f64 },
    /// The fixed-point iteration hit its cap on the last recorded mesh.
    PicardNotConverged { increment: f64 },
    /// A linear solve or assembly failed; records before it are kept.
    SolverFailed(String),
}

impl StopReason {
    /// Running out of iterations or reaching the area floor ends a run
    /// normally; the other reasons abort it.
    pub fn is_success(&self) -> bool {
        matches!(self, StopReason::Completed | StopReason::AreaFloor { .. })
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Completed => write!(f, "completed"),
            StopReason::ElementBudget { elements } => write!(f, "element budget exceeded ({elements} elements)"),
            StopReason::AreaFloor { area } => write!(f, "element area {area:e} below the floor"),
            StopReason::PicardNotConverged { increment } => {
                write!(f, "fixed-point iteration did not converge (last increment {increment:e})")
            }
            StopReason::SolverFailed(msg) => write!(f, "solver failure: {msg}"),
        }
    }
}

/// Everything produced on one solved mesh, handed to the loop observer.
pub struct IterationData<'a> {
    pub record: &'a ConvergenceRecord,
    pub mesh: &'a Mesh,
    pub state: &'a SolutionState,
    pub indicators: &'a Indicators,
}

#[derive(Clone, Debug)]
pub struct AdaptOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub stop: StopReason,
    /// Last solved mesh and its solution, if any solve succeeded.
    pub mesh: Option<Mesh>,
    pub state: Option<SolutionState>,
}

fn record(
    iteration: usize,
    mesh: &Mesh,
    spaces: &Spaces,
    state: &SolutionState,
    ind: &Indicators,
    cfg: &ProblemConfig,
) -> ConvergenceRecord {
    let min_h_at_z = mesh.locate(cfg.z).into_iter().map(|k| mesh.diameter(k)).fold(f64::INFINITY, f64::min);
    let min_h = (0..mesh.n_elements()).map(|k| mesh.diameter(k)).fold(f64::INFINITY, f64::min);
    ConvergenceRecord {
        iteration,
        n_elements: mesh.n_elements(),
        n_vertices: mesh.n_vertices(),
        ndof: spaces.ndof(),
        estimator_total: ind.total,
        estimator_ns: ind.ns,
        estimator_heat: ind.heat,
        picard_iterations: state.picard_iterations,
        min_h_at_z,
        min_h,
    }
}

pub fn adapt_loop(cfg: &ProblemConfig) -> Result<AdaptOutcome> {
    adapt_loop_with(cfg, |_| Ok(()))
}

/// Runs up to `cfg.adapt_max` iterations. `observer` sees every solved
/// mesh after its record is made; an observer error aborts the loop.
pub fn adapt_loop_with(
    cfg: &ProblemConfig,
    mut observer: impl FnMut(&IterationData<'_>) -> Result<()>,
) -> Result<AdaptOutcome> {
    cfg.validate()?;
    let mut mesh = Mesh::initial(cfg.domain, cfg.resolution())?;
    let mut records = Vec::new();
    let mut last: Option<(Mesh, SolutionState)> = None;
    let finish = |records, stop, last: Option<(Mesh, SolutionState)>| {
        let (mesh, state) = last.map_or((None, None), |(m, s)| (Some(m), Some(s)));
        Ok(AdaptOutcome { records, stop, mesh, state })
    };

    for iteration in 1..=cfg.adapt_max {
        let spaces = Spaces::new(&mesh, cfg.element_family);
        let solved = picard_solve(&mesh, &spaces, cfg).and_then(|state| {
            let ind = compute_indicators(&mesh, &state, cfg)?;
            Ok((state, ind))
        });
        let (state, indicators) = match solved {
            Ok(v) => v,
            Err(e) => return finish(records, StopReason::SolverFailed(e.to_string()), last),
        };
        let rec = record(iteration, &mesh, &spaces, &state, &indicators, cfg);
        observer(&IterationData { record: &rec, mesh: &mesh, state: &state, indicators: &indicators })?;
        records.push(rec);

        if !state.converged {
            let increment = state.last_increment;
            return finish(records, StopReason::PicardNotConverged { increment }, Some((mesh, state)));
        }
        if iteration == cfg.adapt_max {
            return finish(records, StopReason::Completed, Some((mesh, state)));
        }
        let marked = mark(&indicators, cfg.marking_fraction);
        let next = mesh.bisect(&marked);
        if next.n_elements() > cfg.element_budget {
            let elements = next.n_elements();
            return finish(records, StopReason::ElementBudget { elements }, Some((mesh, state)));
        }
        let area = next.min_area();
        if area < cfg.min_element_area {
            return finish(records, StopReason::AreaFloor { area }, Some((mesh, state)));
        }
        last = Some((mesh, state));
        mesh = next;
    }
    unreachable!("adapt_max >= 1 is validated")
}

/// Least-squares slope of `log10(estimator_total)` against `log10(ndof)`
/// over the last half of the records.
pub fn rate_fit(records: &[ConvergenceRecord]) -> Result<f64> {
    if records.len() < 5 {
        return Err(Error::Records(format!("rate fit needs at least 5 records, got {}", records.len())));
    }
    let tail = &records[records.len() / 2..];
    let pts: Vec<(f64, f64)> = tail.iter().map(|r| ((r.ndof as f64).log10(), r.estimator_total.log10())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(Error::Records("rate fit needs distinct positive ndof and estimator values".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<ConvergenceRecord> {
        (0..10)
            .map(|i| {
                let ndof = 100 * (1 << i);
                ConvergenceRecord {
                    iteration: i + 1,
                    n_elements: ndof / 4,
                    n_vertices: ndof / 8,
                    ndof,
                    estimator_total: f(ndof as f64),
                    estimator_ns: 0.0,
                    estimator_heat: f(ndof as f64),
                    picard_iterations: 3,
                    min_h_at_z: 0.1,
                    min_h: 0.1,
                }
            })
            .collect()
    }

    #[test]
    fn marking_examples() {
        assert_eq!(mark_values(&[4.0, 1.0, 1.0], 0.5), vec![0]);
        assert_eq!(mark_values(&[3.0, 2.0, 1.0], 0.5), vec![0, 1]);
        assert_eq!(mark_values(&[2.0; 5], 0.5), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn marking_is_scale_invariant() {
        let v = [0.3, 1.7, 0.85, 0.2, 1.0];
        let scaled: Vec<f64> = v.iter().map(|x| x * 1024.0).collect();
        assert_eq!(mark_values(&v, 0.5), mark_values(&scaled, 0.5));
        assert!(!mark_values(&[0.0, 0.0], 0.5).is_empty());
    }

    #[test]
    fn rate_fit_examples() {
        assert!((rate_fit(&synthetic(|n| 3.0 / n)).unwrap() + 1.0).abs() < 1e-12);
        assert!(rate_fit(&synthetic(|_| 0.7)).unwrap().abs() < 1e-12);
        assert!((rate_fit(&synthetic(|n| 2.0 / n.sqrt())).unwrap() + 0.5).abs() < 1e-12);
        assert!(rate_fit(&synthetic(|n| 1.0 / n)[..4]).is_err());
    }
}
