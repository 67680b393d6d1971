//! Backward-Euler time stepping of the coupled displacement-pressure
//! system with porosity and permeability updated from the dilatation.

mod config;
mod solver;

pub use config::{Coupling, Material, SolverConfig, PICARD_MAX_ITER, PICARD_TOL};
pub use solver::{BiotSolver, BiotState};

use crate::error::{Error, Result};
use crate::percolation::write_comments;
use crate::relations::PermeabilityRelation;
use rayon::prelude::*;
use std::io::Write;

/// Lamé parameters `(λ, μ)` from Young's modulus and Poisson's ratio.
pub fn compute_lame(e: f64, nu: f64) -> Result<(f64, f64)> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::param(format!(
            "Young's modulus {e} must be positive"
        )));
    }
    if !(0.0..0.5).contains(&nu) {
        return Err(Error::Domain(format!(
            "Poisson's ratio {nu} must lie in [0, 0.5)"
        )));
    }
    if 0.5 - nu < 1e-9 {
        return Err(Error::Domain(format!(
            "Poisson's ratio {nu} is at the incompressible limit"
        )));
    }
    Ok((
        nu * e / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        e / (2.0 * (1.0 + nu)),
    ))
}

/// One row of the time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub q_out: f64,
    /// Smallest vertex porosity.
    pub min_theta: f64,
    /// κ/κ(θ₀) at the smallest vertex porosity.
    pub min_kappa_n: f64,
    pub max_abs_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowDiagnostics {
    /// Outflow after every step, m = 1…M.
    pub q_out: Vec<f64>,
    /// Arithmetic mean of `q_out`.
    pub q_out_avg: f64,
}

impl FlowDiagnostics {
    fn from_series(series: &[StepRecord]) -> Self {
        let q_out: Vec<f64> = series.iter().map(|r| r.q_out).collect();
        let q_out_avg = if q_out.is_empty() {
            f64::NAN
        } else {
            q_out.iter().sum::<f64>() / q_out.len() as f64
        };
        Self { q_out, q_out_avg }
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub series: Vec<StepRecord>,
    /// States at the configured snapshot times, in time order.
    pub snapshots: Vec<BiotState>,
    pub last: BiotState,
    pub diagnostics: FlowDiagnostics,
    /// κ(θ₀) used to normalize permeabilities.
    pub kappa0: f64,
}

/// A run stopped by a failing step; everything computed before it is kept.
#[derive(Debug, thiserror::Error)]
#[error("step {step} failed: {source}")]
pub struct RunAborted {
    pub step: usize,
    pub partial: Box<Run>,
    pub source: Error,
}

impl BiotSolver {
    /// κ/κ(θ₀) of a porosity; NaN when the relation fails there.
    fn kappa_n(&self, theta: f64, kappa0: f64) -> f64 {
        self.cfg
            .relation
            .kappa(theta)
            .map_or(f64::NAN, |k| k / kappa0)
    }

    pub fn record(&self, state: &BiotState, kappa0: f64) -> StepRecord {
        let min_theta = state
            .theta_vertex
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        StepRecord {
            t: state.t,
            q_out: self.outflow(state),
            min_theta,
            min_kappa_n: self.kappa_n(min_theta, kappa0),
            max_abs_v: state
                .velocity
                .iter()
                .map(|v| v[0].hypot(v[1]))
                .fold(0.0, f64::max),
        }
    }

    /// Runs all `round(T/τ)` steps from the initial state.
    pub fn run(&self) -> Result<Run, RunAborted> {
        let abort = |step, source| RunAborted {
            step,
            partial: Box::new(Run {
                series: Vec::new(),
                snapshots: Vec::new(),
                last: BiotState {
                    t: 0.0,
                    u: Vec::new(),
                    p: Vec::new(),
                    theta: Vec::new(),
                    theta_vertex: Vec::new(),
                    kappa: Vec::new(),
                    velocity: Vec::new(),
                    degenerate: 0,
                },
                diagnostics: FlowDiagnostics::from_series(&[]),
                kappa0: f64::NAN,
            }),
            source,
        };
        let kappa0 = self.kappa0().map_err(|e| abort(0, e))?;
        let mut state = self.initial_state().map_err(|e| abort(0, e))?;
        let half = 0.5 * self.cfg.tau;
        let wanted = |t: f64| self.cfg.snapshots.iter().any(|s| (s - t).abs() < half);
        let mut snapshots = Vec::new();
        if wanted(0.0) {
            snapshots.push(state.clone());
        }
        let mut series = Vec::with_capacity(self.cfg.steps());
        for m in 1..=self.cfg.steps() {
            match self.step(&state) {
                Ok(next) => state = next,
                Err(source) => {
                    let diagnostics = FlowDiagnostics::from_series(&series);
                    let partial = Run {
                        series,
                        snapshots,
                        last: state,
                        diagnostics,
                        kappa0,
                    };
                    return Err(RunAborted {
                        step: m,
                        partial: Box::new(partial),
                        source,
                    });
                }
            }
            series.push(self.record(&state, kappa0));
            if wanted(state.t) {
                snapshots.push(state.clone());
            }
        }
        let diagnostics = FlowDiagnostics::from_series(&series);
        Ok(Run {
            series,
            snapshots,
            last: state,
            diagnostics,
            kappa0,
        })
    }

    /// Smallest normalized vertex porosity, and the normalized κ there,
    /// over the given vertices.
    fn vertex_minima(
        &self,
        state: &BiotState,
        kappa0: f64,
        vertices: impl Iterator<Item = usize>,
    ) -> (f64, f64) {
        let theta0 = self.cfg.material.porosity;
        let t = vertices
            .map(|v| state.theta_vertex[v])
            .fold(f64::INFINITY, f64::min);
        (t / theta0, self.kappa_n(t, kappa0))
    }

    /// Minima over the vertices of the last cell column before the outlet.
    pub fn outlet_minima(&self, state: &BiotState, kappa0: f64) -> (f64, f64) {
        let mesh = &self.sys.mesh;
        let x_min = mesh.width - mesh.dx() * (1.0 + 1e-9);
        let column = (0..mesh.vertex_count()).filter(|&v| mesh.vertices()[v][0] >= x_min);
        self.vertex_minima(state, kappa0, column)
    }

    /// Minima over the whole domain.
    pub fn global_minima(&self, state: &BiotState, kappa0: f64) -> (f64, f64) {
        self.vertex_minima(state, kappa0, 0..self.sys.n_p())
    }
}

pub const TIME_SERIES_COLUMNS: [&str; 5] = ["t", "Q_out", "min_theta", "min_kappa_n", "max_abs_v"];

pub fn write_time_series<W: Write>(
    mut out: W,
    header: &[String],
    series: &[StepRecord],
) -> Result<()> {
    write_comments(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIME_SERIES_COLUMNS)?;
    for r in series {
        w.serialize((r.t, r.q_out, r.min_theta, r.min_kappa_n, r.max_abs_v))?;
    }
    w.flush()?;
    Ok(())
}

/// Upper end of the admissible threshold range.
pub const MAX_THRESHOLD: f64 = 0.975;

/// `n` evenly spaced thresholds on `[0, 0.975]`.
pub fn threshold_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| MAX_THRESHOLD * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// `None` marks the Kozeny-Carman baseline.
    pub p_c: Option<f64>,
    pub q_out_avg: Option<f64>,
    pub error: Option<String>,
}

/// One full run per threshold with the network-inspired relation, plus a
/// Kozeny-Carman baseline as the first row. Failed runs are reported in
/// their row; the sweep carries on.
pub fn sweep_thresholds(cfg: &SolverConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::param("empty threshold grid"));
    }
    if let Some(p) = grid.iter().find(|p| !(0.0..=MAX_THRESHOLD).contains(*p)) {
        return Err(Error::param(format!(
            "threshold {p} outside [0, {MAX_THRESHOLD}]"
        )));
    }
    let m = &cfg.material;
    let mut jobs = vec![(None, PermeabilityRelation::kozeny_carman(m.grain_diameter)?)];
    for &p_c in grid {
        jobs.push((
            Some(p_c),
            PermeabilityRelation::network_inspired(p_c, m.porosity, m.grain_diameter)?,
        ));
    }
    let rows = jobs
        .into_par_iter()
        .map(|(p_c, relation)| {
            let mut c = cfg.with_relation(relation);
            c.snapshots.clear();
            let outcome = BiotSolver::new(&c)
                .map_err(|e| e.to_string())
                .and_then(|s| {
                    s.run()
                        .map(|r| r.diagnostics.q_out_avg)
                        .map_err(|e| e.to_string())
                });
            match outcome {
                Ok(q) => SweepRow {
                    p_c,
                    q_out_avg: Some(q),
                    error: None,
                },
                Err(e) => SweepRow {
                    p_c,
                    q_out_avg: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    Ok(rows)
}

/// `p_c,Q_out_avg,relation,status`; the baseline row has an empty `p_c`.
pub fn write_sweep<W: Write>(mut out: W, header: &[String], rows: &[SweepRow]) -> Result<()> {
    write_comments(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p_c", "Q_out_avg", "relation", "status"])?;
    for r in rows {
        let relation = if r.p_c.is_some() {
            "network-inspired"
        } else {
            "kozeny-carman"
        };
        let status = r.error.as_deref().unwrap_or("ok");
        w.serialize((r.p_c, r.q_out_avg, relation, status))?;
    }
    w.flush()?;
    Ok(())
}
