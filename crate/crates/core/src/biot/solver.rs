//! Monolithic backward-Euler steps of the two-field system
//!
//! ```text
//! [ A    −Bᵀ     ] [uᵐ]   [ h                ]
//! [ B    τC + S  ] [pᵐ] = [ B uᵐ⁻¹ + S pᵐ⁻¹  ]
//! ```
//!
//! with essential conditions removed by row and column elimination.

use super::compute_lame;
use super::config::{Coupling, SolverConfig};
use crate::error::{Error, Result};
use crate::fem::{stabilization_parameter, ProblemKind, Side, TaylorHoodSystem, TriMesh};
use crate::linalg::{check_finite, norm_inf, PatternLdlt, PatternLu};
use crate::relations::porosity_from_dilatation;

#[derive(Debug, Clone, PartialEq)]
pub struct BiotState {
    pub t: f64,
    /// Interleaved displacement coefficients (m).
    pub u: Vec<f64>,
    /// Vertex pressures (Pa).
    pub p: Vec<f64>,
    /// Porosity per triangle, sampled at the centroid; drives κ.
    pub theta: Vec<f64>,
    /// Porosity recovered at the vertices: the dilatation at the vertex,
    /// averaged over the triangles sharing it. Used for reporting.
    pub theta_vertex: Vec<f64>,
    /// Permeability per triangle (m²).
    pub kappa: Vec<f64>,
    /// Darcy velocity per triangle (m/s).
    pub velocity: Vec<[f64; 2]>,
    /// Triangles whose porosity dropped to zero or below.
    pub degenerate: usize,
}

/// Reduced block operator. The displacement blocks are fixed; only the
/// pressure-pressure block changes between solves.
struct BlockSystem {
    n_u2: usize,
    /// Free displacement dofs; they come first in the reduced ordering.
    n_ur: usize,
    /// Reduced index of each full dof, `None` when prescribed.
    free: Vec<Option<usize>>,
    /// Prescribed vertex pressures (zero where free).
    p_dirichlet: Vec<f64>,
    /// Full reduced pattern (nonsymmetric form) and its LU analysis, the
    /// fallback when `LDLᵀ` is inaccurate or breaks down.
    pattern: Vec<(usize, usize)>,
    lu: PatternLu,
    /// Lower triangle of the symmetric form with the mass rows negated;
    /// `lower[k]` is the index into `pattern`.
    ldlt: PatternLdlt,
    lower: Vec<usize>,
    /// Pressure unknowns are solved as `p/scale` and the mass rows are
    /// multiplied by `scale`, which balances the blocks.
    scale: f64,
    /// Values of the displacement-coupled entries, pressure block zeroed.
    base: Vec<f64>,
    /// `(laplacian nnz index, reduced pattern index)` of free pressure pairs.
    pp_slots: Vec<(usize, usize)>,
    /// `(laplacian nnz index, reduced row, vertex)` for free rows against
    /// prescribed pressure columns.
    pp_lift: Vec<(usize, usize, usize)>,
    /// `(reduced u row, vertex, B value)` for the lifted −Bᵀ columns.
    bt_lift: Vec<(usize, usize, f64)>,
    dim: usize,
}

fn fixed_displacement(mesh: &TriMesh) -> Vec<bool> {
    let mut fixed = vec![false; 2 * mesh.node_count()];
    match mesh.problem {
        ProblemKind::HighPumpPressure => {
            for side in [Side::Top, Side::Bottom] {
                for n in mesh.side_nodes(side) {
                    fixed[2 * n + 1] = true;
                }
            }
            for n in mesh.side_nodes(Side::Right) {
                fixed[2 * n] = true;
            }
        }
        ProblemKind::Squeeze => {
            for n in mesh.side_nodes(Side::Right) {
                fixed[2 * n] = true;
                fixed[2 * n + 1] = true;
            }
        }
    }
    fixed
}

impl BlockSystem {
    fn new(sys: &TaylorHoodSystem, p_pump: f64) -> Result<Self> {
        let mesh = &sys.mesh;
        let n_u2 = 2 * sys.n_u();
        let n_p = sys.n_p();
        let mut p_fixed = vec![false; n_p];
        let mut p_dirichlet = vec![0.0; n_p];
        for v in mesh.side_vertices(Side::Left) {
            p_fixed[v] = true;
            p_dirichlet[v] = p_pump;
        }
        for v in mesh.side_vertices(Side::Right) {
            p_fixed[v] = true;
            p_dirichlet[v] = 0.0;
        }
        let fixed: Vec<bool> = fixed_displacement(mesh)
            .into_iter()
            .chain(p_fixed)
            .collect();
        let mut free = vec![None; fixed.len()];
        let mut dim = 0;
        for (k, f) in fixed.iter().enumerate() {
            if !f {
                free[k] = Some(dim);
                dim += 1;
            }
        }

        let scale = sys.a.max_abs() / sys.b.max_abs();
        let mut pattern = Vec::new();
        let mut base = Vec::new();
        for (r, c, v) in sys.a.iter() {
            if let (Some(i), Some(j)) = (free[r], free[c]) {
                pattern.push((i, j));
                base.push(v);
            }
        }
        let mut bt_lift = Vec::new();
        for (q, d, v) in sys.b.iter() {
            match (free[n_u2 + q], free[d]) {
                (Some(i), Some(j)) => {
                    pattern.push((i, j));
                    base.push(scale * v);
                    pattern.push((j, i));
                    base.push(-scale * v);
                }
                (None, Some(j)) => bt_lift.push((j, q, v)),
                _ => {}
            }
        }
        let mut pp_slots = Vec::new();
        let mut pp_lift = Vec::new();
        for (k, (r, c, _)) in sys.laplacian.iter().enumerate() {
            match (free[n_u2 + r], free[n_u2 + c]) {
                (Some(i), Some(j)) => {
                    pp_slots.push((k, pattern.len()));
                    pattern.push((i, j));
                    base.push(0.0);
                }
                (Some(i), None) => pp_lift.push((k, i, c)),
                _ => {}
            }
        }
        let lu = PatternLu::new(dim, &pattern)?;
        let lower: Vec<usize> = (0..pattern.len())
            .filter(|&k| pattern[k].0 >= pattern[k].1)
            .collect();
        let ldlt = PatternLdlt::new(dim, &lower.iter().map(|&k| pattern[k]).collect::<Vec<_>>())?;
        let n_ur = free[..n_u2].iter().flatten().count();
        Ok(Self {
            n_u2,
            n_ur,
            free,
            p_dirichlet,
            pattern,
            lu,
            ldlt,
            lower,
            scale,
            base,
            pp_slots,
            pp_lift,
            bt_lift,
            dim,
        })
    }

    /// Solves with pressure block values `pp` (laplacian pattern) and full
    /// right-hand sides; returns full `(u, p)` with prescribed values in place.
    fn solve(&self, pp: &[f64], rhs_u: &[f64], rhs_p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let s = self.scale;
        let mut values = self.base.clone();
        for &(k, slot) in &self.pp_slots {
            values[slot] = s * s * pp[k];
        }
        let mut rhs = vec![0.0; self.dim];
        for (k, f) in self.free.iter().enumerate() {
            if let Some(i) = f {
                rhs[*i] = if k < self.n_u2 {
                    rhs_u[k]
                } else {
                    s * rhs_p[k - self.n_u2]
                };
            }
        }
        // move prescribed pressure columns to the right-hand side
        for &(i, q, b) in &self.bt_lift {
            rhs[i] += b * self.p_dirichlet[q];
        }
        for &(k, i, c) in &self.pp_lift {
            rhs[i] -= s * pp[k] * self.p_dirichlet[c];
        }
        let x = self.factor_solve(&values, &rhs)?;
        let mut u = vec![0.0; self.n_u2];
        let mut p = self.p_dirichlet.clone();
        for (k, f) in self.free.iter().enumerate() {
            if let Some(i) = f {
                if k < self.n_u2 {
                    u[k] = x[*i];
                } else {
                    p[k - self.n_u2] = s * x[*i];
                }
            }
        }
        Ok((u, p))
    }

    fn residual(&self, values: &[f64], rhs: &[f64], x: &[f64]) -> Vec<f64> {
        let mut r = rhs.to_vec();
        for (&(i, j), v) in self.pattern.iter().zip(values) {
            r[i] -= v * x[j];
        }
        r
    }

    /// `LDLᵀ` of the symmetric form with one refinement step; LU when the
    /// backward error stays above `1e-12`.
    fn factor_solve(&self, values: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let flip = |v: &mut [f64]| v[self.n_ur..].iter_mut().for_each(|x| *x = -*x);
        let sym: Vec<f64> = self
            .lower
            .iter()
            .map(|&k| {
                if self.pattern[k].0 >= self.n_ur {
                    -values[k]
                } else {
                    values[k]
                }
            })
            .collect();
        if let Ok(f) = self.ldlt.factor(&sym) {
            let mut b = rhs.to_vec();
            flip(&mut b);
            let mut x = f.solve(&b);
            for _ in 0..2 {
                if x.iter().any(|v| !v.is_finite()) {
                    break;
                }
                let mut r = self.residual(values, rhs, &x);
                let mut row_norm = vec![0.0; self.dim];
                for (&(i, _), v) in self.pattern.iter().zip(values) {
                    row_norm[i] += v.abs();
                }
                let xn = norm_inf(&x);
                let backward = (0..self.dim)
                    .map(|i| r[i].abs() / (row_norm[i] * xn + rhs[i].abs()).max(f64::MIN_POSITIVE))
                    .fold(0.0, f64::max);
                if backward < 1e-12 {
                    return Ok(x);
                }
                flip(&mut r);
                for (xi, d) in x.iter_mut().zip(f.solve(&r)) {
                    *xi += d;
                }
            }
        }
        let x = self.lu.factor(values)?.solve(rhs);
        check_finite(&x)?;
        Ok(x)
    }
}

/// Assembled problem ready for time stepping.
pub struct BiotSolver {
    pub cfg: SolverConfig,
    pub sys: TaylorHoodSystem,
    /// Stabilization parameter β actually used (0 when switched off).
    pub beta: f64,
    block: BlockSystem,
    local: Vec<[[f64; 3]; 3]>,
    /// Laplacian nnz index of each local pair.
    positions: Vec<[[usize; 3]; 3]>,
}

impl BiotSolver {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let (lambda, mu) = compute_lame(cfg.material.youngs_modulus, cfg.material.poisson_ratio)?;
        let mesh = TriMesh::with_load_fraction(
            cfg.width,
            cfg.height,
            cfg.dx,
            cfg.dy,
            cfg.problem,
            cfg.load_fraction,
        )?;
        let sigma0 = if cfg.problem == ProblemKind::Squeeze {
            cfg.sigma0
        } else {
            0.0
        };
        let sys = TaylorHoodSystem::new(mesh, lambda, mu, cfg.p_pump, sigma0)?;
        let beta = if cfg.stabilization {
            stabilization_parameter(sys.mesh.dx(), sys.mesh.dy(), lambda, mu)
        } else {
            0.0
        };
        let block = BlockSystem::new(&sys, cfg.p_pump)?;
        let ne = sys.mesh.triangle_count();
        let local = (0..ne).map(|e| sys.local_laplacian(e)).collect();
        let positions = (0..ne)
            .map(|e| {
                let v = sys.mesh.triangle_vertices(e);
                [0, 1, 2].map(|i| {
                    [0, 1, 2].map(|j| sys.laplacian.position(v[i], v[j]).expect("pattern"))
                })
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            sys,
            beta,
            block,
            local,
            positions,
        })
    }

    /// κ of the relation at the initial porosity.
    pub fn kappa0(&self) -> Result<f64> {
        self.cfg.relation.kappa(self.cfg.material.porosity)
    }

    /// `u = 0`, pressure equal to the boundary data on the Dirichlet edges
    /// and zero inside.
    pub fn initial_state(&self) -> Result<BiotState> {
        let u = vec![0.0; 2 * self.sys.n_u()];
        let p = self.block.p_dirichlet.clone();
        let ne = self.sys.mesh.triangle_count();
        let kappa = vec![self.kappa0()?; ne];
        let theta = vec![self.cfg.material.porosity; ne];
        let velocity = self.velocity(&p, &kappa);
        let theta_vertex = vec![self.cfg.material.porosity; self.sys.n_p()];
        Ok(BiotState {
            t: 0.0,
            u,
            p,
            theta,
            theta_vertex,
            kappa,
            velocity,
            degenerate: 0,
        })
    }

    fn pressure_block(&self, kappa: &[f64], tau: f64, beta: f64) -> Vec<f64> {
        let mut pp = vec![0.0; self.sys.laplacian.nnz()];
        let eta = self.cfg.material.viscosity;
        for (e, k) in self.local.iter().enumerate() {
            let w = tau * kappa[e] / eta + beta;
            for i in 0..3 {
                for j in 0..3 {
                    pp[self.positions[e][i][j]] += w * k[i][j];
                }
            }
        }
        pp
    }

    /// One block solve with a given per-element κ, time step and
    /// stabilization parameter. `τ = 0` and `β = 0` give the saddle-point
    /// problem.
    pub fn solve_block(
        &self,
        kappa: &[f64],
        tau: f64,
        beta: f64,
        prev: &BiotState,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if kappa.len() != self.sys.mesh.triangle_count() {
            return Err(Error::param("one permeability per triangle required"));
        }
        if let Some(k) = kappa.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
            return Err(Error::param(format!(
                "permeability {k} must be finite and ≥ 0"
            )));
        }
        let pp = self.pressure_block(kappa, tau, beta);
        let mut rhs_p = self.sys.b.mul_vec(&prev.u);
        if beta > 0.0 {
            for (r, s) in rhs_p.iter_mut().zip(self.sys.laplacian.mul_vec(&prev.p)) {
                *r += beta * s;
            }
        }
        self.block.solve(&pp, &self.sys.h, &rhs_p)
    }

    /// Exact `τκ = 0` limit: `A u₀ − Bᵀ p₀ = h`, `B u₀ = B u_prev`.
    pub fn solve_saddle_point(&self, prev: &BiotState) -> Result<(Vec<f64>, Vec<f64>)> {
        let zero = vec![0.0; self.sys.mesh.triangle_count()];
        self.solve_block(&zero, 0.0, 0.0, prev)
    }

    /// Porosity at element centroids, the permeability of the configured
    /// relation, and the count of degenerate triangles.
    pub fn porosity_fields(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let theta0 = self.cfg.material.porosity;
        let ne = self.sys.mesh.triangle_count();
        let mut theta = Vec::with_capacity(ne);
        let mut kappa = Vec::with_capacity(ne);
        let mut degenerate = 0;
        for e in 0..ne {
            let div = self.sys.divergence_at(u, e, [1.0 / 3.0; 3]);
            let th = porosity_from_dilatation(div, theta0);
            let k = self.cfg.relation.evaluate(th)?;
            degenerate += k.degenerate as usize;
            theta.push(th);
            kappa.push(k.kappa);
        }
        Ok((theta, kappa, degenerate))
    }

    pub fn vertex_porosity(&self, u: &[f64]) -> Vec<f64> {
        let mesh = &self.sys.mesh;
        let mut acc = vec![(0.0, 0.0); mesh.vertex_count()];
        for e in 0..mesh.triangle_count() {
            for (k, v) in mesh.triangle_vertices(e).into_iter().enumerate() {
                let mut l = [0.0; 3];
                l[k] = 1.0;
                acc[v].0 += self.sys.divergence_at(u, e, l);
                acc[v].1 += 1.0;
            }
        }
        let theta0 = self.cfg.material.porosity;
        acc.into_iter()
            .map(|(d, n)| porosity_from_dilatation(d / n, theta0))
            .collect()
    }

    /// `v = −(κ/η)∇p` per triangle.
    pub fn velocity(&self, p: &[f64], kappa: &[f64]) -> Vec<[f64; 2]> {
        let eta = self.cfg.material.viscosity;
        (0..self.sys.mesh.triangle_count())
            .map(|e| {
                let g = self.sys.pressure_gradient(p, e);
                [-kappa[e] / eta * g[0], -kappa[e] / eta * g[1]]
            })
            .collect()
    }

    /// Advances one time step.
    pub fn step(&self, state: &BiotState) -> Result<BiotState> {
        let tau = self.cfg.tau;
        let (mut u, mut p) = self.solve_block(&state.kappa, tau, self.beta, state)?;
        let (mut theta, mut kappa, mut degenerate) = self.porosity_fields(&u)?;
        if let Coupling::Picard { max_iter, tol } = self.cfg.coupling {
            let scale = norm_inf(&p).max(self.cfg.p_pump.abs()).max(1.0);
            let mut converged = false;
            for _ in 0..max_iter {
                let (u1, p1) = self.solve_block(&kappa, tau, self.beta, state)?;
                let change = p1
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                u = u1;
                p = p1;
                (theta, kappa, degenerate) = self.porosity_fields(&u)?;
                if change <= tol * scale {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Solver(format!(
                    "Picard coupling did not converge in {max_iter} iterations at t = {}",
                    state.t + tau
                )));
            }
        }
        let velocity = self.velocity(&p, &kappa);
        let theta_vertex = self.vertex_porosity(&u);
        Ok(BiotState {
            t: state.t + tau,
            u,
            p,
            theta,
            theta_vertex,
            kappa,
            velocity,
            degenerate,
        })
    }

    /// Outflow `Σ v·n |e|` over the outlet edges (m³/s per unit depth).
    pub fn outflow(&self, state: &BiotState) -> f64 {
        let outlet = self.sys.mesh.problem.outlet_tag();
        self.sys
            .mesh
            .boundary()
            .iter()
            .filter(|b| b.tag == outlet)
            .map(|b| {
                let n = b.side.outward_normal();
                let v = state.velocity[b.element];
                (v[0] * n[0] + v[1] * n[1]) * b.length
            })
            .sum()
    }
}
