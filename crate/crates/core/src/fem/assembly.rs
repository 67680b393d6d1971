//! Global Taylor-Hood operators. Displacement dofs are interleaved,
//! `2·node + component`; pressure dofs are vertex ids.

use super::element::{self, Geometry};
use super::mesh::{ProblemKind, Side, TriMesh};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// `β = √(Δx² + Δy²) / (4(λ + 2μ))` (m²/Pa).
pub fn stabilization_parameter(dx: f64, dy: f64, lambda: f64, mu: f64) -> f64 {
    (dx * dx + dy * dy).sqrt() / (4.0 * (lambda + 2.0 * mu))
}

pub fn element_geometry(mesh: &TriMesh) -> Vec<Geometry> {
    (0..mesh.triangle_count())
        .map(|e| Geometry::new(mesh.triangle_points(e)))
        .collect()
}

fn u_dofs(t: &[usize; 6]) -> [usize; 12] {
    let mut d = [0; 12];
    for i in 0..6 {
        d[i] = 2 * t[i];
        d[6 + i] = 2 * t[i] + 1;
    }
    d
}

pub fn assemble_a(mesh: &TriMesh, lambda: f64, mu: f64) -> Result<CsrMatrix> {
    if !(lambda >= 0.0 && mu > 0.0) {
        return Err(Error::param(format!(
            "need λ ≥ 0 and μ > 0, got λ = {lambda}, μ = {mu}"
        )));
    }
    let n = 2 * mesh.node_count();
    let mut trip = Vec::with_capacity(144 * mesh.triangle_count());
    for (e, t) in mesh.triangles().iter().enumerate() {
        let k = element::elasticity(&Geometry::new(mesh.triangle_points(e)), lambda, mu);
        let d = u_dofs(t);
        for i in 0..12 {
            for j in 0..12 {
                trip.push((d[i], d[j], k[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &trip))
}

pub fn assemble_b(mesh: &TriMesh) -> CsrMatrix {
    let mut trip = Vec::with_capacity(36 * mesh.triangle_count());
    for (e, t) in mesh.triangles().iter().enumerate() {
        let b = element::divergence(&Geometry::new(mesh.triangle_points(e)));
        let (v, d) = (mesh.triangle_vertices(e), u_dofs(t));
        for k in 0..3 {
            for j in 0..12 {
                trip.push((v[k], d[j], b[k][j]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.vertex_count(), 2 * mesh.node_count(), &trip)
}

fn weighted_laplacian(mesh: &TriMesh, weight: impl Fn(usize) -> f64) -> CsrMatrix {
    let mut trip = Vec::with_capacity(9 * mesh.triangle_count());
    for e in 0..mesh.triangle_count() {
        let k = element::p1_laplacian(&Geometry::new(mesh.triangle_points(e)));
        let (v, w) = (mesh.triangle_vertices(e), weight(e));
        for i in 0..3 {
            for j in 0..3 {
                trip.push((v[i], v[j], w * k[i][j]));
            }
        }
    }
    let n = mesh.vertex_count();
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Unit-coefficient P1 Laplacian.
pub fn assemble_laplacian(mesh: &TriMesh) -> CsrMatrix {
    weighted_laplacian(mesh, |_| 1.0)
}

/// `Σ_e (κ_e/η) ∫ ∇ψ_i·∇ψ_j` with elementwise-constant κ.
pub fn assemble_c(mesh: &TriMesh, kappa: &[f64], eta: f64) -> Result<CsrMatrix> {
    if kappa.len() != mesh.triangle_count() {
        return Err(Error::param("one permeability per triangle required"));
    }
    if let Some(k) = kappa.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        return Err(Error::param(format!(
            "permeability {k} must be finite and ≥ 0"
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::param("viscosity must be positive"));
    }
    Ok(weighted_laplacian(mesh, |e| kappa[e] / eta))
}

/// `S = β·L` with `L` the unit P1 Laplacian.
pub fn assemble_stabilization(mesh: &TriMesh, beta: f64) -> Result<CsrMatrix> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::param(format!(
            "stabilization parameter {beta} must be ≥ 0"
        )));
    }
    Ok(weighted_laplacian(mesh, |_| beta))
}

// Quadratic edge shapes at parameter s ∈ [0, 1]: first end, midpoint, second end.
fn edge_shapes(s: f64) -> [f64; 3] {
    [
        (1.0 - s) * (1.0 - 2.0 * s),
        4.0 * s * (1.0 - s),
        s * (2.0 * s - 1.0),
    ]
}

/// `∫ φ_k` over the part `[s0, s1]` of an edge of the given length.
fn edge_moments(length: f64, s0: f64, s1: f64) -> [f64; 3] {
    // three-point Gauss-Legendre, exact for the quadratic shapes
    let g = (0.6f64).sqrt();
    let mut out = [0.0; 3];
    for (x, w) in [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)] {
        let s = s0 + 0.5 * (x + 1.0) * (s1 - s0);
        let phi = edge_shapes(s);
        for k in 0..3 {
            out[k] += 0.5 * w * (s1 - s0) * length * phi[k];
        }
    }
    out
}

/// Load vector `h`.
///
/// The pump pressure acts on the injection edge as a normal pressure
/// `−p_pump·n`. For the squeeze problem the top edge carries traction
/// `(0, −σ'₀)` and the bottom edge `(0, σ'₀)` over the loaded interval;
/// edges cut by the interval ends are integrated over the overlap only.
pub fn assemble_loads(mesh: &TriMesh, p_pump: f64, sigma0: f64) -> Result<Vec<f64>> {
    if !(p_pump.is_finite() && sigma0.is_finite()) {
        return Err(Error::param("loads must be finite"));
    }
    let mut h = vec![0.0; 2 * mesh.node_count()];
    let inlet = mesh.problem.inlet_tag();
    let (x0, x1) = mesh.load_interval();
    for edge in mesh.boundary() {
        if edge.tag == inlet {
            let n = edge.side.outward_normal();
            let m = edge_moments(edge.length, 0.0, 1.0);
            for k in 0..3 {
                h[2 * edge.nodes[k]] -= p_pump * n[0] * m[k];
                h[2 * edge.nodes[k] + 1] -= p_pump * n[1] * m[k];
            }
        }
        if mesh.problem == ProblemKind::Squeeze && matches!(edge.side, Side::Top | Side::Bottom) {
            let (xa, xb) = (
                mesh.node_coords(edge.nodes[0])[0],
                mesh.node_coords(edge.nodes[2])[0],
            );
            let (lo, hi) = (xa.min(xb).max(x0), xa.max(xb).min(x1));
            if hi <= lo {
                continue;
            }
            let (s0, s1) = ((lo - xa) / (xb - xa), (hi - xa) / (xb - xa));
            let m = edge_moments(edge.length, s0.min(s1), s0.max(s1));
            let ty = if edge.side == Side::Top {
                -sigma0
            } else {
                sigma0
            };
            for k in 0..3 {
                h[2 * edge.nodes[k] + 1] += ty * m[k];
            }
        }
    }
    Ok(h)
}

/// Mesh plus assembled operators for one problem and material.
#[derive(Debug, Clone)]
pub struct TaylorHoodSystem {
    pub mesh: TriMesh,
    pub lambda: f64,
    pub mu: f64,
    /// Elasticity, `2n_u × 2n_u`.
    pub a: CsrMatrix,
    /// Divergence, `n_p × 2n_u`.
    pub b: CsrMatrix,
    /// Unit P1 Laplacian, `n_p × n_p`.
    pub laplacian: CsrMatrix,
    pub h: Vec<f64>,
    geometry: Vec<Geometry>,
}

impl TaylorHoodSystem {
    pub fn new(mesh: TriMesh, lambda: f64, mu: f64, p_pump: f64, sigma0: f64) -> Result<Self> {
        let a = assemble_a(&mesh, lambda, mu)?;
        let b = assemble_b(&mesh);
        let laplacian = assemble_laplacian(&mesh);
        let h = assemble_loads(&mesh, p_pump, sigma0)?;
        let geometry = element_geometry(&mesh);
        Ok(Self {
            mesh,
            lambda,
            mu,
            a,
            b,
            laplacian,
            h,
            geometry,
        })
    }

    /// Number of P2 nodes.
    pub fn n_u(&self) -> usize {
        self.mesh.node_count()
    }

    /// Number of pressure dofs.
    pub fn n_p(&self) -> usize {
        self.mesh.vertex_count()
    }

    pub fn geometry(&self, e: usize) -> &Geometry {
        &self.geometry[e]
    }

    pub fn c(&self, kappa: &[f64], eta: f64) -> Result<CsrMatrix> {
        assemble_c(&self.mesh, kappa, eta)
    }

    pub fn stabilization(&self, beta: f64) -> Result<CsrMatrix> {
        assemble_stabilization(&self.mesh, beta)
    }

    /// Unit P1 stiffness of element `e`.
    pub fn local_laplacian(&self, e: usize) -> [[f64; 3]; 3] {
        element::p1_laplacian(&self.geometry[e])
    }

    /// `∇·u` at barycentric point `l` of element `e`.
    pub fn divergence_at(&self, u: &[f64], e: usize, l: [f64; 3]) -> f64 {
        let t = &self.mesh.triangles()[e];
        let ux = t.map(|n| u[2 * n]);
        let uy = t.map(|n| u[2 * n + 1]);
        element::p2_divergence(l, &self.geometry[e], &ux, &uy)
    }

    /// Constant pressure gradient on element `e`.
    pub fn pressure_gradient(&self, p: &[f64], e: usize) -> [f64; 2] {
        let v = self.mesh.triangle_vertices(e);
        element::p1_gradient(&self.geometry[e], &v.map(|k| p[k]))
    }
}
