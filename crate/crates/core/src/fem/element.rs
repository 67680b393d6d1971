//! Quadratic/linear Lagrange shapes on straight triangles, in barycentric
//! form. Local P2 node order: vertices 0, 1, 2, then midpoints of edges
//! 01, 12, 20.

/// Six-point rule, exact for degree 4, as (L0, L1, L2, weight) with
/// weights summing to 1 (multiply by the area).
pub const QUADRATURE: [(f64, f64, f64, f64); 6] = {
    const A: f64 = 0.445_948_490_915_965;
    const WA: f64 = 0.223_381_589_678_011;
    const B: f64 = 0.091_576_213_509_771;
    const WB: f64 = 0.109_951_743_655_322;
    [
        (A, A, 1.0 - 2.0 * A, WA),
        (A, 1.0 - 2.0 * A, A, WA),
        (1.0 - 2.0 * A, A, A, WA),
        (B, B, 1.0 - 2.0 * B, WB),
        (B, 1.0 - 2.0 * B, B, WB),
        (1.0 - 2.0 * B, B, B, WB),
    ]
};

/// Affine triangle: area and constant barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub area: f64,
    pub grad_l: [[f64; 2]; 3],
}

impl Geometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let [a, b, c] = p;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let grad_l = [
            [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
            [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ];
        Self {
            area: 0.5 * det,
            grad_l,
        }
    }
}

pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

pub fn p2_gradients(l: [f64; 3], g: &Geometry) -> [[f64; 2]; 6] {
    let gl = &g.grad_l;
    let mut out = [[0.0; 2]; 6];
    for k in 0..2 {
        out[0][k] = (4.0 * l[0] - 1.0) * gl[0][k];
        out[1][k] = (4.0 * l[1] - 1.0) * gl[1][k];
        out[2][k] = (4.0 * l[2] - 1.0) * gl[2][k];
        out[3][k] = 4.0 * (l[0] * gl[1][k] + l[1] * gl[0][k]);
        out[4][k] = 4.0 * (l[1] * gl[2][k] + l[2] * gl[1][k]);
        out[5][k] = 4.0 * (l[2] * gl[0][k] + l[0] * gl[2][k]);
    }
    out
}

/// Local elasticity matrix, dofs ordered `[ux0..ux5, uy0..uy5]`.
pub fn elasticity(g: &Geometry, lambda: f64, mu: f64) -> [[f64; 12]; 12] {
    let mut k = [[0.0; 12]; 12];
    for &(l0, l1, l2, w) in &QUADRATURE {
        let dn = p2_gradients([l0, l1, l2], g);
        let wa = w * g.area;
        for i in 0..6 {
            for j in 0..6 {
                let (xi, yi, xj, yj) = (dn[i][0], dn[i][1], dn[j][0], dn[j][1]);
                // λ div·div + 2μ ε:ε, split by component pairs
                k[i][j] += wa * ((lambda + 2.0 * mu) * xi * xj + mu * yi * yj);
                k[i][6 + j] += wa * (lambda * xi * yj + mu * yi * xj);
                k[6 + i][j] += wa * (lambda * yi * xj + mu * xi * yj);
                k[6 + i][6 + j] += wa * ((lambda + 2.0 * mu) * yi * yj + mu * xi * xj);
            }
        }
    }
    k
}

/// Local divergence matrix `∫ ψ_k ∂φ_j/∂x_c`, rows P1 vertices, columns
/// `[ux0..ux5, uy0..uy5]`.
pub fn divergence(g: &Geometry) -> [[f64; 12]; 3] {
    let mut b = [[0.0; 12]; 3];
    for &(l0, l1, l2, w) in &QUADRATURE {
        let dn = p2_gradients([l0, l1, l2], g);
        let psi = [l0, l1, l2];
        for k in 0..3 {
            for j in 0..6 {
                b[k][j] += w * g.area * psi[k] * dn[j][0];
                b[k][6 + j] += w * g.area * psi[k] * dn[j][1];
            }
        }
    }
    b
}

/// P1 stiffness `∫ ∇ψ_i·∇ψ_j`.
pub fn p1_laplacian(g: &Geometry) -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = g.area * (g.grad_l[i][0] * g.grad_l[j][0] + g.grad_l[i][1] * g.grad_l[j][1]);
        }
    }
    k
}

/// Divergence of a P2 field at barycentric point `l`.
pub fn p2_divergence(l: [f64; 3], g: &Geometry, ux: &[f64; 6], uy: &[f64; 6]) -> f64 {
    let dn = p2_gradients(l, g);
    (0..6).map(|i| ux[i] * dn[i][0] + uy[i] * dn[i][1]).sum()
}

/// Gradient of a P1 field (constant on the element).
pub fn p1_gradient(g: &Geometry, p: &[f64; 3]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for i in 0..3 {
        out[0] += p[i] * g.grad_l[i][0];
        out[1] += p[i] * g.grad_l[i][1];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    // Cartesian P2 basis on the reference triangle and its gradient,
    // written out independently of the barycentric form.
    fn ref_shape(i: usize, x: f64, y: f64) -> (f64, [f64; 2]) {
        let s = 1.0 - x - y;
        match i {
            0 => (
                s * (1.0 - 2.0 * x - 2.0 * y),
                [4.0 * x + 4.0 * y - 3.0, 4.0 * x + 4.0 * y - 3.0],
            ),
            1 => (x * (2.0 * x - 1.0), [4.0 * x - 1.0, 0.0]),
            2 => (y * (2.0 * y - 1.0), [0.0, 4.0 * y - 1.0]),
            3 => (4.0 * x * s, [4.0 - 8.0 * x - 4.0 * y, -4.0 * x]),
            4 => (4.0 * x * y, [4.0 * y, 4.0 * x]),
            _ => (4.0 * y * s, [-4.0 * y, 4.0 - 4.0 * x - 8.0 * y]),
        }
    }

    // Collapsed 5×5 Gauss-Legendre over the reference triangle.
    fn collapsed_integral(f: impl Fn(f64, f64) -> f64) -> f64 {
        let (xs, ws) = (
            [
                -0.906_179_845_938_664,
                -0.538_469_310_105_683,
                0.0,
                0.538_469_310_105_683,
                0.906_179_845_938_664,
            ],
            [
                0.236_926_885_056_189,
                0.478_628_670_499_366,
                0.568_888_888_888_889,
                0.478_628_670_499_366,
                0.236_926_885_056_189,
            ],
        );
        let mut sum = 0.0;
        for (a, wa) in xs.iter().zip(ws) {
            for (b, wb) in xs.iter().zip(ws) {
                let u = 0.5 * (a + 1.0);
                let v = 0.5 * (b + 1.0);
                let (x, y) = (u, v * (1.0 - u));
                sum += 0.25 * wa * wb * (1.0 - u) * f(x, y);
            }
        }
        sum
    }

    #[test]
    fn quadrature_degree_four() {
        let w: f64 = QUADRATURE.iter().map(|q| q.3).sum();
        assert!((w - 1.0).abs() < 1e-14);
        // ∫ x^a y^b over the reference triangle = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q: f64 = QUADRATURE
                    .iter()
                    .map(|&(_, l1, l2, w)| 0.5 * w * l1.powi(a as i32) * l2.powi(b as i32))
                    .sum();
                assert!((q - exact).abs() < 1e-14, "x^{a} y^{b}");
            }
        }
    }

    #[test]
    fn shapes_match_cartesian_form() {
        let g = Geometry::new(REF);
        for &(l0, l1, l2, _) in &QUADRATURE {
            let v = p2_values([l0, l1, l2]);
            let d = p2_gradients([l0, l1, l2], &g);
            for i in 0..6 {
                let (rv, rd) = ref_shape(i, l1, l2);
                assert!((v[i] - rv).abs() < 1e-14);
                assert!((d[i][0] - rd[0]).abs() < 1e-13 && (d[i][1] - rd[1]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn reference_p2_laplacian() {
        // Known P2 stiffness on the unit right triangle.
        let exact = [
            [1.0, 1.0 / 6.0, 1.0 / 6.0, -2.0 / 3.0, 0.0, -2.0 / 3.0],
            [1.0 / 6.0, 0.5, 0.0, -2.0 / 3.0, 0.0, 0.0],
            [1.0 / 6.0, 0.0, 0.5, 0.0, 0.0, -2.0 / 3.0],
            [-2.0 / 3.0, -2.0 / 3.0, 0.0, 8.0 / 3.0, -4.0 / 3.0, 0.0],
            [0.0, 0.0, 0.0, -4.0 / 3.0, 8.0 / 3.0, -4.0 / 3.0],
            [-2.0 / 3.0, 0.0, -2.0 / 3.0, 0.0, -4.0 / 3.0, 8.0 / 3.0],
        ];
        // λ = 0, μ = 1: the xx block is 2Kxx + Kyy, the yy block Kxx + 2Kyy,
        // so their sum is 3K.
        let k = elasticity(&Geometry::new(REF), 0.0, 1.0);
        for i in 0..6 {
            for j in 0..6 {
                assert!((k[i][j] + k[6 + i][6 + j] - 3.0 * exact[i][j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn elasticity_matches_independent_integration() {
        let (lambda, mu) = (2.5, 1.25);
        let k = elasticity(&Geometry::new(REF), lambda, mu);
        for i in 0..6 {
            for j in 0..6 {
                let entry = |ci: usize, cj: usize| {
                    collapsed_integral(|x, y| {
                        let (_, gi) = ref_shape(i, x, y);
                        let (_, gj) = ref_shape(j, x, y);
                        // u = φ_i e_ci, w = φ_j e_cj
                        let div = gi[ci] * gj[cj];
                        let mut eps = 0.0;
                        for a in 0..2 {
                            for b in 0..2 {
                                let eu = 0.5
                                    * (if a == ci { gi[b] } else { 0.0 }
                                        + if b == ci { gi[a] } else { 0.0 });
                                let ew = 0.5
                                    * (if a == cj { gj[b] } else { 0.0 }
                                        + if b == cj { gj[a] } else { 0.0 });
                                eps += eu * ew;
                            }
                        }
                        lambda * div + 2.0 * mu * eps
                    })
                };
                for (ci, cj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    assert!(
                        (k[6 * ci + i][6 * cj + j] - entry(ci, cj)).abs() < 1e-12,
                        "{ci}{cj} {i} {j}"
                    );
                }
            }
        }
    }

    #[test]
    fn divergence_matches_independent_integration() {
        let b = divergence(&Geometry::new(REF));
        for k in 0..3 {
            let psi = |x: f64, y: f64| [1.0 - x - y, x, y][k];
            for j in 0..6 {
                for c in 0..2 {
                    let exact = collapsed_integral(|x, y| psi(x, y) * ref_shape(j, x, y).1[c]);
                    assert!((b[k][6 * c + j] - exact).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn rigid_motion_has_no_energy() {
        let g = Geometry::new([[0.3, 0.1], [1.1, 0.4], [0.2, 0.9]]);
        assert!(g.area > 0.0);
        let k = elasticity(&g, 3.0, 2.0);
        let pts = [
            [0.3, 0.1],
            [1.1, 0.4],
            [0.2, 0.9],
            [0.7, 0.25],
            [0.65, 0.65],
            [0.25, 0.5],
        ];
        // translation and infinitesimal rotation
        for mode in 0..3 {
            let mut u = [0.0; 12];
            for i in 0..6 {
                let (ux, uy) = match mode {
                    0 => (1.0, 0.0),
                    1 => (0.0, 1.0),
                    _ => (-pts[i][1], pts[i][0]),
                };
                u[i] = ux;
                u[6 + i] = uy;
            }
            for row in k.iter() {
                let r: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
                assert!(r.abs() < 1e-12);
            }
        }
    }
}
