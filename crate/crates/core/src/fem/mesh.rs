use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// Pump pressure on the left edge pushes the skeleton against the
    /// rigid right edge; top and bottom slide freely.
    HighPumpPressure,
    /// Pump pressure on the left edge plus opposing vertical loads on the
    /// middle of the top and bottom edges; right edge clamped.
    Squeeze,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::HighPumpPressure => "high-pump-pressure",
            Self::Squeeze => "squeeze",
        }
    }

    /// Tag of the outlet (p = 0) segment.
    pub fn outlet_tag(self) -> u8 {
        match self {
            Self::HighPumpPressure => 4,
            Self::Squeeze => 6,
        }
    }

    /// Tag of the injection (p = p_pump) segment.
    pub fn inlet_tag(self) -> u8 {
        match self {
            Self::HighPumpPressure => 2,
            Self::Squeeze => 3,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high-pump-pressure" | "pump" | "1" => Ok(Self::HighPumpPressure),
            "squeeze" | "2" => Ok(Self::Squeeze),
            _ => Err(Error::param(format!("unknown problem kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }
}

/// One boundary edge of a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// P2 node ids: first end, midpoint, second end.
    pub nodes: [usize; 3],
    /// Vertex (pressure) ids of the two ends.
    pub vertices: [usize; 2],
    pub element: usize,
    pub side: Side,
    /// Segment number Γ_k, 1-based, following the problem's layout.
    pub tag: u8,
    pub length: f64,
}

/// Structured triangulation of `[0, L] × [0, H]`.
///
/// Vertices are numbered `j·(nx+1) + i`. P2 nodes live on the grid refined
/// by two and are numbered `J·(2nx+1) + I`, so vertex `(i, j)` is P2 node
/// `(2i, 2j)`. Cell diagonals run lower-left to upper-right below `y = H/2`
/// and upper-left to lower-right above it, which makes the mesh mirror
/// symmetric about the horizontal midline when `ny` is even.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub problem: ProblemKind,
    /// Fraction of the top and bottom edges carrying the squeeze load,
    /// centred on `x = L/2`.
    pub load_fraction: f64,
    vertices: Vec<[f64; 2]>,
    /// Local P2 nodes per triangle, counter-clockwise vertices first.
    triangles: Vec<[usize; 6]>,
    boundary: Vec<BoundaryEdge>,
}

pub const DEFAULT_LOAD_FRACTION: f64 = 0.5;

fn cells(extent: f64, spacing: f64, what: &str) -> Result<usize> {
    if !(extent > 0.0 && spacing > 0.0) {
        return Err(Error::param(format!(
            "{what}: extent and spacing must be positive"
        )));
    }
    let n = (extent / spacing).round();
    if n < 1.0 || (n * spacing - extent).abs() > 1e-9 * extent {
        return Err(Error::param(format!(
            "{what}: spacing {spacing} does not divide {extent}"
        )));
    }
    Ok(n as usize)
}

impl TriMesh {
    pub fn new(width: f64, height: f64, dx: f64, dy: f64, problem: ProblemKind) -> Result<Self> {
        Self::with_load_fraction(width, height, dx, dy, problem, DEFAULT_LOAD_FRACTION)
    }

    pub fn with_load_fraction(
        width: f64,
        height: f64,
        dx: f64,
        dy: f64,
        problem: ProblemKind,
        load_fraction: f64,
    ) -> Result<Self> {
        let nx = cells(width, dx, "x")?;
        let ny = cells(height, dy, "y")?;
        if !(load_fraction > 0.0 && load_fraction < 1.0) {
            return Err(Error::param(format!(
                "load fraction {load_fraction} must lie in (0, 1)"
            )));
        }
        let fx = 2 * nx + 1;
        let node = |ii: usize, jj: usize| jj * fx + ii;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            // the middle row of an odd grid rises as well
            let rising = 2 * j < ny;
            for i in 0..nx {
                let (a, b, c, d) = (
                    (2 * i, 2 * j),
                    (2 * i + 2, 2 * j),
                    (2 * i + 2, 2 * j + 2),
                    (2 * i, 2 * j + 2),
                );
                let tris = if rising {
                    [[a, b, c], [a, c, d]]
                } else {
                    [[a, b, d], [b, c, d]]
                };
                for t in tris {
                    let mid = |p: (usize, usize), q: (usize, usize)| {
                        node((p.0 + q.0) / 2, (p.1 + q.1) / 2)
                    };
                    triangles.push([
                        node(t[0].0, t[0].1),
                        node(t[1].0, t[1].1),
                        node(t[2].0, t[2].1),
                        mid(t[0], t[1]),
                        mid(t[1], t[2]),
                        mid(t[2], t[0]),
                    ]);
                }
            }
        }

        let mut mesh = Self {
            width,
            height,
            nx,
            ny,
            problem,
            load_fraction,
            vertices,
            triangles,
            boundary: Vec::new(),
        };
        let mut boundary = Vec::new();
        for (e, t) in mesh.triangles.iter().enumerate() {
            for (a, b, m) in [(0, 1, 3), (1, 2, 4), (2, 0, 5)] {
                let (pa, pb) = (mesh.node_coords(t[a]), mesh.node_coords(t[b]));
                let side = if pa[1] == 0.0 && pb[1] == 0.0 {
                    Side::Bottom
                } else if pa[1] == height && pb[1] == height {
                    Side::Top
                } else if pa[0] == 0.0 && pb[0] == 0.0 {
                    Side::Left
                } else if pa[0] == width && pb[0] == width {
                    Side::Right
                } else {
                    continue;
                };
                let xm = 0.5 * (pa[0] + pb[0]);
                let tag = mesh.segment_tag(side, xm);
                boundary.push(BoundaryEdge {
                    nodes: [t[a], t[m], t[b]],
                    vertices: [
                        mesh.node_vertex(t[a]).unwrap(),
                        mesh.node_vertex(t[b]).unwrap(),
                    ],
                    element: e,
                    side,
                    tag,
                    length: ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt(),
                });
            }
        }
        mesh.boundary = boundary;
        Ok(mesh)
    }

    /// Loaded interval `[x0, x1]` on the top and bottom edges.
    pub fn load_interval(&self) -> (f64, f64) {
        let half = 0.5 * self.load_fraction * self.width;
        (0.5 * self.width - half, 0.5 * self.width + half)
    }

    fn segment_tag(&self, side: Side, x: f64) -> u8 {
        match self.problem {
            ProblemKind::HighPumpPressure => match side {
                Side::Top => 1,
                Side::Left => 2,
                Side::Bottom => 3,
                Side::Right => 4,
            },
            ProblemKind::Squeeze => {
                let (x0, x1) = self.load_interval();
                let loaded = x0 < x && x < x1;
                match side {
                    Side::Top if loaded => 1,
                    Side::Top => 2,
                    Side::Left => 3,
                    Side::Bottom if loaded => 5,
                    Side::Bottom => 4,
                    Side::Right => 6,
                }
            }
        }
    }

    pub fn dx(&self) -> f64 {
        self.width / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.height / self.ny as f64
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of P2 nodes `n_u`.
    pub fn node_count(&self) -> usize {
        (2 * self.nx + 1) * (2 * self.ny + 1)
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 6]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn node_coords(&self, n: usize) -> [f64; 2] {
        let fx = 2 * self.nx + 1;
        let (ii, jj) = (n % fx, n / fx);
        [
            self.width * ii as f64 / (2 * self.nx) as f64,
            self.height * jj as f64 / (2 * self.ny) as f64,
        ]
    }

    /// Vertex id of a P2 node, if it is a triangle corner.
    pub fn node_vertex(&self, n: usize) -> Option<usize> {
        let fx = 2 * self.nx + 1;
        let (ii, jj) = (n % fx, n / fx);
        (ii % 2 == 0 && jj % 2 == 0).then(|| (jj / 2) * (self.nx + 1) + ii / 2)
    }

    pub fn vertex_node(&self, v: usize) -> usize {
        let (i, j) = (v % (self.nx + 1), v / (self.nx + 1));
        2 * j * (2 * self.nx + 1) + 2 * i
    }

    /// Pressure (vertex) ids of a triangle.
    pub fn triangle_vertices(&self, e: usize) -> [usize; 3] {
        let t = &self.triangles[e];
        [0, 1, 2].map(|k| self.node_vertex(t[k]).expect("corner node"))
    }

    pub fn triangle_points(&self, e: usize) -> [[f64; 2]; 3] {
        let t = &self.triangles[e];
        [0, 1, 2].map(|k| self.node_coords(t[k]))
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let p = self.triangle_points(e);
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }

    /// P2 nodes on one side, ascending.
    pub fn side_nodes(&self, side: Side) -> Vec<usize> {
        let (fx, fy) = (2 * self.nx + 1, 2 * self.ny + 1);
        match side {
            Side::Bottom => (0..fx).collect(),
            Side::Top => (0..fx).map(|i| (fy - 1) * fx + i).collect(),
            Side::Left => (0..fy).map(|j| j * fx).collect(),
            Side::Right => (0..fy).map(|j| j * fx + fx - 1).collect(),
        }
    }

    /// Vertices on one side, ascending.
    pub fn side_vertices(&self, side: Side) -> Vec<usize> {
        self.side_nodes(side)
            .into_iter()
            .filter_map(|n| self.node_vertex(n))
            .collect()
    }

    /// Triangles in the last column of cells, next to the right edge.
    pub fn outlet_column(&self) -> Vec<usize> {
        let x_min = self.width - self.dx();
        (0..self.triangle_count())
            .filter(|&e| self.centroid(e)[0] > x_min)
            .collect()
    }
}
