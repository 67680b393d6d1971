use super::{Channel, PoreNetwork, Topology};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

/// Axis-aligned domain `[0, width] × [0, height]` (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub width: f64,
    pub height: f64,
}

/// Minimum spacing between random sites, as a fraction of the mean spacing.
const MIN_SPACING_FACTOR: f64 = 0.7;
const MAX_ATTEMPTS_PER_NODE: usize = 5000;

#[derive(Debug, Clone, Copy)]
struct Site {
    id: usize,
    x: f64,
    y: f64,
}

impl HasPosition for Site {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

/// Uniform hash grid used for the minimum-distance test.
struct SiteGrid {
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<[f64; 2]>>,
}

impl SiteGrid {
    fn new(domain: Rect, cell: f64) -> Self {
        let nx = (domain.width / cell).ceil() as usize + 1;
        let ny = (domain.height / cell).ceil() as usize + 1;
        Self {
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        }
    }

    fn key(&self, p: [f64; 2]) -> (usize, usize) {
        let i = ((p[0] / self.cell) as usize).min(self.nx - 1);
        let j = ((p[1] / self.cell) as usize).min(self.ny - 1);
        (i, j)
    }

    fn insert(&mut self, p: [f64; 2]) {
        let (i, j) = self.key(p);
        self.buckets[j * self.nx + i].push(p);
    }

    fn is_clear(&self, p: [f64; 2], min_dist: f64) -> bool {
        let (i, j) = self.key(p);
        let d2 = min_dist * min_dist;
        for jj in j.saturating_sub(1)..=(j + 1).min(self.ny - 1) {
            for ii in i.saturating_sub(1)..=(i + 1).min(self.nx - 1) {
                for q in &self.buckets[jj * self.nx + ii] {
                    if (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) < d2 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Delaunay network over quasi-uniform random sites.
///
/// The boundary carries evenly spaced fixed sites: the left column is the
/// inlet, the right column the outlet, and rows along the top and bottom
/// keep the hull free of long edges. The remaining sites are drawn
/// uniformly and rejected when closer than 0.7 times the mean spacing to
/// an existing site. Every Delaunay edge becomes a channel of its true
/// length. The same seed always gives the same network.
pub fn build_unstructured_triangular(
    target_nodes: usize,
    domain: Rect,
    seed: u64,
    radius: f64,
    theta0: f64,
) -> Result<PoreNetwork> {
    if target_nodes < 4 {
        return Err(Error::param(format!(
            "target_nodes = {target_nodes} must be at least 4"
        )));
    }
    if !(domain.width > 0.0 && domain.height > 0.0 && radius > 0.0) {
        return Err(Error::param("domain and radius must be positive"));
    }
    let (w, h) = (domain.width, domain.height);
    let spacing = (w * h / target_nodes as f64).sqrt();
    let n_col = ((h / spacing).round() as usize).max(2);
    let n_row = ((w / spacing).round() as usize).max(2);

    let mut points: Vec<[f64; 2]> = Vec::with_capacity(target_nodes);
    let mut inlet = Vec::with_capacity(n_col);
    let mut outlet = Vec::with_capacity(n_col);
    for k in 0..n_col {
        let y = h * k as f64 / (n_col - 1) as f64;
        inlet.push(points.len());
        points.push([0.0, y]);
        outlet.push(points.len());
        points.push([w, y]);
    }
    for k in 1..n_row - 1 {
        let x = w * k as f64 / (n_row - 1) as f64;
        points.push([x, 0.0]);
        points.push([x, h]);
    }
    if points.len() > target_nodes {
        return Err(Error::Construction(format!(
            "{} boundary sites exceed target of {target_nodes}",
            points.len()
        )));
    }

    let min_dist = MIN_SPACING_FACTOR * spacing;
    let mut grid = SiteGrid::new(domain, min_dist);
    points.iter().for_each(|&p| grid.insert(p));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior = target_nodes - points.len();
    let mut attempts = 0usize;
    while points.len() < target_nodes {
        attempts += 1;
        if attempts > MAX_ATTEMPTS_PER_NODE * interior.max(1) {
            return Err(Error::Construction(format!(
                "placed only {} of {target_nodes} sites at minimum spacing {min_dist:e}",
                points.len()
            )));
        }
        let p = [rng.random::<f64>() * w, rng.random::<f64>() * h];
        if p[0] <= 0.0 || p[1] <= 0.0 || p[0] >= w || p[1] >= h {
            continue;
        }
        if grid.is_clear(p, min_dist) {
            grid.insert(p);
            points.push(p);
        }
    }

    let mut tri: DelaunayTriangulation<Site> = DelaunayTriangulation::new();
    for (id, p) in points.iter().enumerate() {
        tri.insert(Site {
            id,
            x: p[0],
            y: p[1],
        })
        .map_err(|e| Error::Construction(format!("Delaunay insertion: {e:?}")))?;
    }
    if tri.num_vertices() != points.len() || tri.num_inner_faces() == 0 {
        return Err(Error::Construction("degenerate point set".into()));
    }
    let mut channels: Vec<Channel> = tri
        .undirected_edges()
        .map(|e| {
            let [va, vb] = e.vertices();
            let (a, b) = (va.data().id, vb.data().id);
            let (pa, pb) = (points[a], points[b]);
            let length = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            Channel {
                a: a.min(b),
                b: a.max(b),
                radius,
                length,
                open: true,
            }
        })
        .collect();
    channels.sort_by_key(|c| (c.a, c.b));

    PoreNetwork::new(
        Topology::Unstructured,
        points,
        channels,
        inlet,
        outlet,
        w,
        h,
        theta0,
    )
}
