use super::PoreNetwork;
use crate::error::{Error, Result};
use crate::linalg::{check_finite, conjugate_gradient, CsrMatrix, SpdFactor};

/// Reduced systems larger than this many unknowns use conjugate gradients.
pub const DIRECT_SOLVE_LIMIT: usize = 100_000;
const CG_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PressureSolution {
    /// Pa, one per node.
    pub node_pressures: Vec<f64>,
    /// m³/s, positive from `channel.a` towards `channel.b`; zero if closed.
    pub channel_flows: Vec<f64>,
    /// m³/s into the outlet nodes.
    pub total_flow: f64,
}

impl PressureSolution {
    /// Flow in channel `c` leaving `node`, which must be one of its endpoints.
    pub fn flow_from(&self, net: &PoreNetwork, c: usize, node: usize) -> f64 {
        let ch = &net.channels()[c];
        if ch.a == node {
            self.channel_flows[c]
        } else {
            debug_assert_eq!(ch.b, node);
            -self.channel_flows[c]
        }
    }

    /// Net outflow at every node (`Σ_j q_ij`).
    pub fn node_balance(&self, net: &PoreNetwork) -> Vec<f64> {
        let mut bal = vec![0.0; net.node_count()];
        for (ch, &q) in net.channels().iter().zip(&self.channel_flows) {
            bal[ch.a] += q;
            bal[ch.b] -= q;
        }
        bal
    }

    /// Flow leaving the inlet nodes; equals `total_flow` by conservation.
    pub fn inlet_flow(&self, net: &PoreNetwork) -> f64 {
        let mut is_inlet = vec![false; net.node_count()];
        net.inlet().iter().for_each(|&i| is_inlet[i] = true);
        net.channels()
            .iter()
            .zip(&self.channel_flows)
            .map(|(ch, &q)| match (is_inlet[ch.a], is_inlet[ch.b]) {
                (true, false) => q,
                (false, true) => -q,
                _ => 0.0,
            })
            .sum()
    }
}

pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

fn components(net: &PoreNetwork, open: &[bool]) -> DisjointSet {
    let mut ds = DisjointSet::new(net.node_count());
    for (ch, _) in net.channels().iter().zip(open).filter(|(_, &o)| o) {
        ds.union(ch.a, ch.b);
    }
    ds
}

/// True when an open path joins some inlet node to some outlet node.
pub fn percolates(net: &PoreNetwork, open: &[bool]) -> bool {
    let mut ds = components(net, open);
    let mut inlet_roots = vec![false; net.node_count()];
    for &i in net.inlet() {
        let r = ds.find(i);
        inlet_roots[r] = true;
    }
    net.outlet().iter().any(|&o| {
        let r = ds.find(o);
        inlet_roots[r]
    })
}

/// Solves node pressures with the network's own open flags.
pub fn solve_pressure(net: &PoreNetwork, delta_p: f64, eta: f64) -> Result<PressureSolution> {
    solve_pressure_with(net, &net.open_mask(), delta_p, eta)
}

/// Solves mass conservation at every free node with inlet pressure
/// `delta_p` and outlet pressure 0.
///
/// Only components that touch an inlet or outlet node enter the linear
/// system; isolated components keep pressure 0 and carry no flow.
pub fn solve_pressure_with(
    net: &PoreNetwork,
    open: &[bool],
    delta_p: f64,
    eta: f64,
) -> Result<PressureSolution> {
    if !(delta_p > 0.0 && eta > 0.0) {
        return Err(Error::param("delta_p and eta must be positive"));
    }
    if open.len() != net.channel_count() {
        return Err(Error::param(
            "open mask length does not match channel count",
        ));
    }
    let n = net.node_count();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    net.inlet().iter().for_each(|&i| fixed[i] = Some(delta_p));
    net.outlet().iter().for_each(|&i| fixed[i] = Some(0.0));

    let mut ds = components(net, open);
    let mut anchored = vec![false; n];
    for i in 0..n {
        if fixed[i].is_some() {
            let r = ds.find(i);
            anchored[r] = true;
        }
    }
    let mut unknown = vec![usize::MAX; n];
    let mut n_free = 0;
    for i in 0..n {
        if fixed[i].is_none() && anchored[ds.find(i)] {
            unknown[i] = n_free;
            n_free += 1;
        }
    }

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n_free];
    for (ch, _) in net.channels().iter().zip(open).filter(|(_, &o)| o) {
        let g = ch.conductance(eta);
        for (i, j) in [(ch.a, ch.b), (ch.b, ch.a)] {
            let ui = unknown[i];
            if ui == usize::MAX {
                continue;
            }
            triplets.push((ui, ui, g));
            match (unknown[j], fixed[j]) {
                (uj, _) if uj != usize::MAX => triplets.push((ui, uj, -g)),
                (_, Some(pj)) => rhs[ui] += g * pj,
                _ => unreachable!("neighbour of an anchored node is anchored"),
            }
        }
    }

    let mut pressures: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    if n_free > 0 {
        let k = CsrMatrix::from_triplets(n_free, n_free, &triplets);
        let x = if n_free <= DIRECT_SOLVE_LIMIT {
            SpdFactor::new(&k)?.solve(&rhs)
        } else {
            conjugate_gradient(&k, &rhs, CG_TOLERANCE, 20 * n_free)?
        };
        check_finite(&x)?;
        for i in 0..n {
            if unknown[i] != usize::MAX {
                pressures[i] = x[unknown[i]];
            }
        }
    }

    let mut is_outlet = vec![false; n];
    net.outlet().iter().for_each(|&i| is_outlet[i] = true);
    let mut total = 0.0;
    let flows: Vec<f64> = net
        .channels()
        .iter()
        .zip(open)
        .map(|(ch, &o)| {
            if !o {
                return 0.0;
            }
            let q = ch.conductance(eta) * (pressures[ch.a] - pressures[ch.b]);
            match (is_outlet[ch.a], is_outlet[ch.b]) {
                (false, true) => total += q,
                (true, false) => total -= q,
                _ => {}
            }
            q
        })
        .collect();

    Ok(PressureSolution {
        node_pressures: pressures,
        channel_flows: flows,
        total_flow: total,
    })
}

/// Darcy permeability `κ = Q η L / (A Δp)` (m²), with Δp the inlet-minus-
/// outlet pressure so that flowing networks give κ > 0.
pub fn network_permeability(
    net: &PoreNetwork,
    solution: &PressureSolution,
    delta_p: f64,
    eta: f64,
) -> f64 {
    (solution.total_flow * eta * net.span_length() / (net.cross_section() * delta_p)).max(0.0)
}

/// Porosity `θ₀ · V_open / V_total` using the network's own open flags.
pub fn network_porosity(net: &PoreNetwork) -> f64 {
    open_porosity(net, &net.open_mask())
}

pub fn open_porosity(net: &PoreNetwork, open: &[bool]) -> f64 {
    let open_volume: f64 = net
        .channels()
        .iter()
        .zip(open)
        .filter(|(_, &o)| o)
        .map(|(c, _)| c.volume())
        .sum();
    net.theta0() * open_volume / net.total_volume()
}
