//! Two-dimensional pore networks: straight cylindrical channels between
//! nodes, a pressure drop imposed from the inlet column to the outlet column.

mod flow;
mod io;
mod unstructured;

pub use flow::{
    network_permeability, network_porosity, open_porosity, percolates, solve_pressure,
    solve_pressure_with, PressureSolution, DIRECT_SOLVE_LIMIT,
};
pub use io::{read_network, write_network};
pub use unstructured::{build_unstructured_triangular, Rect};

use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

/// Default channel radius (m). Normalized outputs do not depend on it.
pub const DEFAULT_RADIUS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Rectangular,
    Triangular,
    Unstructured,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Rectangular => "rectangular",
            Topology::Triangular => "triangular",
            Topology::Unstructured => "unstructured",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangular" => Ok(Topology::Rectangular),
            "triangular" => Ok(Topology::Triangular),
            "unstructured" | "triangular-unstructured" => Ok(Topology::Unstructured),
            other => Err(Error::param(format!("unknown topology '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub a: usize,
    pub b: usize,
    /// m
    pub radius: f64,
    /// m
    pub length: f64,
    pub open: bool,
}

impl Channel {
    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius * self.length
    }

    /// Poiseuille conductance `π r⁴ / (8 η l)`.
    pub fn conductance(&self, eta: f64) -> f64 {
        std::f64::consts::PI * self.radius.powi(4) / (8.0 * eta * self.length)
    }
}

/// A validated pore network. Immutable once built, except through
/// [`PoreNetwork::with_open`] which returns a copy.
#[derive(Debug, Clone, PartialEq)]
pub struct PoreNetwork {
    topology: Topology,
    nodes: Vec<[f64; 2]>,
    channels: Vec<Channel>,
    inlet: Vec<usize>,
    outlet: Vec<usize>,
    span_length: f64,
    cross_section: f64,
    theta0: f64,
}

impl PoreNetwork {
    /// Validates and assembles a network.
    ///
    /// `span_length` is the inlet-to-outlet distance L and `cross_section`
    /// the transverse extent times unit depth A, both used by Darcy's law.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        topology: Topology,
        nodes: Vec<[f64; 2]>,
        channels: Vec<Channel>,
        inlet: Vec<usize>,
        outlet: Vec<usize>,
        span_length: f64,
        cross_section: f64,
        theta0: f64,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut seen = HashSet::with_capacity(channels.len());
        for (k, ch) in channels.iter().enumerate() {
            if ch.a >= n || ch.b >= n || ch.a == ch.b {
                return Err(Error::Construction(format!(
                    "channel {k} has invalid endpoints"
                )));
            }
            if !(ch.radius > 0.0 && ch.length > 0.0) {
                return Err(Error::Construction(format!(
                    "channel {k} has non-positive geometry"
                )));
            }
            if !seen.insert((ch.a.min(ch.b), ch.a.max(ch.b))) {
                return Err(Error::Construction(format!(
                    "duplicate channel {}-{}",
                    ch.a, ch.b
                )));
            }
        }
        if inlet.is_empty() || outlet.is_empty() {
            return Err(Error::Construction(
                "inlet and outlet sets must be nonempty".into(),
            ));
        }
        let inlet_set: HashSet<_> = inlet.iter().copied().collect();
        if inlet.iter().chain(&outlet).any(|&i| i >= n) {
            return Err(Error::Construction("boundary node id out of range".into()));
        }
        if outlet.iter().any(|i| inlet_set.contains(i)) {
            return Err(Error::Construction("inlet and outlet sets overlap".into()));
        }
        if channels.is_empty() {
            return Err(Error::Construction("network has no channels".into()));
        }
        if !(span_length > 0.0 && cross_section > 0.0) {
            return Err(Error::Construction(
                "span length and cross section must be positive".into(),
            ));
        }
        if !(theta0 > 0.0 && theta0 < 1.0) {
            return Err(Error::param(format!(
                "initial porosity {theta0} not in (0, 1)"
            )));
        }
        Ok(Self {
            topology,
            nodes,
            channels,
            inlet,
            outlet,
            span_length,
            cross_section,
            theta0,
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn inlet(&self) -> &[usize] {
        &self.inlet
    }

    pub fn outlet(&self) -> &[usize] {
        &self.outlet
    }

    pub fn span_length(&self) -> f64 {
        self.span_length
    }

    pub fn cross_section(&self) -> f64 {
        self.cross_section
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Σ π r² l over all channels.
    pub fn total_volume(&self) -> f64 {
        self.channels.iter().map(Channel::volume).sum()
    }

    pub fn open_mask(&self) -> Vec<bool> {
        self.channels.iter().map(|c| c.open).collect()
    }

    /// Copy of this network with the given open flags.
    pub fn with_open(&self, open: &[bool]) -> Result<Self> {
        if open.len() != self.channels.len() {
            return Err(Error::param(
                "open mask length does not match channel count",
            ));
        }
        let mut out = self.clone();
        for (ch, &o) in out.channels.iter_mut().zip(open) {
            ch.open = o;
        }
        Ok(out)
    }

    /// Number of channels touching each node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for ch in &self.channels {
            deg[ch.a] += 1;
            deg[ch.b] += 1;
        }
        deg
    }

    /// Same network with every channel radius and length multiplied.
    pub fn rescaled(&self, radius_factor: f64, length_factor: f64) -> Self {
        let mut out = self.clone();
        for ch in &mut out.channels {
            ch.radius *= radius_factor;
            ch.length *= length_factor;
        }
        for n in &mut out.nodes {
            n[0] *= length_factor;
            n[1] *= length_factor;
        }
        out.span_length *= length_factor;
        out.cross_section *= length_factor;
        out
    }
}

fn check_grid(nx: usize, ny: usize, spacing: f64, radius: f64) -> Result<()> {
    if nx < 2 || ny < 1 {
        return Err(Error::param(format!(
            "grid {nx}x{ny} needs nx >= 2 and ny >= 1"
        )));
    }
    if !(spacing > 0.0 && radius > 0.0) {
        return Err(Error::param("spacing and radius must be positive"));
    }
    Ok(())
}

fn grid_nodes(nx: usize, ny: usize, spacing: f64) -> Vec<[f64; 2]> {
    (0..ny)
        .flat_map(|j| (0..nx).map(move |i| [i as f64 * spacing, j as f64 * spacing]))
        .collect()
}

fn grid_channels(nx: usize, ny: usize, spacing: f64, radius: f64) -> Vec<Channel> {
    let id = |i: usize, j: usize| j * nx + i;
    let mut channels = Vec::with_capacity(ny * (nx - 1) + nx * (ny - 1));
    let edge = |a, b| Channel {
        a,
        b,
        radius,
        length: spacing,
        open: true,
    };
    for j in 0..ny {
        for i in 0..nx - 1 {
            channels.push(edge(id(i, j), id(i + 1, j)));
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            channels.push(edge(id(i, j), id(i, j + 1)));
        }
    }
    channels
}

fn grid_network(
    topology: Topology,
    nx: usize,
    ny: usize,
    spacing: f64,
    channels: Vec<Channel>,
    theta0: f64,
) -> Result<PoreNetwork> {
    let inlet = (0..ny).map(|j| j * nx).collect();
    let outlet = (0..ny).map(|j| j * nx + nx - 1).collect();
    let span = (nx - 1) as f64 * spacing;
    let transverse = if ny > 1 {
        (ny - 1) as f64 * spacing
    } else {
        spacing
    };
    PoreNetwork::new(
        topology,
        grid_nodes(nx, ny, spacing),
        channels,
        inlet,
        outlet,
        span,
        transverse,
        theta0,
    )
}

/// Axis-aligned `nx × ny` grid; left column is the inlet, right the outlet.
pub fn build_rectangular(
    nx: usize,
    ny: usize,
    spacing: f64,
    radius: f64,
    theta0: f64,
) -> Result<PoreNetwork> {
    check_grid(nx, ny, spacing, radius)?;
    let channels = grid_channels(nx, ny, spacing, radius);
    grid_network(Topology::Rectangular, nx, ny, spacing, channels, theta0)
}

/// Rectangular grid plus one diagonal per cell, alternating so that every
/// other node collects four diagonals (coordination 8) and the rest none
/// (coordination 4).
pub fn build_triangular(
    nx: usize,
    ny: usize,
    spacing: f64,
    radius: f64,
    theta0: f64,
) -> Result<PoreNetwork> {
    check_grid(nx, ny, spacing, radius)?;
    let id = |i: usize, j: usize| j * nx + i;
    let mut channels = grid_channels(nx, ny, spacing, radius);
    let length = spacing * std::f64::consts::SQRT_2;
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx - 1 {
            let (a, b) = if (i + j) % 2 == 0 {
                (id(i, j), id(i + 1, j + 1))
            } else {
                (id(i + 1, j), id(i, j + 1))
            };
            channels.push(Channel {
                a,
                b,
                radius,
                length,
                open: true,
            });
        }
    }
    grid_network(Topology::Triangular, nx, ny, spacing, channels, theta0)
}

/// Builds a network of the requested topology with the default geometry
/// (unit spacing, [`DEFAULT_RADIUS`]). Unstructured networks use a domain
/// with the same aspect ratio as the `nx × ny` grid and `nx·ny·1.1535`
/// target nodes, which maps 100×60 onto 6921 nodes.
pub fn build_topology(
    topology: Topology,
    nx: usize,
    ny: usize,
    theta0: f64,
    seed: u64,
) -> Result<PoreNetwork> {
    let spacing = 1e-4;
    match topology {
        Topology::Rectangular => build_rectangular(nx, ny, spacing, DEFAULT_RADIUS, theta0),
        Topology::Triangular => build_triangular(nx, ny, spacing, DEFAULT_RADIUS, theta0),
        Topology::Unstructured => {
            check_grid(nx, ny, spacing, DEFAULT_RADIUS)?;
            let target = unstructured_target(nx, ny);
            let domain = Rect {
                width: (nx - 1) as f64 * spacing,
                height: (ny.max(2) - 1) as f64 * spacing,
            };
            build_unstructured_triangular(target, domain, seed, DEFAULT_RADIUS, theta0)
        }
    }
}

/// Node count used for an unstructured network standing in for an
/// `nx × ny` grid.
pub fn unstructured_target(nx: usize, ny: usize) -> usize {
    ((nx * ny) as f64 * 6921.0 / 6000.0).round() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_counts() {
        let n = build_rectangular(2, 1, 1.0, 0.1, 0.4).unwrap();
        assert_eq!((n.node_count(), n.channel_count()), (2, 1));
        let n = build_rectangular(3, 2, 1.0, 0.1, 0.4).unwrap();
        assert_eq!((n.node_count(), n.channel_count()), (6, 7));
        let n = build_rectangular(100, 60, 1.0, 0.1, 0.4).unwrap();
        assert_eq!(n.channel_count(), 11840);
        assert_eq!(n.inlet().len(), 60);
        assert_eq!(n.outlet().len(), 60);
    }

    #[test]
    fn rectangular_count_matches_enumeration() {
        for nx in 2..7 {
            for ny in 1..6 {
                let net = build_rectangular(nx, ny, 1.0, 0.1, 0.4).unwrap();
                let mut count = 0;
                for a in 0..nx * ny {
                    for b in a + 1..nx * ny {
                        let (pa, pb) = (net.nodes()[a], net.nodes()[b]);
                        let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
                        if (d - 1.0).abs() < 1e-12 {
                            count += 1;
                        }
                    }
                }
                assert_eq!(net.channel_count(), count);
                assert_eq!(count, ny * (nx - 1) + nx * (ny - 1));
            }
        }
    }

    #[test]
    fn interior_rectangular_nodes_have_degree_four() {
        let net = build_rectangular(6, 5, 1.0, 0.1, 0.4).unwrap();
        let deg = net.degrees();
        for j in 1..4 {
            for i in 1..5 {
                assert_eq!(deg[j * 6 + i], 4);
            }
        }
    }

    #[test]
    fn triangular_coordination_alternates() {
        let net = build_triangular(2, 2, 1.0, 0.1, 0.4).unwrap();
        assert_eq!(net.node_count(), 4);
        assert!(net
            .channels()
            .iter()
            .any(|c| (c.length - 2f64.sqrt()).abs() < 1e-12));

        let (nx, ny) = (9, 7);
        let net = build_triangular(nx, ny, 1.0, 0.1, 0.4).unwrap();
        let deg = net.degrees();
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let expected = if (i + j) % 2 == 0 { 8 } else { 4 };
                assert_eq!(deg[j * nx + i], expected, "node ({i},{j})");
            }
        }
        assert_eq!(
            net.channel_count(),
            ny * (nx - 1) + nx * (ny - 1) + (nx - 1) * (ny - 1)
        );
    }

    #[test]
    fn invalid_dimensions_rejected() {
        assert!(matches!(
            build_rectangular(1, 3, 1.0, 0.1, 0.4),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_rectangular(3, 0, 1.0, 0.1, 0.4),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_triangular(3, 3, 0.0, 0.1, 0.4),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            build_triangular(3, 3, 1.0, -0.1, 0.4),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn validation_catches_bad_channels() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let ch = |a, b| Channel {
            a,
            b,
            radius: 1.0,
            length: 1.0,
            open: true,
        };
        let mk = |channels: Vec<Channel>, inlet: Vec<usize>, outlet: Vec<usize>| {
            PoreNetwork::new(
                Topology::Rectangular,
                nodes.clone(),
                channels,
                inlet,
                outlet,
                2.0,
                1.0,
                0.4,
            )
        };
        assert!(mk(vec![ch(0, 1), ch(1, 2)], vec![0], vec![2]).is_ok());
        assert!(mk(vec![ch(0, 1), ch(1, 0)], vec![0], vec![2]).is_err());
        assert!(mk(vec![ch(0, 0)], vec![0], vec![2]).is_err());
        assert!(mk(vec![ch(0, 3)], vec![0], vec![2]).is_err());
        assert!(mk(vec![ch(0, 1)], vec![0], vec![0]).is_err());
        assert!(mk(vec![ch(0, 1)], vec![], vec![2]).is_err());
        let mut bad = ch(0, 1);
        bad.radius = 0.0;
        assert!(mk(vec![bad], vec![0], vec![2]).is_err());
    }

    #[test]
    fn topology_names_round_trip() {
        for t in [
            Topology::Rectangular,
            Topology::Triangular,
            Topology::Unstructured,
        ] {
            assert_eq!(t.name().parse::<Topology>().unwrap(), t);
        }
        assert!("cubic".parse::<Topology>().is_err());
    }
}
