#![allow(dead_code)]

use poroperm::biot::{BiotSolver, SolverConfig};
use poroperm::fem::ProblemKind;
use poroperm::network::{percolates, solve_pressure_with, Channel, PoreNetwork};
use poroperm::relations::PermeabilityRelation;

pub const ETA: f64 = 1e-3;
pub const DELTA_P: f64 = 1.0;

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Same network with new channel radii.
pub fn with_radii(net: &PoreNetwork, radii: &[f64]) -> PoreNetwork {
    let channels: Vec<Channel> = net
        .channels()
        .iter()
        .zip(radii)
        .map(|(c, &radius)| Channel { radius, ..*c })
        .collect();
    PoreNetwork::new(
        net.topology(),
        net.nodes().to_vec(),
        channels,
        net.inlet().to_vec(),
        net.outlet().to_vec(),
        net.span_length(),
        net.cross_section(),
        net.theta0(),
    )
    .unwrap()
}

/// Node pressures of a fully open, connected network by dense elimination
/// of the conductance Laplacian with pinned inlet/outlet rows.
pub fn dense_network_pressures(net: &PoreNetwork) -> Vec<f64> {
    let n = net.node_count();
    let mut k = vec![vec![0.0; n]; n];
    for ch in net.channels() {
        let g = ch.conductance(ETA);
        k[ch.a][ch.a] += g;
        k[ch.b][ch.b] += g;
        k[ch.a][ch.b] -= g;
        k[ch.b][ch.a] -= g;
    }
    let mut rhs = vec![0.0; n];
    for (nodes, value) in [(net.inlet(), DELTA_P), (net.outlet(), 0.0)] {
        for &i in nodes {
            k[i] = vec![0.0; n];
            k[i][i] = 1.0;
            rhs[i] = value;
        }
    }
    dense_solve(k, rhs)
}

/// Largest interior-node imbalance relative to the total flow.
pub fn conservation_error(net: &PoreNetwork, open: &[bool]) -> f64 {
    if !percolates(net, open) {
        return 0.0;
    }
    let sol = solve_pressure_with(net, open, DELTA_P, ETA).unwrap();
    let mut boundary = vec![false; net.node_count()];
    net.inlet()
        .iter()
        .chain(net.outlet())
        .for_each(|&i| boundary[i] = true);
    let worst = sol
        .node_balance(net)
        .iter()
        .zip(&boundary)
        .filter(|(_, &b)| !b)
        .fold(0.0f64, |m, (q, _)| m.max(q.abs()));
    let inlet_mismatch = (sol.inlet_flow(net) - sol.total_flow).abs();
    worst.max(inlet_mismatch) / sol.total_flow
}

pub fn total_flow(net: &PoreNetwork, open: &[bool]) -> f64 {
    if !percolates(net, open) {
        return 0.0;
    }
    solve_pressure_with(net, open, DELTA_P, ETA)
        .unwrap()
        .total_flow
}

/// Counts pairs (mask, mask + one channel) where opening the channel lowers
/// the flow, over every open/closed mask of the network.
pub fn exhaustive_rayleigh_violations(net: &PoreNetwork) -> usize {
    let m = net.channel_count();
    assert!(m <= 20, "too many channels for an exhaustive check");
    let mask = |bits: usize| -> Vec<bool> { (0..m).map(|c| bits >> c & 1 == 1).collect() };
    let flows: Vec<f64> = (0..1usize << m)
        .map(|bits| total_flow(net, &mask(bits)))
        .collect();
    let mut violations = 0;
    for bits in 0..1usize << m {
        for c in (0..m).filter(|c| bits >> c & 1 == 0) {
            if flows[bits | 1 << c] < flows[bits] * (1.0 - 1e-12) {
                violations += 1;
            }
        }
    }
    violations
}

/// One backward-Euler step on a 2 × 1 cell mesh against dense
/// elimination of the full block system with identity rows for
/// essential conditions. Returns the relative errors in u and p.
pub fn fem_step_oracle_error(problem: ProblemKind, kappa: f64) -> (f64, f64) {
    let mut cfg = SolverConfig::reference(problem, 1.0);
    cfg.t_end = 0.5;
    cfg.snapshots.clear();
    let cfg = cfg.with_relation(PermeabilityRelation::constant(kappa).unwrap());
    let solver = BiotSolver::new(&cfg).unwrap();
    let s = &solver.sys;
    let (nu2, np) = (2 * s.n_u(), s.n_p());
    let n = nu2 + np;
    let (tau, eta, beta) = (cfg.tau, cfg.material.viscosity, solver.beta);

    let mut k = vec![vec![0.0; n]; n];
    for (r, c, v) in s.a.iter() {
        k[r][c] += v;
    }
    for (r, c, v) in s.b.iter() {
        k[nu2 + r][c] += v;
        k[c][nu2 + r] -= v;
    }
    for (r, c, v) in s.laplacian.iter() {
        k[nu2 + r][nu2 + c] += (tau * kappa / eta + beta) * v;
    }
    let prev = solver.initial_state().unwrap();
    let mut rhs: Vec<f64> = s.h.clone();
    let lp = s.laplacian.mul_vec(&prev.p);
    rhs.extend(
        s.b.mul_vec(&prev.u)
            .iter()
            .zip(&lp)
            .map(|(a, b)| a + beta * b),
    );

    let mesh = &s.mesh;
    let mut pin = |dof: usize, value: f64| {
        k[dof] = vec![0.0; n];
        k[dof][dof] = 1.0;
        rhs[dof] = value;
    };
    for node in 0..mesh.node_count() {
        let [x, y] = mesh.node_coords(node);
        let right = x == cfg.width;
        match problem {
            ProblemKind::HighPumpPressure => {
                if right {
                    pin(2 * node, 0.0);
                }
                if y == 0.0 || y == cfg.height {
                    pin(2 * node + 1, 0.0);
                }
            }
            ProblemKind::Squeeze => {
                if right {
                    pin(2 * node, 0.0);
                    pin(2 * node + 1, 0.0);
                }
            }
        }
    }
    for (v, [x, _]) in mesh.vertices().iter().enumerate() {
        if *x == 0.0 {
            pin(nu2 + v, cfg.p_pump);
        } else if *x == cfg.width {
            pin(nu2 + v, 0.0);
        }
    }
    let x = dense_solve(k, rhs);
    let next = solver.step(&prev).unwrap();
    let scale_u = x[..nu2].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eu = (0..nu2)
        .map(|i| (next.u[i] - x[i]).abs())
        .fold(0.0, f64::max)
        / scale_u;
    let ep = (0..np)
        .map(|i| (next.p[i] - x[nu2 + i]).abs())
        .fold(0.0, f64::max)
        / cfg.p_pump;
    (eu, ep)
}

/// Largest relative mismatch between the pump-problem solution and its
/// reflection about `y = H/2`.
pub fn mirror_error(spacing: f64, t_end: f64) -> f64 {
    let mut cfg = SolverConfig::reference(ProblemKind::HighPumpPressure, spacing);
    cfg.t_end = t_end;
    cfg.snapshots.clear();
    let solver = BiotSolver::new(&cfg).unwrap();
    let run = solver.run().unwrap();
    let mesh = &solver.sys.mesh;
    let (nx, ny) = (mesh.nx, mesh.ny);
    let (u, p) = (&run.last.u, &run.last.p);
    let p_scale = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let u_scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for j in 0..=ny {
        for i in 0..=nx {
            let (a, b) = (j * (nx + 1) + i, (ny - j) * (nx + 1) + i);
            let (na, nb) = (mesh.vertex_node(a), mesh.vertex_node(b));
            worst = worst
                .max((p[a] - p[b]).abs() / p_scale)
                .max((u[2 * na] - u[2 * nb]).abs() / u_scale)
                .max((u[2 * na + 1] + u[2 * nb + 1]).abs() / u_scale);
        }
    }
    worst
}
