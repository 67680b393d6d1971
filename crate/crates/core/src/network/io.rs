//! Plain-text edge-list format:
//!
//! ```text
//! # topology rectangular
//! nodes N channels M theta0 X
//! id x y            (N lines)
//! a b r l open      (M lines, open is 0 or 1)
//! ```
//!
//! Lines starting with `#` are comments; a `# topology <name>` comment sets
//! the topology tag. Inlet and outlet are the nodes at minimum and maximum
//! x. Floats are written in shortest round-trip form.

use super::{Channel, PoreNetwork, Topology};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub fn write_network<W: Write>(net: &PoreNetwork, mut out: W) -> Result<()> {
    writeln!(out, "# topology {}", net.topology())?;
    writeln!(
        out,
        "nodes {} channels {} theta0 {}",
        net.node_count(),
        net.channel_count(),
        net.theta0()
    )?;
    for (i, p) in net.nodes().iter().enumerate() {
        writeln!(out, "{i} {} {}", p[0], p[1])?;
    }
    for c in net.channels() {
        writeln!(
            out,
            "{} {} {} {} {}",
            c.a,
            c.b,
            c.radius,
            c.length,
            u8::from(c.open)
        )?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: expected {what}")))
}

pub fn read_network<R: BufRead>(input: R) -> Result<PoreNetwork> {
    let mut topology = Topology::Unstructured;
    let mut lines = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("topology") {
                if let Some(name) = it.next() {
                    topology = name.parse()?;
                }
            }
        } else if !trimmed.is_empty() {
            lines.push((k + 1, line));
        }
    }
    let mut it = lines.iter();
    let (hline, header) = it
        .next()
        .ok_or_else(|| Error::Parse("empty network file".into()))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 6 || tok[0] != "nodes" || tok[2] != "channels" || tok[4] != "theta0" {
        return Err(Error::Parse(format!("line {hline}: bad header '{header}'")));
    }
    let n: usize = parse(Some(tok[1]), "node count", *hline)?;
    let m: usize = parse(Some(tok[3]), "channel count", *hline)?;
    let theta0: f64 = parse(Some(tok[5]), "theta0", *hline)?;

    let mut nodes = vec![[0.0; 2]; n];
    for _ in 0..n {
        let (ln, line) = it
            .next()
            .ok_or_else(|| Error::Parse("truncated node list".into()))?;
        let mut t = line.split_whitespace();
        let id: usize = parse(t.next(), "node id", *ln)?;
        if id >= n {
            return Err(Error::Parse(format!(
                "line {ln}: node id {id} out of range"
            )));
        }
        nodes[id] = [parse(t.next(), "x", *ln)?, parse(t.next(), "y", *ln)?];
    }
    let mut channels = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, line) = it
            .next()
            .ok_or_else(|| Error::Parse("truncated channel list".into()))?;
        let mut t = line.split_whitespace();
        let a = parse(t.next(), "endpoint a", *ln)?;
        let b = parse(t.next(), "endpoint b", *ln)?;
        let radius = parse(t.next(), "radius", *ln)?;
        let length = parse(t.next(), "length", *ln)?;
        let open = match t.next() {
            Some("1") => true,
            Some("0") => false,
            _ => return Err(Error::Parse(format!("line {ln}: open flag must be 0 or 1"))),
        };
        channels.push(Channel {
            a,
            b,
            radius,
            length,
            open,
        });
    }
    if let Some((ln, _)) = it.next() {
        return Err(Error::Parse(format!("line {ln}: trailing data")));
    }

    let xmin = nodes.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let xmax = nodes.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let ymin = nodes.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let ymax = nodes.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    let inlet: Vec<usize> = (0..n).filter(|&i| nodes[i][0] == xmin).collect();
    let outlet: Vec<usize> = (0..n).filter(|&i| nodes[i][0] == xmax).collect();
    let cross = if ymax > ymin {
        ymax - ymin
    } else {
        channels.iter().map(|c: &Channel| c.length).sum::<f64>() / m.max(1) as f64
    };
    PoreNetwork::new(
        topology,
        nodes,
        channels,
        inlet,
        outlet,
        xmax - xmin,
        cross,
        theta0,
    )
}
