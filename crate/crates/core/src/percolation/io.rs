//! CSV output. Each writer first emits the caller's header lines as `#`
//! comments, then a column header row. Readers skip `#` lines.

use super::{BinStats, ThresholdEstimate, TrialRecord, BIN_HALF_WIDTH};
use crate::error::{Error, Result};
use crate::network::Topology;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub(crate) fn write_comments<W: Write>(out: &mut W, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RecordRow {
    topology: String,
    stage_fraction: f64,
    trial: usize,
    f_c: f64,
    kappa_n: f64,
    seed: u64,
}

pub fn write_records<W: Write>(
    mut out: W,
    header: &[String],
    topology: Topology,
    records: &[TrialRecord],
) -> Result<()> {
    write_comments(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(RecordRow {
            topology: topology.name().to_string(),
            stage_fraction: r.stage_fraction,
            trial: r.trial,
            f_c: r.f_c,
            kappa_n: r.kappa_n,
            seed: r.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a records CSV; returns the topology of the rows (all rows must
/// agree) and the records.
pub fn read_records<R: Read>(input: R) -> Result<(Topology, Vec<TrialRecord>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let mut topology: Option<Topology> = None;
    let mut records = Vec::new();
    for row in rdr.deserialize() {
        let row: RecordRow = row?;
        let t: Topology = row.topology.parse()?;
        if topology.is_some_and(|prev| prev != t) {
            return Err(Error::Parse("records mix several topologies".into()));
        }
        topology = Some(t);
        if !(0.0..=1.0).contains(&row.f_c) || !(0.0..=1.0).contains(&row.kappa_n) {
            return Err(Error::Parse(format!(
                "trial {}: f_c or kappa_n outside [0, 1]",
                row.trial
            )));
        }
        records.push(TrialRecord {
            stage_fraction: row.stage_fraction,
            trial: row.trial,
            f_c: row.f_c,
            kappa_n: row.kappa_n,
            seed: row.seed,
        });
    }
    let topology = topology.ok_or_else(|| Error::Parse("records file has no rows".into()))?;
    Ok((topology, records))
}

#[derive(Serialize)]
struct BinRow {
    bin_center: f64,
    kappa_n_low: f64,
    kappa_n_high: f64,
    count: usize,
    mean_f_c: Option<f64>,
    std_f_c: Option<f64>,
}

/// One row per bin; empty bins leave mean and std blank.
pub fn write_bins<W: Write>(mut out: W, header: &[String], bins: &[BinStats]) -> Result<()> {
    write_comments(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    for b in bins {
        w.serialize(BinRow {
            bin_center: b.center,
            kappa_n_low: b.center - BIN_HALF_WIDTH,
            kappa_n_high: b.center + BIN_HALF_WIDTH,
            count: b.count,
            mean_f_c: b.mean,
            std_f_c: b.std,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ThresholdRow {
    topology: String,
    f_c_star: f64,
    p_c: f64,
    trials_used: usize,
    channels: usize,
    n_hat: f64,
}

pub fn write_threshold<W: Write>(
    mut out: W,
    header: &[String],
    topology: Topology,
    estimate: &ThresholdEstimate,
    channels: usize,
) -> Result<()> {
    write_comments(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.serialize(ThresholdRow {
        topology: topology.name().to_string(),
        f_c_star: estimate.f_c_star,
        p_c: estimate.p_c,
        trials_used: estimate.trials_used,
        channels,
        n_hat: estimate.n_hat(channels),
    })?;
    w.flush()?;
    Ok(())
}
