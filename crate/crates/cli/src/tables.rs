//! CSV outputs. Iteration numbers in files are 1-based.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use wbp_core::channel::SimResult;
use wbp_core::pruning::PruneRecord;
use wbp_core::training::LossTrace;

#[derive(Debug, Serialize)]
struct LossRow {
    epoch: usize,
    train_loss: f64,
    val_loss: f64,
    eta: f64,
}

#[derive(Debug, Serialize)]
struct CycleLossRow {
    cycle: usize,
    epoch: usize,
    train_loss: f64,
    val_loss: f64,
    eta: f64,
}

#[derive(Debug, Serialize)]
struct PruneRow {
    cycle: usize,
    iter: usize,
    cn: usize,
    weight: f64,
    val_loss: f64,
    cn_evals: usize,
}

#[derive(Debug, Serialize)]
struct SimRow {
    ebn0_db: f64,
    frames: u64,
    block_errors: u64,
    bler: f64,
    ber: f64,
    ci_halfwidth: f64,
}

/// One Table-I style complexity line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub rows: usize,
    pub iterations: usize,
    pub fraction: f64,
    pub cn_evals: usize,
    pub formula: String,
}

/// Share of the remaining CNs used in one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionRow {
    pub label: String,
    pub iter: usize,
    pub cns: usize,
    pub fraction: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the header even when there are no rows.
fn write_table<T: Serialize>(path: &Path, header: &[&str], rows: Vec<T>) -> Result<()> {
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
        w.write_record(header)?;
        w.flush()?;
        return Ok(());
    }
    write_rows(path, rows)
}

pub fn write_loss_trace(path: &Path, trace: &LossTrace) -> Result<()> {
    let rows: Vec<LossRow> =
        trace.epochs.iter().map(|e| LossRow { epoch: e.epoch, train_loss: e.train_loss, val_loss: e.val_loss, eta: e.eta }).collect();
    write_table(path, &["epoch", "train_loss", "val_loss", "eta"], rows)
}

/// Loss traces of all training phases of a prune run; cycle 0 is the
/// initial training.
pub fn write_cycle_traces(path: &Path, traces: &[LossTrace]) -> Result<()> {
    let rows: Vec<CycleLossRow> = traces
        .iter()
        .enumerate()
        .flat_map(|(cycle, t)| {
            t.epochs.iter().map(move |e| CycleLossRow { cycle, epoch: e.epoch, train_loss: e.train_loss, val_loss: e.val_loss, eta: e.eta })
        })
        .collect();
    write_table(path, &["cycle", "epoch", "train_loss", "val_loss", "eta"], rows)
}

pub fn write_prune_record(path: &Path, record: &PruneRecord) -> Result<()> {
    let rows: Vec<PruneRow> = record
        .entries
        .iter()
        .map(|e| PruneRow { cycle: e.cycle, iter: e.iteration + 1, cn: e.cn, weight: e.weight, val_loss: e.val_loss, cn_evals: e.cn_evals })
        .collect();
    write_table(path, &["cycle", "iter", "cn", "weight", "val_loss", "cn_evals"], rows)
}

pub fn write_sim_results(path: &Path, results: &[SimResult]) -> Result<()> {
    let rows: Vec<SimRow> = results
        .iter()
        .map(|r| SimRow {
            ebn0_db: r.ebn0_db,
            frames: r.frames,
            block_errors: r.block_errors,
            bler: r.bler,
            ber: r.ber,
            ci_halfwidth: r.ci_halfwidth,
        })
        .collect();
    write_table(path, &["ebn0_db", "frames", "block_errors", "bler", "ber", "ci_halfwidth"], rows)
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    write_table(path, &["label", "rows", "iterations", "fraction", "cn_evals", "formula"], rows.to_vec())
}

pub fn write_fractions(path: &Path, rows: &[FractionRow]) -> Result<()> {
    write_table(path, &["label", "iter", "cns", "fraction"], rows.to_vec())
}
