//! Command implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;
use wbp_core::channel::{map_bit_llrs, FnDecoder, MlDecoder, MonteCarlo, SimResult, StopRule};
use wbp_core::codes::{self, CodeSpec, LowWeightSearch};
use wbp_core::decoder::{hard_decision, DecoderModel, LlrFrame, WeightMode};
use wbp_core::gf2::BinaryMatrix;
use wbp_core::pruning::{self, describe_stop, PruneConfig, PruneMode, StopReason};
use wbp_core::training::train_until_converged;

use crate::alist::{read_alist, write_alist};
use crate::args::{required, Command, EvalArgs, Family, GenCodeArgs, ModelSource, OracleArgs, PruneArgs, ReportArgs, TrainArgs};
use crate::bundle::{generator_rows, write_json, CodeFile, CodeInfo, ModelBundle};
use crate::config::write_snapshot;
use crate::tables::{self, FractionRow, ReportRow};

/// A failure after validation succeeded (divergence, resource guards).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct RuntimeAbort(pub String);

/// Core errors that abort a valid run rather than reject its input.
pub fn is_runtime(e: &wbp_core::Error) -> bool {
    use wbp_core::Error::*;
    matches!(e, ResourceGuard(_) | SearchExhausted(_) | NonFiniteGradient { .. } | Diverged { .. })
}

fn core_err(e: wbp_core::Error) -> anyhow::Error {
    if is_runtime(&e) {
        RuntimeAbort(e.to_string()).into()
    } else {
        e.into()
    }
}

fn prepare(out: &Path, cmd: &Command) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    write_snapshot(out, cmd)
}

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::GenCode(a) => gen_code(a, cmd),
        Command::Train(a) => train(a, cmd),
        Command::Prune(a) => prune(a, cmd),
        Command::Eval(a) => eval(a, cmd),
        Command::Oracle(a) => oracle(a, cmd),
        Command::Report(a) => report(a, cmd),
        Command::Rerun(_) => unreachable!("rerun is resolved before dispatch"),
    }
}

const MATRIX_FILE: &str = "code.alist";

fn gen_code(a: &GenCodeArgs, cmd: &Command) -> Result<()> {
    let (spec, h, generator, source) = match &a.family {
        Family::Rm { r, m, subsample, seed } => {
            let spec = CodeSpec::reed_muller(*r, *m)?;
            let mut h = codes::rm_min_weight_checks(*r, *m).map_err(core_err)?;
            let mut source = format!("rm {r} {m}: all {} minimum-weight checks", h.rows());
            if let Some(count) = subsample {
                h = codes::subsample_rows(&h, *count, *seed)?;
                source = format!("rm {r} {m}: {count} random minimum-weight checks (seed {seed})");
            }
            (spec, h, codes::rm_generator(*r, *m)?, source)
        }
        Family::Alist { path } => {
            let h = read_alist(path)?;
            let g = h.nullspace();
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "alist".into());
            let spec = CodeSpec::new(h.cols(), g.rows(), name)?;
            (spec, h, g, format!("alist {}", path.display()))
        }
        Family::RandomOc { base, count, weight_cap, max_combine, seed } => {
            let base_h = read_alist(base)?;
            let g = base_h.nullspace();
            let search = LowWeightSearch { max_combine: *max_combine, attempt_budget: None };
            let h = codes::random_low_weight_checks(&base_h, *count, *weight_cap, *seed, &search).map_err(core_err)?;
            let name = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "code".into());
            let spec = CodeSpec::new(h.cols(), g.rows(), name)?;
            let source = format!("random-oc base {}: {count} checks of weight <= {weight_cap} (seed {seed})", base.display());
            (spec, h, g, source)
        }
        Family::Ccsds => {
            let h = codes::ccsds_tc128_parity_check();
            let g = h.nullspace();
            (CodeSpec::new(h.cols(), g.rows(), "CCSDS(128,64)")?, h, g, "ccsds tc128".into())
        }
    };
    prepare(&a.out, cmd)?;
    write_alist(&h, &a.out.join(MATRIX_FILE))?;
    let file = CodeFile {
        code: CodeInfo { name: spec.name().to_string(), n: spec.n(), k: spec.k() },
        source,
        parity_check: MATRIX_FILE.to_string(),
        rows: h.rows(),
        generator: generator_rows(&generator),
    };
    write_json(&a.out.join(CodeFile::FILE), &file)?;
    info!("{}: n={} k={}, {} parity checks -> {}", spec.name(), spec.n(), spec.k(), h.rows(), a.out.display());
    Ok(())
}

/// Initial decoder plus generator and overcomplete row count.
fn load_source(s: &ModelSource) -> Result<(DecoderModel, BinaryMatrix, Option<usize>)> {
    match (&s.code, &s.model) {
        (Some(dir), None) => {
            let code = CodeFile::load(dir)?;
            let mode = WeightMode::parse(&s.weight_mode).with_context(|| format!("unknown weight mode {:?}", s.weight_mode))?;
            if s.iterations == 0 {
                bail!("--iterations must be at least 1");
            }
            let mut m = DecoderModel::repeated(code.spec.clone(), code.reference(), &code.h, s.iterations, mode)?;
            m.set_clamp(s.clamp)?;
            Ok((m, code.generator.clone(), Some(code.h.rows())))
        }
        (None, Some(path)) => {
            let b = ModelBundle::load(path)?;
            Ok((b.to_model()?, b.generator()?, b.overcomplete_rows))
        }
        _ => bail!("give exactly one of --code or --model"),
    }
}

fn train(a: &TrainArgs, cmd: &Command) -> Result<()> {
    let cfg = a.train.to_config(a.seed)?;
    let (model, generator, rows) = load_source(&a.source)?;
    prepare(&a.out, cmd)?;
    match train_until_converged(&model, &cfg) {
        Ok((trained, trace)) => {
            tables::write_loss_trace(&a.out.join("loss_trace.csv"), &trace)?;
            ModelBundle::from_model(&trained, &generator, rows).save(&a.out.join("model.json"))?;
            info!(
                "validation loss {:.6e} -> {:.6e} after {} epochs",
                trace.initial_val_loss,
                trace.best_val_loss(),
                trace.epochs.len()
            );
            Ok(())
        }
        Err(f) => {
            tables::write_loss_trace(&a.out.join("loss_trace.csv"), &f.trace)?;
            Err(core_err(f.error))
        }
    }
}

#[derive(Serialize)]
struct PruneSummary {
    stop: String,
    returned_cycle: usize,
    initial_val_loss: f64,
    cn_evals: usize,
    cn_fractions: Vec<f64>,
}

fn prune(a: &PruneArgs, cmd: &Command) -> Result<()> {
    let budget = required(&a.budget, "budget")?;
    let mode = PruneMode::parse(&a.mode).with_context(|| format!("unknown prune mode {:?} (magnitude or random)", a.mode))?;
    let pc = PruneConfig {
        budget,
        per_cycle: a.per_cycle,
        per_cycle_fraction: a.per_cycle_fraction,
        tau: a.tau,
        patience: a.patience,
        mode,
        seed: a.seed,
        allow_empty: a.allow_empty,
        retrain_max_epochs: a.retrain_max_epochs,
    };
    pc.validate()?;
    let tc = a.train.to_config(a.seed)?;
    let (model, generator, rows) = load_source(&a.source)?;
    if model.mode() != WeightMode::CnTied {
        bail!("pruning needs a cn-tied model, got {}", model.mode().as_str());
    }
    prepare(&a.out, cmd)?;
    let ckpt_dir = a.out.join("checkpoints");
    if a.checkpoint_every.is_some() {
        std::fs::create_dir_all(&ckpt_dir)?;
    }
    let mut ckpt_err = None;
    let result = pruning::prune_and_retrain_with(&model, &pc, &tc, |r| {
        if let Some(k) = a.checkpoint_every {
            if k > 0 && r.cycle % k == 0 {
                let path = ckpt_dir.join(format!("cycle_{:05}.json", r.cycle));
                if let Err(e) = ModelBundle::from_model(r.model, &generator, rows).save(&path) {
                    ckpt_err.get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = ckpt_err {
        return Err(e);
    }
    let (pruned, record) = match result {
        Ok(x) => x,
        Err(f) => {
            tables::write_prune_record(&a.out.join("prune_record.csv"), &f.record)?;
            tables::write_cycle_traces(&a.out.join("loss_traces.csv"), &f.record.traces)?;
            return Err(core_err(f.error));
        }
    };
    tables::write_prune_record(&a.out.join("prune_record.csv"), &record)?;
    tables::write_cycle_traces(&a.out.join("loss_traces.csv"), &record.traces)?;
    ModelBundle::from_model(&pruned, &generator, rows).save(&a.out.join("model.json"))?;
    let summary = PruneSummary {
        stop: describe_stop(record.stop),
        returned_cycle: record.returned_cycle,
        initial_val_loss: record.initial_val_loss,
        cn_evals: pruned.cn_eval_count(),
        cn_fractions: pruned.cn_fraction_per_iteration().unwrap_or_default(),
    };
    write_json(&a.out.join("prune_summary.json"), &summary)?;
    if record.stop == StopReason::Diverged {
        warn!("validation loss diverged; kept the model of cycle {} with {} CN evaluations", record.returned_cycle, pruned.cn_eval_count());
    }
    info!("{}: {} CN evaluations", summary.stop, summary.cn_evals);
    Ok(())
}

fn stop_rule(min_errors: u64, max_frames: u64) -> Result<StopRule> {
    if min_errors == 0 || max_frames == 0 {
        bail!("--min-errors and --max-frames must be positive");
    }
    Ok(StopRule { min_block_errors: min_errors, max_frames })
}

fn log_results(what: &str, results: &[SimResult]) {
    for r in results {
        info!("{what} {:.2} dB: {}/{} block errors, BLER {:.4e}", r.ebn0_db, r.block_errors, r.frames, r.bler);
        if r.under_resolved {
            warn!("{what} {:.2} dB: fewer than the requested block errors at the frame limit", r.ebn0_db);
        }
    }
}

fn eval(a: &EvalArgs, cmd: &Command) -> Result<()> {
    let path = required(&a.model, "model")?;
    let stop = stop_rule(a.sim.min_errors, a.sim.max_frames)?;
    if a.sim.snr.is_empty() {
        bail!("--snr needs at least one Eb/N0 value");
    }
    let bundle = ModelBundle::load(&path)?;
    let model = bundle.to_model()?;
    let generator = bundle.generator()?;
    let variant = a.variant.as_str();
    let decoder = match variant {
        "d1" => model,
        "d2" => pruning::derive_d2(&model),
        "d3" => {
            if model.mode() != WeightMode::CnTied {
                bail!("--variant d3 needs a cn-tied bundle, got {}", model.mode().as_str());
            }
            let cfg = a.train.to_config(a.seed)?;
            prepare(&a.out, cmd)?;
            match pruning::derive_d3(&model, &cfg) {
                Ok((d3, trace)) => {
                    tables::write_loss_trace(&a.out.join("d3_loss_trace.csv"), &trace)?;
                    ModelBundle::from_model(&d3, &generator, bundle.overcomplete_rows).save(&a.out.join("model_d3.json"))?;
                    d3
                }
                Err(f) => {
                    tables::write_loss_trace(&a.out.join("d3_loss_trace.csv"), &f.trace)?;
                    return Err(core_err(f.error));
                }
            }
        }
        other => bail!("unknown variant {other:?} (d1, d2 or d3)"),
    };
    prepare(&a.out, cmd)?;
    let mc = MonteCarlo::new(&generator, stop, a.seed)?;
    let results = mc.run(&decoder, &a.sim.snr).map_err(core_err)?;
    log_results(variant, &results);
    tables::write_sim_results(&a.out.join(format!("sim_{variant}.csv")), &results)
}

fn oracle(a: &OracleArgs, cmd: &Command) -> Result<()> {
    let stop = stop_rule(a.sim.min_errors, a.sim.max_frames)?;
    if a.sim.snr.is_empty() {
        bail!("--snr needs at least one Eb/N0 value");
    }
    let generator = match (&a.code, &a.model) {
        (Some(dir), None) => CodeFile::load(dir)?.generator,
        (None, Some(path)) => ModelBundle::load(path)?.generator()?,
        _ => bail!("give exactly one of --code or --model"),
    };
    let mc = MonteCarlo::new(&generator, stop, a.seed)?;
    let results = match a.decoder.as_str() {
        "ml" => {
            let ml = MlDecoder::new(&generator).map_err(core_err)?;
            prepare(&a.out, cmd)?;
            mc.run(&ml, &a.sim.snr)
        }
        "map" => {
            // enumeration guard first, so an oversized code fails before any output
            MlDecoder::new(&generator).map_err(core_err)?;
            prepare(&a.out, cmd)?;
            let g = generator.clone();
            let map = FnDecoder(move |llrs: &[f64]| {
                let frame = LlrFrame::new(llrs.to_vec()).expect("finite channel LLRs");
                hard_decision(&map_bit_llrs(&g, &frame).expect("frame length matches the code"))
            });
            mc.run(&map, &a.sim.snr)
        }
        other => bail!("unknown oracle {other:?} (ml or map)"),
    }
    .map_err(core_err)?;
    log_results(&a.decoder, &results);
    tables::write_sim_results(&a.out.join(format!("sim_{}.csv", a.decoder)), &results)
}

/// Two significant digits, as used for the fraction column of the formulas.
fn two_digits(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let decimals = (1 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Table-I style accounting of one schedule.
pub fn report_row(label: &str, per_iteration: &[usize], overcomplete_rows: Option<usize>) -> ReportRow {
    let l = per_iteration.len();
    let total: usize = per_iteration.iter().sum();
    let uniform = per_iteration.windows(2).all(|w| w[0] == w[1]);
    let rows = overcomplete_rows.unwrap_or_else(|| per_iteration.iter().copied().max().unwrap_or(0));
    let fraction = if rows * l == 0 { 0.0 } else { total as f64 / (rows * l) as f64 };
    let formula = if uniform && per_iteration.first() == Some(&rows) {
        format!("{rows}*{l} = {total}")
    } else {
        format!("{rows}*{l}*{} = {total}", two_digits(fraction))
    };
    ReportRow { label: label.to_string(), rows, iterations: l, fraction, cn_evals: total, formula }
}

fn bp_matrix(path: &Path) -> Result<BinaryMatrix> {
    if path.is_dir() || path.extension().is_some_and(|e| e == "json") {
        Ok(CodeFile::load(path)?.h)
    } else {
        Ok(read_alist(path)?)
    }
}

fn report(a: &ReportArgs, cmd: &Command) -> Result<()> {
    if a.model.is_empty() && a.bp.is_empty() {
        bail!("nothing to report: give --model and/or --bp");
    }
    let mut rows = Vec::new();
    let mut fractions = Vec::new();
    for path in &a.model {
        let bundle = ModelBundle::load(path)?;
        let model = bundle.to_model()?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let label = format!("{label} ({}, {})", bundle.code.name, bundle.mode);
        let per: Vec<usize> = model.schedule().iter().map(|it| it.matrix().rows()).collect();
        rows.push(report_row(&label, &per, bundle.overcomplete_rows));
        let total = model.cn_eval_count();
        for (l, &c) in per.iter().enumerate() {
            let fraction = if total == 0 { 0.0 } else { c as f64 / total as f64 };
            fractions.push(FractionRow { label: label.clone(), iter: l + 1, cns: c, fraction });
        }
    }
    for spec in &a.bp {
        let (path, iters) = spec.rsplit_once(':').with_context(|| format!("--bp {spec:?} is not PATH:ITERATIONS"))?;
        let iters: usize = iters.parse().with_context(|| format!("--bp {spec:?}: bad iteration count"))?;
        let h = bp_matrix(&PathBuf::from(path))?;
        let label = format!("BP {} ({iters} iterations)", Path::new(path).display());
        rows.push(report_row(&label, &vec![h.rows(); iters], Some(h.rows())));
    }
    prepare(&a.out, cmd)?;
    tables::write_report(&a.out.join("report.csv"), &rows)?;
    tables::write_fractions(&a.out.join("fractions.csv"), &fractions)?;
    for r in &rows {
        println!("{:<48} {:>10}   {}", r.label, r.cn_evals, r.formula);
    }
    Ok(())
}
