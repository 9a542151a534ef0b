use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dustwalk::acceptance::{all_gating_passed, run_suite, Scale};
use dustwalk::format::{self, real};
use dustwalk::observables::{
    check_gap_lemma, half_line_environment, palm_environment, renewal_decompose, return_criterion, ObservableRecord,
    Verdict,
};
use dustwalk::presets::{FIGURE2_STEPS, FIGURE3_P, FIGURE3_STEPS};
use dustwalk::stats::{run_experiment, Experiment, StatReport};
use dustwalk::walk1d::{run, run_observed, start_walk, Checkpoint, HitSet};
use dustwalk::walk2d::{explorer_run, tourist_run_2d, ExplorerOptions, Geometry, Point2, Walk2dError};
use dustwalk::{Environment, MarkLaw, PalmVariant, PoissonLine, RngStream, StopRule, Walk};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{GeometryKind, OutputFormat, Overrides, RunConfig};
use crate::CliError;

fn sim(e: impl std::fmt::Display) -> CliError {
    CliError::Simulation(e.to_string())
}

fn sim2d(e: Walk2dError) -> CliError {
    match e {
        Walk2dError::ToleranceNotMet { .. } => CliError::Tolerance(e.to_string()),
        _ => sim(e),
    }
}

fn open_out(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn config_record(cfg: &RunConfig) -> Value {
    let map: serde_json::Map<String, Value> = cfg.header().into_iter().map(|(k, v)| (k, Value::String(v))).collect();
    json!({ "config": map })
}

/// Writes `rows` either through the table writer or as JSON lines.
fn emit<T: Serialize>(
    cfg: &RunConfig,
    rows: &[T],
    table: impl FnOnce(&mut dyn Write, &[(String, String)]) -> io::Result<()>,
) -> Result<(), CliError> {
    let mut w = open_out(cfg)?;
    match cfg.format {
        OutputFormat::Table => table(&mut w, &cfg.header())?,
        OutputFormat::Records => {
            writeln!(w, "{}", config_record(cfg))?;
            for r in rows {
                writeln!(w, "{}", serde_json::to_string(r).map_err(|e| CliError::Io(e.to_string()))?)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn stream(cfg: &RunConfig) -> RngStream {
    RngStream::new(cfg.seed, 0)
}

/// Sidecar written next to the output of a long 1D run.
#[derive(Debug, Serialize, Deserialize)]
struct RunCheckpoint {
    config: RunConfig,
    /// Length of the output file when the walk was at `walk.n`.
    out_bytes: u64,
    walk: Checkpoint,
}

pub fn checkpoint_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".checkpoint.json");
    PathBuf::from(s)
}

fn write_checkpoint(path: &Path, cp: &RunCheckpoint) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec(cp).map_err(|e| CliError::Io(e.to_string()))?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn trajectory_row(w: &mut dyn Write, format: OutputFormat, n: u64, x: f64, m: u32) -> io::Result<()> {
    match format {
        OutputFormat::Table => writeln!(w, "{n},{},{m}", real(x)),
        OutputFormat::Records => writeln!(w, "{}", json!({ "n": n, "position": x, "marks_left_at_target": m })),
    }
}

/// 1D walk streamed to the output, checkpointed every `checkpoint_every`
/// steps when writing to a file.
pub fn simulate1d(command: &str, o: &Overrides, resume: Option<PathBuf>) -> Result<(), CliError> {
    let (cfg, mut walk, mut file) = match resume {
        Some(path) => {
            let text = std::fs::read(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let cp: RunCheckpoint = serde_json::from_slice(&text).map_err(|e| CliError::Config(e.to_string()))?;
            if cp.config.command != command {
                return Err(CliError::Config(format!("checkpoint belongs to {}", cp.config.command)));
            }
            // only the total step count may be raised on resume
            let mut cfg = cp.config.clone();
            if let Some(steps) = o.steps {
                cfg.steps = steps;
            }
            let out = cfg.out.clone().ok_or_else(|| CliError::Config("checkpoint without output file".into()))?;
            // drop rows written after the checkpoint
            OpenOptions::new().write(true).open(&out)?.set_len(cp.out_bytes)?;
            let w: Box<dyn Write> = Box::new(BufWriter::new(OpenOptions::new().append(true).open(&out)?));
            (cfg, Walk::from_checkpoint(cp.walk).map_err(sim)?, w)
        }
        None => {
            let preset = match command {
                "figure3" => RunConfig { p: FIGURE3_P, steps: FIGURE3_STEPS, ..RunConfig::defaults(command) },
                _ => RunConfig::defaults(command),
            };
            let cfg = RunConfig::resolve(preset, o)?;
            let line = PoissonLine::new(stream(&cfg), cfg.intensity, MarkLaw::two_point(cfg.p).map_err(sim)?)
                .map_err(sim)?;
            let init = line.realize_palm(-line.cell_len, line.cell_len, PalmVariant::P1).map_err(sim)?;
            let walk = start_walk(Environment::lazy(init, line), 0.0).map_err(sim)?;
            let mut w = open_out(&cfg)?;
            match cfg.format {
                OutputFormat::Table => {
                    for (k, v) in cfg.header() {
                        writeln!(w, "# {k} = {v}")?;
                    }
                    writeln!(w, "{}", format::TRAJECTORY_COLUMNS)?;
                }
                OutputFormat::Records => writeln!(w, "{}", config_record(&cfg))?,
            }
            trajectory_row(&mut w, cfg.format, 0, walk.current(), walk.marks_left_here())?;
            (cfg, walk, w)
        }
    };

    let mut io_err: Option<io::Error> = None;
    while walk.n() < cfg.steps {
        let target = cfg.steps.min((walk.n() / cfg.checkpoint_every + 1) * cfg.checkpoint_every);
        run_observed(&mut walk, StopRule::MaxSteps(target), |n, x, m| {
            if io_err.is_none() {
                if let Err(e) = trajectory_row(&mut file, cfg.format, n, x, m) {
                    io_err = Some(e);
                }
            }
        })
        .map_err(sim)?;
        if let Some(e) = io_err.take() {
            return Err(e.into());
        }
        if let (Some(out), true) = (&cfg.out, target % cfg.checkpoint_every == 0) {
            file.flush()?;
            let out_bytes = std::fs::metadata(out)?.len();
            write_checkpoint(&checkpoint_path(out), &RunCheckpoint { config: cfg.clone(), out_bytes, walk: walk.checkpoint() })?;
        }
    }
    file.flush()?;
    Ok(())
}

pub fn simulate2d(command: &str, o: &Overrides) -> Result<(), CliError> {
    let preset = match command {
        "figure2" => RunConfig { steps: FIGURE2_STEPS, ..RunConfig::defaults(command) },
        _ => RunConfig::defaults(command),
    };
    let cfg = RunConfig::resolve(preset, o)?;
    let geometry = match cfg.geometry {
        GeometryKind::Plane => Geometry::Plane,
        GeometryKind::Strip => Geometry::Strip { eps: cfg.eps },
    };
    let t = tourist_run_2d(geometry, cfg.intensity, Point2::ORIGIN, cfg.steps, stream(&cfg)).map_err(sim2d)?;
    let rows: Vec<Value> =
        t.positions.iter().enumerate().map(|(n, p)| json!({ "n": n, "x": p.x, "y": p.y })).collect();
    emit(&cfg, &rows, |w, h| format::write_trajectory_2d(w, &t, h))
}

pub fn explorer(o: &Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(RunConfig { steps: 5, ..RunConfig::defaults("explorer") }, o)?;
    let opts = ExplorerOptions { area_rel_tol: cfg.tolerance, ..ExplorerOptions::default() };
    let steps = usize::try_from(cfg.steps).map_err(|_| CliError::Config("steps too large".into()))?;
    let r = explorer_run(steps, stream(&cfg), opts).map_err(sim2d)?;
    let rows: Vec<Value> = r
        .chain
        .discs
        .iter()
        .zip(&r.chain.areas)
        .enumerate()
        .map(|(k, (d, a))| json!({ "k": k + 1, "cx": d.center.x, "cy": d.center.y, "r": d.radius, "A_k": a }))
        .collect();
    emit(&cfg, &rows, |w, h| format::write_disc_chain(w, &r.chain, h))
}

fn verdict_record(name: &str, v: Verdict, horizon: u64) -> ObservableRecord {
    let value = match v {
        Verdict::Holds => Some(1.0),
        Verdict::Violated => Some(0.0),
        Verdict::Undecided | Verdict::Vacuous => None,
    };
    ObservableRecord { observable: name.into(), anchor: 0.0, value, censored: value.is_none(), horizon }
}

/// One walk from a double mark at the origin for `horizon` steps, and the
/// half-line walk on the same positive environment.
pub fn observables(o: &Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(RunConfig::defaults("observables"), o)?;
    let h = cfg.horizon;
    let line =
        PoissonLine::new(stream(&cfg), cfg.intensity, MarkLaw::two_point(cfg.p).map_err(sim)?).map_err(sim)?;
    let mut walk = start_walk(palm_environment(&line, PalmVariant::P2).map_err(sim)?, 0.0).map_err(sim)?;
    let t = run(&mut walk, StopRule::MaxSteps(h)).map_err(sim)?.trajectory;
    let full = walk.realized_config();
    let gaps = check_gap_lemma(&t, &full).map_err(sim)?;

    let mut records = Vec::new();
    let rec = |observable: &str, anchor: f64, value: Option<f64>, censored: bool| ObservableRecord {
        observable: observable.into(),
        anchor,
        value,
        censored,
        horizon: h,
    };
    for e in &gaps.events {
        records.push(rec("gap", e.x_k, e.gap, e.gap.is_none()));
        if let Some(r) = e.r_value {
            records.push(rec("R_y", e.x_k, Some(r), false));
        }
        if e.triggered == Some(true) {
            let v = e.conclusion_holds.map(|b| b as u8 as f64);
            records.push(rec("gap_lemma", e.x_k, v, v.is_none()));
        }
    }

    let mut half = start_walk(half_line_environment(&line).map_err(sim)?, 0.0).map_err(sim)?;
    let th = run(&mut half, StopRule::MaxSteps(h)).map_err(sim)?.trajectory;
    let blocks = renewal_decompose(&th, &half.realized_config()).map_err(sim)?;
    for b in &blocks.blocks {
        records.push(rec("renewal_L", b.start, b.length, b.censored));
        records.push(rec("renewal_clearing", b.start, b.clearing_holds.map(|c| c as u8 as f64), b.clearing_holds.is_none()));
    }
    let t_neg = dustwalk::walk1d::hitting_time(&t, HitSet::NonPositive);
    records.push(rec("T_R-", 0.0, t_neg.map(|n| n as f64), t_neg.is_none()));
    if t.positions.get(1).is_some_and(|&x| x > 0.0) {
        let rep = return_criterion(&t, &full, &blocks).map_err(sim)?;
        records.push(verdict_record("return_implication", rep.implication, h));
        records.push(verdict_record("return_l1_bound", rep.l1_bound, h));
    }
    emit(&cfg, &records, |w, hd| format::write_observables(w, &records, hd))
}

pub fn tails(o: &Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(RunConfig::defaults("tails"), o)?;
    let exp = Experiment::HittingTime { p: cfg.p, horizon: cfg.horizon };
    let out = run_experiment(exp, cfg.replicas, cfg.seed).map_err(CliError::Simulation)?;
    if let Some(p) = &cfg.out {
        let mut s = p.as_os_str().to_owned();
        s.push(".samples.csv");
        out.write_samples(Path::new(&s))?;
    }
    let reports: &[StatReport] = &out.reports;
    emit(&cfg, reports, |w, h| format::write_reports_table(w, reports, h))
}

pub fn selftest(o: &Overrides, quick: bool) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(RunConfig::defaults("selftest"), o)?;
    let scale = if quick { Scale::QUICK } else { Scale::FULL };
    let outcomes = run_suite(&scale, cfg.seed, |o| println!("{}", o.line()));
    if cfg.out.is_some() {
        let rows: Vec<Value> = outcomes
            .iter()
            .map(|o| json!({ "id": o.id, "title": o.title, "gating": o.gating, "pass": o.pass, "summary": o.summary }))
            .collect();
        emit(&cfg, &rows, |w, h| {
            for (k, v) in h {
                writeln!(w, "# {k} = {v}")?;
            }
            writeln!(w, "id,gating,pass,title")?;
            for o in &outcomes {
                writeln!(w, "{},{},{},{}", o.id, o.gating, o.pass, o.title)?;
            }
            Ok(())
        })?;
    }
    if all_gating_passed(&outcomes) {
        Ok(())
    } else {
        let failing: Vec<String> = outcomes.iter().filter(|o| o.gating && !o.pass).map(|o| o.id.to_string()).collect();
        Err(CliError::Failed(format!("gating criteria failed: {}", failing.join(", "))))
    }
}
