//! Subcommand orchestration.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::{InitialGuess, RunConfig};
use super::cost::cost_estimate;
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::grid;
use crate::observables::{record, CsvWriter, ObservableRecord};
use crate::propagate::{propagate_real_with, relax_imaginary};
use crate::state::{init_hartree, random_state, MLState, Mixture, MixtureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bands,
    Relax,
    Propagate,
    Observe,
    Cost,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Relax => "relax",
            Command::Propagate => "propagate",
            Command::Observe => "observe",
            Command::Cost => "cost",
        }
    }
}

/// One invocation of the tool.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: RunConfig,
    /// Overrides the configured output directory.
    pub out: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

pub const GROUND_STATE: &str = "ground_state.mlb";
pub const FINAL_STATE: &str = "final.mlb";
pub const ABORT_STATE: &str = "abort.mlb";
pub const TRAJECTORY: &str = "trajectory.csv";

pub fn checkpoint_name(t: f64) -> String {
    format!("checkpoint_t{t:012.6}.mlb")
}

/// Runs the command; the returned JSON summary goes to stdout.
pub fn run(inv: &Invocation) -> Result<Value> {
    let out = inv.out.clone().unwrap_or_else(|| inv.config.output.clone());
    fs::create_dir_all(&out)?;
    write_json(&out.join("metadata.json"), &inv.config.metadata(inv.command.name())?)?;
    match inv.command {
        Command::Bands => bands(&inv.config, &out),
        Command::Relax => relax(&inv.config, &out, inv.resume.as_deref()).map(|(_, v)| v),
        Command::Propagate => propagate(&inv.config, &out, inv.resume.as_deref()),
        Command::Observe => observe(&out, inv.resume.as_deref()),
        Command::Cost => {
            let report = serde_json::to_value(cost_estimate(&inv.config.mixture)?)?;
            write_json(&out.join("cost.json"), &report)?;
            Ok(report)
        }
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, v)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

/// One-body levels of every species in the real-time trap.
fn bands(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let mixture = Mixture::new(&cfg.propagation_spec())?;
    let path = out.join("bands.csv");
    let mut f = BufWriter::new(File::create(&path)?);
    writeln!(f, "species,index,energy,delta")?;
    let mut summary = Vec::new();
    for (s, sp) in mixture.spec.species.iter().enumerate() {
        let (e, _) = grid::eigenpairs(&mixture.one_body[s], cfg.bands)?;
        for (i, &x) in e.iter().enumerate() {
            let delta = if i == 0 { f64::NAN } else { x - e[i - 1] };
            writeln!(f, "{},{i},{x:e},{delta:e}", sp.name)?;
        }
        summary.push(json!({ "species": sp.name, "energies": e }));
    }
    f.flush()?;
    Ok(json!({ "bands": summary, "file": path }))
}

fn load_matching(path: &Path, spec: &MixtureSpec) -> Result<Checkpoint> {
    let cp = Checkpoint::load(path)?;
    let mixture = Mixture::new(spec)?;
    if **cp.state.layout() != *mixture.layout {
        return Err(Error::Checkpoint(format!(
            "{} does not match the configured mixture",
            path.display()
        )));
    }
    Ok(cp)
}

/// Imaginary-time relaxation in the configured (possibly blocked) trap.
fn relax(cfg: &RunConfig, out: &Path, start: Option<&Path>) -> Result<(MLState, Value)> {
    let spec = cfg.relaxation_spec();
    let mixture = Mixture::new(&spec)?;
    let initial = match (start, cfg.initial) {
        (Some(p), _) => load_matching(p, &spec)?.state,
        (None, InitialGuess::Hartree) => init_hartree(&mixture)?,
        (None, InitialGuess::Random) => random_state(&mixture, cfg.seed)?,
    };
    let result = relax_imaginary(&initial, &mixture, &cfg.relaxation)?;
    let mut log = BufWriter::new(File::create(out.join("relax_log.csv"))?);
    writeln!(log, "tau,energy")?;
    for (tau, e) in &result.log {
        writeln!(log, "{tau:e},{e:e}")?;
    }
    log.flush()?;
    Checkpoint {
        spec,
        state: result.state.clone(),
        controller: None,
    }
    .save(&out.join(GROUND_STATE))?;
    let summary = json!({
        "energy": result.energy,
        "steps": result.steps,
        "rejected": result.stats.rejected,
        "max_energy_increase": result.max_increase,
        "checkpoint": out.join(GROUND_STATE),
    });
    Ok((result.state, summary))
}

/// Real-time run after instantaneous removal of any blocking step.
fn propagate(cfg: &RunConfig, out: &Path, resume: Option<&Path>) -> Result<Value> {
    let spec = cfg.propagation_spec();
    let mixture = Mixture::new(&spec)?;
    let (start, controller, relaxed) = match resume {
        Some(p) => {
            let cp = load_matching(p, &spec)?;
            (cp.state, cp.controller, None)
        }
        None => {
            let (state, summary) = relax(cfg, out, None)?;
            (state, None, Some(summary))
        }
    };
    let pcfg = &cfg.propagation;
    let mut csv = CsvWriter::new(BufWriter::new(File::create(out.join(TRAJECTORY))?), &mixture)?;
    let mut last: Option<(MLState, Option<crate::integrator::ControllerState>)> = None;
    let mut next_checkpoint = pcfg.checkpoint_stride.map(|c| next_multiple(start.time, c));
    let mut rows = 0usize;
    let result = propagate_real_with(start, &mixture, pcfg, controller, |p| {
        let r: ObservableRecord = record(p.state(), &mixture)?;
        csv.write(&r)?;
        csv.flush()?;
        rows += 1;
        let t = p.state().time;
        if let (Some(c), Some(due)) = (pcfg.checkpoint_stride, next_checkpoint) {
            if t >= due - 1e-9 * c {
                save(out, &checkpoint_name(t), &spec, p.state(), Some(p.controller()))?;
                next_checkpoint = Some(next_multiple(t, c));
            }
        }
        let bad = !r.norm.is_finite() || !r.energy.is_finite() || r.species.iter().any(|s| !s.p_left.is_finite());
        last = Some((p.state().clone(), Some(p.controller())));
        if bad {
            return Err(Error::NonFinite(t));
        }
        Ok(())
    });
    let traj = match result {
        Ok(t) => t,
        Err(e) => {
            if let Some((state, ctl)) = &last {
                save(out, ABORT_STATE, &spec, state, *ctl)?;
            }
            return Err(e);
        }
    };
    save(out, FINAL_STATE, &spec, &traj.final_state, Some(traj.controller))?;
    Ok(json!({
        "relaxation": relaxed,
        "t_final": traj.final_state.time,
        "records": rows,
        "accepted": traj.stats.accepted,
        "rejected": traj.stats.rejected,
        "evaluations": traj.stats.evaluations,
        "repairs": traj.repairs.iter().map(|r| json!({"t": r.t, "residual": r.residual})).collect::<Vec<_>>(),
        "trajectory": out.join(TRAJECTORY),
    }))
}

fn next_multiple(t: f64, stride: f64) -> f64 {
    ((t / stride + 1e-9).floor() + 1.0) * stride
}

fn save(
    out: &Path,
    name: &str,
    spec: &MixtureSpec,
    state: &MLState,
    controller: Option<crate::integrator::ControllerState>,
) -> Result<()> {
    Checkpoint {
        spec: spec.clone(),
        state: state.clone(),
        controller,
    }
    .save(&out.join(name))
}

/// Records recomputed from checkpoints: the given file, or every checkpoint
/// in the output directory ordered by time.
fn observe(out: &Path, only: Option<&Path>) -> Result<Value> {
    let paths: Vec<PathBuf> = match only {
        Some(p) => vec![p.to_path_buf()],
        None => {
            let mut v: Vec<PathBuf> = fs::read_dir(out)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "mlb"))
                .collect();
            v.sort();
            v
        }
    };
    if paths.is_empty() {
        return Err(Error::Config(format!("no checkpoints found in {}", out.display())));
    }
    let mut loaded = paths
        .iter()
        .map(|p| Checkpoint::load(p).map(|c| (p.clone(), c)))
        .collect::<Result<Vec<_>>>()?;
    loaded.sort_by(|a, b| a.1.state.time.total_cmp(&b.1.state.time));
    let first = Mixture::new(&loaded[0].1.spec)?;
    let mut csv = CsvWriter::new(BufWriter::new(File::create(out.join("observables.csv"))?), &first)?;
    let mut files = Vec::new();
    for (path, cp) in &loaded {
        let mixture = Mixture::new(&cp.spec)?;
        if *mixture.layout != *first.layout {
            return Err(Error::Checkpoint(format!("{} has a different layout", path.display())));
        }
        csv.write(&record(&cp.state, &mixture)?)?;
        files.push(json!({"file": path, "t": cp.state.time}));
    }
    csv.flush()?;
    Ok(json!({ "records": files, "file": out.join("observables.csv") }))
}

/// Applies the thread-count override from `MLB_NUM_THREADS`.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("MLB_NUM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("MLB_NUM_THREADS: expected a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("MLB_NUM_THREADS: {e}")))
}

/// Machine-readable error report.
pub fn error_json(e: &Error) -> Value {
    json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    })
}
