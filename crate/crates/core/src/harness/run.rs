use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::eval::{evaluate, EvalOptions, EvalOutput};
use super::{write_file, HarnessError, RunConfig, BUILTIN_NET};
use crate::agents::{train_loop, Agent, BaselineCycle, BaselineVersion};
use crate::derive_seed;
use crate::metrics::EvalSummary;
use crate::neural::{read_model, write_model, Mlp};
use crate::petri::{parse_net, reachability, traffic_light_net, ReachabilityReport};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub dir: PathBuf,
    pub model: PathBuf,
    pub steps: u64,
    pub episodes: usize,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// `model.bin` → `model.json`.
pub fn sidecar_path(model: &Path) -> PathBuf {
    model.with_extension("json")
}

/// Trains one agent and writes `model.bin`, its `model.json` config sidecar,
/// `training.csv`, `config.resolved.toml` and a `meta.json` with timings.
pub fn cmd_train(cfg: &RunConfig, out_dir: &Path) -> Result<TrainReport, HarnessError> {
    cfg.validate()?;
    let started = unix_now();
    let clock = Instant::now();
    let mut wrapper = cfg.wrapper()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
    let agent = Agent::new(wrapper.encoder().dim(), cfg.agent.clone(), &mut rng)?;
    let out = train_loop(&mut wrapper, agent, cfg.seed)?;

    let model = out_dir.join("model.bin");
    let mut bytes = Vec::new();
    write_model(&out.agent.online, &mut bytes)?;
    write_file(&model, bytes)?;
    let sidecar = serde_json::to_string_pretty(cfg).expect("run config serializes");
    write_file(&sidecar_path(&model), sidecar + "\n")?;
    write_file(&out_dir.join("training.csv"), out.log_csv())?;
    write_file(&out_dir.join("config.resolved.toml"), cfg.to_toml())?;
    let meta = serde_json::json!({
        "started_unix": started,
        "finished_unix": unix_now(),
        "elapsed_secs": clock.elapsed().as_secs_f64(),
        "version": env!("CARGO_PKG_VERSION"),
        "steps": out.steps,
        "episodes": out.log.len(),
    });
    write_file(&out_dir.join("meta.json"), format!("{meta:#}\n"))?;
    Ok(TrainReport {
        dir: out_dir.to_path_buf(),
        model,
        steps: out.steps,
        episodes: out.log.len(),
    })
}

/// Reads a model file and the run config stored next to it.
pub fn load_model(model: &Path) -> Result<(RunConfig, Mlp), HarnessError> {
    let file = std::fs::File::open(model).map_err(|e| HarnessError::io(model, e))?;
    let net = read_model(std::io::BufReader::new(file))?;
    let side = sidecar_path(model);
    let text = std::fs::read_to_string(&side).map_err(|e| HarnessError::io(&side, e))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", side.display())))?;
    Ok((cfg, net))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRequest {
    pub episodes: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub trace: bool,
    pub violation_log: bool,
}

impl EvalRequest {
    pub fn new(episodes: usize, seed: u64) -> Self {
        EvalRequest {
            episodes,
            seed,
            out_dir: None,
            trace: false,
            violation_log: false,
        }
    }

    fn options(&self) -> EvalOptions {
        EvalOptions {
            episodes: self.episodes,
            seed: self.seed,
            trace: self.trace,
            violation_log: self.violation_log,
        }
    }
}

fn write_eval(
    out: &EvalOutput,
    summary: &EvalSummary,
    dir: Option<&Path>,
) -> Result<(), HarnessError> {
    let Some(dir) = dir else { return Ok(()) };
    write_file(&dir.join("episodes.csv"), out.episodes_csv())?;
    write_file(&dir.join("summary.csv"), summary.to_csv())?;
    if let Some(t) = &out.trace {
        write_file(&dir.join("trace.csv"), t)?;
    }
    if let Some(v) = &out.violations {
        write_file(&dir.join("violations.csv"), v)?;
    }
    Ok(())
}

/// Greedy shielded evaluation of a trained model. Output goes to
/// `req.out_dir`, or the model's directory when unset.
pub fn cmd_eval(model: &Path, req: &EvalRequest) -> Result<EvalSummary, HarnessError> {
    let (cfg, net) = load_model(model)?;
    let mut wrapper = cfg.wrapper()?;
    let dim = wrapper.encoder().dim();
    let mut expected = vec![dim];
    expected.extend_from_slice(&cfg.agent.hidden);
    expected.push(crate::junction::JunctionAction::COUNT);
    if net.sizes() != expected.as_slice() {
        return Err(HarnessError::Mismatch(format!(
            "layer sizes {:?}, config implies {:?}",
            net.sizes(),
            expected
        )));
    }
    let mut agent = Agent::from_model(cfg.agent.clone(), net);
    let out = evaluate(&mut wrapper, &mut agent, req.options())?;
    let summary = out.summary(cfg.agent.mode.label(), &cfg.weights.label());
    let default_dir = model.parent().map(Path::to_path_buf);
    write_eval(&out, &summary, req.out_dir.as_deref().or(default_dir.as_deref()))?;
    Ok(summary)
}

/// Replays a fixed cycle through the shielded wrapper.
pub fn cmd_baseline(
    cfg: &RunConfig,
    version: BaselineVersion,
    req: &EvalRequest,
) -> Result<EvalSummary, HarnessError> {
    let mut wrapper = cfg.wrapper()?;
    let mut cycle = BaselineCycle::version(version);
    let out = evaluate(&mut wrapper, &mut cycle, req.options())?;
    let summary = out.summary(&format!("Baseline {}", version.label()), "-");
    write_eval(&out, &summary, req.out_dir.as_deref())?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PnCheck {
    pub source: String,
    pub bound: usize,
    pub report: ReachabilityReport,
}

impl PnCheck {
    /// Deadlock-free and fully explored.
    pub fn passed(&self) -> bool {
        !self.report.truncated && self.report.deadlocks.is_empty()
    }
}

impl fmt::Display for PnCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.report;
        writeln!(f, "net: {}", self.source)?;
        writeln!(f, "nodes: {}", r.nodes)?;
        writeln!(f, "edges: {}", r.edges)?;
        writeln!(f, "truncated: {} (bound {})", r.truncated, self.bound)?;
        writeln!(f, "bounded: {}-bounded over explored markings", r.max_tokens)?;
        writeln!(f, "1-safe: {}", r.one_safe)?;
        if r.deadlocks.is_empty() {
            writeln!(f, "deadlocks: none")?;
        } else {
            writeln!(f, "deadlocks: {}", r.deadlocks.len())?;
            for m in &r.deadlocks {
                writeln!(f, "  {m}")?;
            }
        }
        write!(f, "result: {}", if self.passed() { "ok" } else { "FAILED" })
    }
}

/// Bounded reachability analysis of a net file or the built-in net.
pub fn cmd_pn_check(source: &str, bound: usize) -> Result<PnCheck, HarnessError> {
    if bound == 0 {
        return Err(HarnessError::Config("bound must be positive".into()));
    }
    let net = if source == BUILTIN_NET {
        traffic_light_net()
    } else {
        let path = Path::new(source);
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        parse_net(&text)?
    };
    Ok(PnCheck {
        source: source.to_string(),
        bound,
        report: reachability(&net, bound).report(),
    })
}
