use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::run::{cmd_eval, cmd_train, EvalRequest};
use super::{write_file, HarnessError, RunConfig};
use crate::agents::AgentMode;
use crate::derive_seed;
use crate::metrics::{EvalSummary, RewardWeights};

const AXES: [&str; 5] = ["w0", "w1", "w2", "w3", "w4"];

/// Values per reward weight. An empty axis keeps the base config's weight.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grid {
    pub axes: [Vec<f64>; 5],
}

impl Grid {
    /// `{0, 1, 1.5, 2}` on w1..w4: 256 cells.
    pub fn full() -> Self {
        let v = vec![0.0, 1.0, 1.5, 2.0];
        Grid {
            axes: [vec![], v.clone(), v.clone(), v.clone(), v],
        }
    }

    /// TOML with optional arrays `w0` .. `w4`, or the word `default`.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        if text.trim() == "default" {
            return Ok(Self::full());
        }
        let table: toml::Table = text
            .parse()
            .map_err(|e| HarnessError::Config(format!("grid: {e}")))?;
        let mut grid = Grid::default();
        for (key, value) in table {
            let i = AXES
                .iter()
                .position(|a| *a == key)
                .ok_or_else(|| HarnessError::Config(format!("grid: unknown axis `{key}`")))?;
            let arr = value
                .as_array()
                .ok_or_else(|| HarnessError::Config(format!("grid: `{key}` must be an array")))?;
            for v in arr {
                let x = v
                    .as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .ok_or_else(|| HarnessError::Config(format!("grid: `{key}` holds a non-number")))?;
                if !(x.is_finite() && x >= 0.0) {
                    return Err(HarnessError::Config(format!("grid: `{key}` value {x} must be finite and non-negative")));
                }
                grid.axes[i].push(x);
            }
        }
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    /// Cartesian product over the non-empty axes, w0 slowest.
    pub fn cells(&self, base: RewardWeights) -> Vec<RewardWeights> {
        let mut out = vec![base.as_array()];
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.is_empty() {
                continue;
            }
            out = out
                .into_iter()
                .flat_map(|w| {
                    axis.iter().map(move |&x| {
                        let mut w = w;
                        w[i] = x;
                        w
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|w| RewardWeights::new(w[0], w[1], w[2], w[3], w[4]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub seed: u64,
    pub weights: RewardWeights,
    pub summary: EvalSummary,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    /// Sorted by average episode length (descending), then AJWT.
    pub leaderboard: Vec<SweepCell>,
    pub failures: Vec<(usize, String)>,
}

impl SweepReport {
    pub const LEADERBOARD_HEADER: &'static str = "cell,seed,w0,w1,w2,w3,w4,model,params,timesteps_min,timesteps_avg,timesteps_max,violated_min_pct,violated_avg_pct,violated_max_pct,ajwt_avg,ajwt_max";

    pub fn leaderboard_csv(&self) -> String {
        let mut s = format!("{}\n", Self::LEADERBOARD_HEADER);
        for c in &self.leaderboard {
            let w = c.weights.as_array();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.index,
                c.seed,
                w[0],
                w[1],
                w[2],
                w[3],
                w[4],
                c.summary.csv_row()
            ));
        }
        s
    }

    pub fn failures_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["cell", "error"]).expect("in-memory write");
        for (i, e) in &self.failures {
            w.write_record([i.to_string().as_str(), e.as_str()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

fn rank(a: &SweepCell, b: &SweepCell) -> Ordering {
    b.summary
        .timesteps_avg
        .total_cmp(&a.summary.timesteps_avg)
        .then(a.summary.ajwt_avg.total_cmp(&b.summary.ajwt_avg))
        .then(a.index.cmp(&b.index))
}

/// Trains and evaluates one agent per grid cell on a pool of `jobs` workers.
/// Cell `i` trains with seed `derive_seed(base.seed, i) >> 1` into `out/cell_i`.
/// Failing cells are reported, not fatal.
pub fn cmd_sweep(
    base: &RunConfig,
    grid: &Grid,
    out_dir: &Path,
    eval: &EvalRequest,
    jobs: usize,
) -> Result<SweepReport, HarnessError> {
    if base.agent.mode == AgentMode::PnCdqn && grid.axes[0].iter().any(|&w| w != 0.0) {
        return Err(HarnessError::Config(
            "grid: pn_cdqn sweeps keep w0 = 0".into(),
        ));
    }
    let cells = grid.cells(base.weights);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<SweepCell, (usize, String)>> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(index, &weights)| {
                // Shifted to 63 bits: TOML integers are signed.
                let seed = derive_seed(base.seed, index as u64) >> 1;
                let dir: PathBuf = out_dir.join(format!("cell_{index:03}"));
                let run = || -> Result<EvalSummary, HarnessError> {
                    let cfg = RunConfig {
                        seed,
                        weights,
                        ..base.clone()
                    };
                    let report = cmd_train(&cfg, &dir)?;
                    let req = EvalRequest {
                        out_dir: Some(dir.clone()),
                        ..eval.clone()
                    };
                    cmd_eval(&report.model, &req)
                };
                match run() {
                    Ok(summary) => {
                        log::info!("cell {index} ({}) done", weights.label());
                        Ok(SweepCell {
                            index,
                            seed,
                            weights,
                            summary,
                        })
                    }
                    Err(e) => {
                        log::warn!("cell {index} failed: {e}");
                        Err((index, e.to_string()))
                    }
                }
            })
            .collect()
    });
    let mut report = SweepReport::default();
    for r in results {
        match r {
            Ok(c) => report.leaderboard.push(c),
            Err(f) => report.failures.push(f),
        }
    }
    report.leaderboard.sort_by(rank);
    write_file(&out_dir.join("leaderboard.csv"), report.leaderboard_csv())?;
    write_file(&out_dir.join("failures.csv"), report.failures_csv())?;
    Ok(report)
}
