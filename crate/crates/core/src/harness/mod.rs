//! Run orchestration: configuration, training and evaluation commands, the
//! reward-weight sweep and net checks. All file output lives here.

mod config;
mod eval;
mod run;
mod sweep;

pub use config::{apply_override, Profile, RunConfig, BUILTIN_NET};
pub use eval::{eval_episode_seed, evaluate, Controller, EvalOptions, EvalOutput};
pub use run::{
    cmd_baseline, cmd_eval, cmd_pn_check, cmd_train, load_model, sidecar_path, EvalRequest,
    PnCheck, TrainReport,
};
pub use sweep::{cmd_sweep, Grid, SweepCell, SweepReport};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::agents::AgentError;
use crate::neural::NeuralError;
use crate::petri::NetError;
use crate::wrapper::WrapperError;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad configuration or arguments.
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("model does not match its config: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Wrapper(#[from] WrapperError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_) | HarnessError::Net(_))
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}
