use serde::{Deserialize, Serialize};

use crate::junction::{Group, JunctionAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineVersion {
    V1,
    V2,
}

impl BaselineVersion {
    pub fn label(self) -> &'static str {
        match self {
            BaselineVersion::V1 => "v1",
            BaselineVersion::V2 => "v2",
        }
    }
}

impl std::str::FromStr for BaselineVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "v1" => Ok(BaselineVersion::V1),
            "v2" => Ok(BaselineVersion::V2),
            other => Err(format!("unknown baseline version `{other}`")),
        }
    }
}

/// Fixed round-robin signal program, repeated until the episode ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineCycle {
    actions: Vec<JunctionAction>,
    cursor: usize,
}

impl BaselineCycle {
    pub fn new(actions: Vec<JunctionAction>) -> Self {
        assert!(!actions.is_empty(), "baseline cycle cannot be empty");
        BaselineCycle { actions, cursor: 0 }
    }

    pub fn version(v: BaselineVersion) -> Self {
        use JunctionAction::{DoNothing, GreenToRed as Red, RedToGreen as Green};
        let actions = match v {
            BaselineVersion::V1 => vec![
                Green(Group::Wnes),
                Red(Group::Wnes),
                Green(Group::Swne),
                Red(Group::Swne),
                Green(Group::Sn),
                Red(Group::Sn),
                Green(Group::We),
                Red(Group::We),
            ],
            BaselineVersion::V2 => vec![
                Green(Group::Wnes),
                Red(Group::Wnes),
                Green(Group::Swne),
                Red(Group::Swne),
                Green(Group::Sn),
                DoNothing,
                Red(Group::Sn),
                Green(Group::We),
                DoNothing,
                Red(Group::We),
            ],
        };
        Self::new(actions)
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn reset(&mut self) {
        self.cursor = 0;
    }

    pub fn next_action(&mut self) -> JunctionAction {
        let a = self.actions[self.cursor];
        self.cursor = (self.cursor + 1) % self.actions.len();
        a
    }
}
