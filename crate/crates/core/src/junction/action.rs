use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A signal group: the lane pair that turns green together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Swne,
    We,
    Sn,
    Wnes,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::Swne, Group::We, Group::Sn, Group::Wnes];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Group::Swne => "swne",
            Group::We => "we",
            Group::Sn => "sn",
            Group::Wnes => "wnes",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The nine junction actions.
///
/// Fixed indices: `0..=3` switch a group to green, `4` does nothing,
/// `5..=8` switch a group back to red.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JunctionAction {
    RedToGreen(Group),
    DoNothing,
    GreenToRed(Group),
}

impl JunctionAction {
    pub const COUNT: usize = 9;

    pub fn index(self) -> usize {
        match self {
            JunctionAction::RedToGreen(g) => g.index(),
            JunctionAction::DoNothing => 4,
            JunctionAction::GreenToRed(g) => 5 + g.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0..=3 => Some(JunctionAction::RedToGreen(Group::ALL[i])),
            4 => Some(JunctionAction::DoNothing),
            5..=8 => Some(JunctionAction::GreenToRed(Group::ALL[i - 5])),
            _ => None,
        }
    }

    pub fn all() -> impl Iterator<Item = JunctionAction> {
        (0..Self::COUNT).filter_map(Self::from_index)
    }

    /// Name of the matching traffic-light transition, if any.
    pub fn transition_name(self) -> Option<String> {
        match self {
            JunctionAction::RedToGreen(g) => Some(format!("RtoG_{g}")),
            JunctionAction::DoNothing => None,
            JunctionAction::GreenToRed(g) => Some(format!("GtoR_{g}")),
        }
    }
}

impl fmt::Display for JunctionAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.transition_name() {
            Some(name) => f.write_str(&name),
            None => f.write_str("DoNothing"),
        }
    }
}

impl FromStr for JunctionAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(i) = s.parse::<usize>() {
            return Self::from_index(i).ok_or_else(|| format!("action index {i} out of range"));
        }
        Self::all()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| format!("unknown action `{s}`"))
    }
}
