//! Place/transition nets with weighted arcs.
//!
//! A [`PetriNet`] is immutable once built. Markings are plain values: firing
//! returns a new [`Marking`] and never touches its input, so markings can be
//! stored in reachability sets or replay buffers without aliasing.

mod json;
mod reachability;
mod traffic;

use std::collections::HashMap;
use std::fmt;

pub use json::{parse_net, to_json, NetDocument};
pub use reachability::{reachability, ReachabilityGraph, ReachabilityReport};
pub use traffic::{traffic_light_net, GROUPS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("transition `{transition}` is not enabled: place `{place}` holds {have} token(s), needs {need}")]
    NotEnabled {
        transition: String,
        place: String,
        have: u64,
        need: u64,
    },
    #[error("{path}: identifier `{id}` is declared more than once")]
    DuplicateId { path: String, id: String },
    #[error("{path}: arc endpoint `{id}` is neither a place nor a transition")]
    UnknownEndpoint { path: String, id: String },
    #[error("{path}: arc `{from}` -> `{to}` does not connect a place with a transition")]
    NotBipartite {
        path: String,
        from: String,
        to: String,
    },
    #[error("{path}: arc weight must be at least 1, got {weight}")]
    InvalidWeight { path: String, weight: u64 },
    #[error("{path}: duplicate arc `{from}` -> `{to}`")]
    DuplicateArc {
        path: String,
        from: String,
        to: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("marking has {got} entries, net has {expected} places")]
    MarkingSize { expected: usize, got: usize },
}

pub type PlaceId = usize;
pub type TransitionId = usize;

/// Direction of an arc relative to its place endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arc {
    /// place -> transition
    Input(PlaceId, TransitionId),
    /// transition -> place
    Output(TransitionId, PlaceId),
}

/// Token counts in place declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<u64>);

impl Marking {
    pub fn new(tokens: Vec<u64>) -> Self {
        Marking(tokens)
    }

    pub fn tokens(&self) -> &[u64] {
        &self.0
    }

    pub fn get(&self, place: PlaceId) -> u64 {
        self.0[place]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TransitionArcs {
    inputs: Vec<(PlaceId, u64)>,
    outputs: Vec<(PlaceId, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<String>,
    /// Arcs with weights, in declaration order.
    arcs: Vec<(Arc, u64)>,
    initial: Marking,
    arcs_by_transition: Vec<TransitionArcs>,
    place_index: HashMap<String, PlaceId>,
    transition_index: HashMap<String, TransitionId>,
}

/// Incremental construction of a [`PetriNet`]; validates on [`NetBuilder::build`].
#[derive(Debug, Default, Clone)]
pub struct NetBuilder {
    places: Vec<(String, u64)>,
    transitions: Vec<String>,
    arcs: Vec<(String, String, u64)>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(mut self, id: impl Into<String>, tokens: u64) -> Self {
        self.places.push((id.into(), tokens));
        self
    }

    pub fn transition(mut self, id: impl Into<String>) -> Self {
        self.transitions.push(id.into());
        self
    }

    pub fn arc(mut self, from: impl Into<String>, to: impl Into<String>, weight: u64) -> Self {
        self.arcs.push((from.into(), to.into(), weight));
        self
    }

    pub fn build(self) -> Result<PetriNet, NetError> {
        let mut place_index = HashMap::new();
        let mut transition_index = HashMap::new();
        for (i, (id, _)) in self.places.iter().enumerate() {
            if place_index.insert(id.clone(), i).is_some() {
                return Err(NetError::DuplicateId {
                    path: format!("places[{i}].id"),
                    id: id.clone(),
                });
            }
        }
        for (i, id) in self.transitions.iter().enumerate() {
            if place_index.contains_key(id) || transition_index.insert(id.clone(), i).is_some() {
                return Err(NetError::DuplicateId {
                    path: format!("transitions[{i}]"),
                    id: id.clone(),
                });
            }
        }

        let mut arcs = Vec::with_capacity(self.arcs.len());
        let mut arcs_by_transition = vec![
            TransitionArcs {
                inputs: Vec::new(),
                outputs: Vec::new(),
            };
            self.transitions.len()
        ];
        for (i, (from, to, weight)) in self.arcs.iter().enumerate() {
            let path = format!("arcs[{i}]");
            for id in [from, to] {
                if !place_index.contains_key(id) && !transition_index.contains_key(id) {
                    return Err(NetError::UnknownEndpoint {
                        path: path.clone(),
                        id: id.clone(),
                    });
                }
            }
            let arc = match (
                place_index.get(from),
                transition_index.get(to),
                transition_index.get(from),
                place_index.get(to),
            ) {
                (Some(&p), Some(&t), _, _) => Arc::Input(p, t),
                (_, _, Some(&t), Some(&p)) => Arc::Output(t, p),
                _ => {
                    return Err(NetError::NotBipartite {
                        path,
                        from: from.clone(),
                        to: to.clone(),
                    })
                }
            };
            if *weight < 1 {
                return Err(NetError::InvalidWeight {
                    path: format!("{path}.weight"),
                    weight: *weight,
                });
            }
            if arcs.iter().any(|(a, _)| *a == arc) {
                return Err(NetError::DuplicateArc {
                    path,
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            match arc {
                Arc::Input(p, t) => arcs_by_transition[t].inputs.push((p, *weight)),
                Arc::Output(t, p) => arcs_by_transition[t].outputs.push((p, *weight)),
            }
            arcs.push((arc, *weight));
        }

        let initial = Marking(self.places.iter().map(|(_, n)| *n).collect());
        Ok(PetriNet {
            places: self.places.into_iter().map(|(id, _)| id).collect(),
            transitions: self.transitions,
            arcs,
            initial,
            arcs_by_transition,
            place_index,
            transition_index,
        })
    }
}

impl PetriNet {
    pub fn builder() -> NetBuilder {
        NetBuilder::new()
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[String] {
        &self.transitions
    }

    pub fn arcs(&self) -> &[(Arc, u64)] {
        &self.arcs
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn place_id(&self, id: &str) -> Result<PlaceId, NetError> {
        self.place_index
            .get(id)
            .copied()
            .ok_or_else(|| NetError::UnknownPlace(id.to_string()))
    }

    pub fn transition_id(&self, id: &str) -> Result<TransitionId, NetError> {
        self.transition_index
            .get(id)
            .copied()
            .ok_or_else(|| NetError::UnknownTransition(id.to_string()))
    }

    /// Input arcs of `t` as `(place, weight)`.
    pub fn inputs(&self, t: TransitionId) -> &[(PlaceId, u64)] {
        &self.arcs_by_transition[t].inputs
    }

    /// Output arcs of `t` as `(place, weight)`.
    pub fn outputs(&self, t: TransitionId) -> &[(PlaceId, u64)] {
        &self.arcs_by_transition[t].outputs
    }

    /// Builds a marking from `(place id, tokens)` pairs; unlisted places get 0.
    pub fn marking(&self, tokens: &[(&str, u64)]) -> Result<Marking, NetError> {
        let mut m = vec![0; self.places.len()];
        for (id, n) in tokens {
            m[self.place_id(id)?] = *n;
        }
        Ok(Marking(m))
    }

    fn check_marking(&self, m: &Marking) -> Result<(), NetError> {
        if m.len() != self.places.len() {
            return Err(NetError::MarkingSize {
                expected: self.places.len(),
                got: m.len(),
            });
        }
        Ok(())
    }

    fn check_transition(&self, t: TransitionId) -> Result<(), NetError> {
        if t >= self.transitions.len() {
            return Err(NetError::UnknownTransition(format!("#{t}")));
        }
        Ok(())
    }

    fn enabled_unchecked(&self, m: &Marking, t: TransitionId) -> bool {
        self.arcs_by_transition[t]
            .inputs
            .iter()
            .all(|&(p, w)| m.0[p] >= w)
    }

    /// True iff every input place of `t` holds at least the arc weight.
    pub fn is_enabled(&self, m: &Marking, t: TransitionId) -> Result<bool, NetError> {
        self.check_transition(t)?;
        self.check_marking(m)?;
        Ok(self.enabled_unchecked(m, t))
    }

    pub fn is_enabled_by_name(&self, m: &Marking, t: &str) -> Result<bool, NetError> {
        self.is_enabled(m, self.transition_id(t)?)
    }

    /// Fires `t`, returning the successor marking.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking, NetError> {
        self.check_transition(t)?;
        self.check_marking(m)?;
        let arcs = &self.arcs_by_transition[t];
        if let Some(&(p, w)) = arcs.inputs.iter().find(|&&(p, w)| m.0[p] < w) {
            return Err(NetError::NotEnabled {
                transition: self.transitions[t].clone(),
                place: self.places[p].clone(),
                have: m.0[p],
                need: w,
            });
        }
        let mut next = m.0.clone();
        for &(p, w) in &arcs.inputs {
            next[p] -= w;
        }
        for &(p, w) in &arcs.outputs {
            next[p] += w;
        }
        Ok(Marking(next))
    }

    pub fn fire_by_name(&self, m: &Marking, t: &str) -> Result<Marking, NetError> {
        self.fire(m, self.transition_id(t)?)
    }

    /// Enabled transitions in declaration order.
    pub fn enabled_transitions(&self, m: &Marking) -> Vec<TransitionId> {
        if m.len() != self.places.len() {
            return Vec::new();
        }
        (0..self.transitions.len())
            .filter(|&t| self.enabled_unchecked(m, t))
            .collect()
    }

    pub fn enabled_transition_names(&self, m: &Marking) -> Vec<&str> {
        self.enabled_transitions(m)
            .into_iter()
            .map(|t| self.transitions[t].as_str())
            .collect()
    }
}
