//! JSON exchange format:
//!
//! ```json
//! {
//!   "places": [{"id": "p", "tokens": 1}],
//!   "transitions": ["t"],
//!   "arcs": [{"from": "p", "to": "t", "weight": 1}]
//! }
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Arc, NetBuilder, NetError, PetriNet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceDoc {
    pub id: String,
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcDoc {
    pub from: String,
    pub to: String,
    pub weight: u64,
}

/// Serialized form of a [`PetriNet`], arrays in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDocument {
    pub places: Vec<PlaceDoc>,
    pub transitions: Vec<String>,
    pub arcs: Vec<ArcDoc>,
}

impl From<&PetriNet> for NetDocument {
    fn from(net: &PetriNet) -> Self {
        let m0 = net.initial_marking();
        NetDocument {
            places: net
                .places()
                .iter()
                .enumerate()
                .map(|(i, id)| PlaceDoc {
                    id: id.clone(),
                    tokens: m0.get(i),
                })
                .collect(),
            transitions: net.transitions().to_vec(),
            arcs: net
                .arcs()
                .iter()
                .map(|&(arc, weight)| {
                    let (from, to) = match arc {
                        Arc::Input(p, t) => (&net.places()[p], &net.transitions()[t]),
                        Arc::Output(t, p) => (&net.transitions()[t], &net.places()[p]),
                    };
                    ArcDoc {
                        from: from.clone(),
                        to: to.clone(),
                        weight,
                    }
                })
                .collect(),
        }
    }
}

pub fn to_json(net: &PetriNet) -> String {
    serde_json::to_string_pretty(&NetDocument::from(net)).expect("net document serializes")
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> NetError {
    NetError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value, NetError> {
    obj.get(key)
        .ok_or_else(|| schema(format!("{path}.{key}"), "missing field"))
}

fn string(v: &Value, path: &str) -> Result<String, NetError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(path, "expected a string"))
}

fn uint(v: &Value, path: &str) -> Result<u64, NetError> {
    v.as_u64()
        .ok_or_else(|| schema(path, "expected a non-negative integer"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, NetError> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

/// Parses and validates a net document.
pub fn parse_net(text: &str) -> Result<PetriNet, NetError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    if !doc.is_object() {
        return Err(schema("$", "expected an object"));
    }
    let mut b = NetBuilder::new();
    for (i, p) in array(field(&doc, "places", "$")?, "$.places")?
        .iter()
        .enumerate()
    {
        let path = format!("$.places[{i}]");
        b = b.place(
            string(field(p, "id", &path)?, &format!("{path}.id"))?,
            uint(field(p, "tokens", &path)?, &format!("{path}.tokens"))?,
        );
    }
    for (i, t) in array(field(&doc, "transitions", "$")?, "$.transitions")?
        .iter()
        .enumerate()
    {
        b = b.transition(string(t, &format!("$.transitions[{i}]"))?);
    }
    for (i, a) in array(field(&doc, "arcs", "$")?, "$.arcs")?
        .iter()
        .enumerate()
    {
        let path = format!("$.arcs[{i}]");
        b = b.arc(
            string(field(a, "from", &path)?, &format!("{path}.from"))?,
            string(field(a, "to", &path)?, &format!("{path}.to"))?,
            uint(field(a, "weight", &path)?, &format!("{path}.weight"))?,
        );
    }
    b.build().map_err(|e| prefix_path(e, "$."))
}

fn prefix_path(e: NetError, prefix: &str) -> NetError {
    let fix = |path: String| format!("{prefix}{path}");
    match e {
        NetError::DuplicateId { path, id } => NetError::DuplicateId { path: fix(path), id },
        NetError::UnknownEndpoint { path, id } => NetError::UnknownEndpoint { path: fix(path), id },
        NetError::NotBipartite { path, from, to } => NetError::NotBipartite {
            path: fix(path),
            from,
            to,
        },
        NetError::InvalidWeight { path, weight } => NetError::InvalidWeight {
            path: fix(path),
            weight,
        },
        NetError::DuplicateArc { path, from, to } => NetError::DuplicateArc {
            path: fix(path),
            from,
            to,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::traffic_light_net;

    fn compact(s: &str) -> String {
        s.chars().filter(|c| !c.is_whitespace()).collect()
    }

    #[test]
    fn traffic_net_round_trips() {
        let net = traffic_light_net();
        let text = to_json(&net);
        let back = parse_net(&text).unwrap();
        assert_eq!(back.places().len(), 9);
        assert_eq!(back.transitions().len(), 8);
        assert_eq!(back.arcs().len(), 24);
        assert_eq!(compact(&to_json(&back)), compact(&text));
        assert_eq!(back, net);
    }

    #[test]
    fn place_to_place_arc_is_rejected() {
        let err = parse_net(
            r#"{"places":[{"id":"a","tokens":0},{"id":"b","tokens":0}],
                "transitions":[],
                "arcs":[{"from":"a","to":"b","weight":1}]}"#,
        )
        .unwrap_err();
        match err {
            NetError::NotBipartite { path, .. } => assert_eq!(path, "$.arcs[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_weight_is_rejected() {
        let err = parse_net(
            r#"{"places":[{"id":"a","tokens":0}],"transitions":["t"],
                "arcs":[{"from":"t","to":"a","weight":0}]}"#,
        )
        .unwrap_err();
        match err {
            NetError::InvalidWeight { path, weight } => {
                assert_eq!(path, "$.arcs[0].weight");
                assert_eq!(weight, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_endpoint_and_schema_errors() {
        let err = parse_net(
            r#"{"places":[{"id":"a","tokens":0}],"transitions":["t"],
                "arcs":[{"from":"a","to":"zz","weight":1}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, NetError::UnknownEndpoint { ref id, .. } if id == "zz"));

        let err = parse_net(r#"{"places":[{"id":"a","tokens":-1}],"transitions":[],"arcs":[]}"#)
            .unwrap_err();
        assert!(matches!(err, NetError::Schema { ref path, .. } if path == "$.places[0].tokens"));

        let err = parse_net(r#"{"places":[],"arcs":[]}"#).unwrap_err();
        assert!(matches!(err, NetError::Schema { ref path, .. } if path == "$.transitions"));

        assert!(matches!(parse_net("not json"), Err(NetError::Schema { .. })));
    }
}
