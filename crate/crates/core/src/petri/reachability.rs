use std::collections::{HashMap, VecDeque};

use super::{Marking, PetriNet, TransitionId};

/// Breadth-first reachability graph rooted at the initial marking.
///
/// Node 0 is the root. Node indices follow discovery order, so graphs of the
/// same net are identical across runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityGraph {
    pub nodes: Vec<Marking>,
    /// `(source node, transition, target node)`
    pub edges: Vec<(usize, TransitionId, usize)>,
    /// Set when exploration stopped at the node bound.
    pub truncated: bool,
    /// Nodes whose successors were fully enumerated.
    expanded: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilityReport {
    pub nodes: usize,
    pub edges: usize,
    pub truncated: bool,
    /// Largest token count seen in any place over the explored markings.
    pub max_tokens: u64,
    pub one_safe: bool,
    pub deadlocks: Vec<Marking>,
}

impl ReachabilityGraph {
    pub fn root(&self) -> &Marking {
        &self.nodes[0]
    }

    /// Expanded markings without any outgoing edge.
    pub fn deadlocks(&self) -> Vec<&Marking> {
        let mut has_out = vec![false; self.nodes.len()];
        for &(s, _, _) in &self.edges {
            has_out[s] = true;
        }
        (0..self.expanded)
            .filter(|&i| !has_out[i])
            .map(|i| &self.nodes[i])
            .collect()
    }

    pub fn max_tokens(&self) -> u64 {
        self.nodes
            .iter()
            .flat_map(|m| m.tokens().iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn report(&self) -> ReachabilityReport {
        let max_tokens = self.max_tokens();
        ReachabilityReport {
            nodes: self.nodes.len(),
            edges: self.edges.len(),
            truncated: self.truncated,
            max_tokens,
            one_safe: max_tokens <= 1,
            deadlocks: self.deadlocks().into_iter().cloned().collect(),
        }
    }
}

/// Explores markings reachable from `net`'s initial marking, keeping at most
/// `node_bound` distinct markings.
pub fn reachability(net: &PetriNet, node_bound: usize) -> ReachabilityGraph {
    let node_bound = node_bound.max(1);
    let root = net.initial_marking().clone();
    let mut index: HashMap<Marking, usize> = HashMap::from([(root.clone(), 0)]);
    let mut graph = ReachabilityGraph {
        nodes: vec![root],
        edges: Vec::new(),
        truncated: false,
        expanded: 0,
    };
    let mut queue = VecDeque::from([0usize]);

    'explore: while let Some(src) = queue.pop_front() {
        let m = graph.nodes[src].clone();
        for t in net.enabled_transitions(&m) {
            let next = net.fire(&m, t).expect("enabled transition fires");
            let dst = match index.get(&next) {
                Some(&i) => i,
                None => {
                    if graph.nodes.len() >= node_bound {
                        graph.truncated = true;
                        break 'explore;
                    }
                    let i = graph.nodes.len();
                    index.insert(next.clone(), i);
                    graph.nodes.push(next);
                    queue.push_back(i);
                    i
                }
            };
            graph.edges.push((src, t, dst));
        }
        graph.expanded += 1;
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::traffic_light_net;

    #[test]
    fn traffic_net_graph() {
        let net = traffic_light_net();
        let g = reachability(&net, 100);
        let r = g.report();
        assert_eq!((r.nodes, r.edges), (5, 8));
        assert!(!r.truncated && r.one_safe && r.deadlocks.is_empty());
        assert_eq!(g.root(), net.initial_marking());

        let safe = net.place_id("Safe").unwrap();
        let greens: Vec<_> = crate::petri::GROUPS
            .iter()
            .map(|g| net.place_id(&format!("Green_{g}")).unwrap())
            .collect();
        for m in &g.nodes {
            let marked: u64 = greens.iter().map(|&p| m.get(p)).sum();
            assert_eq!(marked + m.get(safe), 1);
            for g in crate::petri::GROUPS {
                let red = net.place_id(&format!("Red_{g}")).unwrap();
                let green = net.place_id(&format!("Green_{g}")).unwrap();
                assert_eq!(m.get(red) + m.get(green), 1);
            }
        }
        for &(s, t, d) in &g.edges {
            assert_eq!(net.fire(&g.nodes[s], t).unwrap(), g.nodes[d]);
        }
    }

    #[test]
    fn dead_root() {
        let net = PetriNet::builder()
            .place("p", 0)
            .transition("t")
            .arc("p", "t", 1)
            .build()
            .unwrap();
        let r = reachability(&net, 10).report();
        assert_eq!((r.nodes, r.edges), (1, 0));
        assert_eq!(r.deadlocks.len(), 1);
        assert!(!r.truncated);
    }

    #[test]
    fn source_transition_truncates() {
        let net = PetriNet::builder()
            .place("p", 0)
            .transition("t")
            .arc("t", "p", 1)
            .build()
            .unwrap();
        let g = reachability(&net, 10);
        assert_eq!(g.nodes.len(), 10);
        assert!(g.truncated);
        assert!(g.deadlocks().is_empty());
        assert_eq!(g.max_tokens(), 9);
        assert!(!g.report().one_safe);
    }
}
