//! Discrete Bayesian networks: loading, validation, parent-configuration
//! indexing, forward sampling and exact ground-truth quantities.
//!
//! Networks are described by a JSON document:
//!
//! ```text
//! { "name": "...",
//!   "nodes": [ { "name": "A", "cardinality": 2, "parents": [], "cpt": [[0.3, 0.7]] }, ... ] }
//! ```
//!
//! CPT rows are ordered by parent configuration index (mixed radix, first
//! listed parent most significant). Node order in the file defines node indices.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on CPT row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// On-disk form of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub name: String,
    pub nodes: Vec<NodeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub name: String,
    pub cardinality: usize,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

/// A validated node: domain size, parents and ground-truth CPT.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    name: String,
    cardinality: usize,
    parents: Vec<usize>,
    /// Mixed-radix weight of each parent, aligned with `parents`.
    strides: Vec<usize>,
    parent_configs: usize,
    /// Row-major, `parent_configs` rows of `cardinality` entries.
    cpt: Vec<f64>,
}

impl NodeSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Size of the node's domain (J).
    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    /// Number of joint parent assignments (K); 1 for a root.
    pub fn parent_configs(&self) -> usize {
        self.parent_configs
    }

    pub fn cpt_row(&self, config: usize) -> &[f64] {
        let j = self.cardinality;
        &self.cpt[config * j..(config + 1) * j]
    }

    pub fn cpt_entry(&self, config: usize, value: usize) -> f64 {
        self.cpt[config * self.cardinality + value]
    }
}

/// One full observation: a value for every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event(pub Vec<usize>);

impl Event {
    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Event {
    fn from(values: Vec<usize>) -> Self {
        Event(values)
    }
}

/// Index of a parent assignment in `[0, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParentConfig(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    name: String,
    nodes: Vec<NodeSpec>,
    topo: Vec<usize>,
    max_parents: usize,
}

impl BayesNet {
    /// Parses and validates a JSON network description.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Format {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: NetworkDoc) -> Result<Self> {
        if doc.nodes.is_empty() {
            return Err(Error::structure(&doc.name, "network has no nodes"));
        }

        let mut index = HashMap::with_capacity(doc.nodes.len());
        for (i, node) in doc.nodes.iter().enumerate() {
            if index.insert(node.name.as_str(), i).is_some() {
                return Err(Error::structure(&node.name, "duplicate node name"));
            }
        }

        let cards: Vec<usize> = doc.nodes.iter().map(|n| n.cardinality).collect();
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for node in &doc.nodes {
            if node.cardinality == 0 {
                return Err(Error::validation(&node.name, None, "cardinality must be positive"));
            }
            let mut parents = Vec::with_capacity(node.parents.len());
            for p in &node.parents {
                let &pi = index.get(p.as_str()).ok_or_else(|| {
                    Error::structure(&node.name, format!("unknown parent `{p}`"))
                })?;
                if parents.contains(&pi) {
                    return Err(Error::structure(&node.name, format!("parent `{p}` listed twice")));
                }
                parents.push(pi);
            }

            let mut strides = vec![0; parents.len()];
            let mut k: usize = 1;
            for (slot, &p) in parents.iter().enumerate().rev() {
                strides[slot] = k;
                k = k.checked_mul(cards[p]).ok_or_else(|| {
                    Error::validation(&node.name, None, "parent configuration count overflows")
                })?;
            }

            if node.cpt.len() != k {
                return Err(Error::validation(
                    &node.name,
                    None,
                    format!("expected {k} CPT rows, found {}", node.cpt.len()),
                ));
            }
            let mut cpt = Vec::with_capacity(k * node.cardinality);
            for (r, row) in node.cpt.iter().enumerate() {
                if row.len() != node.cardinality {
                    return Err(Error::validation(
                        &node.name,
                        Some(r),
                        format!("expected {} entries, found {}", node.cardinality, row.len()),
                    ));
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                    return Err(Error::validation(&node.name, Some(r), "entries must lie in [0, 1]"));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::validation(
                        &node.name,
                        Some(r),
                        format!("row sums to {sum}, not 1"),
                    ));
                }
                cpt.extend(row.iter().map(|p| p / sum));
            }

            nodes.push(NodeSpec {
                name: node.name.clone(),
                cardinality: node.cardinality,
                parents,
                strides,
                parent_configs: k,
                cpt,
            });
        }

        let topo = topological_sort(&nodes)?;
        let max_parents = nodes.iter().map(|n| n.parents.len()).max().unwrap_or(0);
        Ok(BayesNet {
            name: doc.name,
            nodes,
            topo,
            max_parents,
        })
    }

    pub fn to_doc(&self) -> NetworkDoc {
        NetworkDoc {
            name: self.name.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    name: n.name.clone(),
                    cardinality: n.cardinality,
                    parents: n.parents.iter().map(|&p| self.nodes[p].name.clone()).collect(),
                    cpt: n.cpt.chunks(n.cardinality).map(<[f64]>::to_vec).collect(),
                })
                .collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NodeSpec {
        &self.nodes[i]
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    /// Largest parent-set size (d).
    pub fn max_parents(&self) -> usize {
        self.max_parents
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(c, n)| n.parents.iter().map(move |&p| (p, c)))
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.parents.len()).sum()
    }

    /// Free parameters, Σ K_i (J_i − 1).
    pub fn parameter_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.parent_configs * (n.cardinality - 1))
            .sum()
    }

    /// Nodes ordered so that parents precede children; ties go to the lower index.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Π J_i over all nodes, or `None` on overflow.
    pub fn joint_space_size(&self) -> Option<usize> {
        self.nodes
            .iter()
            .try_fold(1usize, |acc, n| acc.checked_mul(n.cardinality))
    }

    pub fn check_event(&self, event: &Event) -> Result<()> {
        if event.0.len() != self.nodes.len() {
            return Err(Error::Argument(format!(
                "event has {} values, network has {} nodes",
                event.0.len(),
                self.nodes.len()
            )));
        }
        for (node, &v) in self.nodes.iter().zip(&event.0) {
            if v >= node.cardinality {
                return Err(Error::Argument(format!(
                    "value {v} outside the domain of `{}` (cardinality {})",
                    node.name, node.cardinality
                )));
            }
        }
        Ok(())
    }

    pub fn parent_config_index(&self, node: usize, event: &Event) -> Result<ParentConfig> {
        if node >= self.nodes.len() {
            return Err(Error::Argument(format!(
                "node index {node} out of range for {} nodes",
                self.nodes.len()
            )));
        }
        Ok(ParentConfig(self.parent_config(node, &event.0)))
    }

    /// Unchecked mixed-radix parent index for a full assignment.
    #[inline]
    pub fn parent_config(&self, node: usize, values: &[usize]) -> usize {
        let n = &self.nodes[node];
        n.parents
            .iter()
            .zip(&n.strides)
            .map(|(&p, &s)| values[p] * s)
            .sum()
    }

    /// Inverse of [`BayesNet::parent_config`]: the parent values encoded by `config`.
    pub fn decode_parent_config(&self, node: usize, config: usize) -> Vec<usize> {
        let n = &self.nodes[node];
        n.parents
            .iter()
            .zip(&n.strides)
            .map(|(&p, &s)| (config / s) % self.nodes[p].cardinality)
            .collect()
    }

    /// Draws one event from the ground-truth joint distribution.
    pub fn forward_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Event {
        let mut values = vec![0; self.nodes.len()];
        for &i in &self.topo {
            let row = self.nodes[i].cpt_row(self.parent_config(i, &values));
            values[i] = sample_categorical(row, rng);
        }
        Event(values)
    }

    /// Ground-truth joint probability, Π_i θ_i(x_i | x_par).
    pub fn joint_prob_true(&self, event: &Event) -> f64 {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| n.cpt_entry(self.parent_config(i, &event.0), event.0[i]))
            .product()
    }
}

/// Parses a network from JSON text.
pub fn load_network(document: &str) -> Result<BayesNet> {
    BayesNet::from_json(document)
}

/// MLE of one CPT entry from exact counts. Returns `1 / cardinality` for an
/// unobserved parent configuration.
pub fn mle_from_counts(count_joint: u64, count_parent: u64, cardinality: usize) -> Result<f64> {
    if count_joint > count_parent {
        return Err(Error::Consistency {
            joint: count_joint,
            parent: count_parent,
        });
    }
    if count_parent == 0 {
        return Ok(1.0 / cardinality as f64);
    }
    Ok(count_joint as f64 / count_parent as f64)
}

fn sample_categorical<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (v, &p) in row.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return v;
        }
    }
    // Rounding left u above the final cumulative sum.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

fn topological_sort(nodes: &[NodeSpec]) -> Result<Vec<usize>> {
    let n = nodes.len();
    let mut children = vec![Vec::new(); n];
    let mut pending: Vec<usize> = nodes.iter().map(|node| node.parents.len()).collect();
    for (c, node) in nodes.iter().enumerate() {
        for &p in &node.parents {
            children[p].push(c);
        }
    }

    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }

    if order.len() < n {
        // Every unprocessed node has an unprocessed parent; walking parents must revisit a node.
        let start = (0..n).find(|&i| pending[i] > 0).unwrap();
        let mut seen = vec![false; n];
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = *nodes[cur]
                .parents
                .iter()
                .find(|&&p| pending[p] > 0)
                .expect("unprocessed node has an unprocessed parent");
        }
        return Err(Error::structure(&nodes[cur].name, "node lies on a directed cycle"));
    }
    Ok(order)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn node(name: &str, card: usize, parents: &[&str], cpt: Vec<Vec<f64>>) -> NodeDoc {
        NodeDoc {
            name: name.into(),
            cardinality: card,
            parents: parents.iter().map(|s| s.to_string()).collect(),
            cpt,
        }
    }

    pub(crate) fn chain() -> BayesNet {
        BayesNet::from_doc(NetworkDoc {
            name: "chain".into(),
            nodes: vec![
                node("A", 2, &[], vec![vec![0.7, 0.3]]),
                node("B", 2, &["A"], vec![vec![0.9, 0.1], vec![0.1, 0.9]]),
            ],
        })
        .unwrap()
    }

    fn uniform_rows(k: usize, j: usize) -> Vec<Vec<f64>> {
        vec![vec![1.0 / j as f64; j]; k]
    }

    #[test]
    fn single_node_network() {
        let net = BayesNet::from_json(
            r#"{"name":"one","nodes":[{"name":"X","cardinality":2,"parents":[],"cpt":[[0.5,0.5]]}]}"#,
        )
        .unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.max_parents(), 0);
        assert_eq!(net.node(0).parent_configs(), 1);
        assert_eq!(net.topological_order(), &[0]);
    }

    #[test]
    fn two_node_parameter_count() {
        let net = BayesNet::from_doc(NetworkDoc {
            name: "ab".into(),
            nodes: vec![
                node("A", 2, &[], uniform_rows(1, 2)),
                node("B", 3, &["A"], uniform_rows(2, 3)),
            ],
        })
        .unwrap();
        assert_eq!(net.node(1).parent_configs(), 2);
        assert_eq!(net.parameter_count(), 1 + 2 * 2);
    }

    #[test]
    fn parse_error_reports_line() {
        let err = BayesNet::from_json("{\n  \"name\": \"x\",\n  \"nodes\": [ oops ]\n}").unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycle_is_rejected_with_node_name() {
        let err = BayesNet::from_doc(NetworkDoc {
            name: "cyc".into(),
            nodes: vec![
                node("R", 2, &[], uniform_rows(1, 2)),
                node("A", 2, &["C"], uniform_rows(2, 2)),
                node("B", 2, &["A"], uniform_rows(2, 2)),
                node("C", 2, &["B"], uniform_rows(2, 2)),
            ],
        })
        .unwrap_err();
        match err {
            Error::Structure { node, .. } => assert!(["A", "B", "C"].contains(&node.as_str())),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let err = BayesNet::from_doc(NetworkDoc {
            name: "self".into(),
            nodes: vec![node("A", 2, &["A"], uniform_rows(2, 2))],
        })
        .unwrap_err();
        assert!(matches!(err, Error::Structure { ref node, .. } if node == "A"));
    }

    #[test]
    fn bad_rows_are_rejected_with_location() {
        let err = BayesNet::from_doc(NetworkDoc {
            name: "bad".into(),
            nodes: vec![
                node("A", 2, &[], vec![vec![0.5, 0.5]]),
                node("B", 2, &["A"], vec![vec![0.5, 0.5], vec![0.5, 0.6]]),
            ],
        })
        .unwrap_err();
        assert_eq!(
            err,
            Error::Validation {
                node: "B".into(),
                row: Some(1),
                reason: "row sums to 1.1, not 1".into()
            }
        );

        let err = BayesNet::from_doc(NetworkDoc {
            name: "arity".into(),
            nodes: vec![node("A", 3, &[], vec![vec![0.5, 0.5]])],
        })
        .unwrap_err();
        assert!(matches!(err, Error::Validation { row: Some(0), .. }));

        let err = BayesNet::from_doc(NetworkDoc {
            name: "rows".into(),
            nodes: vec![
                node("A", 2, &[], vec![vec![0.5, 0.5]]),
                node("B", 2, &["A"], vec![vec![0.5, 0.5]]),
            ],
        })
        .unwrap_err();
        assert!(matches!(err, Error::Validation { row: None, .. }));
    }

    #[test]
    fn near_normalized_rows_are_renormalized() {
        let net = BayesNet::from_doc(NetworkDoc {
            name: "norm".into(),
            nodes: vec![node("A", 2, &[], vec![vec![0.5 + 4e-10, 0.5]])],
        })
        .unwrap();
        let sum: f64 = net.node(0).cpt_row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_and_duplicate_parents() {
        let err = BayesNet::from_doc(NetworkDoc {
            name: "u".into(),
            nodes: vec![node("A", 2, &["Z"], uniform_rows(2, 2))],
        })
        .unwrap_err();
        assert!(matches!(err, Error::Structure { .. }));

        let err = BayesNet::from_doc(NetworkDoc {
            name: "d".into(),
            nodes: vec![
                node("A", 2, &[], uniform_rows(1, 2)),
                node("B", 2, &["A", "A"], uniform_rows(4, 2)),
            ],
        })
        .unwrap_err();
        assert!(matches!(err, Error::Structure { .. }));
    }

    #[test]
    fn forward_references_are_allowed() {
        let net = BayesNet::from_doc(NetworkDoc {
            name: "fwd".into(),
            nodes: vec![
                node("B", 2, &["A"], uniform_rows(2, 2)),
                node("A", 2, &[], uniform_rows(1, 2)),
            ],
        })
        .unwrap();
        assert_eq!(net.topological_order(), &[1, 0]);
    }

    #[test]
    fn mixed_radix_examples() {
        let net = BayesNet::from_doc(NetworkDoc {
            name: "mr".into(),
            nodes: vec![
                node("P", 2, &[], uniform_rows(1, 2)),
                node("Q", 3, &[], uniform_rows(1, 3)),
                node("C", 2, &["P", "Q"], uniform_rows(6, 2)),
                node("R", 4, &[], uniform_rows(1, 4)),
                node("D", 2, &["R", "P", "A2"], uniform_rows(16, 2)),
                node("A2", 2, &[], uniform_rows(1, 2)),
            ],
        })
        .unwrap();
        let ev = Event(vec![1, 2, 0, 0, 0, 0]);
        assert_eq!(net.parent_config_index(0, &ev).unwrap(), ParentConfig(0));
        assert_eq!(net.parent_config_index(2, &ev).unwrap(), ParentConfig(5));
        // D's parents (R, P, A2) with cardinalities (4, 2, 2) and values (3, 0, 1).
        let ev = Event(vec![0, 0, 0, 3, 0, 1]);
        assert_eq!(net.parent_config_index(4, &ev).unwrap(), ParentConfig(13));
        assert!(net.parent_config_index(6, &ev).is_err());
    }

    #[test]
    fn parent_config_is_a_bijection() {
        let net = BayesNet::from_doc(NetworkDoc {
            name: "bij".into(),
            nodes: vec![
                node("R", 4, &[], uniform_rows(1, 4)),
                node("P", 2, &[], uniform_rows(1, 2)),
                node("Q", 2, &[], uniform_rows(1, 2)),
                node("C", 2, &["R", "P", "Q"], uniform_rows(16, 2)),
            ],
        })
        .unwrap();
        let mut hits = [0; 16];
        for r in 0..4 {
            for p in 0..2 {
                for q in 0..2 {
                    let ev = Event(vec![r, p, q, 0]);
                    let idx = net.parent_config_index(3, &ev).unwrap().0;
                    hits[idx] += 1;
                    assert_eq!(net.decode_parent_config(3, idx), vec![r, p, q]);
                }
            }
        }
        assert!(hits.iter().all(|&h| h == 1));
    }

    #[test]
    fn topological_order_examples() {
        let net = BayesNet::from_doc(NetworkDoc {
            name: "chain".into(),
            nodes: vec![
                node("A", 2, &[], uniform_rows(1, 2)),
                node("B", 2, &["A"], uniform_rows(2, 2)),
                node("C", 2, &["B"], uniform_rows(2, 2)),
            ],
        })
        .unwrap();
        assert_eq!(net.topological_order(), &[0, 1, 2]);

        let diamond = BayesNet::from_doc(NetworkDoc {
            name: "diamond".into(),
            nodes: vec![
                node("A", 2, &[], uniform_rows(1, 2)),
                node("B", 2, &["A"], uniform_rows(2, 2)),
                node("C", 2, &["A"], uniform_rows(2, 2)),
                node("D", 2, &["B", "C"], uniform_rows(4, 2)),
            ],
        })
        .unwrap();
        assert_eq!(diamond.topological_order(), &[0, 1, 2, 3]);
        let pos: Vec<usize> = (0..4)
            .map(|i| diamond.topological_order().iter().position(|&x| x == i).unwrap())
            .collect();
        for (p, c) in diamond.edges() {
            assert!(pos[p] < pos[c]);
        }
    }

    #[test]
    fn joint_probability_examples() {
        let one = BayesNet::from_doc(NetworkDoc {
            name: "one".into(),
            nodes: vec![node("X", 2, &[], vec![vec![0.5, 0.5]])],
        })
        .unwrap();
        assert_eq!(one.joint_prob_true(&Event(vec![0])), 0.5);

        let chain = BayesNet::from_doc(NetworkDoc {
            name: "c".into(),
            nodes: vec![
                node("A", 2, &[], vec![vec![0.7, 0.3]]),
                node("B", 2, &["A"], vec![vec![0.9, 0.1], vec![0.1, 0.9]]),
            ],
        })
        .unwrap();
        assert!((chain.joint_prob_true(&Event(vec![1, 1])) - 0.27).abs() < 1e-15);

        let det = BayesNet::from_doc(NetworkDoc {
            name: "det".into(),
            nodes: vec![
                node("A", 3, &[], vec![vec![0.0, 1.0, 0.0]]),
                node("B", 2, &["A"], vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]),
            ],
        })
        .unwrap();
        assert_eq!(det.joint_prob_true(&Event(vec![1, 1])), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(det.forward_sample(&mut rng), Event(vec![1, 1]));
        }
    }

    #[test]
    fn mle_examples() {
        assert_eq!(mle_from_counts(27, 100, 2).unwrap(), 0.27);
        assert_eq!(mle_from_counts(0, 100, 2).unwrap(), 0.0);
        assert_eq!(mle_from_counts(0, 0, 4).unwrap(), 0.25);
        assert!(matches!(mle_from_counts(5, 4, 2), Err(Error::Consistency { .. })));
    }

    #[test]
    fn event_validation() {
        let net = chain();
        assert!(net.check_event(&Event(vec![1, 0])).is_ok());
        assert!(net.check_event(&Event(vec![2, 0])).is_err());
        assert!(net.check_event(&Event(vec![0])).is_err());
    }

    #[test]
    fn doc_round_trip_preserves_network() {
        let net = chain();
        let text = serde_json::to_string(&net.to_doc()).unwrap();
        assert_eq!(BayesNet::from_json(&text).unwrap(), net);
    }
}
