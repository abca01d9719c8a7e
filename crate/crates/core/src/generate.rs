//! Seeded synthesis of networks: random DAGs for tests and demos, and
//! heterogeneous variants of an existing network with a few widened domains.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::network::{BayesNet, NetworkDoc, NodeDoc};

/// One draw from the flat Dirichlet over `len` outcomes (normalized Exp(1) variates).
pub fn dirichlet_row<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / sum).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomNetSpec {
    pub nodes: usize,
    /// Cardinalities are drawn uniformly from `2..=max_cardinality`.
    pub max_cardinality: usize,
    pub max_parents: usize,
}

/// A random network whose node order is already topological: each node draws
/// up to `max_parents` parents among the nodes before it.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, spec: &RandomNetSpec) -> Result<BayesNet> {
    if spec.nodes == 0 || spec.max_cardinality < 2 {
        return Err(Error::Argument(
            "a random network needs at least one node and cardinality ≥ 2".into(),
        ));
    }
    let cards: Vec<usize> = (0..spec.nodes)
        .map(|_| rng.random_range(2..=spec.max_cardinality))
        .collect();
    let mut nodes = Vec::with_capacity(spec.nodes);
    for i in 0..spec.nodes {
        let fan_in = rng.random_range(0..=spec.max_parents.min(i));
        let mut parents = sample(rng, i, fan_in).into_vec();
        parents.sort_unstable();
        let k: usize = parents.iter().map(|&p| cards[p]).product();
        nodes.push(NodeDoc {
            name: format!("X{i}"),
            cardinality: cards[i],
            parents: parents.iter().map(|p| format!("X{p}")).collect(),
            cpt: (0..k).map(|_| dirichlet_row(rng, cards[i])).collect(),
        });
    }
    BayesNet::from_doc(NetworkDoc {
        name: format!("random-{}", spec.nodes),
        nodes,
    })
}

/// Widens `count` randomly chosen nodes of `base` to `cardinality` values.
/// Every widened node and every child of a widened node gets fresh CPT rows
/// drawn from the flat Dirichlet; all other CPTs are kept.
pub fn widen_nodes<R: Rng + ?Sized>(
    base: &BayesNet,
    rng: &mut R,
    count: usize,
    cardinality: usize,
    name: &str,
) -> Result<BayesNet> {
    if count > base.len() {
        return Err(Error::Argument(format!(
            "cannot widen {count} of {} nodes",
            base.len()
        )));
    }
    if cardinality < 2 {
        return Err(Error::Argument("widened cardinality must be at least 2".into()));
    }
    let mut widened = vec![false; base.len()];
    for i in sample(rng, base.len(), count) {
        widened[i] = true;
    }
    let cards: Vec<usize> = base
        .nodes()
        .iter()
        .zip(&widened)
        .map(|(n, &w)| if w { cardinality } else { n.cardinality() })
        .collect();

    let mut doc = base.to_doc();
    doc.name = name.to_string();
    for (i, node) in doc.nodes.iter_mut().enumerate() {
        let spec = base.node(i);
        if widened[i] || spec.parents().iter().any(|&p| widened[p]) {
            let k: usize = spec.parents().iter().map(|&p| cards[p]).product();
            node.cardinality = cards[i];
            node.cpt = (0..k).map(|_| dirichlet_row(rng, cards[i])).collect();
        }
    }
    BayesNet::from_doc(doc)
}
