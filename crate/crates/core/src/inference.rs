//! Conditional queries and classification over any [`JointModel`], by
//! enumerating unassigned variables, plus a brute-force joint table built
//! directly from raw event counts to serve as an independent oracle.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::network::{mle_from_counts, BayesNet, Event};
use crate::tracker::JointModel;

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Observed values keyed by node index.
pub type EvidenceSet = BTreeMap<usize, usize>;

/// Nodes whose joint assignment is being predicted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet(pub Vec<usize>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditional {
    /// The estimate clamped to [0, 1].
    pub value: f64,
    /// The unclamped ratio P̃(y, e) / P̃(e).
    pub raw: f64,
}

/// Iterates over every assignment of a mixed-radix domain, last position fastest.
struct Odometer {
    cards: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl Odometer {
    fn new(cards: Vec<usize>) -> Self {
        let done = cards.contains(&0);
        Odometer {
            current: vec![0; cards.len()],
            cards,
            done,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        // Yield the current state, then advance lazily on the following call.
        self.done = true;
        Some(&self.current)
    }

    fn advance(&mut self) {
        for pos in (0..self.cards.len()).rev() {
            self.current[pos] += 1;
            if self.current[pos] < self.cards[pos] {
                self.done = false;
                return;
            }
            self.current[pos] = 0;
        }
    }
}

fn for_each_assignment(cards: Vec<usize>, mut f: impl FnMut(&[usize])) {
    let mut odo = Odometer::new(cards);
    while let Some(a) = odo.next() {
        f(a);
        odo.advance();
    }
}

fn domain_size(net: &BayesNet, nodes: &[usize], cap: usize) -> Result<usize> {
    nodes
        .iter()
        .try_fold(1usize, |acc, &i| acc.checked_mul(net.node(i).cardinality()))
        .filter(|&s| s <= cap)
        .ok_or_else(|| {
            Error::Capacity(format!(
                "enumerating {} variables exceeds the cap of {cap} assignments",
                nodes.len()
            ))
        })
}

fn check_assignment(net: &BayesNet, what: &str, assignment: &BTreeMap<usize, usize>) -> Result<()> {
    for (&node, &value) in assignment {
        if node >= net.len() {
            return Err(Error::Argument(format!("{what} node {node} out of range")));
        }
        if value >= net.node(node).cardinality() {
            return Err(Error::Argument(format!(
                "{what} value {value} outside the domain of `{}`",
                net.node(node).name()
            )));
        }
    }
    Ok(())
}

/// Σ over hidden-variable assignments of the model's joint, with `fixed` held.
fn marginal<M: JointModel + ?Sized>(model: &M, fixed: &[usize], hidden: &[usize]) -> f64 {
    let net = model.network();
    let mut values = fixed.to_vec();
    let cards = hidden.iter().map(|&h| net.node(h).cardinality()).collect();
    let mut total = 0.0;
    for_each_assignment(cards, |a| {
        for (&h, &v) in hidden.iter().zip(a) {
            values[h] = v;
        }
        total += model.joint(&values);
    });
    total
}

pub fn conditional_prob<M: JointModel + ?Sized>(
    model: &M,
    target: &BTreeMap<usize, usize>,
    evidence: &EvidenceSet,
) -> Result<Conditional> {
    conditional_prob_capped(model, target, evidence, DEFAULT_ENUMERATION_CAP)
}

pub fn conditional_prob_capped<M: JointModel + ?Sized>(
    model: &M,
    target: &BTreeMap<usize, usize>,
    evidence: &EvidenceSet,
    cap: usize,
) -> Result<Conditional> {
    let net = model.network();
    check_assignment(net, "target", target)?;
    check_assignment(net, "evidence", evidence)?;
    if let Some(node) = target.keys().find(|k| evidence.contains_key(k)) {
        return Err(Error::Argument(format!("node {node} is both target and evidence")));
    }

    let hidden: Vec<usize> = (0..net.len())
        .filter(|i| !target.contains_key(i) && !evidence.contains_key(i))
        .collect();
    let mut free: Vec<usize> = target.keys().copied().chain(hidden.iter().copied()).collect();
    free.sort_unstable();
    domain_size(net, &free, cap)?;

    let mut fixed = vec![0; net.len()];
    for (&i, &v) in evidence.iter().chain(target) {
        fixed[i] = v;
    }
    let numerator = marginal(model, &fixed, &hidden);
    let denominator = marginal(model, &fixed, &free);
    if denominator <= 0.0 {
        return Err(Error::Argument("evidence has zero estimated probability".into()));
    }
    let raw = numerator / denominator;
    Ok(Conditional {
        value: raw.clamp(0.0, 1.0),
        raw,
    })
}

/// Most probable joint assignment of `targets` given `evidence`; ties go to
/// the lexicographically smallest assignment. Returned in `targets` order.
pub fn classify<M: JointModel + ?Sized>(model: &M, targets: &TargetSet, evidence: &EvidenceSet) -> Result<Vec<usize>> {
    classify_capped(model, targets, evidence, DEFAULT_ENUMERATION_CAP)
}

pub fn classify_capped<M: JointModel + ?Sized>(
    model: &M,
    targets: &TargetSet,
    evidence: &EvidenceSet,
    cap: usize,
) -> Result<Vec<usize>> {
    let net = model.network();
    if targets.0.is_empty() {
        return Err(Error::Argument("target set is empty".into()));
    }
    for (pos, &t) in targets.0.iter().enumerate() {
        if t >= net.len() {
            return Err(Error::Argument(format!("target node {t} out of range")));
        }
        if targets.0[..pos].contains(&t) {
            return Err(Error::Argument(format!("target node {t} listed twice")));
        }
        if evidence.contains_key(&t) {
            return Err(Error::Argument(format!("node {t} is both target and evidence")));
        }
    }
    check_assignment(net, "evidence", evidence)?;

    let hidden: Vec<usize> = (0..net.len())
        .filter(|i| !targets.0.contains(i) && !evidence.contains_key(i))
        .collect();
    let mut free = targets.0.clone();
    free.extend(&hidden);
    domain_size(net, &free, cap)?;

    let mut fixed = vec![0; net.len()];
    for (&i, &v) in evidence {
        fixed[i] = v;
    }
    let cards = targets.0.iter().map(|&t| net.node(t).cardinality()).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_assignment(cards, |y| {
        for (&t, &v) in targets.0.iter().zip(y) {
            fixed[t] = v;
        }
        let score = marginal(model, &fixed, &hidden);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, y.to_vec()));
        }
    });
    Ok(best.map(|(_, y)| y).expect("target domain is non-empty"))
}

/// Full MLE joint distribution tabulated from raw events.
#[derive(Debug, Clone)]
pub struct JointTable {
    net: BayesNet,
    /// Indexed mixed-radix over all nodes, node 0 most significant.
    probs: Vec<f64>,
}

impl JointTable {
    fn index(&self, values: &[usize]) -> usize {
        self.net
            .nodes()
            .iter()
            .zip(values)
            .fold(0, |acc, (n, &v)| acc * n.cardinality() + v)
    }

    pub fn prob(&self, event: &Event) -> f64 {
        self.probs[self.index(&event.0)]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

impl JointModel for JointTable {
    fn network(&self) -> &BayesNet {
        &self.net
    }

    fn joint(&self, values: &[usize]) -> f64 {
        self.probs[self.index(values)]
    }
}

/// Tabulates the exact-count MLE of every full assignment.
pub fn brute_force_joint(events: &[Event], net: &BayesNet) -> Result<JointTable> {
    let size = net
        .joint_space_size()
        .filter(|&s| s <= DEFAULT_ENUMERATION_CAP)
        .ok_or_else(|| Error::Capacity(format!("joint space of `{}` is too large to tabulate", net.name())))?;

    // counts[i][(parent values, own value)] straight from the raw events.
    let mut joint_counts: Vec<BTreeMap<(Vec<usize>, usize), u64>> = vec![BTreeMap::new(); net.len()];
    let mut parent_counts: Vec<BTreeMap<Vec<usize>, u64>> = vec![BTreeMap::new(); net.len()];
    for ev in events {
        net.check_event(ev)?;
        for (i, node) in net.nodes().iter().enumerate() {
            let pv: Vec<usize> = node.parents().iter().map(|&p| ev.0[p]).collect();
            *joint_counts[i].entry((pv.clone(), ev.0[i])).or_default() += 1;
            *parent_counts[i].entry(pv).or_default() += 1;
        }
    }

    let mut probs = Vec::with_capacity(size);
    let cards = net.nodes().iter().map(|n| n.cardinality()).collect();
    let mut failure = None;
    for_each_assignment(cards, |a| {
        let mut p = 1.0;
        for (i, node) in net.nodes().iter().enumerate() {
            let pv: Vec<usize> = node.parents().iter().map(|&q| a[q]).collect();
            let cj = joint_counts[i].get(&(pv.clone(), a[i])).copied().unwrap_or(0);
            let cp = parent_counts[i].get(&pv).copied().unwrap_or(0);
            match mle_from_counts(cj, cp, node.cardinality()) {
                Ok(f) => p *= f,
                Err(e) => failure = Some(e),
            }
        }
        probs.push(p);
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(JointTable {
        net: net.clone(),
        probs,
    })
}
