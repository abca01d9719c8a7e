//! Continuous maintenance of approximate CPT counters for a Bayesian network.
//!
//! A [`Tracker`] holds, per replica, one counter for every
//! `(node, value, parent configuration)` and one for every
//! `(node, parent configuration)`. Every event increments both counters of
//! every node at the site that observed it. A query multiplies
//! the ratios `A_i(x_i, x_par) / A_i(x_par)`, falling back to `1/J_i` for a
//! parent configuration with a zero estimate, and reports the median across
//! replicas.
//!
//! The naive-Bayes variant keeps a single set of root counters `A(x_1)` that
//! serve both as the root's own numerator and as the parent counter of every
//! child; the root's denominator is the sum of those counters.

use std::sync::Arc;

use serde::Serialize;

use crate::budget::{allocate_budget, replication_count, Algorithm, BudgetAllocation};
use crate::counter::{mix_seed, Counter, MessageLedger};
use crate::error::{Error, Result};
use crate::network::{BayesNet, Event};

pub const DEFAULT_COUNTER_CAP: usize = 10_000_000;

/// Above this many nodes the query product is accumulated in log space.
const LOG_SPACE_NODES: usize = 64;

const JOINT_FAMILY: u64 = 0;
const PARENT_FAMILY: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub delta: f64,
    pub sites: usize,
    pub replicas: usize,
    pub master_seed: u64,
    pub counter_cap: usize,
}

impl TrackerConfig {
    /// Configuration with the replica count implied by `delta`.
    pub fn new(algorithm: Algorithm, epsilon: f64, delta: f64, sites: usize, master_seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Argument(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Argument(format!("delta must lie in (0, 1), got {delta}")));
        }
        if sites == 0 {
            return Err(Error::Argument("site count must be at least 1".into()));
        }
        Ok(TrackerConfig {
            algorithm,
            epsilon,
            delta,
            sites,
            replicas: replication_count(delta),
            master_seed,
            counter_cap: DEFAULT_COUNTER_CAP,
        })
    }

    pub fn with_replicas(mut self, replicas: usize) -> Result<Self> {
        if replicas == 0 || replicas.is_multiple_of(2) {
            return Err(Error::Argument(format!("replica count must be odd and positive, got {replicas}")));
        }
        self.replicas = replicas;
        Ok(self)
    }

    pub fn with_counter_cap(mut self, cap: usize) -> Self {
        self.counter_cap = cap;
        self
    }
}

/// Read access to one replica's counter estimates.
trait CounterView {
    fn joint(&self, node: usize, index: usize) -> f64;
    fn parent(&self, node: usize, config: usize) -> f64;
}

#[derive(Debug, Clone)]
struct Replica {
    /// Per node, indexed by `config * J_i + value`. Under naive Bayes, node 0
    /// holds the shared root counters.
    joint: Vec<Vec<Counter>>,
    /// Per node, indexed by parent configuration; empty under naive Bayes.
    parent: Vec<Vec<Counter>>,
    shared_root: bool,
}

impl Replica {
    fn counters(&self) -> impl Iterator<Item = &Counter> {
        self.joint.iter().chain(&self.parent).flatten()
    }

    fn estimates(&self) -> ReplicaEstimates {
        let grab = |family: &Vec<Vec<Counter>>| -> Vec<Vec<f64>> {
            family
                .iter()
                .map(|cs| cs.iter().map(Counter::estimate).collect())
                .collect()
        };
        let joint = grab(&self.joint);
        let root_total = if self.shared_root { joint[0].iter().sum() } else { 0.0 };
        ReplicaEstimates {
            joint,
            parent: grab(&self.parent),
            shared_root: self.shared_root,
            root_total,
        }
    }
}

impl CounterView for Replica {
    fn joint(&self, node: usize, index: usize) -> f64 {
        self.joint[node][index].estimate()
    }

    fn parent(&self, node: usize, config: usize) -> f64 {
        if !self.shared_root {
            self.parent[node][config].estimate()
        } else if node == 0 {
            self.joint[0].iter().map(Counter::estimate).sum()
        } else {
            self.joint[0][config].estimate()
        }
    }
}

#[derive(Debug, Clone)]
struct ReplicaEstimates {
    joint: Vec<Vec<f64>>,
    parent: Vec<Vec<f64>>,
    shared_root: bool,
    root_total: f64,
}

impl CounterView for ReplicaEstimates {
    fn joint(&self, node: usize, index: usize) -> f64 {
        self.joint[node][index]
    }

    fn parent(&self, node: usize, config: usize) -> f64 {
        if !self.shared_root {
            self.parent[node][config]
        } else if node == 0 {
            self.root_total
        } else {
            self.joint[0][config]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterFamily {
    /// `A_i(x_i, x_par)`, indexed `config * J_i + value`.
    Joint,
    /// `A_i(x_par)`, indexed by parent configuration.
    Parent,
    /// Naive-Bayes root counters `A(x_1)`, indexed by root value.
    SharedRoot,
}

/// Snapshot of one counter, for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterStat {
    pub family: CounterFamily,
    pub node: usize,
    pub index: usize,
    /// Relative accuracy factor; 0 for exact counters.
    pub factor: f64,
    pub estimate: f64,
    pub true_total: u64,
    pub ledger: MessageLedger,
}

/// A joint distribution that can be queried on full assignments.
pub trait JointModel {
    fn network(&self) -> &BayesNet;

    /// Estimated probability of a full assignment.
    fn joint(&self, values: &[usize]) -> f64;
}

#[derive(Debug, Clone)]
pub struct Tracker {
    net: Arc<BayesNet>,
    config: TrackerConfig,
    allocation: BudgetAllocation,
    replicas: Vec<Replica>,
    events: u64,
}

impl Tracker {
    pub fn new(net: Arc<BayesNet>, config: TrackerConfig) -> Result<Self> {
        let allocation = allocate_budget(&net, config.algorithm, config.epsilon)?;
        let shared_root = config.algorithm == Algorithm::NaiveBayes;

        let per_replica: usize = if shared_root {
            net.node(0).cardinality()
                + net.nodes()[1..]
                    .iter()
                    .map(|n| n.cardinality() * n.parent_configs())
                    .sum::<usize>()
        } else {
            net.nodes()
                .iter()
                .map(|n| n.parent_configs() * (n.cardinality() + 1))
                .sum()
        };
        let total = per_replica.saturating_mul(config.replicas);
        if total > config.counter_cap {
            return Err(Error::Capacity(format!(
                "{total} counters exceed the cap of {}",
                config.counter_cap
            )));
        }

        let make = |replica: usize, family: u64, node: usize, len: usize, factor: f64| -> Result<Vec<Counter>> {
            let base = mix_seed(
                mix_seed(config.master_seed, replica as u64),
                (family << 32) | node as u64,
            );
            (0..len)
                .map(|idx| Counter::for_factor(factor, config.sites, mix_seed(base, idx as u64)))
                .collect()
        };

        let mut replicas = Vec::with_capacity(config.replicas);
        for r in 0..config.replicas {
            let mut joint = Vec::with_capacity(net.len());
            let mut parent = Vec::with_capacity(net.len());
            for (i, node) in net.nodes().iter().enumerate() {
                let k = node.parent_configs();
                let j = node.cardinality();
                if shared_root {
                    // Node 0 (K = 1) holds the shared root counters.
                    joint.push(make(r, JOINT_FAMILY, i, j * k, allocation.nu[i])?);
                    parent.push(Vec::new());
                } else {
                    joint.push(make(r, JOINT_FAMILY, i, j * k, allocation.nu[i])?);
                    parent.push(make(r, PARENT_FAMILY, i, k, allocation.mu[i])?);
                }
            }
            replicas.push(Replica {
                joint,
                parent,
                shared_root,
            });
        }

        Ok(Tracker {
            net,
            config,
            allocation,
            replicas,
            events: 0,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn allocation(&self) -> &BudgetAllocation {
        &self.allocation
    }

    pub fn net(&self) -> &Arc<BayesNet> {
        &self.net
    }

    pub fn replica_count(&self) -> usize {
        self.replicas.len()
    }

    pub fn events_seen(&self) -> u64 {
        self.events
    }

    /// Number of (joint, parent) counters in one replica. Under naive Bayes
    /// the parent count is the number of shared root counters.
    pub fn counter_counts(&self) -> (usize, usize) {
        let r = &self.replicas[0];
        let joint: usize = r.joint.iter().map(Vec::len).sum();
        let parent: usize = r.parent.iter().map(Vec::len).sum();
        if r.shared_root {
            let root = r.joint[0].len();
            (joint - root, root)
        } else {
            (joint, parent)
        }
    }

    /// Per-counter state of one replica, joint counters first.
    pub fn counter_stats(&self, replica: usize) -> Vec<CounterStat> {
        let r = &self.replicas[replica];
        let mut out = Vec::new();
        for (family, counters, factors) in [
            (CounterFamily::Joint, &r.joint, &self.allocation.nu),
            (CounterFamily::Parent, &r.parent, &self.allocation.mu),
        ] {
            for (node, cs) in counters.iter().enumerate() {
                let family = if r.shared_root && node == 0 {
                    CounterFamily::SharedRoot
                } else {
                    family
                };
                for (index, c) in cs.iter().enumerate() {
                    out.push(CounterStat {
                        family,
                        node,
                        index,
                        factor: factors[node],
                        estimate: c.estimate(),
                        true_total: c.true_total(),
                        ledger: c.ledger(),
                    });
                }
            }
        }
        out
    }

    /// Feeds one event observed at `site` to every replica.
    pub fn update(&mut self, event: &Event, site: usize) {
        self.update_values(&event.0, site);
    }

    pub fn update_values(&mut self, values: &[usize], site: usize) {
        debug_assert_eq!(values.len(), self.net.len());
        assert!(site < self.config.sites, "site {site} out of range");
        let net = &*self.net;
        for replica in &mut self.replicas {
            if replica.shared_root {
                replica.joint[0][values[0]].increment(site);
                for i in 1..net.len() {
                    let j = net.node(i).cardinality();
                    replica.joint[i][values[0] * j + values[i]].increment(site);
                }
            } else {
                for (i, node) in net.nodes().iter().enumerate() {
                    let pc = net.parent_config(i, values);
                    replica.joint[i][pc * node.cardinality() + values[i]].increment(site);
                    replica.parent[i][pc].increment(site);
                }
            }
        }
        self.events += 1;
    }

    pub fn query(&self, event: &Event) -> f64 {
        self.joint(&event.0)
    }

    /// Messages sent by all counters of all replicas.
    pub fn ledger(&self) -> MessageLedger {
        self.replicas.iter().flat_map(Replica::counters).map(Counter::ledger).sum()
    }

    /// Copies every counter estimate so queries see one coherent state.
    pub fn snapshot(&self) -> TrackerSnapshot {
        TrackerSnapshot {
            net: Arc::clone(&self.net),
            replicas: self.replicas.iter().map(Replica::estimates).collect(),
        }
    }
}

impl JointModel for Tracker {
    fn network(&self) -> &BayesNet {
        &self.net
    }

    fn joint(&self, values: &[usize]) -> f64 {
        median(self.replicas.iter().map(|r| replica_product(&self.net, r, values)).collect())
    }
}

/// Frozen counter estimates of a tracker.
#[derive(Debug, Clone)]
pub struct TrackerSnapshot {
    net: Arc<BayesNet>,
    replicas: Vec<ReplicaEstimates>,
}

impl TrackerSnapshot {
    pub fn query(&self, event: &Event) -> f64 {
        self.joint(&event.0)
    }
}

impl JointModel for TrackerSnapshot {
    fn network(&self) -> &BayesNet {
        &self.net
    }

    fn joint(&self, values: &[usize]) -> f64 {
        median(self.replicas.iter().map(|r| replica_product(&self.net, r, values)).collect())
    }
}

fn factor<V: CounterView>(net: &BayesNet, view: &V, i: usize, values: &[usize]) -> f64 {
    let j = net.node(i).cardinality();
    let pc = net.parent_config(i, values);
    let parent = view.parent(i, pc);
    if parent > 0.0 {
        view.joint(i, pc * j + values[i]) / parent
    } else {
        1.0 / j as f64
    }
}

fn replica_product<V: CounterView>(net: &BayesNet, view: &V, values: &[usize]) -> f64 {
    let n = net.len();
    if n > LOG_SPACE_NODES {
        (0..n).map(|i| factor(net, view, i, values).ln()).sum::<f64>().exp()
    } else {
        (0..n).map(|i| factor(net, view, i, values)).product()
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.len() == 1 {
        return xs[0];
    }
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}
