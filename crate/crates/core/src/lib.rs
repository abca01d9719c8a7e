//! Distributed tracking of maximum-likelihood parameters for discrete
//! Bayesian networks.
//!
//! A stream of complete observations arrives at `k` sites. Each site keeps
//! local counts and talks to a single coordinator through randomized
//! counters, so the coordinator can answer joint and conditional queries
//! within a `(1 ± ε)` factor of the exact-count MLE while sending far fewer
//! messages than forwarding every increment.
//!
//! * [`network`] — network description, validation and sampling.
//! * [`counter`] — exact and sampled distributed counters.
//! * [`budget`] — per-counter error budgets for each allocation strategy.
//! * [`tracker`] — the coordinator-side tracker built from counters.
//! * [`inference`] — conditional queries, classification and a brute-force oracle.

pub mod budget;
pub mod counter;
pub mod error;
pub mod generate;
pub mod inference;
pub mod network;
pub mod tracker;

pub use budget::{allocate_budget, comm_bound, replication_count, Algorithm, BudgetAllocation, CommBound};
pub use counter::{Counter, CounterConfig, ExactCounter, MessageLedger, SampledCounter};
pub use error::{Error, Result};
pub use inference::{brute_force_joint, classify, conditional_prob, EvidenceSet, JointTable, TargetSet};
pub use network::{load_network, mle_from_counts, BayesNet, Event, NodeSpec, ParentConfig};
pub use tracker::{JointModel, Tracker, TrackerConfig, TrackerSnapshot};
