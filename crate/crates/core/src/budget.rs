//! Error-budget allocation across counter families.
//!
//! Each algorithm assigns a relative-accuracy factor `ν_i` to the joint
//! counters `A_i(x_i, x_par)` and `μ_i` to the parent counters `A_i(x_par)`:
//!
//! | algorithm    | ν_i                                   | μ_i                     |
//! |--------------|---------------------------------------|-------------------------|
//! | Baseline     | ε/(3n)                                | ε/(3n)                  |
//! | Uniform      | ε/(16√n)                              | ε/(16√n)                |
//! | NonUniform   | (J_iK_i)^{1/3}·ε/(16α)                | K_i^{1/3}·ε/(16β)       |
//! | NaiveBayes   | (ε/16)·J_i^{1/3}/(Σ_{i≥2} J_i^{2/3})^{1/2} | shared root at ε/(3n) |
//!
//! with `α = (Σ (J_iK_i)^{2/3})^{1/2}` and `β = (Σ K_i^{2/3})^{1/2}`. The
//! NonUniform factors minimise `Σ J_iK_i/ν_i` subject to `Σ ν_i² = ε²/256`
//! (and likewise for `μ`), so `J_iK_i/ν_i³` is the same for every node.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BayesNet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Exact,
    Baseline,
    Uniform,
    NonUniform,
    NaiveBayes,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Exact,
        Algorithm::Baseline,
        Algorithm::Uniform,
        Algorithm::NonUniform,
        Algorithm::NaiveBayes,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Baseline => "baseline",
            Algorithm::Uniform => "uniform",
            Algorithm::NonUniform => "nonuniform",
            Algorithm::NaiveBayes => "naive",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "exactmle" => Ok(Algorithm::Exact),
            "baseline" => Ok(Algorithm::Baseline),
            "uniform" => Ok(Algorithm::Uniform),
            "nonuniform" | "non-uniform" => Ok(Algorithm::NonUniform),
            "naive" | "naivebayes" | "naive-bayes" => Ok(Algorithm::NaiveBayes),
            other => Err(Error::Argument(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Per-node accuracy factors. A factor of zero stands for an exact counter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetAllocation {
    pub algorithm: Algorithm,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Factor of the root counters shared by every child (NaiveBayes only).
    pub shared_root_factor: Option<f64>,
}

impl BudgetAllocation {
    /// Communication objective Σ J_iK_i/ν_i + Σ K_i/μ_i for the allocation.
    pub fn objective(&self, net: &BayesNet) -> f64 {
        net.nodes()
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let jk = (node.cardinality() * node.parent_configs()) as f64;
                jk / self.nu[i] + node.parent_configs() as f64 / self.mu[i]
            })
            .sum()
    }
}

/// Checks that the network is a two-layer star rooted at node 0.
pub fn check_naive_bayes(net: &BayesNet) -> Result<()> {
    if net.len() < 2 {
        return Err(Error::structure(net.name(), "naive Bayes needs a root and at least one child"));
    }
    if !net.node(0).parents().is_empty() {
        return Err(Error::structure(net.node(0).name(), "naive Bayes root (node 0) must have no parents"));
    }
    for node in &net.nodes()[1..] {
        if node.parents() != [0] {
            return Err(Error::structure(
                node.name(),
                "naive Bayes requires node 0 as the sole parent of every other node",
            ));
        }
    }
    Ok(())
}

pub fn allocate_budget(net: &BayesNet, algorithm: Algorithm, epsilon: f64) -> Result<BudgetAllocation> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Argument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if let Some(node) = net.nodes().iter().find(|n| n.cardinality() < 2) {
        return Err(Error::validation(node.name(), None, "trackers require cardinality >= 2"));
    }

    let n = net.len();
    let nf = n as f64;
    let mut alloc = BudgetAllocation {
        algorithm,
        nu: vec![0.0; n],
        mu: vec![0.0; n],
        alpha: None,
        beta: None,
        shared_root_factor: None,
    };
    match algorithm {
        Algorithm::Exact => {}
        Algorithm::Baseline => {
            let f = epsilon / (3.0 * nf);
            alloc.nu.fill(f);
            alloc.mu.fill(f);
        }
        Algorithm::Uniform => {
            let f = epsilon / 16.0 / nf.sqrt();
            alloc.nu.fill(f);
            alloc.mu.fill(f);
        }
        Algorithm::NonUniform => {
            let jk: Vec<f64> = net
                .nodes()
                .iter()
                .map(|node| (node.cardinality() * node.parent_configs()) as f64)
                .collect();
            let k: Vec<f64> = net.nodes().iter().map(|node| node.parent_configs() as f64).collect();
            let (nu, alpha) = lagrange_factors(&jk, epsilon);
            let (mu, beta) = lagrange_factors(&k, epsilon);
            alloc.nu = nu;
            alloc.mu = mu;
            alloc.alpha = Some(alpha);
            alloc.beta = Some(beta);
        }
        Algorithm::NaiveBayes => {
            check_naive_bayes(net)?;
            let scale: f64 = net.nodes()[1..]
                .iter()
                .map(|node| (node.cardinality() as f64).powf(2.0 / 3.0))
                .sum::<f64>()
                .sqrt();
            let root = epsilon / (3.0 * nf);
            for (i, node) in net.nodes().iter().enumerate().skip(1) {
                alloc.nu[i] = epsilon / 16.0 * (node.cardinality() as f64).cbrt() / scale;
            }
            alloc.mu.fill(epsilon / 16.0 / nf.sqrt());
            // The root's only counters are the shared ones.
            alloc.nu[0] = root;
            alloc.mu[0] = root;
            alloc.shared_root_factor = Some(root);
        }
    }
    Ok(alloc)
}

/// Closed-form minimiser of Σ w_i/x_i subject to Σ x_i² = ε²/256:
/// `x_i = w_i^{1/3}·ε/(16·s)` with `s = (Σ w_i^{2/3})^{1/2}`.
///
/// Each factor is evaluated as `ε/16 / (Σ_j (w_j/w_i)^{2/3})^{1/2}`, so equal
/// weights reproduce the uniform factor `ε/16 / √n` bit for bit.
pub fn lagrange_factors(weights: &[f64], epsilon: f64) -> (Vec<f64>, f64) {
    let s = weights.iter().map(|w| w.powf(2.0 / 3.0)).sum::<f64>().sqrt();
    let factors = weights
        .iter()
        .map(|wi| {
            let spread: f64 = weights.iter().map(|wj| (wj / wi).powf(2.0 / 3.0)).sum();
            epsilon / 16.0 / spread.sqrt()
        })
        .collect();
    (factors, s)
}

/// Network-dependent communication scale of NonUniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommBound {
    pub gamma: f64,
    pub joint_term: f64,
    pub parent_term: f64,
}

pub fn comm_bound(net: &BayesNet) -> CommBound {
    let joint_term = net
        .nodes()
        .iter()
        .map(|n| ((n.cardinality() * n.parent_configs()) as f64).powf(2.0 / 3.0))
        .sum::<f64>()
        .powf(1.5);
    let parent_term = net
        .nodes()
        .iter()
        .map(|n| (n.parent_configs() as f64).powf(2.0 / 3.0))
        .sum::<f64>()
        .powf(1.5);
    CommBound {
        gamma: joint_term + parent_term,
        joint_term,
        parent_term,
    }
}

/// Independent tracker instances needed for failure probability δ: one when
/// δ ≥ 1/4, otherwise the smallest odd integer ≥ 8·ln(1/δ).
pub fn replication_count(delta: f64) -> usize {
    if delta >= 0.25 {
        return 1;
    }
    let r = (8.0 * (1.0 / delta).ln()).ceil() as usize;
    if r.is_multiple_of(2) {
        r + 1
    } else {
        r
    }
}
