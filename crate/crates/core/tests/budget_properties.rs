//! Error-budget allocation: constraint satisfaction, stationarity and a
//! brute-force optimality oracle on the constraint sphere.

use bnmon_core::budget::{allocate_budget, comm_bound, lagrange_factors, Algorithm};
use bnmon_core::network::{BayesNet, NetworkDoc, NodeDoc};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn objective(weights: &[f64], x: &[f64]) -> f64 {
    weights.iter().zip(x).map(|(w, v)| w / v).sum()
}

/// Smallest objective over a grid of step `h` on the first n−1 coordinates,
/// with the last coordinate solved from Σ x_i² = r².
fn grid_minimum(weights: &[f64], r: f64, h: f64) -> f64 {
    fn recurse(weights: &[f64], prefix: &mut Vec<f64>, used: f64, r2: f64, h: f64, best: &mut f64) {
        let n = weights.len();
        if prefix.len() == n - 1 {
            let rest = r2 - used;
            if rest > 0.0 {
                prefix.push(rest.sqrt());
                *best = best.min(objective(weights, prefix));
                prefix.pop();
            }
            return;
        }
        let mut v = h;
        while used + v * v < r2 {
            prefix.push(v);
            recurse(weights, prefix, used + v * v, r2, h, best);
            prefix.pop();
            v += h;
        }
    }
    let mut best = f64::INFINITY;
    recurse(weights, &mut Vec::new(), 0.0, r * r, h, &mut best);
    best
}

#[test]
fn closed_form_beats_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let n = rng.random_range(2..=4);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(1..=200) as f64).collect();
        let eps = rng.random_range(0.1..0.5);
        let (x, _) = lagrange_factors(&weights, eps);
        let closed = objective(&weights, &x);
        let grid = grid_minimum(&weights, eps / 16.0, 1e-4);
        assert!(grid >= 0.999 * closed, "{weights:?} ε={eps}: grid {grid} < closed {closed}");
    }
}

#[test]
fn worked_two_node_example() {
    let (x, alpha) = lagrange_factors(&[1.0, 8.0], 0.16);
    assert!((alpha - 5f64.sqrt()).abs() < 1e-12);
    assert!((x[0] - 0.01 / 5f64.sqrt()).abs() < 1e-15);
    assert!((x[1] - 0.02 / 5f64.sqrt()).abs() < 1e-15);
    let grid = grid_minimum(&[1.0, 8.0], 0.01, 1e-4);
    assert!(grid >= 0.999 * objective(&[1.0, 8.0], &x));
}

fn star_like(cards: &[usize], parents: &[Option<usize>]) -> BayesNet {
    let nodes = cards
        .iter()
        .zip(parents)
        .enumerate()
        .map(|(i, (&j, p))| {
            let k = p.map_or(1, |p| cards[p]);
            NodeDoc {
                name: format!("N{i}"),
                cardinality: j,
                parents: p.iter().map(|p| format!("N{p}")).collect(),
                cpt: vec![vec![1.0 / j as f64; j]; k],
            }
        })
        .collect();
    BayesNet::from_doc(NetworkDoc {
        name: "profile".into(),
        nodes,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nonuniform_meets_constraints_and_stationarity(
        cards in proptest::collection::vec(2usize..12, 2..9),
        eps in 0.01f64..0.99,
        link in proptest::collection::vec(any::<bool>(), 9),
    ) {
        let parents: Vec<Option<usize>> = (0..cards.len())
            .map(|i| (i > 0 && link[i]).then(|| i - 1))
            .collect();
        let net = star_like(&cards, &parents);
        let a = allocate_budget(&net, Algorithm::NonUniform, eps).unwrap();
        let target = eps * eps / 256.0;
        let snu: f64 = a.nu.iter().map(|v| v * v).sum();
        let smu: f64 = a.mu.iter().map(|v| v * v).sum();
        prop_assert!((snu - target).abs() <= 1e-9 * target);
        prop_assert!((smu - target).abs() <= 1e-9 * target);

        let stationary: Vec<f64> = net.nodes().iter().zip(&a.nu)
            .map(|(n, v)| (n.cardinality() * n.parent_configs()) as f64 / v.powi(3))
            .collect();
        for s in &stationary {
            prop_assert!((s / stationary[0] - 1.0).abs() <= 1e-6);
        }
        let stationary_mu: Vec<f64> = net.nodes().iter().zip(&a.mu)
            .map(|(n, v)| n.parent_configs() as f64 / v.powi(3))
            .collect();
        for s in &stationary_mu {
            prop_assert!((s / stationary_mu[0] - 1.0).abs() <= 1e-6);
        }

        let u = allocate_budget(&net, Algorithm::Uniform, eps).unwrap();
        prop_assert!(a.objective(&net) <= u.objective(&net) * (1.0 + 1e-12));
    }

    #[test]
    fn uniform_budget_sits_on_the_same_sphere(n in 1usize..40, eps in 0.01f64..0.99) {
        let net = star_like(&vec![2; n], &vec![None; n]);
        let a = allocate_budget(&net, Algorithm::Uniform, eps).unwrap();
        let s: f64 = a.nu.iter().map(|v| v * v).sum();
        prop_assert!((s - eps * eps / 256.0).abs() <= 1e-9 * eps * eps / 256.0);
    }
}

#[test]
fn homogeneous_nets_give_identical_allocations() {
    for n in [1, 3, 7, 37] {
        let net = star_like(&vec![3; n], &vec![None; n]);
        let u = allocate_budget(&net, Algorithm::Uniform, 0.1).unwrap();
        let nu = allocate_budget(&net, Algorithm::NonUniform, 0.1).unwrap();
        assert_eq!(u.nu, nu.nu);
        assert_eq!(u.mu, nu.mu);
    }
}

#[test]
fn gamma_for_leaves_with_equal_domains() {
    for (n, j) in [(5usize, 2usize), (10, 3), (30, 7)] {
        let net = star_like(&vec![j; n], &vec![None; n]);
        let g = comm_bound(&net);
        let nf = n as f64;
        let expect = nf.powf(1.5) * j as f64 + nf.powf(1.5);
        assert!((g.gamma - expect).abs() <= 1e-9 * expect, "{} vs {expect}", g.gamma);
    }
}

#[test]
fn one_wide_node_favours_nonuniform() {
    // 19 binary nodes plus one node with 100 values, all with K = 1.
    let mut cards = vec![2; 19];
    cards.push(100);
    let net = star_like(&cards, &vec![None; 20]);
    let g = comm_bound(&net);
    let n = 20f64;
    let uniform = allocate_budget(&net, Algorithm::Uniform, 0.1).unwrap().objective(&net);
    let nonuniform = allocate_budget(&net, Algorithm::NonUniform, 0.1).unwrap().objective(&net);
    // The optimal objective is exactly 16Γ/ε.
    assert!((nonuniform - 16.0 * g.gamma / 0.1).abs() <= 1e-9 * nonuniform);
    // Uniform pays √n·(ΣJK + ΣK) in the same units.
    let uniform_scale = n.sqrt() * (19.0 * 2.0 + 100.0 + 20.0);
    assert!((uniform - 16.0 * uniform_scale / 0.1).abs() <= 1e-9 * uniform);
    assert!(g.gamma < 0.7 * uniform_scale, "Γ = {} vs {uniform_scale}", g.gamma);
}

#[test]
fn band_composition_facts() {
    for eps in [0.1, 0.5, 0.9] {
        for n in [1u32, 5, 50] {
            let a = eps / (3.0 * n as f64);
            assert!(((1.0 + a) / (1.0 - a)).powi(n as i32) <= eps.exp());
            assert!(((1.0 - a) / (1.0 + a)).powi(n as i32) >= (-eps).exp());
        }
    }
    for i in 1..300 {
        let x = i as f64 * 1e-3;
        assert!(x.exp() < 1.0 + 2.0 * x, "x = {x}");
        assert!((-2.0 * x).exp() < 1.0 - x, "x = {x}");
    }
}
