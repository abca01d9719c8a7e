//! The heterogeneous NEW-ALARM variant: ALARM with a handful of nodes widened
//! to many values and their families re-randomized.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnmon_core::generate::widen_nodes;
use bnmon_core::{BayesNet, Result};

pub const NEW_ALARM_WIDENED: usize = 6;
pub const NEW_ALARM_CARDINALITY: usize = 20;

pub fn new_alarm(base: &BayesNet, seed: u64) -> Result<BayesNet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    widen_nodes(base, &mut rng, NEW_ALARM_WIDENED, NEW_ALARM_CARDINALITY, "new-alarm")
}
