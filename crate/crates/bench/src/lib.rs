//! Fixtures shared by the benchmarks.

use bellcheck_core::dynamics::{extend_forward, TransitionTable};
use bellcheck_core::{CauchySegment, ClassicalState, MinimalCone, Region};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seven cones at `t2 = 0`, starting at `i2 = -3`.
pub fn segment() -> CauchySegment {
    CauchySegment::with_width(0, -3, 7).expect("fixed segment")
}

pub fn random_table(seed: u64) -> TransitionTable {
    TransitionTable::random(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Uniform initial state grown by `layers` half-steps under a random table.
pub fn grown_state(layers: usize) -> ClassicalState {
    let seg = segment();
    let init = ClassicalState::uniform(seg.cones()).expect("uniform state");
    extend_forward(&init, &seg, &random_table(7), layers).expect("growth fits the window").state
}

/// Four cones forming a small diamond, one qubit each.
pub fn net_sites() -> Region {
    let mut r = Region::empty();
    for (t2, i2) in [(0, 0), (1, -1), (1, 1), (2, 0)] {
        r.insert(MinimalCone::new(t2, i2).expect("valid cone"));
    }
    r
}
