//! Shared helpers for the criterion benchmarks.

use qwalk_core::protocol::{CoinState, ProtocolSpec, WalkKind};
use qwalk_core::walk::{GrowthPolicy, Walk};

/// A walk advanced to `warm` steps, ready for steady-state stepping.
pub fn warmed_walk(p: f64, seed: u64, warm: u64) -> Walk {
    let spec = ProtocolSpec::new(
        WalkKind::ThreeStepChern,
        std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        CoinState::SigmaYPlus,
    );
    let mut walk = Walk::new(p, seed, spec, GrowthPolicy::default()).expect("walk setup");
    walk.run_to(warm).expect("warm-up");
    walk
}
