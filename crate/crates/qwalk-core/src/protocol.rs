//! Walk protocol definitions: coin angles, sub-step structure, initial coin state.
//!
//! One protocol step is a product of coin rotations and conditional translations,
//! applied rightmost-first:
//!
//! * three-step: `T(δ3) R(θ1) T(δ2) R(θ2) T(δ1) R(θ1)` with `δ1=(1,1)`,
//!   `δ2=(0,1)`, `δ3=(1,0)` — the protocol carrying nonzero Chern numbers;
//! * two-step: `T(δ3) R(θ1) T(δ2) R(θ2)` — the diagonal translation and its
//!   rotation dropped, leaving a Floquet walk with trivial Chern number.
//!
//! The coin rotation is the real 2x2 matrix
//! `R(θ) = [[cos θ/2, sin θ/2], [-sin θ/2, cos θ/2]]`
//! acting on the (up, down) spinor at every site.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Diagonal translation of the three-step protocol.
pub const DELTA1: (i64, i64) = (1, 1);
/// Vertical translation.
pub const DELTA2: (i64, i64) = (0, 1);
/// Horizontal translation.
pub const DELTA3: (i64, i64) = (1, 0);

/// Which sub-step sequence a protocol step applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkKind {
    /// Three translations per step; supports topologically nontrivial coins.
    ThreeStepChern,
    /// Two translations per step; Chern-trivial Floquet variant.
    TwoStepFloquet,
}

impl WalkKind {
    /// Stable machine name (used by the CLI and manifests).
    pub fn name(&self) -> &'static str {
        match self {
            WalkKind::ThreeStepChern => "chern3",
            WalkKind::TwoStepFloquet => "floquet2",
        }
    }
}

/// Initial coin state of the walker at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoinState {
    /// `(1, i)/√2` — the +1 eigenstate of σ_y.
    SigmaYPlus,
    /// `(1, 1)/√2` — the +1 eigenstate of σ_x.
    SigmaXPlus,
    /// Arbitrary normalized spinor.
    Custom { up: Complex64, down: Complex64 },
}

impl CoinState {
    /// The normalized (up, down) amplitudes.
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            CoinState::SigmaYPlus => (Complex64::new(s, 0.0), Complex64::new(0.0, s)),
            CoinState::SigmaXPlus => (Complex64::new(s, 0.0), Complex64::new(s, 0.0)),
            CoinState::Custom { up, down } => {
                let norm = (up.norm_sqr() + down.norm_sqr()).sqrt();
                (up / norm, down / norm)
            }
        }
    }
}

/// Full specification of a walk protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: WalkKind,
    pub theta1: f64,
    pub theta2: f64,
    pub initial_coin: CoinState,
}

impl ProtocolSpec {
    pub fn new(kind: WalkKind, theta1: f64, theta2: f64, initial_coin: CoinState) -> ProtocolSpec {
        ProtocolSpec {
            kind,
            theta1,
            theta2,
            initial_coin,
        }
    }

    /// The (coin angle, translation) pairs of one step, in application order
    /// (each pair means: rotate by θ at every site, then translate by δ).
    pub fn passes(&self) -> Vec<(f64, (i64, i64))> {
        match self.kind {
            WalkKind::ThreeStepChern => vec![
                (self.theta1, DELTA1),
                (self.theta2, DELTA2),
                (self.theta1, DELTA3),
            ],
            WalkKind::TwoStepFloquet => vec![(self.theta2, DELTA2), (self.theta1, DELTA3)],
        }
    }

    /// Maximum per-axis displacement of one full step (sets the light cone and
    /// the per-step growth of the active window).
    pub fn cone_speed(&self) -> (i64, i64) {
        match self.kind {
            WalkKind::ThreeStepChern => (2, 2), // δ1 + δ3 in x, δ1 + δ2 in y
            WalkKind::TwoStepFloquet => (1, 1), // δ3 in x, δ2 in y
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_states_are_normalized() {
        for coin in [
            CoinState::SigmaYPlus,
            CoinState::SigmaXPlus,
            CoinState::Custom {
                up: Complex64::new(3.0, 0.0),
                down: Complex64::new(0.0, 4.0),
            },
        ] {
            let (u, d) = coin.amplitudes();
            assert!((u.norm_sqr() + d.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pass_structure_matches_protocol() {
        let spec = ProtocolSpec::new(WalkKind::ThreeStepChern, 0.3, 0.7, CoinState::SigmaYPlus);
        assert_eq!(
            spec.passes(),
            vec![(0.3, DELTA1), (0.7, DELTA2), (0.3, DELTA3)]
        );
        let spec2 = ProtocolSpec::new(WalkKind::TwoStepFloquet, 0.3, 0.7, CoinState::SigmaYPlus);
        assert_eq!(spec2.passes(), vec![(0.7, DELTA2), (0.3, DELTA3)]);
    }

    #[test]
    fn step_displacement_sums_to_cone_speed() {
        for kind in [WalkKind::ThreeStepChern, WalkKind::TwoStepFloquet] {
            let spec = ProtocolSpec::new(kind, 0.0, 0.0, CoinState::SigmaYPlus);
            let (sx, sy): (i64, i64) = spec
                .passes()
                .iter()
                .fold((0, 0), |(ax, ay), (_, (dx, dy))| (ax + dx, ay + dy));
            assert_eq!((sx, sy), spec.cone_speed());
        }
    }
}
