//! Split-step discrete-time quantum walks on site-diluted square lattices.
//!
//! The crate has three layers:
//!
//! * real-space evolution — [`lattice`] generates reproducible site-percolation
//!   occupancy masks, [`walk`] evolves a two-component walker over them with
//!   reflection-modified conditional translations;
//! * momentum-space analysis of the clean (fully occupied) lattice — [`momentum`]
//!   provides the Bloch unitary, quasienergy band, winding vector, and Chern
//!   numbers over the coin-parameter plane;
//! * spreading statistics — [`diffusion`] turns mean-square-displacement series
//!   into running exponents α(t), diffusion constants D_α(t), decay times and
//!   asymptotic fits, with [`ensemble`] producing configuration averages on a
//!   deterministic parallel reducer.
//!
//! [`export`] holds the plain-text/CSV/PGM/JSON readers and writers shared by the
//! CLI and the test suites.

pub mod diffusion;
pub mod ensemble;
pub mod error;
pub mod export;
pub mod geom;
pub mod lattice;
pub mod momentum;
pub mod protocol;
pub mod walk;

pub use diffusion::{
    alpha_series, decay_time, fit_asymptotics, localization_verdict, sample_times, AsymptoticFit,
    DecayTime, DiffusionSeries, MsdSeries, SampleSchedule, Verdict,
};
pub use ensemble::{ensemble_msd, run_single_msd, EnsembleParams};
pub use error::{Error, Result};
pub use geom::{Region, Site};
pub use lattice::OccupancyMask;
pub use momentum::{
    bloch_unitary, chern_number, phase_diagram, quasienergy, winding_vector, ChernResult,
    MomentumPoint, PhaseDiagram, GAP_TOLERANCE, MIN_GAP_VALID,
};
pub use protocol::{CoinState, ProtocolSpec, WalkKind, DELTA1, DELTA2, DELTA3};
pub use walk::{GrowthPolicy, Walk, WalkerState};
