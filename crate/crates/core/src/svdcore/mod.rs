//! Patch-wise singular value decomposition of the ultrafast compound
//! matrix: aberration-law extraction, rank-1 / phase-conjugate correction,
//! overlapping-patch stitching, patch-size sweeps and sound-speed mismatch
//! detection.
//!
//! Conventions: for a patch `R = U S V^H` (pixels x angles) the *spatial*
//! vector is the first left singular vector `u1` and the *angular* vector
//! is the first right singular vector `v1`. For an exact model
//! `R = m a^T`, `v1 = conj(a) / |a|`. The angular vector is gauge-fixed so
//! its entry at the angle closest to broadside is real and non-negative.
//!
//! Phases of extracted laws follow the delay convention used everywhere
//! else in the crate: a transmit delayed by `tau` picks up the factor
//! `exp(-i 2 pi f0 tau)`, and its law phase is `+2 pi f0 tau`.

mod correct;
mod patches;
mod speed;
mod svd;
mod sweep;

pub use correct::{correct_patch, svd_beamform, CorrectionMode, SvdBeamformOutput};
pub use patches::PatchGrid;
pub use speed::{detect_speed_mismatch, SpeedMismatch};
pub use svd::{
    extract_aberration, gram, patch_svd, patch_svd_with_angles, ExtractedAberration, Gauge, PatchSVD,
};
pub use sweep::{patch_size_sweep, SweepEntry, SweepResult};

/// Relative gap `(s1 - s2) / s1` under which the leading singular value is
/// flagged as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
