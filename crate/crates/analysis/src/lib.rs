//! Expressivity and convergence analyses built on the constrained eigensolver:
//! 1-WL refinement, spectral signatures, the pair-orbit experiment and
//! numerical checks of the convergence theory.

pub mod dense;
pub mod error;
pub mod orbit;
pub mod signature;
pub mod verify;
pub mod wl;

pub use error::{AnalysisError, Result};
pub use orbit::{c6_pair_orbits, orbit_pair_experiment, OrbitReport};
pub use signature::{
    compare, llwlc_signature, SignatureElement, SignaturePolicy, SpectralSignature, Verdict, SIGNATURE_TOL,
};
pub use verify::{
    chebyshev, run_verification, theorem1_check, theorem1_scaling, theorem2_check, BoundCase, BoundReport, CheckStatus,
    PerturbationReport, ScalingCase, ScalingReport, VerifyOptions, VerifySummary,
};
pub use wl::{wl1_distinguish, wl1_refine, ColorPartition};
