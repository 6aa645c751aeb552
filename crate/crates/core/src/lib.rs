//! Bernoulli bond percolation laboratory.
//!
//! Finite balls of `Z^d` and regular trees, exact enumeration of connection
//! probabilities, the sequential stochastic-domination coupling between the
//! measure conditioned on `{0 not connected to S_{n+m}}` and an explicit
//! inhomogeneous product measure, the `q_n^m` parameter map, and verifiers
//! for the chain of inequalities leading to exponential decay of `theta_n`
//! below the critical point.

pub mod connectivity;
pub mod coupling;
pub mod error;
pub mod exact;
pub mod interval;
pub mod lattice;
pub mod mode;
pub mod params;
pub mod qmap;
pub mod report;
pub mod selftest;
pub mod verify;

pub use connectivity::{estimate_theta, is_pivotal, reaches_avoiding, reaches_sphere, Estimate};
pub use coupling::{sample_coupling, CouplingProblem, CouplingTranscript};
pub use error::{Error, Result};
pub use exact::{conditional_prob, exact_prob, fkg_covariance, EventSpec, OracleOptions};
pub use interval::Interval;
pub use lattice::{build_ball, BallGraph, Family};
pub use mode::Mode;
pub use params::{
    clamp_convention, homogeneous, sample, sample_uniforms, Configuration, EdgeParams,
};
pub use qmap::{q_iterated, q_map, MappedParams};
pub use report::{Measurement, Verdict, VerificationReport, CSV_HEADER};
