//! I- and rI-projections of finite channels (Markov kernels) by iterative
//! scaling.
//!
//! A channel `k(x; y)` maps each input state of a product space
//! `X = X_1 x ... x X_N` to a distribution over `Y = Y_1 x ... x Y_M`. Given a
//! strictly positive input distribution `p`, the divergence between channels is
//! `D_p(k || m) = sum p(x) k(x; y) log(k(x; y) / m(x; y))`.
//!
//! Fixing channel marginals `k(x_I; y_J)` defines a mixture family; tilting a
//! reference channel by functions of `(x_I, y_J)` defines the dual exponential
//! family. Both meet in one channel, which [`channel_ipf`] reaches by cyclic
//! normalized scaling. This gives divergences from exponential families, and
//! with them the synergy and complexity measures in [`measures`].
//!
//! ```
//! use chanproj::{make_gate, synergy_d2, Gate, InputDistribution, SolverOptions};
//!
//! let xor = make_gate(Gate::Xor, 0.0).unwrap();
//! let p = InputDistribution::uniform(xor.space().clone());
//! let d2 = synergy_d2(&p, &xor, &SolverOptions::default()).unwrap();
//! assert!((d2.value.bits() - 1.0).abs() < 1e-12);
//! ```

pub mod divergence;
pub mod error;
pub mod measures;
pub mod prob;
pub mod projection;
pub mod scaling;
pub mod space;

pub use divergence::{kl_channel, kl_joint, mutual_information, Divergence, LogBase};
pub use error::{Error, Result};
pub use measures::{
    complexity_c1, complexity_c2, control_channel, divergence_from_family, interaction_example,
    make_gate, make_interaction_channel, synergy_d2, Encoding, Gate, InteractionParams, Measure,
};
pub use prob::{
    channel_marginal, compose, disintegrate, joint_marginal, Channel, InputDistribution, JointDistribution,
    MarginalOperator,
};
pub use projection::{
    channel_ipf, channel_ipf_tracking, exp_tilt, joint_ipf, joint_ipf_tracking, lifted_constraints, ri_project,
    standard_joint_constraints, ChannelScaler, FamilySpec, JointConstraint, JointProjectionResult, JointScaler,
    ProjectionResult, RiProjection, SolverOptions, SweepRecord,
};
pub use scaling::{
    input_prescription, input_scale, ij_scale_raw, joint_scale, normalize_rows, normalized_ij_scale,
    normalized_ij_scale_toward, NonnegativeKernel, NormalizationVector,
};
pub use space::{JointSpec, MarginalSpec, ProductSpace, Projector};
