//! Likelihood pruning on trees, memory vectors in L2(π), dependence factors
//! and contraction constants of noisy channels, together with checks of the
//! information-flow bounds and reconstruction-unsolvability conditions that
//! follow from them.

pub mod certify;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod measures;
pub mod pruning;
pub mod tree;

pub use certify::{BoundCertificate, Check, ConditionId, Verdict};
pub use channel::{Channel, ChannelDocument, ContractionMode, SpectralProfile};
pub use error::{Error, Result};
pub use experiment::{AccuracyEstimate, ExperimentRow, SweepReport};
pub use measures::DependenceReport;
pub use pruning::{LikelihoodState, Posterior, Prior};
pub use tree::{Pattern, TreeDocument, TreeLimits, TreeSpec};
