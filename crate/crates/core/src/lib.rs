//! Moments of order statistics from dependent discrete random vectors,
//! with exact, truncated and closed-form (multivariate geometric) routes,
//! and lifetimes of coherent systems built on them.

pub mod coherent;
pub mod dist;
pub mod error;
pub mod joint;
pub mod mvg;
pub mod numeric;
pub mod oracle;
pub mod orderstat;
pub mod subset;

pub use coherent::{SignatureSet, SystemStructure};
pub use dist::{FinitePmf, MarginalDist};
pub use error::{Error, Result};
pub use joint::{ExplicitPmf, IndependentMarginals, JointModel};
pub use mvg::MvgParams;
pub use orderstat::{
    approx_moment, exact_moment_finite, moment, plan_generic, plan_negbin, plan_poisson,
    survival_orderstat, MomentRequest, MomentResult, NegBinRule, TruncationPlan,
};
pub use subset::Subset;
