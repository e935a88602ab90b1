//! Entropic optimal transport between empirical state-action distributions.
//!
//! The pipeline that turns two trajectories into per-step proxy rewards:
//!
//! 1. [`build_atoms`]: one atom per step, `[row, col, one_hot(action)]`.
//! 2. [`cost_matrix`]: z-score both sets jointly, then Euclidean distances.
//! 3. [`sinkhorn`]: stabilized log-domain Sinkhorn on `exp(-M/ε)`.
//! 4. [`TransportPlan::contributions`]: row/column sums of `P ⊙ M`.
//! 5. [`proxy_rewards`]: `σ·exp(-β·T/√(|X|+|A|) · c)`, bounded in `(0, σ]`.
//!
//! [`exact_ot`] solves the unregularized problem exactly on small instances
//! and is what the Sinkhorn solver is checked against.

mod atoms;
mod contrib;
mod cost;
mod exact;
mod sinkhorn;

pub use atoms::{build_atoms, state_action_atom, AtomSet};
pub use contrib::{proxy_rewards, proxy_reward, ContributionVector, ProxyRewardConfig};
pub use cost::cost_matrix;
pub use exact::{exact_ot, exact_ot_oracle, permutation_ot, MAX_ORACLE_ATOMS};
pub use sinkhorn::{sinkhorn, SinkhornConfig, TransportPlan};

use thiserror::Error;

use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum OtError {
    #[error("cannot build atoms from an empty trajectory")]
    EmptyTrajectory,
    #[error("atom set is empty")]
    EmptyAtoms,
    #[error("atom dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("weights must be non-negative and sum to 1 (sum = {sum})")]
    BadWeights { sum: f64 },
    #[error("{rows}×{cols} cost matrix does not match {m} source and {k} target weights")]
    CostShape {
        rows: usize,
        cols: usize,
        m: usize,
        k: usize,
    },
    #[error("cost matrix has a negative or non-finite entry at ({0}, {1})")]
    BadCost(usize, usize),
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("non-finite value in the Sinkhorn kernel after {iterations} iterations")]
    NonFiniteKernel { iterations: usize },
    #[error("exact oracle limited to {max} atoms per side, got {m}×{k}")]
    TooLarge { m: usize, k: usize, max: usize },
    #[error("invalid proxy-reward config: {0}")]
    BadProxyConfig(String),
}

/// Per-step proxy rewards for `source` measured against `target`.
///
/// Builds atoms from both trajectories, solves the entropic transport problem
/// and maps each source atom's contribution through [`proxy_rewards`].
/// Returns the rewards (aligned with `source.steps`) and the plan.
pub fn trajectory_rewards(
    source: &Trajectory,
    target: &Trajectory,
    sinkhorn_cfg: &SinkhornConfig,
    reward_cfg: &ProxyRewardConfig,
) -> Result<(Vec<f64>, TransportPlan), OtError> {
    let a = build_atoms(source)?;
    let b = build_atoms(target)?;
    let plan = sinkhorn(&a, &b, sinkhorn_cfg)?;
    let (c_source, _) = plan.contributions();
    Ok((proxy_rewards(&c_source, reward_cfg), plan))
}
