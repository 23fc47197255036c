//! Robustification of untrusted advice against a trusted expert.
//!
//! At every step the chosen action must keep the cumulative constraint
//!
//! ```text
//! Σ_{A_t} f(x_τ) + Σ_{τ≤t} d(x_τ) + Σ_{B_t} H(x_τ, x^π_τ) + G_t
//!     ≤ (1+λ) ( Σ_{A_t} f(x^π_τ) + Σ_{τ≤t} d(x^π_τ) )
//! ```
//!
//! satisfied, where `A_t`/`B_t` are the revealed/unrevealed indices. The
//! advice is projected onto that set (intersected with the action box)
//! whenever it violates it.

mod diagnostics;
mod driver;
mod ledger;
mod projection;
mod reservation;

pub use diagnostics::{theorem1_bound, Theorem1Bound};
pub use driver::{
    run_rcl, run_rcl_with_trace, Advisor, ExpertAdvisor, FixedAdvisor, Observation,
    RclEpisode, RclOutcome, UniformRandomAdvisor, ZeroAdvisor,
};
pub use ledger::{recompute_sides, RclContext, RobustLedger, StepConstraint};
pub use projection::{project, sufficient_projection};
pub use reservation::{corollary1_lambda, k_constant, reservation_g, reservation_h};
pub(crate) use reservation::g_weights;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soco::Action;

/// Robustness budget `λ` and its inner split `λ₀ ∈ (0, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RclConfig {
    pub lambda: f64,
    pub lambda0: f64,
}

impl RclConfig {
    /// Uses the split `λ₀ = √(1+λ) − 1`.
    pub fn new(lambda: f64) -> Result<Self> {
        Self::with_lambda0(lambda, Self::optimal_lambda0(lambda))
    }

    pub fn with_lambda0(lambda: f64, lambda0: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
        }
        if !(lambda0 > 0.0 && lambda0 < lambda) {
            return Err(Error::InvalidInput(format!(
                "lambda0 must lie in (0, {lambda}), got {lambda0}"
            )));
        }
        Ok(Self { lambda, lambda0 })
    }

    pub fn optimal_lambda0(lambda: f64) -> f64 {
        (1.0 + lambda).sqrt() - 1.0
    }

    /// `K` for this configuration.
    pub fn k(&self, beta_h: f64, alpha: f64) -> f64 {
        k_constant(self.lambda, self.lambda0, beta_h, alpha)
    }
}

/// Outcome of robustifying one piece of advice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDecision {
    pub action: Action,
    /// Whether the action differs from the raw advice.
    pub projected: bool,
    /// RHS − LHS of the constraint at the chosen action.
    pub slack: f64,
    /// Multiplier of the constraint in the projection (0 when inactive).
    pub dual_mu: f64,
    /// `‖x_t − x̃_t‖`.
    pub displacement: f64,
}

/// Decision log with columns `t, projected, slack, dual_mu, displacement`.
pub fn write_decision_log<W: Write>(decisions: &[StepDecision], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "projected", "slack", "dual_mu", "displacement"])?;
    for (i, d) in decisions.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            d.projected.to_string(),
            format!("{:?}", d.slack),
            format!("{:?}", d.dual_mu),
            format!("{:?}", d.displacement),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(RclConfig::new(0.0).is_err());
        assert!(RclConfig::with_lambda0(1.0, 1.0).is_err());
        assert!(RclConfig::with_lambda0(1.0, 0.0).is_err());
        let c = RclConfig::new(3.0).unwrap();
        assert!((c.lambda0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn optimal_split_gives_closed_form_k() {
        for i in 1..100 {
            let lambda = i as f64 * 0.17;
            let c = RclConfig::new(lambda).unwrap();
            let (beta, alpha) = (0.3 + 0.01 * i as f64, 1.0 + 0.02 * i as f64);
            let k = c.k(beta, alpha);
            let closed = 2.0 * ((1.0 + lambda).sqrt() - 1.0).powi(2) / (beta + alpha * alpha);
            assert!((k - closed).abs() <= 1e-12 * closed);
        }
    }

    #[test]
    fn decision_log_columns() {
        let d = StepDecision {
            action: Action::from_vec(vec![0.0]),
            projected: true,
            slack: 0.0,
            dual_mu: 1.5,
            displacement: 0.25,
        };
        let mut buf = Vec::new();
        write_decision_log(&[d], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,projected,slack,dual_mu,displacement\n1,true,0.0,1.5,0.25\n");
    }
}
