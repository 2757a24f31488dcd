use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::prox::ShrinkMode;

/// An instance of
/// `min ⟨R, Σ̂⟩ − log det R + α‖S‖₁ + β Tr(L)  s.t.  R − S + L = 0, L ⪰ 0`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub sigma_hat: SymmetricMatrix,
    pub alpha: f64,
    pub beta: f64,
    pub shrink_mode: ShrinkMode,
}

impl Problem {
    pub fn new(
        sigma_hat: SymmetricMatrix,
        alpha: f64,
        beta: f64,
        shrink_mode: ShrinkMode,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::invalid(format!("beta must be nonnegative, got {beta}")));
        }
        Ok(Self {
            sigma_hat,
            alpha,
            beta,
            shrink_mode,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma_hat.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Proximal-gradient alternating direction method (S and L grouped).
    #[serde(rename = "pgadm")]
    Pgadm,
    /// Two-block ADMM on the consensus reformulation `X = Z`.
    #[serde(rename = "consensus")]
    ConsensusAdmm,
    /// Gauss–Seidel ADMM over the three blocks R, S, L.
    #[serde(rename = "admm3")]
    Admm3,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Pgadm, Variant::ConsensusAdmm, Variant::Admm3];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Pgadm => "pgadm",
            Variant::ConsensusAdmm => "consensus",
            Variant::Admm3 => "admm3",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pgadm" => Ok(Variant::Pgadm),
            "consensus" | "admm" => Ok(Variant::ConsensusAdmm),
            "admm3" => Ok(Variant::Admm3),
            other => Err(Error::invalid(format!(
                "unknown variant {other:?} (expected pgadm, consensus or admm3)"
            ))),
        }
    }
}

/// Geometric decrease of the penalty parameter μ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    pub enabled: bool,
    pub shrink_factor: f64,
    pub period: usize,
    pub mu_min: f64,
}

impl Default for Continuation {
    fn default() -> Self {
        Self {
            enabled: true,
            shrink_factor: 0.25,
            period: 10,
            mu_min: 1e-4,
        }
    }
}

impl Continuation {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }
}

/// Largest step size accepted in strict mode, where the PGADM contraction
/// guarantee (`τ < 1/2`) must hold.
pub const STRICT_TAU_MAX: f64 = 0.499;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub variant: Variant,
    /// Initial μ. `None` picks `p` with continuation and 10 without.
    pub mu0: Option<f64>,
    pub continuation: Continuation,
    /// Proximal-gradient step size (PGADM only).
    pub tau: f64,
    pub tol_infeas: f64,
    /// Additional bound on the relative change `‖R⁺ − R‖_F / max(1, ‖R⁺‖_F)`
    /// required before stopping. `None` stops on infeasibility alone, except
    /// for [`Variant::Admm3`], which then uses `tol_infeas`.
    pub tol_step: Option<f64>,
    pub max_iter: usize,
    pub record_history: bool,
    /// Reject step sizes outside the range covered by the convergence proof.
    pub strict: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            variant: Variant::Pgadm,
            mu0: None,
            continuation: Continuation::default(),
            tau: 0.6,
            tol_infeas: 1e-5,
            tol_step: None,
            max_iter: 1000,
            record_history: false,
            strict: false,
        }
    }
}

impl SolverOptions {
    pub fn with_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn initial_mu(&self, p: usize) -> f64 {
        match self.mu0 {
            Some(mu) => mu,
            None if self.continuation.enabled => p as f64,
            None => 10.0,
        }
    }

    /// The step-change tolerance actually applied.
    ///
    /// The three-block scheme's multiplier update drives `R − S + L` to zero
    /// as soon as the support of `S` settles, before `R` has converged, so it
    /// always waits for `R` to stop moving as well.
    pub fn effective_tol_step(&self) -> Option<f64> {
        match (self.tol_step, self.variant) {
            (Some(t), _) => Some(t),
            (None, Variant::Admm3) => Some(self.tol_infeas),
            (None, _) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(mu) = self.mu0 {
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(Error::invalid(format!("mu0 must be positive, got {mu}")));
            }
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if self.strict && self.tau > STRICT_TAU_MAX {
            return Err(Error::invalid(format!(
                "strict mode requires tau <= {STRICT_TAU_MAX}, got {}",
                self.tau
            )));
        }
        if !(self.tol_infeas > 0.0) {
            return Err(Error::invalid("tol_infeas must be positive"));
        }
        if let Some(t) = self.tol_step {
            if !(t > 0.0) {
                return Err(Error::invalid("tol_step must be positive"));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        let c = &self.continuation;
        if c.enabled {
            if !(c.shrink_factor > 0.0 && c.shrink_factor < 1.0) {
                return Err(Error::invalid(format!(
                    "continuation shrink factor must lie in (0, 1), got {}",
                    c.shrink_factor
                )));
            }
            if c.period == 0 {
                return Err(Error::invalid("continuation period must be positive"));
            }
            if !(c.mu_min > 0.0) {
                return Err(Error::invalid("continuation mu_min must be positive"));
            }
        }
        Ok(())
    }
}

/// μ to use at iteration `k` given the value used at `k − 1`.
///
/// With continuation enabled, μ is multiplied by the shrink factor at every
/// positive multiple of the period and floored at `mu_min`.
pub fn continuation_update(mu: f64, k: usize, schedule: &Continuation) -> f64 {
    if schedule.enabled && k > 0 && k % schedule.period == 0 {
        (mu * schedule.shrink_factor).max(schedule.mu_min)
    } else {
        mu
    }
}
