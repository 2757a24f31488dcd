//! Objective value, feasibility and optimality measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{inverse_pd, log_det_pd, min_eigenvalue, SymmetricMatrix};

use super::options::Problem;
use super::steps::Iterate;

/// Magnitude below which an entry is treated as zero by `sp1`.
pub const SP1_THRESHOLD: f64 = 1e-4;

/// The objective split into its three terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParts {
    /// `⟨R, Σ̂⟩ − log det R`
    pub smooth: f64,
    /// `α‖S‖₁` (off-diagonal only in [`ShrinkMode::OffDiagonal`])
    pub l1: f64,
    /// `β Tr(L)`
    pub trace: f64,
}

impl ObjectiveParts {
    pub fn total(&self) -> f64 {
        self.smooth + self.l1 + self.trace
    }
}

pub fn objective_parts(
    problem: &Problem,
    r: &SymmetricMatrix,
    s: &SymmetricMatrix,
    l: &SymmetricMatrix,
) -> Result<ObjectiveParts> {
    let p = problem.dim();
    r.check_dim(p)?;
    s.check_dim(p)?;
    l.check_dim(p)?;
    Ok(ObjectiveParts {
        smooth: r.dot(&problem.sigma_hat) - log_det_pd(r)?,
        l1: problem.alpha * problem.shrink_mode.l1_norm(s),
        trace: problem.beta * l.trace(),
    })
}

/// `⟨R, Σ̂⟩ − log det R + α‖S‖₁ + β Tr(L)`.
pub fn objective(
    problem: &Problem,
    r: &SymmetricMatrix,
    s: &SymmetricMatrix,
    l: &SymmetricMatrix,
) -> Result<f64> {
    Ok(objective_parts(problem, r, s, l)?.total())
}

/// `‖R − S + L‖_F / max{1, ‖R‖_F, ‖S‖_F, ‖L‖_F}`.
pub fn infeasibility(r: &SymmetricMatrix, s: &SymmetricMatrix, l: &SymmetricMatrix) -> f64 {
    let residual = &(r - s) + l;
    let scale = 1f64
        .max(r.frobenius_norm())
        .max(s.frobenius_norm())
        .max(l.frobenius_norm());
    residual.frobenius_norm() / scale
}

/// Fractions `(sp, sp1)` of entries of `S` that are nonzero, counted
/// exactly and after truncating magnitudes at or below `1e-4`.
pub fn sparsity(s: &SymmetricMatrix) -> (f64, f64) {
    let total = (s.dim() * s.dim()) as f64;
    let (nonzero, large) = s.iter().fold((0usize, 0usize), |(n, big), &v| {
        (n + usize::from(v != 0.0), big + usize::from(v.abs() > SP1_THRESHOLD))
    });
    (nonzero as f64 / total, large as f64 / total)
}

/// Residuals of the optimality system
///
/// ```text
/// Σ̂ − R⁻¹ = Λ
/// −Λ ∈ α ∂‖S‖₁
/// M := βI − Λ ⪰ 0,  ⟨M, L⟩ = 0
/// R − S + L = 0
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity_r: f64,
    pub dual_feas_s: f64,
    pub comp_slack_l: f64,
    pub primal: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity_r
            .max(self.dual_feas_s)
            .max(self.comp_slack_l)
            .max(self.primal)
    }
}

pub fn kkt_residuals(problem: &Problem, it: &Iterate) -> Result<KktResiduals> {
    it.check_dims(problem.dim())?;
    let p = problem.dim();
    let alpha = problem.alpha;
    let lambda = &it.lambda;

    let r_inv = inverse_pd(&it.r)?;
    let stationarity_r = (&(&problem.sigma_hat - &r_inv) - lambda).frobenius_norm()
        / problem.sigma_hat.frobenius_norm().max(1.0);

    // Penalized entries need |Λ_ij| ≤ α, and Λ_ij = −α sign(S_ij) on the
    // support. Unpenalized diagonal entries (off-diagonal mode) need Λ_ii = 0.
    let mut bound_violation = 0f64;
    let mut sign_mismatch = 0f64;
    let mut free_diagonal = 0f64;
    for j in 0..p {
        for i in 0..p {
            let lij = lambda.get(i, j);
            if problem.shrink_mode.penalizes(i, j) {
                bound_violation = bound_violation.max(lij.abs() - alpha);
                let sij = it.s.get(i, j);
                if sij != 0.0 {
                    sign_mismatch = sign_mismatch.max((lij + alpha * sij.signum()).abs());
                }
            } else {
                free_diagonal = free_diagonal.max(lij.abs());
            }
        }
    }
    let dual_feas_s = bound_violation.max(0.0) + sign_mismatch + free_diagonal;

    let m = &SymmetricMatrix::scaled_identity(p, problem.beta) - lambda;
    let comp_slack_l = m.dot(&it.l).abs() / it.l.frobenius_norm().max(1.0)
        + (-min_eigenvalue(&m)?).max(0.0);

    Ok(KktResiduals {
        stationarity_r,
        dual_feas_s,
        comp_slack_l,
        primal: infeasibility(&it.r, &it.s, &it.l),
    })
}

/// Squared distances `‖U^k − U*‖²_H` with `U = ((S, L), Λ)` and
/// `H = diag(I/(μτ), μI)`, the quantity the PGADM convergence argument
/// shows to be non-increasing for fixed `μ` and `τ < 1/2`.
pub fn hnorm_diagnostic(
    history: &[Iterate],
    reference: &Iterate,
    mu: f64,
    tau: f64,
) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Err(Error::invalid("hnorm diagnostic needs a nonempty history"));
    }
    if !(mu > 0.0) || !(tau > 0.0) {
        return Err(Error::invalid("mu and tau must be positive"));
    }
    let p = reference.dim();
    history
        .iter()
        .map(|it| {
            it.check_dims(p)?;
            let ds = &it.s - &reference.s;
            let dl = &it.l - &reference.l;
            let dlam = &it.lambda - &reference.lambda;
            Ok((ds.dot(&ds) + dl.dot(&dl)) / (mu * tau) + mu * dlam.dot(&dlam))
        })
        .collect()
}
