//! Closed-form proximal mappings of the three objective terms
//!
//! * `f(R) = ⟨R, Σ̂⟩ − log det R` → [`prox_logdet`]
//! * `g(S) = α‖S‖₁` → [`shrink`]
//! * `h(L) = β Tr(L) + 𝕀(L ⪰ 0)` → [`prox_psd_trace`]
//!
//! The proximal mapping of `c` with parameter `ξ` at `Z` is
//! `argmin_X c(X) + ‖X − Z‖²_F / (2ξ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_same_dim, sym_eig, SymmetricMatrix};

/// Which entries the ℓ1 penalty applies to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShrinkMode {
    /// `Σ_ij |S_ij|`, diagonal included.
    #[default]
    Full,
    /// `Σ_{i≠j} |S_ij|`; the diagonal is left unpenalized.
    #[serde(rename = "offdiag")]
    OffDiagonal,
}

impl ShrinkMode {
    /// The penalty `Σ |S_ij|` over the entries this mode penalizes.
    pub fn l1_norm(self, s: &SymmetricMatrix) -> f64 {
        let p = s.dim();
        let mut total = 0.0;
        for j in 0..p {
            for i in 0..p {
                if self == ShrinkMode::OffDiagonal && i == j {
                    continue;
                }
                total += s.get(i, j).abs();
            }
        }
        total
    }

    pub fn penalizes(self, i: usize, j: usize) -> bool {
        self == ShrinkMode::Full || i != j
    }
}

/// Proximal mapping of `⟨R, Σ̂⟩ − log det R` with parameter `xi`.
///
/// With `ξΣ̂ − Z = U diag(σ) Uᵀ` the minimizer is `U diag(γ) Uᵀ` where
/// `γ_i = (−σ_i + √(σ_i² + 4ξ))/2 > 0`, the positive root of
/// `γ² + σγ − ξ = 0`. The result is always positive definite.
pub fn prox_logdet(
    z: &SymmetricMatrix,
    sigma_hat: &SymmetricMatrix,
    xi: f64,
) -> Result<SymmetricMatrix> {
    check_same_dim(z, sigma_hat)?;
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::invalid(format!("xi must be positive, got {xi}")));
    }
    let shifted = &(sigma_hat * xi) - z;
    let eig = sym_eig(&shifted)?;
    Ok(eig.reconstruct_with(|s| logdet_root(s, xi)))
}

/// Positive root of `γ² + σγ − ξ = 0`. For `σ > 0` the textbook form
/// cancels catastrophically, so the equivalent `2ξ / (σ + √(σ² + 4ξ))` is
/// used there.
fn logdet_root(sigma: f64, xi: f64) -> f64 {
    let disc = (sigma * sigma + 4.0 * xi).sqrt();
    if sigma > 0.0 {
        2.0 * xi / (sigma + disc)
    } else {
        (disc - sigma) / 2.0
    }
}

/// Entrywise soft threshold.
///
/// Entries with `|Z_ij| ≤ tau` become exactly `0.0`. In
/// [`ShrinkMode::OffDiagonal`] the diagonal is copied unchanged.
pub fn shrink(z: &SymmetricMatrix, tau: f64, mode: ShrinkMode) -> Result<SymmetricMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!(
            "shrinkage threshold must be nonnegative, got {tau}"
        )));
    }
    Ok(z.map_indexed(|i, j, v| {
        if !mode.penalizes(i, j) {
            v
        } else {
            soft_threshold(v, tau)
        }
    }))
}

#[inline]
pub(crate) fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Proximal mapping of `βTr(L) + 𝕀(L ⪰ 0)` with parameter `ξ`, taking the
/// combined threshold `theta = ξβ`: eigenvalues are shifted down by `theta`
/// and clipped at zero. `theta = 0` is the projection onto the PSD cone.
pub fn prox_psd_trace(z: &SymmetricMatrix, theta: f64) -> Result<SymmetricMatrix> {
    if !(theta >= 0.0) {
        return Err(Error::invalid(format!(
            "trace threshold must be nonnegative, got {theta}"
        )));
    }
    let eig = sym_eig(z)?;
    Ok(eig.reconstruct_with(|s| (s - theta).max(0.0)))
}
