//! Single iterations of the three alternating-direction schemes.
//!
//! All three work with the augmented Lagrangian
//!
//! ```text
//! L_μ(R, S, L; Λ) = f(R) + g(S) + h(L) − ⟨Λ, R − S + L⟩ + ‖R − S + L‖²_F / (2μ)
//! ```
//!
//! and end with the multiplier update `Λ⁺ = Λ − (R⁺ − S⁺ + L⁺)/μ`.

use crate::error::Result;
use crate::matrix::SymmetricMatrix;
use crate::prox::{prox_logdet, prox_psd_trace, shrink};

use super::options::{Problem, SolverOptions};

/// State shared by PGADM and the three-block ADMM.
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub r: SymmetricMatrix,
    pub s: SymmetricMatrix,
    pub l: SymmetricMatrix,
    /// Multiplier of `R − S + L = 0`.
    pub lambda: SymmetricMatrix,
    pub mu: f64,
}

impl Iterate {
    /// `R = S = I`, `L = Λ = 0`.
    pub fn initial(p: usize, mu: f64) -> Self {
        Self {
            r: SymmetricMatrix::identity(p),
            s: SymmetricMatrix::identity(p),
            l: SymmetricMatrix::zeros(p),
            lambda: SymmetricMatrix::zeros(p),
            mu,
        }
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub(crate) fn check_dims(&self, p: usize) -> Result<()> {
        self.r.check_dim(p)?;
        self.s.check_dim(p)?;
        self.l.check_dim(p)?;
        self.lambda.check_dim(p)
    }
}

/// An `(R, S, L)` triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks {
    pub r: SymmetricMatrix,
    pub s: SymmetricMatrix,
    pub l: SymmetricMatrix,
}

impl Blocks {
    pub fn zeros(p: usize) -> Self {
        Self {
            r: SymmetricMatrix::zeros(p),
            s: SymmetricMatrix::zeros(p),
            l: SymmetricMatrix::zeros(p),
        }
    }

    /// `R − S + L`.
    pub fn residual(&self) -> SymmetricMatrix {
        &(&self.r - &self.s) + &self.l
    }

    /// `self + scale · other`, blockwise.
    pub fn add_scaled(&self, scale: f64, other: &Blocks) -> Blocks {
        Blocks {
            r: self.r.add_scaled(scale, &other.r),
            s: self.s.add_scaled(scale, &other.s),
            l: self.l.add_scaled(scale, &other.l),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.r.dot(&self.r) + self.s.dot(&self.s) + self.l.dot(&self.l)).sqrt()
    }
}

/// State of the consensus ADMM: `X = (R, S, L)` holds the prox outputs,
/// `Z` the copy constrained to `R̃ − S̃ + L̃ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusIterate {
    pub x: Blocks,
    pub z: Blocks,
    pub lambda: Blocks,
    pub mu: f64,
}

impl ConsensusIterate {
    /// Lifts a split iterate. At a saddle point the blockwise multipliers
    /// are `(Λ, −Λ, Λ)`.
    pub fn from_iterate(it: &Iterate) -> Self {
        let x = Blocks {
            r: it.r.clone(),
            s: it.s.clone(),
            l: it.l.clone(),
        };
        Self {
            z: x.clone(),
            x,
            lambda: Blocks {
                r: it.lambda.clone(),
                s: -&it.lambda,
                l: it.lambda.clone(),
            },
            mu: it.mu,
        }
    }

    /// The `X` blocks with `Λ_R` as the multiplier of `R − S + L = 0`.
    pub fn to_iterate(&self) -> Iterate {
        Iterate {
            r: self.x.r.clone(),
            s: self.x.s.clone(),
            l: self.x.l.clone(),
            lambda: self.lambda.r.clone(),
            mu: self.mu,
        }
    }
}

/// One PGADM iteration: an exact R-step, then a single proximal-gradient
/// step on the grouped block `(S, L)`.
pub fn pgadm_step(state: &Iterate, problem: &Problem, opts: &SolverOptions) -> Result<Iterate> {
    let mu = state.mu;
    let tau = opts.tau;
    let Iterate { s, l, lambda, .. } = state;

    let r = prox_logdet(&(&(s - l) + &(lambda * mu)), &problem.sigma_hat, mu)?;
    // G = R⁺ − S + L − μΛ
    let g = &(&(&r - s) + l) - &(lambda * mu);
    let s_next = shrink(&s.add_scaled(tau, &g), problem.alpha * mu * tau, problem.shrink_mode)?;
    let l_next = prox_psd_trace(&l.add_scaled(-tau, &g), problem.beta * mu * tau)?;
    let lambda_next = update_multiplier(lambda, &r, &s_next, &l_next, mu);

    Ok(Iterate {
        r,
        s: s_next,
        l: l_next,
        lambda: lambda_next,
        mu,
    })
}

/// One Gauss–Seidel sweep R → S → L of the three-block ADMM, each block
/// minimizing the augmented Lagrangian exactly.
pub fn admm3_step(state: &Iterate, problem: &Problem, _opts: &SolverOptions) -> Result<Iterate> {
    let mu = state.mu;
    let Iterate { s, l, lambda, .. } = state;
    let mu_lambda = lambda * mu;

    let r = prox_logdet(&(&(s - l) + &mu_lambda), &problem.sigma_hat, mu)?;
    let s_next = shrink(
        &(&(&r + l) - &mu_lambda),
        problem.alpha * mu,
        problem.shrink_mode,
    )?;
    let l_next = prox_psd_trace(&(&(&s_next - &r) + &mu_lambda), problem.beta * mu)?;
    let lambda_next = update_multiplier(lambda, &r, &s_next, &l_next, mu);

    Ok(Iterate {
        r,
        s: s_next,
        l: l_next,
        lambda: lambda_next,
        mu,
    })
}

fn update_multiplier(
    lambda: &SymmetricMatrix,
    r: &SymmetricMatrix,
    s: &SymmetricMatrix,
    l: &SymmetricMatrix,
    mu: f64,
) -> SymmetricMatrix {
    let residual = &(r - s) + l;
    lambda.add_scaled(-1.0 / mu, &residual)
}

/// Euclidean projection of `(T_R, T_S, T_L)` onto `{R̃ − S̃ + L̃ = 0}`.
///
/// The constraint multiplier is `Γ = −(T_R − T_S + T_L)/3`, giving
/// `(T_R + Γ, T_S − Γ, T_L + Γ)`.
pub fn consensus_project(t_r: &SymmetricMatrix, t_s: &SymmetricMatrix, t_l: &SymmetricMatrix) -> Blocks {
    let gamma = &(&(t_r - t_s) + t_l) * (-1.0 / 3.0);
    Blocks {
        r: t_r + &gamma,
        s: t_s - &gamma,
        l: t_l + &gamma,
    }
}

/// One iteration of the two-block consensus ADMM.
pub fn consensus_admm_step(
    state: &ConsensusIterate,
    problem: &Problem,
    _opts: &SolverOptions,
) -> Result<ConsensusIterate> {
    let mu = state.mu;
    let v = state.z.add_scaled(mu, &state.lambda);
    let x = Blocks {
        r: prox_logdet(&v.r, &problem.sigma_hat, mu)?,
        s: shrink(&v.s, problem.alpha * mu, problem.shrink_mode)?,
        l: prox_psd_trace(&v.l, problem.beta * mu)?,
    };
    let t = x.add_scaled(-mu, &state.lambda);
    let z = consensus_project(&t.r, &t.s, &t.l);
    // Λ⁺ = Λ − (X⁺ − Z⁺)/μ
    let lambda = Blocks {
        r: state.lambda.r.add_scaled(-1.0 / mu, &(&x.r - &z.r)),
        s: state.lambda.s.add_scaled(-1.0 / mu, &(&x.s - &z.s)),
        l: state.lambda.l.add_scaled(-1.0 / mu, &(&x.l - &z.l)),
    };
    Ok(ConsensusIterate { x, z, lambda, mu })
}
