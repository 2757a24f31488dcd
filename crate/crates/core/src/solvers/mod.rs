//! Alternating-direction solvers for the sparse-minus-low-rank precision
//! estimation problem.
//!
//! [`solve`] drives any of the three [`Variant`]s until the relative
//! infeasibility of `R − S + L` drops below `tol_infeas` (and, where
//! configured, `R` stops moving; see [`SolverOptions::effective_tol_step`])
//! or the iteration cap is reached. Reaching the cap is reported through
//! [`SolveReport::converged`] rather than as an error.

mod diagnostics;
mod options;
mod steps;

use std::time::Instant;

pub use diagnostics::{
    hnorm_diagnostic, infeasibility, kkt_residuals, objective, objective_parts, sparsity,
    KktResiduals, ObjectiveParts, SP1_THRESHOLD,
};
pub use options::{
    continuation_update, Continuation, Problem, SolverOptions, Variant, STRICT_TAU_MAX,
};
pub use steps::{
    admm3_step, consensus_admm_step, consensus_project, pgadm_step, Blocks, ConsensusIterate,
    Iterate,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub objective: f64,
    pub infeas: f64,
    pub mu: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub objective: f64,
    pub parts: ObjectiveParts,
    pub iterations: usize,
    pub infeas: f64,
    pub converged: bool,
    /// Wall-clock seconds spent in the iteration loop.
    pub wall_seconds: f64,
    pub sp: f64,
    pub sp1: f64,
    /// `‖R − (S − L)‖_F`, for evaluating the objective at `S − L` post hoc.
    pub constraint_gap: f64,
    pub history: Option<Vec<HistoryRecord>>,
    /// Final `(R, S, L, Λ, μ)`; for the consensus variant, the `X` blocks
    /// with `Λ_R`.
    pub iterate: Iterate,
    /// Full consensus state when that variant was used.
    pub consensus: Option<ConsensusIterate>,
}

enum State {
    Split(Iterate),
    Consensus(ConsensusIterate),
}

impl State {
    fn set_mu(&mut self, mu: f64) {
        match self {
            State::Split(it) => it.mu = mu,
            State::Consensus(c) => c.mu = mu,
        }
    }

    fn r(&self) -> &crate::SymmetricMatrix {
        self.primal().0
    }

    fn primal(&self) -> (&crate::SymmetricMatrix, &crate::SymmetricMatrix, &crate::SymmetricMatrix) {
        match self {
            State::Split(it) => (&it.r, &it.s, &it.l),
            State::Consensus(c) => (&c.x.r, &c.x.s, &c.x.l),
        }
    }

    fn step(&self, problem: &Problem, opts: &SolverOptions) -> Result<State> {
        Ok(match (self, opts.variant) {
            (State::Split(it), Variant::Pgadm) => State::Split(pgadm_step(it, problem, opts)?),
            (State::Split(it), _) => State::Split(admm3_step(it, problem, opts)?),
            (State::Consensus(c), _) => State::Consensus(consensus_admm_step(c, problem, opts)?),
        })
    }
}

fn stopped(infeas: f64, step_change: f64, tol_infeas: f64, tol_step: Option<f64>) -> bool {
    infeas < tol_infeas && tol_step.map_or(true, |t| step_change < t)
}

/// Runs the selected variant from `initial` (default `R = S = I`,
/// `L = Λ = 0`). The `mu` field of `initial` is ignored in favour of the
/// options' initial μ.
pub fn solve(problem: &Problem, opts: &SolverOptions, initial: Option<&Iterate>) -> Result<SolveReport> {
    opts.validate()?;
    let p = problem.dim();
    let mut mu = opts.initial_mu(p);
    let mut start = match initial {
        Some(it) => {
            it.check_dims(p)?;
            it.clone()
        }
        None => Iterate::initial(p, mu),
    };
    start.mu = mu;
    let mut state = match opts.variant {
        Variant::ConsensusAdmm => State::Consensus(ConsensusIterate::from_iterate(&start)),
        _ => State::Split(start),
    };

    let tol_step = opts.effective_tol_step();
    let mut history = opts.record_history.then(Vec::new);
    let mut infeas = f64::INFINITY;
    let mut step_change = f64::INFINITY;
    let mut iterations = 0;
    let clock = Instant::now();
    for k in 0..opts.max_iter {
        mu = continuation_update(mu, k, &opts.continuation);
        state.set_mu(mu);
        let next = state.step(problem, opts)?;
        if tol_step.is_some() {
            let r = next.r();
            step_change = (r - state.r()).frobenius_norm() / r.frobenius_norm().max(1.0);
        }
        state = next;
        iterations = k + 1;
        let (r, s, l) = state.primal();
        infeas = infeasibility(r, s, l);
        if let Some(h) = history.as_mut() {
            h.push(HistoryRecord {
                objective: objective(problem, r, s, l)?,
                infeas,
                mu,
            });
        }
        if stopped(infeas, step_change, opts.tol_infeas, tol_step) {
            break;
        }
    }
    let wall_seconds = clock.elapsed().as_secs_f64();

    let (iterate, consensus) = match state {
        State::Split(it) => (it, None),
        State::Consensus(c) => (c.to_iterate(), Some(c)),
    };
    let parts = objective_parts(problem, &iterate.r, &iterate.s, &iterate.l)?;
    let (sp, sp1) = sparsity(&iterate.s);
    let constraint_gap = (&(&iterate.r - &iterate.s) + &iterate.l).frobenius_norm();
    Ok(SolveReport {
        objective: parts.total(),
        parts,
        iterations,
        infeas,
        converged: stopped(infeas, step_change, opts.tol_infeas, tol_step),
        wall_seconds,
        sp,
        sp1,
        constraint_gap,
        history,
        iterate,
        consensus,
    })
}
