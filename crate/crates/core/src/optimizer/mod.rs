//! Constrained MDP solved as a linear program over occupation measures.
//!
//! The decision variables `z(s,u)` are joint steady-state probabilities of
//! state-action pairs. Maximizing `Σ φ z` subject to `Σ ω z >= δ`, global
//! balance, normalization and `z >= 0` yields the throughput-optimal policy
//! meeting the delivery constraint; the policy is read off as
//! `μ(s,u) = z(s,u) / Σ_u' z(s,u')`.

pub mod simplex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gop_model::{balance_residual, Action, GopChain, State};
use crate::policy_metrics::{reward_rates, Policy};
use simplex::{LinearProgram, PivotRule, Row, Sense, SimplexError, SimplexOptions};

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// States whose occupation mass does not exceed this are treated as
    /// unvisited when extracting and summarizing policies.
    pub visit_threshold: f64,
    pub pivot_rule: PivotRule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { feasibility_tol: 1e-8, optimality_tol: 1e-9, visit_threshold: 1e-9, pivot_rule: PivotRule::Dantzig }
    }
}

impl SolverOptions {
    fn simplex(&self) -> SimplexOptions {
        SimplexOptions {
            feasibility_tol: self.feasibility_tol,
            optimality_tol: self.optimality_tol,
            rule: self.pivot_rule,
            ..Default::default()
        }
    }
}

/// Variable index of `z(s,u)`.
#[inline]
pub fn var(s: usize, action: Action) -> usize {
    2 * s + action.index()
}

/// The occupation-measure LP for one delivery constraint level.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub states: Vec<State>,
    pub delta: f64,
    /// `φ(s,u)` per variable; maximized.
    pub objective: Vec<f64>,
    /// `ω(s,u)` per variable; `Σ ω z >= delta`.
    pub delivery: Vec<f64>,
    /// One row per state `s'`: `Σ_{s,u} z(s,u) p(s'|s,u) - Σ_u z(s',u) = 0`.
    pub balance: Vec<Vec<(usize, f64)>>,
}

impl LpProblem {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Balance rows, normalization and (optionally) the delivery row. The
    /// balance row of the I-frame state is implied by the others plus
    /// normalization and is left out.
    fn linear_program(&self, objective: &[f64], with_delivery: bool) -> LinearProgram {
        let n = self.n_vars();
        let mut rows: Vec<Row> = self
            .balance
            .iter()
            .skip(1)
            .map(|coeffs| Row { coeffs: coeffs.clone(), sense: Sense::Eq, rhs: 0.0 })
            .collect();
        rows.push(Row { coeffs: (0..n).map(|j| (j, 1.0)).collect(), sense: Sense::Eq, rhs: 1.0 });
        if with_delivery {
            let coeffs = self.delivery.iter().enumerate().filter(|(_, &w)| w != 0.0).map(|(j, &w)| (j, w)).collect();
            rows.push(Row { coeffs, sense: Sense::Ge, rhs: self.delta });
        }
        LinearProgram { n_vars: n, objective: objective.to_vec(), rows }
    }

    /// Starting basis of the always-idle policy: `z(s, idle)` on the balance
    /// row of `s`, and the I-frame column on the normalization row. States
    /// are in topological order within each GoP, so every pivot is exact.
    fn idle_basis(&self) -> Vec<(usize, usize)> {
        let k = self.states.len();
        let mut pairs: Vec<(usize, usize)> = (1..k).map(|s| (s - 1, var(s, Action::Idle))).collect();
        pairs.push((k - 1, var(0, Action::Idle)));
        pairs
    }
}

pub fn build_lp(chain: &GopChain, delta: f64) -> Result<LpProblem> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain(format!("delta must lie in [0, 1], got {delta}")));
    }
    let n = chain.len();
    let mut objective = vec![0.0; 2 * n];
    let mut delivery = vec![0.0; 2 * n];
    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for s in 0..n {
        for a in Action::ALL {
            let j = var(s, a);
            objective[j] = chain.phi(s, a);
            delivery[j] = chain.omega(s, a);
            balance[s].push((j, -1.0));
            for &(t, p) in chain.successors(s, a) {
                balance[t].push((j, p));
            }
        }
    }
    for row in &mut balance {
        row.sort_by_key(|e| e.0);
        // Self-loops would appear twice; merge them.
        row.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
    }
    Ok(LpProblem { states: chain.states().to_vec(), delta, objective, delivery, balance })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// Largest global-balance violation.
    pub balance: f64,
    /// `|Σ z - 1|`.
    pub normalization: f64,
    /// `Σ ω z - δ`; nonnegative when the constraint holds.
    pub delivery_slack: f64,
}

#[derive(Debug, Clone)]
pub struct OccupationSolution {
    /// `z[s][u]`.
    pub z: Vec<[f64; 2]>,
    /// Achieved D2D throughput `Σ φ z`.
    pub objective: f64,
    /// Achieved delivery rate `Σ ω z`.
    pub d_lte: f64,
    pub policy: Policy,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl OccupationSolution {
    pub fn state_mass(&self, s: usize) -> f64 {
        self.z[s][0] + self.z[s][1]
    }

    /// Visited states whose transmit probability lies strictly inside
    /// `(eps, 1 - eps)`.
    pub fn randomized_states(&self, eps: f64, visit_threshold: f64) -> Vec<usize> {
        let Policy::Tabular(table) = &self.policy else { return Vec::new() };
        (0..self.z.len())
            .filter(|&s| self.state_mass(s) > visit_threshold && table[s] > eps && table[s] < 1.0 - eps)
            .collect()
    }
}

fn map_simplex_error(err: SimplexError, delta: f64) -> Error {
    match err {
        SimplexError::Infeasible { residual } => Error::Infeasible { delta, residual },
        SimplexError::Unbounded => Error::Unbounded,
        SimplexError::IterationLimit(_) => {
            Error::NumericalFailure { context: "simplex iteration limit", residual: f64::NAN }
        }
    }
}

fn unflatten(x: &[f64]) -> Vec<[f64; 2]> {
    x.chunks(2).map(|c| [c[0], c[1]]).collect()
}

pub fn solve(problem: &LpProblem, opts: &SolverOptions) -> Result<OccupationSolution> {
    let lp = problem.linear_program(&problem.objective, true);
    let sol = simplex::solve_with_basis(&lp, &opts.simplex(), &problem.idle_basis())
        .map_err(|e| map_simplex_error(e, problem.delta))?;
    let z = unflatten(&sol.x);

    let d_lte: f64 = sol.x.iter().zip(&problem.delivery).map(|(z, w)| z * w).sum();
    let residuals = Residuals {
        balance: problem
            .balance
            .iter()
            .map(|row| row.iter().map(|&(j, c)| c * sol.x[j]).sum::<f64>().abs())
            .fold(0.0, f64::max),
        normalization: (sol.x.iter().sum::<f64>() - 1.0).abs(),
        delivery_slack: d_lte - problem.delta,
    };
    let tol = opts.feasibility_tol;
    if !(residuals.balance <= tol) {
        return Err(Error::NumericalFailure { context: "LP balance constraints", residual: residuals.balance });
    }
    if !(residuals.normalization <= tol) {
        return Err(Error::NumericalFailure { context: "LP normalization", residual: residuals.normalization });
    }
    if !(residuals.delivery_slack >= -tol) {
        return Err(Error::NumericalFailure { context: "LP delivery constraint", residual: -residuals.delivery_slack });
    }

    let policy = policy_from_occupation(&problem.states, &z, opts.visit_threshold);
    Ok(OccupationSolution { z, objective: sol.objective, d_lte, policy, residuals, iterations: sol.iterations })
}

fn policy_from_occupation(states: &[State], z: &[[f64; 2]], visit_threshold: f64) -> Policy {
    let table = states
        .iter()
        .zip(z)
        .map(|(s, row)| {
            let mass = row[0] + row[1];
            if mass > visit_threshold {
                (row[1] / mass).clamp(0.0, 1.0)
            } else if s.i_rx {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    Policy::Tabular(table)
}

/// `μ(s, transmit) = z(s,1) / (z(s,0) + z(s,1))`. States with no occupation
/// mass transmit iff their GoP's I-frame was lost.
pub fn extract_policy(z: &[[f64; 2]], chain: &GopChain) -> Result<Policy> {
    extract_policy_with_threshold(z, chain, 0.0)
}

pub fn extract_policy_with_threshold(z: &[[f64; 2]], chain: &GopChain, visit_threshold: f64) -> Result<Policy> {
    if z.len() != chain.len() {
        return Err(Error::PolicyMismatch(format!(
            "occupation measure has {} states, chain has {}",
            z.len(),
            chain.len()
        )));
    }
    Ok(policy_from_occupation(chain.states(), z, visit_threshold))
}

/// Largest achievable delivery rate over all stationary policies.
pub fn delivery_ceiling(chain: &GopChain, opts: &SolverOptions) -> Result<f64> {
    let problem = build_lp(chain, 0.0)?;
    let lp = problem.linear_program(&problem.delivery, false);
    let sol = simplex::solve_with_basis(&lp, &opts.simplex(), &problem.idle_basis())
        .map_err(|e| map_simplex_error(e, 0.0))?;
    let z = unflatten(&sol.x);
    let residual = balance_residual(chain, &z);
    if !(residual <= opts.feasibility_tol) {
        return Err(Error::NumericalFailure { context: "delivery ceiling LP", residual });
    }
    Ok(reward_rates(chain, &z).0)
}

/// One row of a constraint sweep.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub delta: f64,
    pub feasible: bool,
    pub t_d2d: f64,
    pub d_lte_achieved: f64,
    /// Transmit probability in the I-frame state.
    pub p_tx_iframe: f64,
    /// Visit-weighted transmit probability over differential-frame states
    /// whose I-frame was delivered.
    pub p_tx_dframe_irx1: f64,
    /// The same over states whose I-frame was lost.
    pub p_tx_dframe_irx0: f64,
    pub solution: Option<OccupationSolution>,
}

impl CurvePoint {
    fn infeasible(delta: f64) -> Self {
        Self {
            delta,
            feasible: false,
            t_d2d: f64::NAN,
            d_lte_achieved: f64::NAN,
            p_tx_iframe: f64::NAN,
            p_tx_dframe_irx1: f64::NAN,
            p_tx_dframe_irx0: f64::NAN,
            solution: None,
        }
    }
}

/// Visit-weighted transmit probability over the states selected by `class`,
/// or NaN if the class carries no mass.
pub fn class_transmit_probability(
    states: &[State],
    z: &[[f64; 2]],
    visit_threshold: f64,
    class: impl Fn(&State) -> bool,
) -> f64 {
    let (tx, total) = states
        .iter()
        .zip(z)
        .filter(|(s, _)| class(s))
        .fold((0.0, 0.0), |(tx, total), (_, row)| (tx + row[1], total + row[0] + row[1]));
    if total > visit_threshold {
        (tx / total).clamp(0.0, 1.0)
    } else {
        f64::NAN
    }
}

pub fn solve_point(chain: &GopChain, delta: f64, opts: &SolverOptions) -> Result<CurvePoint> {
    let problem = build_lp(chain, delta)?;
    match solve(&problem, opts) {
        Ok(sol) => {
            let states = chain.states();
            let th = opts.visit_threshold;
            Ok(CurvePoint {
                delta,
                feasible: true,
                t_d2d: sol.objective,
                d_lte_achieved: sol.d_lte,
                p_tx_iframe: class_transmit_probability(states, &sol.z, th, State::is_iframe),
                p_tx_dframe_irx1: class_transmit_probability(states, &sol.z, th, |s| s.i_rx),
                p_tx_dframe_irx0: class_transmit_probability(states, &sol.z, th, |s| !s.i_rx && !s.is_iframe()),
                solution: Some(sol),
            })
        }
        Err(Error::Infeasible { .. }) => Ok(CurvePoint::infeasible(delta)),
        Err(e) => Err(e),
    }
}

/// Solves the LP for every constraint level. Levels are solved in parallel
/// on the current rayon pool; the result keeps the input order.
pub fn sweep_delta(chain: &GopChain, deltas: &[f64], opts: &SolverOptions) -> Result<Vec<CurvePoint>> {
    if let Some(bad) = deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Error::Domain(format!("delta {bad} is outside [0, 1]")));
    }
    if deltas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("deltas must be sorted ascending".into()));
    }
    deltas.par_iter().map(|&d| solve_point(chain, d, opts)).collect()
}
