//! Markov model of GoP transmission progress on the LTE uplink.
//!
//! Each slot carries one video frame. A renewal period starts with the
//! I-frame slot `(0,0,0)` and continues with differential frames until the
//! GoP terminates. The state `(i_rx, n_tx, n_rx)` records whether the GoP's
//! I-frame was decoded, the index of the differential frame sent in the
//! current slot and how many differential frames were received before it.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::LinkFailureProbs;
use crate::error::{Error, Result};
use crate::policy_metrics::Policy;

/// GoP length distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GopConfig {
    n_max: usize,
    /// `beta[i]`, `i = 0..=n_max`; `beta[0] = 0` and `beta[n_max] = 1`.
    beta: Vec<f64>,
}

impl GopConfig {
    /// `terminations[i - 1]` is the probability that the GoP ends after the
    /// `i`-th differential frame, for `i = 1..=n_max`.
    pub fn new(terminations: Vec<f64>) -> Result<Self> {
        let n_max = terminations.len();
        if n_max < 1 {
            return Err(Error::InvalidGop("at least one differential frame per GoP is required".into()));
        }
        for (i, &b) in terminations.iter().enumerate() {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidGop(format!("beta({}) = {b} is not a probability", i + 1)));
            }
        }
        if terminations[n_max - 1] != 1.0 {
            return Err(Error::InvalidGop(format!("beta(N) must equal 1, got {}", terminations[n_max - 1])));
        }
        let mut beta = Vec::with_capacity(n_max + 1);
        beta.push(0.0);
        beta.extend(terminations);
        Ok(Self { n_max, beta })
    }

    /// Fixed-length GoP: one I-frame followed by exactly `n_max` differential
    /// frames, i.e. `n_max + 1` frames per GoP.
    pub fn fixed(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidGop("at least one differential frame per GoP is required".into()));
        }
        let mut terminations = vec![0.0; n_max];
        terminations[n_max - 1] = 1.0;
        Self::new(terminations)
    }

    /// Maximum number of differential frames per GoP.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Termination probability after differential frame `i`; zero for the
    /// I-frame slot (`i = 0`).
    pub fn beta(&self, i: usize) -> f64 {
        self.beta[i]
    }

    /// The termination probabilities for `i = 1..=n_max`.
    pub fn terminations(&self) -> &[f64] {
        &self.beta[1..]
    }

    pub fn is_fixed(&self) -> bool {
        self.beta[1..self.n_max].iter().all(|&b| b == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub i_rx: bool,
    pub n_tx: usize,
    pub n_rx: usize,
}

impl State {
    pub const IFRAME: State = State { i_rx: false, n_tx: 0, n_rx: 0 };

    pub fn is_iframe(&self) -> bool {
        *self == Self::IFRAME
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", u8::from(self.i_rx), self.n_tx, self.n_rx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Idle = 0,
    Transmit = 1,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Idle, Action::Transmit];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn transmits(self) -> bool {
        self == Action::Transmit
    }
}

/// The controlled Markov chain: state space, kernel and rewards.
#[derive(Debug, Clone)]
pub struct GopChain {
    gop: GopConfig,
    probs: LinkFailureProbs,
    states: Vec<State>,
    /// `successors[s][u]` lists `(s', p(s'|s,u))` with `p > 0`.
    successors: Vec<[Vec<(usize, f64)>; 2]>,
    omega: Vec<[f64; 2]>,
    phi: Vec<[f64; 2]>,
}

/// Number of states for a chain with at most `n_max` differential frames.
pub fn state_count(n_max: usize) -> usize {
    1 + n_max * (n_max + 1)
}

pub fn build_chain(gop: GopConfig, probs: LinkFailureProbs) -> Result<GopChain> {
    probs.validate()?;
    let n = gop.n_max();

    let mut states = Vec::with_capacity(state_count(n));
    states.push(State::IFRAME);
    for i_rx in [false, true] {
        for n_tx in 1..=n {
            for n_rx in 0..n_tx {
                states.push(State { i_rx, n_tx, n_rx });
            }
        }
    }

    let index = |s: State| state_index(n, &s).expect("successor is a valid state");
    let mut successors = Vec::with_capacity(states.len());
    let mut omega = Vec::with_capacity(states.len());
    let mut phi = Vec::with_capacity(states.len());

    for &s in &states {
        let mut rows: [Vec<(usize, f64)>; 2] = Default::default();
        let mut w = [0.0; 2];
        for action in Action::ALL {
            let u = action.index();
            let ok = 1.0 - probs.rho_l(action.transmits());
            let row = &mut rows[u];
            if s.is_iframe() {
                row.push((index(State { i_rx: false, n_tx: 1, n_rx: 0 }), 1.0 - ok));
                row.push((index(State { i_rx: true, n_tx: 1, n_rx: 0 }), ok));
            } else if s.n_tx == n {
                row.push((0, 1.0));
            } else {
                let b = gop.beta(s.n_tx);
                row.push((0, b));
                row.push((index(State { n_tx: s.n_tx + 1, ..s }), (1.0 - b) * (1.0 - ok)));
                row.push((index(State { n_tx: s.n_tx + 1, n_rx: s.n_rx + 1, ..s }), (1.0 - b) * ok));
            }
            row.retain(|&(_, p)| p > 0.0);

            // Frames of the GoP credited in expectation when it ends in this slot:
            // the received differential frames, the I-frame, and the current frame.
            if s.i_rx && !s.is_iframe() {
                w[u] = gop.beta(s.n_tx) * (s.n_rx as f64 + 1.0 + ok);
            }
        }
        successors.push(rows);
        omega.push(w);
        phi.push([0.0, 1.0 - probs.rho_d1]);
    }

    Ok(GopChain { gop, probs, states, successors, omega, phi })
}

/// Lexicographic index of `s` in a chain with at most `n_max` differential
/// frames, or `None` if `s` is not a valid state.
pub fn state_index(n_max: usize, s: &State) -> Option<usize> {
    if s.is_iframe() {
        return Some(0);
    }
    if s.n_tx < 1 || s.n_tx > n_max || s.n_rx >= s.n_tx {
        return None;
    }
    let half = n_max * (n_max + 1) / 2;
    Some(1 + usize::from(s.i_rx) * half + (s.n_tx - 1) * s.n_tx / 2 + s.n_rx)
}

impl GopChain {
    pub fn gop(&self) -> &GopConfig {
        &self.gop
    }

    pub fn failure_probs(&self) -> &LinkFailureProbs {
        &self.probs
    }

    pub fn n_max(&self) -> usize {
        self.gop.n_max()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        state_index(self.n_max(), s)
    }

    pub fn successors(&self, s: usize, action: Action) -> &[(usize, f64)] {
        &self.successors[s][action.index()]
    }

    /// `p(next | s, action)`.
    pub fn transition_probability(&self, s: usize, action: Action, next: usize) -> f64 {
        self.successors(s, action).iter().filter(|&&(t, _)| t == next).map(|&(_, p)| p).sum()
    }

    /// Expected LTE frames credited, `ω(s,u)`.
    pub fn omega(&self, s: usize, action: Action) -> f64 {
        self.omega[s][action.index()]
    }

    /// Expected D2D packets delivered, `φ(s,u)`.
    pub fn phi(&self, s: usize, action: Action) -> f64 {
        self.phi[s][action.index()]
    }

    /// Human-readable listing of the state index map.
    pub fn describe(&self) -> String {
        let mut out = format!(
            "states={} n_max={} rho_l0={} rho_l1={} rho_d1={}\n",
            self.len(),
            self.n_max(),
            self.probs.rho_l0,
            self.probs.rho_l1,
            self.probs.rho_d1
        );
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("{i}\t{s}\n"));
        }
        out
    }
}

/// Joint state-action stationary distribution, indexed `[state][action]`.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    pub pi: Vec<[f64; 2]>,
    /// Largest global-balance violation of the returned distribution.
    pub residual: f64,
}

impl StationaryDistribution {
    /// Marginal probability of state `s`.
    pub fn state_marginal(&self, s: usize) -> f64 {
        self.pi[s][0] + self.pi[s][1]
    }
}

pub const BALANCE_TOLERANCE: f64 = 1e-10;

/// Largest violation of `Σ_{s,u} π(s,u) p(s'|s,u) = Σ_u π(s',u)`.
pub fn balance_residual(chain: &GopChain, pi: &[[f64; 2]]) -> f64 {
    let mut inflow = vec![0.0; chain.len()];
    for (s, row) in pi.iter().enumerate() {
        for action in Action::ALL {
            let mass = row[action.index()];
            if mass == 0.0 {
                continue;
            }
            for &(t, p) in chain.successors(s, action) {
                inflow[t] += mass * p;
            }
        }
    }
    inflow.iter().zip(pi).map(|(inf, row)| (inf - row[0] - row[1]).abs()).fold(0.0, f64::max)
}

pub fn stationary_distribution(chain: &GopChain, policy: &Policy) -> Result<StationaryDistribution> {
    let transmit = policy.transmit_table(chain)?;
    let n = chain.len();

    // Solve (P^T - I) x = 0 with the first balance row replaced by Σ x = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        let q = transmit[s];
        for action in Action::ALL {
            let w = if action.transmits() { q } else { 1.0 - q };
            if w == 0.0 {
                continue;
            }
            for &(t, p) in chain.successors(s, action) {
                a[(t, s)] += w * p;
            }
        }
        a[(s, s)] -= 1.0;
    }
    for s in 0..n {
        a[(0, s)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[0] = 1.0;

    let x = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::NumericalFailure { context: "stationary distribution", residual: f64::INFINITY })?;

    let pi: Vec<[f64; 2]> = (0..n)
        .map(|s| {
            let m = x[s].max(0.0);
            [m * (1.0 - transmit[s]), m * transmit[s]]
        })
        .collect();
    let residual = balance_residual(chain, &pi);
    if !(residual <= BALANCE_TOLERANCE) {
        return Err(Error::NumericalFailure { context: "stationary distribution", residual });
    }
    Ok(StationaryDistribution { pi, residual })
}
