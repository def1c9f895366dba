//! Policies, analytic performance metrics and the video quality model.
//!
//! Delivery rate and throughput are steady-state averages of the chain's
//! rewards, `D_LTE = Σ π(s,u) ω(s,u)` and `T_D2D = Σ π(s,u) φ(s,u)`. The frame
//! error rate feeding the MSE model is `p_err = 1 - D_LTE`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::LinkFailureProbs;
use crate::error::{Error, Result};
use crate::gop_model::{
    build_chain, stationary_distribution, Action, GopChain, GopConfig, State, StationaryDistribution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Tabular,
    Constant,
    Heuristic,
    HeuristicAggressive,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Tabular => "tabular",
            PolicyKind::Constant => "constant",
            PolicyKind::Heuristic => "heuristic",
            PolicyKind::HeuristicAggressive => "heuristic-aggressive",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Randomized stationary D2D policy: the probability of transmitting in each
/// state.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Per-state transmit probability, indexed like [`GopChain::states`].
    Tabular(Vec<f64>),
    /// The same transmit probability in every state.
    Constant(f64),
    /// Idle during the I-frame slot, transmit with the given probability
    /// otherwise.
    Heuristic(f64),
    /// Like [`Policy::Heuristic`], but always transmits while the GoP's
    /// I-frame is already lost.
    HeuristicAggressive(f64),
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must lie in [0, 1], got {p}")))
    }
}

impl Policy {
    pub fn tabular(table: Vec<f64>) -> Result<Self> {
        for (i, &p) in table.iter().enumerate() {
            check_probability(&format!("transmit probability of state {i}"), p)?;
        }
        Ok(Policy::Tabular(table))
    }

    /// # Panics
    /// If `p_tx` is not a probability.
    pub fn constant(p_tx: f64) -> Self {
        check_probability("p_tx", p_tx).unwrap();
        Policy::Constant(p_tx)
    }

    /// # Panics
    /// If `p_tx` is not a probability.
    pub fn heuristic(p_tx: f64) -> Self {
        check_probability("p_tx", p_tx).unwrap();
        Policy::Heuristic(p_tx)
    }

    /// # Panics
    /// If `p_tx` is not a probability.
    pub fn heuristic_aggressive(p_tx: f64) -> Self {
        check_probability("p_tx", p_tx).unwrap();
        Policy::HeuristicAggressive(p_tx)
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Tabular(_) => PolicyKind::Tabular,
            Policy::Constant(_) => PolicyKind::Constant,
            Policy::Heuristic(_) => PolicyKind::Heuristic,
            Policy::HeuristicAggressive(_) => PolicyKind::HeuristicAggressive,
        }
    }

    /// The scalar parameter of the parametric families.
    pub fn p_tx(&self) -> Option<f64> {
        match *self {
            Policy::Tabular(_) => None,
            Policy::Constant(p) | Policy::Heuristic(p) | Policy::HeuristicAggressive(p) => Some(p),
        }
    }

    /// Transmit probability in state `s`, whose chain index is `index`.
    pub fn transmit_probability(&self, s: &State, index: usize) -> f64 {
        match *self {
            Policy::Tabular(ref table) => table[index],
            Policy::Constant(p) => p,
            Policy::Heuristic(p) => {
                if s.is_iframe() {
                    0.0
                } else {
                    p
                }
            }
            Policy::HeuristicAggressive(p) => match (s.is_iframe(), s.i_rx) {
                (true, _) => 0.0,
                (false, false) => 1.0,
                (false, true) => p,
            },
        }
    }

    /// Transmit probability for every state of `chain`.
    pub fn transmit_table(&self, chain: &GopChain) -> Result<Vec<f64>> {
        match self {
            Policy::Tabular(table) => {
                if table.len() != chain.len() {
                    return Err(Error::PolicyMismatch(format!(
                        "policy has {} entries but the chain has {} states",
                        table.len(),
                        chain.len()
                    )));
                }
                for (i, &p) in table.iter().enumerate() {
                    check_probability(&format!("transmit probability of state {i}"), p)?;
                }
                Ok(table.clone())
            }
            _ => {
                check_probability("p_tx", self.p_tx().unwrap_or(0.0))?;
                Ok(chain.states().iter().enumerate().map(|(i, s)| self.transmit_probability(s, i)).collect())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MetricReport {
    /// LTE frames delivered per slot.
    pub d_lte: f64,
    /// D2D packets delivered per slot.
    pub t_d2d: f64,
    pub pi: StationaryDistribution,
}

pub fn evaluate(chain: &GopChain, policy: &Policy) -> Result<MetricReport> {
    let pi = stationary_distribution(chain, policy)?;
    let (d_lte, t_d2d) = reward_rates(chain, &pi.pi);
    Ok(MetricReport { d_lte, t_d2d, pi })
}

/// `(Σ ω·x, Σ φ·x)` for a state-action measure `x` indexed `[state][action]`.
pub fn reward_rates(chain: &GopChain, x: &[[f64; 2]]) -> (f64, f64) {
    let mut d = 0.0;
    let mut t = 0.0;
    for (s, row) in x.iter().enumerate() {
        for a in Action::ALL {
            d += row[a.index()] * chain.omega(s, a);
            t += row[a.index()] * chain.phi(s, a);
        }
    }
    (d, t)
}

/// LTE failure probability of a slot in which the D2D link transmits with
/// probability `p_tx`.
pub fn mixed_failure(rho0: f64, rho1: f64, p_tx: f64) -> f64 {
    rho1 * p_tx + rho0 * (1.0 - p_tx)
}

/// Frame delivery rate of the constant policy over a fixed GoP with `n`
/// differential frames.
pub fn baseline_delivery_rate(n: usize, rho0: f64, rho1: f64, p_tx: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("GoP must contain at least one differential frame".into()));
    }
    check_probability("rho0", rho0)?;
    check_probability("rho1", rho1)?;
    check_probability("p_tx", p_tx)?;
    let ok = 1.0 - mixed_failure(rho0, rho1, p_tx);
    let n = n as f64;
    Ok(ok * (n * ok + 1.0) / (n + 1.0))
}

pub fn baseline_throughput(rho_d1: f64, p_tx: f64) -> Result<f64> {
    check_probability("rho_d1", rho_d1)?;
    check_probability("p_tx", p_tx)?;
    Ok(p_tx * (1.0 - rho_d1))
}

/// Transmit probability at which the constant policy delivers `rate`, found
/// by bisection; clamped to `[0, 1]` when `rate` lies outside the policy's
/// reachable range.
pub fn baseline_p_tx_for_rate(n: usize, rho0: f64, rho1: f64, rate: f64) -> Result<f64> {
    let at = |p: f64| baseline_delivery_rate(n, rho0, rho1, p);
    if rate >= at(0.0)? {
        return Ok(0.0);
    }
    if rate <= at(1.0)? {
        return Ok(1.0);
    }
    // The delivery rate is nonincreasing in p_tx.
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? >= rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(lo)
}

/// Constants of the affine distortion model `MSE = D_e + C·p_err·σ_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseModelParams {
    /// Encoder distortion.
    pub d_e: f64,
    pub c: f64,
    pub sigma_e: f64,
    /// Bits per pixel.
    pub w: u32,
}

impl Default for MseModelParams {
    /// Placeholder constants; real values depend on the video and encoder.
    fn default() -> Self {
        Self { d_e: 2.0, c: 1.0, sigma_e: 100.0, w: 8 }
    }
}

impl MseModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("d_e", self.d_e), ("c", self.c), ("sigma_e", self.sigma_e)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        if self.w < 1 {
            return Err(Error::Domain("w must be at least 1 bit per pixel".into()));
        }
        Ok(())
    }

    /// MSE of a frame hit by a residual error.
    pub fn corrupted_frame_mse(&self) -> f64 {
        self.d_e + self.c * self.sigma_e
    }
}

pub fn mse_from_error_rate(p_err: f64, params: &MseModelParams) -> Result<f64> {
    check_probability("p_err", p_err)?;
    Ok(params.d_e + params.c * p_err * params.sigma_e)
}

/// Peak value used in the PSNR numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsnrConvention {
    /// `2^W`.
    #[default]
    Paper,
    /// `(2^W - 1)^2`.
    Standard,
}

impl PsnrConvention {
    pub fn peak(self, w: u32) -> f64 {
        let levels = 2f64.powi(w as i32);
        match self {
            PsnrConvention::Paper => levels,
            PsnrConvention::Standard => (levels - 1.0).powi(2),
        }
    }
}

impl FromStr for PsnrConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(PsnrConvention::Paper),
            "standard" => Ok(PsnrConvention::Standard),
            other => Err(Error::Domain(format!("unknown PSNR convention '{other}' (expected paper or standard)"))),
        }
    }
}

/// PSNR in dB with peak `2^w`.
pub fn psnr_from_mse(mse: f64, w: u32) -> Result<f64> {
    psnr_with_convention(mse, w, PsnrConvention::Paper)
}

pub fn psnr_with_convention(mse: f64, w: u32, convention: PsnrConvention) -> Result<f64> {
    if !(mse > 0.0) {
        return Err(Error::Domain(format!("PSNR needs a positive MSE, got {mse}")));
    }
    Ok(10.0 * (convention.peak(w) / mse).log10())
}

/// One state row of a policy file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyEntry {
    pub i_rx: u8,
    pub n_tx: usize,
    pub n_rx: usize,
    pub p_transmit: f64,
}

/// Self-describing policy document: the model it was computed for and the
/// per-state transmit probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub n_max: usize,
    pub beta: Vec<f64>,
    pub rho_l0: f64,
    pub rho_l1: f64,
    pub rho_d1: f64,
    pub policy: Vec<PolicyEntry>,
}

impl PolicyFile {
    pub fn from_policy(chain: &GopChain, policy: &Policy) -> Result<Self> {
        let table = policy.transmit_table(chain)?;
        let probs = chain.failure_probs();
        Ok(Self {
            n_max: chain.n_max(),
            beta: chain.gop().terminations().to_vec(),
            rho_l0: probs.rho_l0,
            rho_l1: probs.rho_l1,
            rho_d1: probs.rho_d1,
            policy: chain
                .states()
                .iter()
                .zip(table)
                .map(|(s, p)| PolicyEntry { i_rx: u8::from(s.i_rx), n_tx: s.n_tx, n_rx: s.n_rx, p_transmit: p })
                .collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::PolicyFile(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy file serializes")
    }

    /// Rebuilds the chain described by the file and the tabular policy on it.
    pub fn to_chain_and_policy(&self) -> Result<(GopChain, Policy)> {
        if self.beta.len() != self.n_max {
            return Err(Error::PolicyFile(format!(
                "field 'beta': expected {} entries (n_max), found {}",
                self.n_max,
                self.beta.len()
            )));
        }
        let gop = GopConfig::new(self.beta.clone()).map_err(|e| Error::PolicyFile(format!("field 'beta': {e}")))?;
        let probs = LinkFailureProbs::new(self.rho_l0, self.rho_l1, self.rho_d1)
            .map_err(|e| Error::PolicyFile(format!("failure probabilities: {e}")))?;
        let chain = build_chain(gop, probs)?;

        let mut table = vec![None; chain.len()];
        for (k, entry) in self.policy.iter().enumerate() {
            if entry.i_rx > 1 {
                return Err(Error::PolicyFile(format!("policy[{k}].i_rx = {} is not 0 or 1", entry.i_rx)));
            }
            let state = State { i_rx: entry.i_rx == 1, n_tx: entry.n_tx, n_rx: entry.n_rx };
            let idx = chain.index_of(&state).ok_or_else(|| {
                Error::PolicyFile(format!("policy[{k}]: {state} is not a valid state for n_max={}", self.n_max))
            })?;
            if !(0.0..=1.0).contains(&entry.p_transmit) {
                return Err(Error::PolicyFile(format!(
                    "policy[{k}].p_transmit = {} is not a probability",
                    entry.p_transmit
                )));
            }
            if table[idx].replace(entry.p_transmit).is_some() {
                return Err(Error::PolicyFile(format!("policy[{k}]: duplicate entry for state {state}")));
            }
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::PolicyFile(format!("missing entry for state {}", chain.states()[i]))))
            .collect::<Result<Vec<_>>>()?;
        Ok((chain, Policy::Tabular(table)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain(n: usize, r0: f64, r1: f64, d1: f64) -> GopChain {
        build_chain(GopConfig::fixed(n).unwrap(), LinkFailureProbs::new(r0, r1, d1).unwrap()).unwrap()
    }

    #[test]
    fn idle_policy_hits_the_ceiling() {
        let report = evaluate(&chain(24, 0.01, 0.1, 0.1), &Policy::constant(0.0)).unwrap();
        // 0.99 * (24 * 0.99 + 1) / 25
        assert!((report.d_lte - 0.980496).abs() < 1e-12);
        assert_eq!(report.t_d2d, 0.0);
    }

    #[test]
    fn always_transmit() {
        let report = evaluate(&chain(24, 0.01, 0.1, 0.1), &Policy::constant(1.0)).unwrap();
        // 0.9 * (24 * 0.9 + 1) / 25
        assert!((report.d_lte - 0.8136).abs() < 1e-12);
        assert!((report.t_d2d - 0.9).abs() < 1e-12);
    }

    #[test]
    fn perfect_channel_delivers_everything() {
        let c = chain(7, 0.0, 0.0, 0.4);
        for policy in [Policy::constant(0.3), Policy::heuristic(0.9), Policy::heuristic_aggressive(0.2)] {
            assert!((evaluate(&c, &policy).unwrap().d_lte - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn heuristic_protects_the_iframe() {
        let report = evaluate(&chain(24, 0.01, 0.1, 0.1), &Policy::heuristic(1.0)).unwrap();
        // I-frame fails w.p. 0.01, D-frames w.p. 0.1: 0.99 * (24 * 0.9 + 1) / 25.
        assert!((report.d_lte - 0.89496).abs() < 1e-12);
        assert!((report.t_d2d - 0.9 * 24.0 / 25.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_examples() {
        assert!((baseline_delivery_rate(24, 0.01, 0.1, 0.0).unwrap() - 0.980496).abs() < 1e-15);
        assert_eq!(baseline_delivery_rate(24, 0.0, 1.0, 1.0).unwrap(), 0.0);
        let a = baseline_delivery_rate(10, 0.2, 0.2, 0.0).unwrap();
        let b = baseline_delivery_rate(10, 0.2, 0.2, 0.77).unwrap();
        assert_eq!(a, b);
        assert!(baseline_delivery_rate(0, 0.1, 0.2, 0.5).is_err());
        assert!(baseline_delivery_rate(3, 0.1, 0.2, 1.5).is_err());

        assert!((baseline_throughput(0.1, 1.0).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(baseline_throughput(0.63, 0.0).unwrap(), 0.0);
        assert_eq!(baseline_throughput(0.0, 0.37).unwrap(), 0.37);
    }

    #[test]
    fn baseline_inversion() {
        let p = baseline_p_tx_for_rate(24, 0.01, 0.1, 0.9).unwrap();
        assert!((baseline_delivery_rate(24, 0.01, 0.1, p).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(baseline_p_tx_for_rate(24, 0.01, 0.1, 0.99).unwrap(), 0.0);
        assert_eq!(baseline_p_tx_for_rate(24, 0.01, 0.1, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn constant_policy_matches_closed_forms() {
        for n in [1, 2, 5, 23, 24] {
            let c = chain(n, 0.01, 0.1, 0.1);
            for k in 0..=10 {
                let p = k as f64 / 10.0;
                let report = evaluate(&c, &Policy::constant(p)).unwrap();
                let d = baseline_delivery_rate(n, 0.01, 0.1, p).unwrap();
                let t = baseline_throughput(0.1, p).unwrap();
                assert!((report.d_lte - d).abs() < 1e-9, "n={n} p={p}: {} vs {d}", report.d_lte);
                assert!((report.t_d2d - t).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mse_examples() {
        let any = MseModelParams { d_e: 3.5, c: 2.0, sigma_e: 9.0, w: 8 };
        assert_eq!(mse_from_error_rate(0.0, &any).unwrap(), 3.5);
        let p = MseModelParams { d_e: 1.0, c: 1.0, sigma_e: 2.0, w: 8 };
        assert_eq!(mse_from_error_rate(0.5, &p).unwrap(), 2.0);
        let p = MseModelParams { d_e: 0.0, c: 3.0, sigma_e: 2.0, w: 8 };
        assert_eq!(mse_from_error_rate(1.0, &p).unwrap(), 6.0);
        assert!(mse_from_error_rate(1.5, &p).is_err());
    }

    #[test]
    fn psnr_examples() {
        assert!(psnr_from_mse(256.0, 8).unwrap().abs() < 1e-12);
        assert!((psnr_from_mse(1.0, 8).unwrap() - 24.0824).abs() < 1e-4);
        assert!((psnr_from_mse(2.56, 8).unwrap() - 20.0).abs() < 1e-12);
        assert!(psnr_from_mse(0.0, 8).is_err());
        assert!(psnr_from_mse(-1.0, 8).is_err());
        let std = psnr_with_convention(65025.0, 8, PsnrConvention::Standard).unwrap();
        assert!(std.abs() < 1e-12);
        assert_eq!("standard".parse::<PsnrConvention>().unwrap(), PsnrConvention::Standard);
        assert!("dB".parse::<PsnrConvention>().is_err());
    }

    #[test]
    fn tabular_policy_must_fit_the_chain() {
        let c = chain(2, 0.01, 0.1, 0.1);
        assert!(Policy::tabular(vec![0.5; 4]).unwrap().transmit_table(&c).is_err());
        assert!(Policy::tabular(vec![1.5]).is_err());
        assert!(evaluate(&c, &Policy::Tabular(vec![2.0; 7])).is_err());
    }

    #[test]
    fn policy_file_rebuilds_chain_and_policy() {
        let c = build_chain(
            GopConfig::new(vec![0.2, 0.0, 1.0]).unwrap(),
            LinkFailureProbs::new(0.05, 0.25, 0.125).unwrap(),
        )
        .unwrap();
        let table: Vec<f64> = (0..c.len()).map(|i| i as f64 / 13.0).collect();
        let policy = Policy::tabular(table).unwrap();
        let file = PolicyFile::from_policy(&c, &policy).unwrap();
        let parsed = PolicyFile::from_json(&file.to_json()).unwrap();
        assert_eq!(parsed, file);
        let (c2, p2) = parsed.to_chain_and_policy().unwrap();
        assert_eq!(c2.states(), c.states());
        assert_eq!(p2, policy);
    }

    #[test]
    fn policy_file_diagnostics() {
        let c = chain(2, 0.01, 0.1, 0.1);
        let good = PolicyFile::from_policy(&c, &Policy::constant(0.5)).unwrap();

        let err = PolicyFile::from_json("{\"n_max\": 2,\n \"beta\": [0, 1],\n \"rho_l0\": }").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        let mut bad = good.clone();
        bad.policy[3].p_transmit = 1.5;
        assert!(bad.to_chain_and_policy().unwrap_err().to_string().contains("policy[3].p_transmit"));

        let mut bad = good.clone();
        bad.policy.pop();
        assert!(bad.to_chain_and_policy().unwrap_err().to_string().contains("missing entry"));

        let mut bad = good.clone();
        bad.policy[2] = bad.policy[1];
        assert!(bad.to_chain_and_policy().unwrap_err().to_string().contains("duplicate"));

        let mut bad = good.clone();
        bad.policy[1].n_rx = 5;
        assert!(bad.to_chain_and_policy().unwrap_err().to_string().contains("policy[1]"));

        let mut bad = good;
        bad.beta = vec![1.0];
        assert!(bad.to_chain_and_policy().unwrap_err().to_string().contains("beta"));

        assert!(PolicyFile::from_json("{\"n_max\": 2, \"extra\": 1}").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn more_interference_never_helps_lte(
            n in 1usize..=4,
            r0 in 0.0f64..0.2,
            extra in 0.0f64..0.7,
            table in proptest::collection::vec(0.0f64..=1.0, 21),
            pick in 0usize..21,
            bump in 0.0f64..1.0,
        ) {
            let c = chain(n, r0, r0 + extra, 0.3);
            let base = table[..c.len()].to_vec();
            let s = pick % c.len();
            let mut raised = base.clone();
            raised[s] = base[s] + bump * (1.0 - base[s]);
            let d0 = evaluate(&c, &Policy::tabular(base).unwrap()).unwrap();
            let d1 = evaluate(&c, &Policy::tabular(raised).unwrap()).unwrap();
            prop_assert!(d1.d_lte <= d0.d_lte + 1e-12);
            prop_assert!(d1.t_d2d >= d0.t_d2d - 1e-12 || d0.pi.state_marginal(s) < 1e-12);
        }

        #[test]
        fn throughput_is_visit_weighted_transmission(
            n in 1usize..=4,
            table in proptest::collection::vec(0.0f64..=1.0, 21),
            d1 in 0.0f64..1.0,
        ) {
            let c = chain(n, 0.02, 0.2, d1);
            let t = table[..c.len()].to_vec();
            let report = evaluate(&c, &Policy::tabular(t.clone()).unwrap()).unwrap();
            let expected: f64 = (0..c.len()).map(|s| report.pi.state_marginal(s) * t[s]).sum::<f64>() * (1.0 - d1);
            prop_assert!((report.t_d2d - expected).abs() < 1e-12);
        }

        #[test]
        fn quality_model_monotonicity(p in 0.0f64..1.0, q in 0.0f64..1.0, m1 in 0.01f64..1e4, m2 in 0.01f64..1e4) {
            let params = MseModelParams { d_e: 1.5, c: 2.0, sigma_e: 40.0, w: 8 };
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(mse_from_error_rate(lo, &params).unwrap() <= mse_from_error_rate(hi, &params).unwrap());
            if m1 < m2 {
                prop_assert!(psnr_from_mse(m1, 8).unwrap() > psnr_from_mse(m2, 8).unwrap());
            }
        }
    }
}
