//! Slot-level Monte Carlo simulation of the coexistence system.
//!
//! The simulator does not use the chain's kernel: it replays the GoP and
//! channel dynamics slot by slot and only borrows the chain for the state
//! indexing that tabular policies need. Empirical rates therefore serve as an
//! independent check of the analytic model.
//!
//! Randomness: replication `r` of a run seeded with `seed` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `r`. Every slot
//! consumes the same number of draws whatever the policy does, so runs with
//! equal seeds share their random numbers across policies.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::gop_model::{GopChain, State};
use crate::policy_metrics::{MseModelParams, Policy};

/// How per-slot packet outcomes are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkModel {
    /// Bernoulli trials with the chain's failure probabilities.
    Bernoulli,
    /// Explicit unit-mean exponential fading gains and an SINR threshold test.
    Fading(ChannelParams),
}

#[derive(Debug, Clone)]
pub struct SimConfig<'a> {
    pub slots: u64,
    pub seed: u64,
    pub replications: usize,
    pub chain: &'a GopChain,
    pub policy: &'a Policy,
    pub link: LinkModel,
}

impl<'a> SimConfig<'a> {
    pub fn new(chain: &'a GopChain, policy: &'a Policy, slots: u64, seed: u64) -> Self {
        Self { slots, seed, replications: 1, chain, policy, link: LinkModel::Bernoulli }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots < 1 {
            return Err(Error::InvalidConfig("at least one slot is required".into()));
        }
        if self.replications < 1 {
            return Err(Error::InvalidConfig("at least one replication is required".into()));
        }
        if let LinkModel::Fading(params) = self.link {
            params.validate()?;
        }
        self.policy.transmit_table(self.chain).map(|_| ())
    }
}

/// Replication stream `stream` of the generator seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    I,
    D,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::I => "I",
            FrameKind::D => "D",
        }
    }
}

/// One simulated slot (= one video frame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 1-based frame index.
    pub slot: u64,
    pub frame_kind: FrameKind,
    /// 1-based GoP index.
    pub gop_index: u64,
    pub lte_delivered: bool,
    pub d2d_action: bool,
    pub d2d_delivered: bool,
    /// The frame is unusable: it was lost, or its GoP's I-frame was.
    pub frame_corrupted: bool,
    pub mse: f64,
}

/// Slot-by-slot engine shared by [`run`] and [`trace`].
struct Engine<'a> {
    chain: &'a GopChain,
    transmit: Vec<f64>,
    link: LinkModel,
    rng: ChaCha8Rng,
    state: State,
    slot: u64,
    gop_index: u64,
    iframe_ok: bool,
}

struct SlotOutcome {
    frame_kind: FrameKind,
    gop_index: u64,
    lte_delivered: bool,
    transmit: bool,
    d2d_delivered: bool,
    corrupted: bool,
    /// The GoP ends with this slot.
    gop_done: bool,
}

impl<'a> Engine<'a> {
    fn new(chain: &'a GopChain, policy: &Policy, link: LinkModel, rng: ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            chain,
            transmit: policy.transmit_table(chain)?,
            link,
            rng,
            state: State::IFRAME,
            slot: 0,
            gop_index: 0,
            iframe_ok: false,
        })
    }

    fn step(&mut self, force_lte_loss: bool) -> SlotOutcome {
        self.slot += 1;
        let s = self.state;
        let idx = self.chain.index_of(&s).expect("simulated state is in the chain");
        let probs = self.chain.failure_probs();

        let r_action: f64 = self.rng.random();
        let r_term: f64 = self.rng.random();
        let transmit = r_action < self.transmit[idx];
        let (lte_ok, d2d_ok) = match self.link {
            LinkModel::Bernoulli => {
                let r_lte: f64 = self.rng.random();
                let r_d2d: f64 = self.rng.random();
                (r_lte >= probs.rho_l(transmit), transmit && r_d2d >= probs.rho_d1)
            }
            LinkModel::Fading(ch) => {
                let [own_l, cross_dl, own_d, cross_ld]: [f64; 4] = std::array::from_fn(|_| self.rng.sample(Exp1));
                let interference = if transmit { ch.p_d * cross_dl } else { 0.0 };
                let lte = ch.p_l * own_l >= ch.gamma * (ch.sigma2_l + interference);
                let d2d = ch.p_d * own_d >= ch.gamma * (ch.sigma2_d + ch.p_l * cross_ld);
                (lte, transmit && d2d)
            }
        };
        let lte_delivered = lte_ok && !force_lte_loss;

        let n = self.chain.n_max();
        let (frame_kind, corrupted, gop_done) = if s.is_iframe() {
            self.gop_index += 1;
            self.iframe_ok = lte_delivered;
            self.state = State { i_rx: lte_delivered, n_tx: 1, n_rx: 0 };
            (FrameKind::I, !lte_delivered, false)
        } else {
            let done = s.n_tx == n || r_term < self.chain.gop().beta(s.n_tx);
            self.state = if done {
                State::IFRAME
            } else {
                State { n_tx: s.n_tx + 1, n_rx: s.n_rx + usize::from(lte_delivered), ..s }
            };
            (FrameKind::D, !(self.iframe_ok && lte_delivered), done)
        };
        SlotOutcome {
            frame_kind,
            gop_index: self.gop_index,
            lte_delivered,
            transmit,
            d2d_delivered: d2d_ok,
            corrupted,
            gop_done,
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|mean - target|` in standard errors (0 when both are exact).
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationResult {
    pub d_lte: f64,
    pub t_d2d: f64,
    pub slots: u64,
    pub complete_gops: u64,
}

/// Per-GoP sums for the regenerative variance estimate.
#[derive(Debug, Clone, Copy, Default)]
struct CycleMoments {
    n: f64,
    l: f64,
    y: f64,
    f: f64,
    ll: f64,
    yy: f64,
    ff: f64,
    yl: f64,
    fl: f64,
}

impl CycleMoments {
    fn push(&mut self, l: f64, y: f64, f: f64) {
        self.n += 1.0;
        self.l += l;
        self.y += y;
        self.f += f;
        self.ll += l * l;
        self.yy += y * y;
        self.ff += f * f;
        self.yl += y * l;
        self.fl += f * l;
    }

    fn merge(mut self, o: &Self) -> Self {
        self.n += o.n;
        self.l += o.l;
        self.y += o.y;
        self.f += o.f;
        self.ll += o.ll;
        self.yy += o.yy;
        self.ff += o.ff;
        self.yl += o.yl;
        self.fl += o.fl;
        self
    }

    /// Standard error of the ratio estimator `Σ reward / Σ length`.
    fn ratio_stderr(&self, sum: f64, sum_sq: f64, cross: f64) -> f64 {
        if self.n < 2.0 {
            return f64::NAN;
        }
        let r = sum / self.l;
        let ss = (sum_sq - 2.0 * r * cross + r * r * self.ll).max(0.0);
        let var = ss / (self.n - 1.0);
        let mean_len = self.l / self.n;
        (var / self.n).sqrt() / mean_len
    }
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub d_lte: Estimate,
    pub t_d2d: Estimate,
    pub replications: Vec<ReplicationResult>,
}

fn run_replication(config: &SimConfig, stream: u64) -> Result<(ReplicationResult, CycleMoments)> {
    let mut engine = Engine::new(config.chain, config.policy, config.link, rng_for(config.seed, stream))?;
    let mut moments = CycleMoments::default();
    let (mut credited, mut delivered, mut complete) = (0u64, 0u64, 0u64);
    let (mut len, mut y, mut f) = (0u64, 0u64, 0u64);
    for _ in 0..config.slots {
        let out = engine.step(false);
        let credit = u64::from(!out.corrupted);
        let d2d = u64::from(out.d2d_delivered);
        credited += credit;
        delivered += d2d;
        len += 1;
        y += credit;
        f += d2d;
        if out.gop_done {
            moments.push(len as f64, y as f64, f as f64);
            complete += 1;
            (len, y, f) = (0, 0, 0);
        }
    }
    let slots = config.slots as f64;
    let result = ReplicationResult {
        d_lte: credited as f64 / slots,
        t_d2d: delivered as f64 / slots,
        slots: config.slots,
        complete_gops: complete,
    };
    Ok((result, moments))
}

/// Empirical delivery rate and D2D throughput.
///
/// A frame counts as delivered when it and its GoP's I-frame both arrived.
/// The reported mean averages the replications; the standard error comes
/// from the regenerative (per-GoP) ratio estimator pooled over every
/// complete GoP of every replication.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let results: Vec<(ReplicationResult, CycleMoments)> =
        (0..config.replications as u64).into_par_iter().map(|r| run_replication(config, r)).collect::<Result<_>>()?;
    let moments = results.iter().fold(CycleMoments::default(), |acc, (_, m)| acc.merge(m));
    let reps: Vec<ReplicationResult> = results.into_iter().map(|(r, _)| r).collect();
    let k = reps.len() as f64;
    let d_mean = reps.iter().map(|r| r.d_lte).sum::<f64>() / k;
    let t_mean = reps.iter().map(|r| r.t_d2d).sum::<f64>() / k;
    Ok(SimReport {
        d_lte: Estimate { mean: d_mean, stderr: moments.ratio_stderr(moments.y, moments.yy, moments.yl) },
        t_d2d: Estimate { mean: t_mean, stderr: moments.ratio_stderr(moments.f, moments.ff, moments.fl) },
        replications: reps,
    })
}

/// Per-frame trace of the first replication.
///
/// `forced_i_frame_losses` lists 1-based frame indices whose LTE packet is
/// dropped regardless of the channel; each must be an I-frame slot.
pub fn trace(
    config: &SimConfig,
    mse: &MseModelParams,
    forced_i_frame_losses: Option<&[u64]>,
) -> Result<Vec<TraceRecord>> {
    config.validate()?;
    mse.validate()?;
    let forced: BTreeSet<u64> = forced_i_frame_losses.unwrap_or(&[]).iter().copied().collect();
    if let Some(&bad) = forced.iter().find(|&&i| i == 0 || i > config.slots) {
        return Err(Error::ForcedLossNotIFrame(bad));
    }
    let mut engine = Engine::new(config.chain, config.policy, config.link, rng_for(config.seed, 0))?;
    let mut records = Vec::with_capacity(config.slots as usize);
    for slot in 1..=config.slots {
        let force = forced.contains(&slot);
        if force && !engine.state.is_iframe() {
            return Err(Error::ForcedLossNotIFrame(slot));
        }
        let out = engine.step(force);
        records.push(TraceRecord {
            slot,
            frame_kind: out.frame_kind,
            gop_index: out.gop_index,
            lte_delivered: out.lte_delivered,
            d2d_action: out.transmit,
            d2d_delivered: out.d2d_delivered,
            frame_corrupted: out.corrupted,
            mse: if out.corrupted { mse.corrupted_frame_mse() } else { mse.d_e },
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub policy: Policy,
    pub t_d2d: f64,
    pub mean_mse: f64,
    pub stderr_mse: f64,
}

/// Simulated throughput and mean per-frame MSE for each policy. All policies
/// share the seed, so they see the same channel realizations.
pub fn mse_throughput_scatter(
    chain: &GopChain,
    policies: &[Policy],
    mse: &MseModelParams,
    slots: u64,
    seed: u64,
) -> Result<Vec<ScatterPoint>> {
    mse.validate()?;
    let span = mse.c * mse.sigma_e;
    policies
        .par_iter()
        .map(|policy| {
            let report = run(&SimConfig::new(chain, policy, slots, seed))?;
            Ok(ScatterPoint {
                policy: policy.clone(),
                t_d2d: report.t_d2d.mean,
                mean_mse: mse.d_e + span * (1.0 - report.d_lte.mean),
                stderr_mse: span * report.d_lte.stderr,
            })
        })
        .collect()
}

/// Failure probabilities estimated from explicit fading draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingEstimate {
    pub rho_l0: Estimate,
    pub rho_l1: Estimate,
    pub rho_d1: Estimate,
    pub draws: u64,
}

const FADING_STREAMS: u64 = 16;

/// Draws unit-mean exponential gains for both links `draws` times and counts
/// SINR threshold failures, with and without D2D interference.
pub fn sample_failure_probs(params: &ChannelParams, draws: u64, seed: u64) -> Result<FadingEstimate> {
    params.validate()?;
    if draws < 1 {
        return Err(Error::InvalidConfig("at least one fading draw is required".into()));
    }
    let ChannelParams { p_l, p_d, sigma2_l, sigma2_d, gamma } = *params;
    let counts = (0..FADING_STREAMS)
        .into_par_iter()
        .map(|stream| {
            let n = draws / FADING_STREAMS + u64::from(stream < draws % FADING_STREAMS);
            let mut rng = rng_for(seed, stream);
            let mut c = [0u64; 3];
            for _ in 0..n {
                let [own_l, cross_dl, own_d, cross_ld]: [f64; 4] = std::array::from_fn(|_| rng.sample(Exp1));
                c[0] += u64::from(p_l * own_l < gamma * sigma2_l);
                c[1] += u64::from(p_l * own_l < gamma * (sigma2_l + p_d * cross_dl));
                c[2] += u64::from(p_d * own_d < gamma * (sigma2_d + p_l * cross_ld));
            }
            c
        })
        .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    let n = draws as f64;
    let est = |k: u64| {
        let p = k as f64 / n;
        Estimate { mean: p, stderr: (p * (1.0 - p) / n).sqrt() }
    };
    Ok(FadingEstimate { rho_l0: est(counts[0]), rho_l1: est(counts[1]), rho_d1: est(counts[2]), draws })
}
