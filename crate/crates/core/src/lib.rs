//! Content-aware interference control for a D2D link underlaying an LTE
//! video uplink.
//!
//! The LTE terminal streams GoP-structured video (one I-frame followed by
//! differentially coded frames) while a cognitive D2D transmitter decides,
//! slot by slot, whether to transmit on the same band. Losing an I-frame
//! invalidates its whole GoP, so interference is far more costly in some
//! slots than in others.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: Rayleigh block-fading success/failure probabilities.
//! - [`gop_model`]: the Markov chain over GoP transmission progress, its
//!   action-conditioned kernel and the per-state rewards.
//! - [`policy_metrics`]: policies, analytic delivery rate and D2D throughput,
//!   the baseline closed forms and the MSE/PSNR model.
//! - [`optimizer`]: the occupation-measure linear program, a dense simplex
//!   solver, policy extraction and constraint sweeps.
//! - [`simulator`]: slot-level Monte Carlo runs, per-frame error-propagation
//!   traces and MSE/throughput scatter data.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod error;
pub mod gop_model;
pub mod optimizer;
pub mod policy_metrics;
pub mod simulator;

pub use channel::{ChannelParams, LinkFailureProbs};
pub use error::{Error, Result};
pub use gop_model::{Action, GopChain, GopConfig, State};
pub use optimizer::{CurvePoint, LpProblem, OccupationSolution, SolverOptions};
pub use policy_metrics::{MetricReport, MseModelParams, Policy, PolicyKind, PsnrConvention};
pub use simulator::{Estimate, SimConfig, SimReport, TraceRecord};
