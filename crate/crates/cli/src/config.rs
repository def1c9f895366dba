//! Run configuration: JSON file, command-line overrides and built-in defaults.
//!
//! Precedence is flags > file > defaults.

use std::path::Path;

use clap::Args;
use coexist_core::channel::failure_probs;
use coexist_core::gop_model::build_chain;
use coexist_core::{ChannelParams, GopChain, GopConfig, LinkFailureProbs, MseModelParams, PsnrConvention};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_N_MAX: usize = 24;
pub const DEFAULT_RHO: (f64, f64, f64) = (0.01, 0.1, 0.1);

/// `"fixed"` or an explicit termination vector `β(1..=N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Named(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<BetaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_l0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_d1: Option<f64>,
    /// Linear units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelParams>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// `a:b:step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<MseModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr_convention: Option<PsnrConvention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}

/// Model flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Differential frames per GoP (N).
    #[arg(long, global = true, conflicts_with = "gop")]
    pub n_max: Option<usize>,
    /// Frames per GoP including the I-frame (N + 1).
    #[arg(long, global = true)]
    pub gop: Option<usize>,
    /// "fixed" or comma-separated termination probabilities β(1..=N).
    #[arg(long, global = true)]
    pub beta: Option<String>,
    #[arg(long, global = true)]
    pub rho_l0: Option<f64>,
    #[arg(long, global = true)]
    pub rho_l1: Option<f64>,
    #[arg(long, global = true)]
    pub rho_d1: Option<f64>,
    /// LTE received power.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p_l: Option<f64>,
    /// D2D received power.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p_d: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma2_l: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma2_d: Option<f64>,
    /// SINR decoding threshold.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Read channel powers, noise variances and threshold in dB. All five
    /// channel flags are then required.
    #[arg(long, global = true)]
    pub db: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MseArgs {
    /// Distortion of an error-free frame.
    #[arg(long, global = true)]
    pub d_e: Option<f64>,
    #[arg(long = "mse-c", global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub sigma_e: Option<f64>,
    /// Bits per pixel.
    #[arg(long = "bit-depth", global = true)]
    pub w: Option<u32>,
}

impl ModelArgs {
    fn has_rho(&self) -> bool {
        self.rho_l0.is_some() || self.rho_l1.is_some() || self.rho_d1.is_some()
    }

    fn has_channel(&self) -> bool {
        self.p_l.is_some()
            || self.p_d.is_some()
            || self.sigma2_l.is_some()
            || self.sigma2_d.is_some()
            || self.gamma.is_some()
    }

    fn n_max(&self) -> Result<Option<usize>, CliError> {
        match (self.n_max, self.gop) {
            (Some(n), _) => Ok(Some(n)),
            (None, Some(0)) => Err(CliError::Usage("--gop must be at least 1".into())),
            (None, Some(g)) => Ok(Some(g - 1)),
            (None, None) => Ok(None),
        }
    }
}

fn parse_beta(text: &str) -> Result<BetaSpec, CliError> {
    if text.trim() == "fixed" {
        return Ok(BetaSpec::Named("fixed".into()));
    }
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--beta: cannot parse '{v}'"))))
        .collect::<Result<Vec<_>, _>>()
        .map(BetaSpec::Values)
}

/// Where the failure probabilities come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkSource {
    Direct(LinkFailureProbs),
    Channel(ChannelParams, LinkFailureProbs),
}

impl LinkSource {
    pub fn probs(&self) -> LinkFailureProbs {
        match *self {
            LinkSource::Direct(p) | LinkSource::Channel(_, p) => p,
        }
    }
}

/// Fully resolved model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub n_max: usize,
    pub beta: BetaSpec,
    pub link: LinkSource,
}

impl Model {
    pub fn gop(&self) -> Result<GopConfig, CliError> {
        Ok(match &self.beta {
            BetaSpec::Named(name) if name == "fixed" => GopConfig::fixed(self.n_max)?,
            BetaSpec::Named(other) => {
                return Err(CliError::Usage(format!("beta must be \"fixed\" or an array, got \"{other}\"")))
            }
            BetaSpec::Values(v) => {
                if v.len() != self.n_max {
                    return Err(CliError::Usage(format!("beta has {} entries but n_max is {}", v.len(), self.n_max)));
                }
                GopConfig::new(v.clone())?
            }
        })
    }

    pub fn chain(&self) -> Result<GopChain, CliError> {
        Ok(build_chain(self.gop()?, self.link.probs())?)
    }

    pub fn to_config(&self) -> ModelConfig {
        let mut m = ModelConfig { n_max: Some(self.n_max), beta: Some(self.beta.clone()), ..Default::default() };
        match self.link {
            LinkSource::Direct(p) => {
                m.rho_l0 = Some(p.rho_l0);
                m.rho_l1 = Some(p.rho_l1);
                m.rho_d1 = Some(p.rho_d1);
            }
            LinkSource::Channel(c, _) => m.channel = Some(c),
        }
        m
    }
}

pub fn resolve_model(file: &ModelConfig, args: &ModelArgs) -> Result<Model, CliError> {
    let file_rho = file.rho_l0.is_some() || file.rho_l1.is_some() || file.rho_d1.is_some();
    if file_rho && file.channel.is_some() {
        return Err(CliError::Usage("config model gives both failure probabilities and channel parameters".into()));
    }
    if args.has_rho() && args.has_channel() {
        return Err(CliError::Usage("give either --rho-* or channel parameters, not both".into()));
    }
    if args.db && !args.has_channel() {
        return Err(CliError::Usage("--db needs channel parameters on the command line".into()));
    }

    let n_max = args.n_max()?.or(file.n_max).unwrap_or(DEFAULT_N_MAX);
    let beta = match &args.beta {
        Some(text) => parse_beta(text)?,
        None => file.beta.clone().unwrap_or(BetaSpec::Named("fixed".into())),
    };

    let link = if args.has_channel() || (file.channel.is_some() && !args.has_rho()) {
        let base = file.channel;
        let pick = |flag: Option<f64>, from_file: Option<f64>, name: &str| {
            flag.or(if args.db { None } else { from_file })
                .ok_or_else(|| CliError::Usage(format!("missing channel parameter --{name}")))
        };
        let values = [
            pick(args.p_l, base.map(|c| c.p_l), "p-l")?,
            pick(args.p_d, base.map(|c| c.p_d), "p-d")?,
            pick(args.sigma2_l, base.map(|c| c.sigma2_l), "sigma2-l")?,
            pick(args.sigma2_d, base.map(|c| c.sigma2_d), "sigma2-d")?,
            pick(args.gamma, base.map(|c| c.gamma), "gamma")?,
        ];
        let [p_l, p_d, sigma2_l, sigma2_d, gamma] = values;
        let params = if args.db {
            ChannelParams::from_db(p_l, p_d, sigma2_l, sigma2_d, gamma)
        } else {
            ChannelParams { p_l, p_d, sigma2_l, sigma2_d, gamma }
        };
        LinkSource::Channel(params, failure_probs(&params)?)
    } else {
        if file.channel.is_some() && !(args.rho_l0.is_some() && args.rho_l1.is_some() && args.rho_d1.is_some()) {
            return Err(CliError::Usage(
                "config gives channel parameters; pass all of --rho-l0, --rho-l1 and --rho-d1 to override them".into(),
            ));
        }
        let (d0, d1, dd) = DEFAULT_RHO;
        let probs = LinkFailureProbs::new(
            args.rho_l0.or(file.rho_l0).unwrap_or(d0),
            args.rho_l1.or(file.rho_l1).unwrap_or(d1),
            args.rho_d1.or(file.rho_d1).unwrap_or(dd),
        )?;
        LinkSource::Direct(probs)
    };
    Ok(Model { n_max, beta, link })
}

pub fn resolve_mse(file: Option<&MseModelParams>, args: &MseArgs) -> Result<MseModelParams, CliError> {
    let base = file.copied().unwrap_or_default();
    let mse = MseModelParams {
        d_e: args.d_e.unwrap_or(base.d_e),
        c: args.c.unwrap_or(base.c),
        sigma_e: args.sigma_e.unwrap_or(base.sigma_e),
        w: args.w.unwrap_or(base.w),
    };
    mse.validate()?;
    Ok(mse)
}
