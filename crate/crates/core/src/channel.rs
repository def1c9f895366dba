//! Physical layer: per-slot packet success and failure probabilities under
//! Rayleigh block fading.
//!
//! Every fading power gain is an independent unit-mean exponential variable,
//! constant within a slot. A packet of link `x` decodes iff
//! `P_x c_xx / (sigma2_x + P_y c_yx) >= gamma`, where the interference term is
//! present only when the other link transmits. Taking the expectation over the
//! interferer gain gives the closed form in [`success_probability`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average received powers, receiver noise variances and the SINR decoding
/// threshold, all in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub p_l: f64,
    pub p_d: f64,
    pub sigma2_l: f64,
    pub sigma2_d: f64,
    pub gamma: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("p_l", self.p_l), ("p_d", self.p_d), ("gamma", self.gamma)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("sigma2_l", self.sigma2_l), ("sigma2_d", self.sigma2_d)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Converts parameters given in dB (powers, noise variances and
    /// threshold alike) to linear scale. `-inf` dB maps to zero.
    pub fn from_db(p_l: f64, p_d: f64, sigma2_l: f64, sigma2_d: f64, gamma: f64) -> Self {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        Self { p_l: lin(p_l), p_d: lin(p_d), sigma2_l: lin(sigma2_l), sigma2_d: lin(sigma2_d), gamma: lin(gamma) }
    }
}

/// Failure probabilities of both links conditioned on the D2D action.
///
/// The D2D failure probability when idle is zero by convention (no packet is
/// sent), so it is not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFailureProbs {
    /// LTE packet failure probability with the D2D link idle.
    pub rho_l0: f64,
    /// LTE packet failure probability with the D2D link transmitting.
    pub rho_l1: f64,
    /// D2D packet failure probability when transmitting.
    pub rho_d1: f64,
}

impl LinkFailureProbs {
    pub fn new(rho_l0: f64, rho_l1: f64, rho_d1: f64) -> Result<Self> {
        let probs = Self { rho_l0, rho_l1, rho_d1 };
        probs.validate()?;
        Ok(probs)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho_l0", self.rho_l0), ("rho_l1", self.rho_l1), ("rho_d1", self.rho_d1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.rho_l0 > self.rho_l1 {
            return Err(Error::Domain(format!(
                "rho_l0 ({}) exceeds rho_l1 ({}): interference cannot help the LTE link",
                self.rho_l0, self.rho_l1
            )));
        }
        Ok(())
    }

    /// LTE failure probability under action `u` (0 idle, 1 transmit).
    #[inline]
    pub fn rho_l(&self, transmit: bool) -> f64 {
        if transmit {
            self.rho_l1
        } else {
            self.rho_l0
        }
    }

    /// D2D failure probability under action `u`; zero when idle.
    #[inline]
    pub fn rho_d(&self, transmit: bool) -> f64 {
        if transmit {
            self.rho_d1
        } else {
            0.0
        }
    }
}

/// Probability that a packet with own average power `p_x` clears the SINR
/// threshold against noise `sigma2` and one Rayleigh-faded interferer of
/// average power `p_y` (`p_y = 0` for no interferer).
pub fn success_probability(gamma: f64, sigma2: f64, p_x: f64, p_y: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(p_x > 0.0) {
        return Err(Error::Domain(format!("gamma and p_x must be positive (gamma={gamma}, p_x={p_x})")));
    }
    if !(sigma2 >= 0.0) || !(p_y >= 0.0) {
        return Err(Error::Domain(format!("sigma2 and p_y must be nonnegative (sigma2={sigma2}, p_y={p_y})")));
    }
    Ok((-gamma * sigma2 / p_x).exp() / (1.0 + gamma * p_y / p_x))
}

pub fn failure_probs(params: &ChannelParams) -> Result<LinkFailureProbs> {
    params.validate()?;
    let ChannelParams { p_l, p_d, sigma2_l, sigma2_d, gamma } = *params;
    // 1 - e^{-x} loses precision for small x.
    let rho_l0 = -(-gamma * sigma2_l / p_l).exp_m1();
    let rho_l1 = 1.0 - success_probability(gamma, sigma2_l, p_l, p_d)?;
    let rho_d1 = 1.0 - success_probability(gamma, sigma2_d, p_d, p_l)?;
    // Rounding can leave rho_l1 a hair below rho_l0 when the interferer is negligible.
    Ok(LinkFailureProbs { rho_l0, rho_l1: rho_l1.max(rho_l0), rho_d1 })
}
