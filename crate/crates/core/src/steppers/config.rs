use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time stepping schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// fully coupled implicit Euler
    #[serde(rename = "implicit_euler")]
    ImplicitEuler,
    /// fully coupled trapezoidal rule, loads at the midpoint
    #[serde(rename = "implicit_midpoint")]
    ImplicitMidpoint,
    /// u explicit in (p, θ), then one coupled (p, θ) solve
    #[serde(rename = "semi_explicit_half")]
    SemiExplicitHalf,
    /// the half-decoupled scheme with damped inner iterations
    #[serde(rename = "semi_explicit_half_iterative")]
    SemiExplicitHalfIterative,
    /// u, then p and θ independently (two-step)
    #[serde(rename = "semi_explicit_full")]
    SemiExplicitFull,
    /// operator splitting with parameter σ (two-step)
    #[serde(rename = "sigma_splitting")]
    SigmaSplitting,
    /// stabilized (p, θ) / u alternation
    #[serde(rename = "hf_m_iterative")]
    HfMIterative,
    /// stabilized θ / p / u sweeps
    #[serde(rename = "h_f_m_iterative")]
    HFMIterative,
    /// stabilized p / θ / u sweeps
    #[serde(rename = "f_h_m_iterative")]
    FHMIterative,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::ImplicitEuler,
        Scheme::ImplicitMidpoint,
        Scheme::SemiExplicitHalf,
        Scheme::SemiExplicitHalfIterative,
        Scheme::SemiExplicitFull,
        Scheme::SigmaSplitting,
        Scheme::HfMIterative,
        Scheme::HFMIterative,
        Scheme::FHMIterative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit_euler",
            Scheme::ImplicitMidpoint => "implicit_midpoint",
            Scheme::SemiExplicitHalf => "semi_explicit_half",
            Scheme::SemiExplicitHalfIterative => "semi_explicit_half_iterative",
            Scheme::SemiExplicitFull => "semi_explicit_full",
            Scheme::SigmaSplitting => "sigma_splitting",
            Scheme::HfMIterative => "hf_m_iterative",
            Scheme::HFMIterative => "h_f_m_iterative",
            Scheme::FHMIterative => "f_h_m_iterative",
        }
    }

    /// Needs the two previous time levels.
    pub fn is_two_step(self) -> bool {
        matches!(self, Scheme::SemiExplicitFull | Scheme::SigmaSplitting)
    }

    /// Uses stabilized inner sweeps with `L_p`, `L_θ`.
    pub fn is_stabilized(self) -> bool {
        matches!(self, Scheme::HfMIterative | Scheme::HFMIterative | Scheme::FHMIterative)
    }

    pub fn uses_inner_iterations(self) -> bool {
        self.is_stabilized() || self == Scheme::SemiExplicitHalfIterative
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

/// How two-step schemes obtain the level before `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Startup {
    /// `p⁻¹ = p⁰`, `θ⁻¹ = θ⁰`
    #[default]
    ConstantHistory,
    /// one implicit Euler step supplies level 1
    ImplicitEulerStep,
}

impl FromStr for Startup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant_history" => Ok(Startup::ConstantHistory),
            "implicit_euler_step" => Ok(Startup::ImplicitEulerStep),
            _ => Err(Error::InvalidConfig(format!("unknown startup `{s}`"))),
        }
    }
}

/// What the damped inner iteration relaxes towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingAnchor {
    /// `P^{k+1} = γ P̂^{k+1} + (1 − γ) P^k`, whose fixed point is the
    /// implicit Euler step
    #[default]
    PreviousIterate,
    /// `P^{k+1} = γ P̂^{k+1} + (1 − γ) P^n`
    PreviousStep,
}

/// Scheme selector and tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub tau: f64,
    /// overrides the final time of the problem data
    pub final_time: Option<f64>,
    pub l_p: f64,
    pub l_theta: f64,
    /// inner iterations per step
    #[serde(rename = "k")]
    pub inner_iterations: usize,
    pub sigma: f64,
    /// damping factor; derived from ω_HD when absent
    pub gamma: Option<f64>,
    pub damping_anchor: DampingAnchor,
    pub startup: Startup,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImplicitEuler,
            tau: 0.125,
            final_time: None,
            l_p: 0.025,
            l_theta: 0.025,
            inner_iterations: 10,
            sigma: 1.0,
            gamma: None,
            damping_anchor: DampingAnchor::default(),
            startup: Startup::default(),
        }
    }
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, tau: f64) -> Self {
        Self {
            scheme,
            tau,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad(format!("tau = {} must be positive", self.tau));
        }
        if let Some(t) = self.final_time {
            if !(t >= self.tau) || !t.is_finite() {
                return bad(format!("final time {t} must be at least tau = {}", self.tau));
            }
        }
        if self.scheme.uses_inner_iterations() && self.inner_iterations == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma = {} must be positive", self.sigma));
        }
        if !(self.l_p >= 0.0) || !(self.l_theta >= 0.0) {
            return bad(format!("stabilization ({}, {}) must be nonnegative", self.l_p, self.l_theta));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return bad(format!("gamma = {g} outside (0, 1]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
            let ser = toml::to_string(&SchemeConfig::new(s, 0.5)).unwrap();
            assert!(ser.contains(&format!("scheme = \"{}\"", s.name())));
        }
        assert!("bogus".parse::<Scheme>().is_err());
    }

    #[test]
    fn validation() {
        assert!(SchemeConfig::new(Scheme::ImplicitEuler, 0.0).validate().is_err());
        let mut c = SchemeConfig::new(Scheme::HfMIterative, 0.1);
        c.inner_iterations = 0;
        assert!(c.validate().is_err());
        c.inner_iterations = 3;
        c.sigma = -1.0;
        assert!(c.validate().is_err());
        c.sigma = 1.0;
        c.gamma = Some(1.5);
        assert!(c.validate().is_err());
        c.gamma = Some(0.5);
        assert!(c.validate().is_ok());
    }
}
