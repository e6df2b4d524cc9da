//! TOML run configuration.
//!
//! ```toml
//! [problem]
//! preset = "geothermal"
//! n = 8
//!
//! [[schemes]]
//! scheme = "implicit_euler"
//! tau = 0.125
//!
//! [experiment]
//! kind = "convergence"
//! tau_range = "0.125:halve:6"
//! ```

use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::error::Result as LibResult;
use crate::experiments::{halving_taus, SweepConfig};
use crate::problems::{geothermal_with_params, toy_problem, DataOverrides, ProblemData};
use crate::steppers::{DampingAnchor, Scheme, SchemeConfig, Startup};
use crate::system::{AssembledSystem, MaterialParams};

/// A configuration problem, located by 1-based line.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key or value `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: {message}")]
    Range { line: usize, message: String },
}

impl ConfigError {
    pub fn line(&self) -> usize {
        match self {
            ConfigError::Parse { line, .. } | ConfigError::UnknownKey { line, .. } | ConfigError::Range { line, .. } => {
                *line
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Geothermal,
    Toy,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "geothermal" => Ok(Preset::Geothermal),
            "toy" => Ok(Preset::Toy),
            _ => Err(format!("unknown preset `{s}` (expected geothermal or toy)")),
        }
    }
}

/// Material constants replacing the geothermal defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_over_nu: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_tilde: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0_hat: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0_tilde: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Spanned<f64>>,
}

impl ParamOverrides {
    fn entries(&self) -> [(&'static str, &Option<Spanned<f64>>); 9] {
        [
            ("lambda", &self.lambda),
            ("mu", &self.mu),
            ("kappa_over_nu", &self.kappa_over_nu),
            ("kappa_tilde", &self.kappa_tilde),
            ("c0", &self.c0),
            ("c0_hat", &self.c0_hat),
            ("c0_tilde", &self.c0_tilde),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
        ]
    }

    pub fn apply(&self, mut p: MaterialParams) -> MaterialParams {
        let v = |o: &Option<Spanned<f64>>, d: f64| o.as_ref().map_or(d, |s| *s.get_ref());
        p.lambda = v(&self.lambda, p.lambda);
        p.mu = v(&self.mu, p.mu);
        p.kappa_over_nu = v(&self.kappa_over_nu, p.kappa_over_nu);
        p.kappa_tilde = v(&self.kappa_tilde, p.kappa_tilde);
        p.c0 = v(&self.c0, p.c0);
        p.c0_hat = v(&self.c0_hat, p.c0_hat);
        p.c0_tilde = v(&self.c0_tilde, p.c0_tilde);
        p.alpha = v(&self.alpha, p.alpha);
        p.beta = v(&self.beta, p.beta);
        p
    }
}

pub const DEFAULT_SUBDIVISIONS: usize = 8;
pub const DEFAULT_U_DEGREE: usize = 2;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub preset: Preset,
    /// mesh subdivisions per side (geothermal)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Spanned<usize>>,
    /// displacement polynomial degree, 1 or 2 (geothermal)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_degree: Option<Spanned<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<Spanned<f64>>,
    /// coupling strength (toy)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Spanned<f64>>,
    /// thermal capacity (toy)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0_tilde: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamOverrides>,
}

/// One `[[schemes]]` entry. Unset knobs take the [`SchemeConfig`] defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeEntry {
    pub scheme: Spanned<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_p: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_theta: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Spanned<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping_anchor: Option<DampingAnchor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub startup: Option<Startup>,
}

impl SchemeEntry {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme: unspanned(scheme),
            tau: None,
            l_p: None,
            l_theta: None,
            k: None,
            sigma: None,
            gamma: None,
            damping_anchor: None,
            startup: None,
        }
    }

    pub fn from_config(c: &SchemeConfig) -> Self {
        Self {
            scheme: unspanned(c.scheme),
            tau: Some(unspanned(c.tau)),
            l_p: Some(unspanned(c.l_p)),
            l_theta: Some(unspanned(c.l_theta)),
            k: Some(unspanned(c.inner_iterations)),
            sigma: Some(unspanned(c.sigma)),
            gamma: c.gamma.map(unspanned),
            damping_anchor: Some(c.damping_anchor),
            startup: Some(c.startup),
        }
    }

    pub fn to_config(&self) -> SchemeConfig {
        let mut c = SchemeConfig::new(*self.scheme.get_ref(), SchemeConfig::default().tau);
        let get = |o: &Option<Spanned<f64>>, d: f64| o.as_ref().map_or(d, |s| *s.get_ref());
        c.tau = get(&self.tau, c.tau);
        c.l_p = get(&self.l_p, c.l_p);
        c.l_theta = get(&self.l_theta, c.l_theta);
        c.sigma = get(&self.sigma, c.sigma);
        c.inner_iterations = self.k.as_ref().map_or(c.inner_iterations, |s| *s.get_ref());
        c.gamma = self.gamma.as_ref().map(|s| *s.get_ref());
        c.damping_anchor = self.damping_anchor.unwrap_or_default();
        c.startup = self.startup.unwrap_or_default();
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Run,
    Convergence,
    Sharpness,
    CheckConditions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    /// explicit step sizes of a convergence study
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Spanned<Vec<f64>>>,
    /// `start:halve:count`, used when `taus` is absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_range: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_scheme: Option<Scheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_tau: Option<Spanned<f64>>,
    /// `RxC` sharpness grid
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_tau: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_reference_tau: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// fail the command when a run diverges
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schemes: Vec<SchemeEntry>,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

fn unspanned<T>(v: T) -> Spanned<T> {
    Spanned::new(0..0, v)
}

/// 1-based line of byte `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn first_backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// Parses `start:halve:count`.
pub fn parse_tau_range(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, mode, count] = parts[..] else {
        return Err(format!("tau range `{s}` is not start:halve:count"));
    };
    if mode != "halve" {
        return Err(format!("tau range mode `{mode}` is not `halve`"));
    }
    let start: f64 = start.trim().parse().map_err(|_| format!("bad tau start `{start}`"))?;
    let count: usize = count.trim().parse().map_err(|_| format!("bad tau count `{count}`"))?;
    if !(start > 0.0) || !start.is_finite() || count == 0 {
        return Err(format!("tau range `{s}` needs a positive start and count"));
    }
    Ok(halving_taus(start, count))
}

/// Parses `RxC`.
pub fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("grid `{s}` is not RxC"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad grid rows `{r}`"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad grid columns `{c}`"))?;
    if r == 0 || c == 0 {
        return Err(format!("grid `{s}` must be nonempty"));
    }
    Ok((r, c))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of(text, s.start));
        let message = e.message().to_string();
        if message.contains("unknown field") || message.contains("unknown variant") {
            let key = first_backticked(&message).unwrap_or_else(|| message.clone());
            ConfigError::UnknownKey { line, key }
        } else {
            ConfigError::Parse { line, message }
        }
    })?;
    cfg.validate_in(text)?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Validates values programmatically constructed (no line information).
    pub fn validate(&self) -> Result<()> {
        self.validate_in("")
    }

    fn validate_in(&self, text: &str) -> Result<()> {
        let at = |span: Range<usize>| if text.is_empty() { 0 } else { line_of(text, span.start) };
        let positive = |o: &Option<Spanned<f64>>, name: &str| -> Result<()> {
            if let Some(s) = o {
                let v = *s.get_ref();
                if !(v > 0.0) || !v.is_finite() {
                    return Err(ConfigError::Range {
                        line: at(s.span()),
                        message: format!("{name} = {v} must be positive"),
                    });
                }
            }
            Ok(())
        };
        let nonneg = |o: &Option<Spanned<f64>>, name: &str| -> Result<()> {
            if let Some(s) = o {
                let v = *s.get_ref();
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(ConfigError::Range {
                        line: at(s.span()),
                        message: format!("{name} = {v} must be nonnegative"),
                    });
                }
            }
            Ok(())
        };
        let p = &self.problem;
        if let Some(n) = &p.n {
            if *n.get_ref() < 2 {
                return Err(ConfigError::Range {
                    line: at(n.span()),
                    message: format!("n = {} must be at least 2", n.get_ref()),
                });
            }
        }
        if let Some(d) = &p.u_degree {
            if !matches!(*d.get_ref(), 1 | 2) {
                return Err(ConfigError::Range {
                    line: at(d.span()),
                    message: format!("u_degree = {} must be 1 or 2", d.get_ref()),
                });
            }
        }
        positive(&p.final_time, "final_time")?;
        positive(&p.alpha, "alpha")?;
        positive(&p.c0_tilde, "c0_tilde")?;
        if let Some(o) = &p.params {
            for (name, v) in o.entries() {
                positive(v, name)?;
            }
        }
        for e in &self.schemes {
            positive(&e.tau, "tau")?;
            positive(&e.sigma, "sigma")?;
            nonneg(&e.l_p, "l_p")?;
            nonneg(&e.l_theta, "l_theta")?;
            if let Some(k) = &e.k {
                if *k.get_ref() == 0 {
                    return Err(ConfigError::Range {
                        line: at(k.span()),
                        message: "k must be at least 1".into(),
                    });
                }
            }
            if let Some(g) = &e.gamma {
                let v = *g.get_ref();
                if !(v > 0.0 && v <= 1.0) {
                    return Err(ConfigError::Range {
                        line: at(g.span()),
                        message: format!("gamma = {v} outside (0, 1]"),
                    });
                }
            }
        }
        let x = &self.experiment;
        if let Some(t) = &x.taus {
            if t.get_ref().is_empty() || t.get_ref().iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(ConfigError::Range {
                    line: at(t.span()),
                    message: "taus must be a nonempty list of positive step sizes".into(),
                });
            }
        }
        if let Some(r) = &x.tau_range {
            parse_tau_range(r.get_ref()).map_err(|message| ConfigError::Range {
                line: at(r.span()),
                message,
            })?;
        }
        if let Some(g) = &x.grid {
            parse_grid(g.get_ref()).map_err(|message| ConfigError::Range {
                line: at(g.span()),
                message,
            })?;
        }
        positive(&x.reference_tau, "reference_tau")?;
        positive(&x.sweep_tau, "sweep_tau")?;
        positive(&x.sweep_reference_tau, "sweep_reference_tau")?;
        Ok(())
    }

    /// Scheme configurations with the problem's final time.
    pub fn scheme_configs(&self) -> Vec<SchemeConfig> {
        self.schemes
            .iter()
            .map(|e| {
                let mut c = e.to_config();
                c.final_time = self.problem.final_time.as_ref().map(|s| *s.get_ref());
                c
            })
            .collect()
    }

    /// The step sizes of a convergence study, if configured.
    pub fn taus(&self) -> Option<Vec<f64>> {
        if let Some(t) = &self.experiment.taus {
            return Some(t.get_ref().clone());
        }
        self.experiment
            .tau_range
            .as_ref()
            .map(|r| parse_tau_range(r.get_ref()).expect("validated"))
    }

    pub fn grid(&self) -> Option<(usize, usize)> {
        self.experiment.grid.as_ref().map(|g| parse_grid(g.get_ref()).expect("validated"))
    }

    /// Sweep settings for `scheme`, config values over the defaults.
    pub fn sweep_config(&self, scheme: Scheme) -> SweepConfig {
        let d = SweepConfig::default();
        let (rows, cols) = self.grid().unwrap_or((d.rows, d.cols));
        let get = |o: &Option<Spanned<f64>>, v: f64| o.as_ref().map_or(v, |s| *s.get_ref());
        SweepConfig {
            scheme,
            rows,
            cols,
            tau: get(&self.experiment.sweep_tau, d.tau),
            reference_tau: get(&self.experiment.sweep_reference_tau, d.reference_tau),
            final_time: get(&self.problem.final_time, d.final_time),
        }
    }

    /// Builds the configured system and data.
    pub fn build_problem(&self) -> LibResult<(AssembledSystem, ProblemData)> {
        let p = &self.problem;
        let final_time = p.final_time.as_ref().map(|s| *s.get_ref());
        match p.preset {
            Preset::Geothermal => {
                let params = p
                    .params
                    .as_ref()
                    .map_or(MaterialParams::geothermal(), |o| o.apply(MaterialParams::geothermal()));
                params.validate()?;
                geothermal_with_params(
                    p.n.as_ref().map_or(DEFAULT_SUBDIVISIONS, |s| *s.get_ref()),
                    p.u_degree.as_ref().map_or(DEFAULT_U_DEGREE, |s| *s.get_ref()),
                    &params,
                    DataOverrides {
                        final_time,
                        ..DataOverrides::default()
                    },
                )
            }
            Preset::Toy => {
                let (sys, mut data) = toy_problem(
                    p.alpha.as_ref().map_or(0.2, |s| *s.get_ref()),
                    p.c0_tilde.as_ref().map_or(2.0, |s| *s.get_ref()),
                )?;
                if let Some(t) = final_time {
                    data.final_time = t;
                }
                Ok((sys, data))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\npreset = \"geothermal\"\n\n[[schemes]]\nscheme = \"implicit_euler\"\ntau = 0.125\n";

    #[test]
    fn minimal_config() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.problem.preset, Preset::Geothermal);
        let s = c.scheme_configs();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].scheme, Scheme::ImplicitEuler);
        assert_eq!(s[0].tau, 0.125);
    }

    #[test]
    fn unknown_scheme_is_named() {
        let text = MINIMAL.replace("implicit_euler", "implicit_eulr");
        match parse_config(&text) {
            Err(ConfigError::UnknownKey { line, key }) => {
                assert_eq!(key, "implicit_eulr");
                assert_eq!(line, 5);
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{MINIMAL}bogus = 1\n");
        assert!(matches!(parse_config(&text), Err(ConfigError::UnknownKey { key, .. }) if key == "bogus"));
    }

    #[test]
    fn range_errors_have_lines() {
        let text = MINIMAL.replace("0.125", "0");
        assert!(matches!(parse_config(&text), Err(ConfigError::Range { line: 6, .. })));
        let text = format!("{MINIMAL}\n[experiment]\ngrid = \"0x4\"\n");
        assert!(matches!(parse_config(&text), Err(ConfigError::Range { line: 9, .. })));
    }

    #[test]
    fn syntax_error() {
        assert!(matches!(parse_config("[problem\n"), Err(ConfigError::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trip() {
        let text = r#"
[problem]
preset = "toy"
alpha = 0.3
c0_tilde = 1.5
final_time = 0.1

[problem.params]
mu = 2.0

[[schemes]]
scheme = "sigma_splitting"
tau = 0.0125
sigma = 0.77
startup = "implicit_euler_step"

[[schemes]]
scheme = "semi_explicit_half_iterative"
k = 4
gamma = 0.5
damping_anchor = "previous_step"

[experiment]
kind = "convergence"
taus = [0.1, 0.05]
reference_scheme = "implicit_midpoint"
reference_tau = 0.001
grid = "8x8"
out = "results"
strict = true
"#;
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(again.to_toml(), c.to_toml());
        let s = again.scheme_configs();
        assert_eq!(s[0].startup, Startup::ImplicitEulerStep);
        assert_eq!(s[1].damping_anchor, DampingAnchor::PreviousStep);
        assert_eq!(s[1].gamma, Some(0.5));

        // programmatic configs round trip too
        let mut p = RunConfig::default();
        p.schemes.push(SchemeEntry::from_config(&SchemeConfig::new(Scheme::HFMIterative, 0.01)));
        assert_eq!(parse_config(&p.to_toml()).unwrap(), p);
    }

    #[test]
    fn helpers() {
        assert_eq!(parse_tau_range("0.125:halve:3").unwrap(), vec![0.125, 0.0625, 0.03125]);
        assert!(parse_tau_range("0.125:double:3").is_err());
        assert_eq!(parse_grid("16x8").unwrap(), (16, 8));
        assert!(parse_grid("16").is_err());
    }
}
