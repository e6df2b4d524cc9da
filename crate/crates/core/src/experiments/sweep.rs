//! The (α, c̃₀) sharpness sweep on the toy system.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::conditions::{spectral_bounds, ConditionReport, CouplingConstants};
use crate::error::{Error, Result};
use crate::problems::{toy_problem, TOY_ALPHA_MAX, TOY_C0, TOY_C0_HAT};
use crate::steppers::{run, Scheme, SchemeConfig};

use super::metrics::final_time_error;

/// Relative error separating converged from diverged cells.
pub const CONVERGED_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    /// the weak coupling condition holds
    Guaranteed,
    /// the condition fails but the error is still small
    Converged,
    Diverged,
}

impl CellClass {
    pub fn name(self) -> &'static str {
        match self {
            CellClass::Guaranteed => "guaranteed",
            CellClass::Converged => "converged",
            CellClass::Diverged => "diverged",
        }
    }
}

impl fmt::Display for CellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [CellClass::Guaranteed, CellClass::Converged, CellClass::Diverged]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown cell class `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub row: usize,
    pub col: usize,
    pub alpha: f64,
    pub c0_tilde: f64,
    /// `ω_HD` for the half-decoupled scheme, `ω_FD` for the fully decoupled one
    pub omega: f64,
    pub e_total: f64,
    pub class: CellClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scheme: Scheme,
    /// number of α values
    pub rows: usize,
    /// number of c̃₀ values
    pub cols: usize,
    pub tau: f64,
    pub reference_tau: f64,
    pub final_time: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::SemiExplicitHalf,
            rows: 32,
            cols: 32,
            tau: 0.1 / 256.0,
            reference_tau: 0.1 / 512.0,
            final_time: 0.1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.scheme, Scheme::SemiExplicitHalf | Scheme::SemiExplicitFull) {
            return Err(Error::InvalidConfig(format!(
                "the sweep supports semi_explicit_half and semi_explicit_full, not {}",
                self.scheme
            )));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidConfig("empty sweep grid".into()));
        }
        if !(self.reference_tau > 0.0 && self.reference_tau <= self.tau) {
            return Err(Error::InvalidConfig("reference step must be positive and at most tau".into()));
        }
        Ok(())
    }
}

/// Uniform interior grid: `α_i = 0.64 (i+1)/(R+1)` and
/// `c̃₀_j = ĉ₀ + (c₀ + 3.5 − ĉ₀)(j+1)/(C+1)`.
pub fn sweep_grid(rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let alphas = (0..rows).map(|i| TOY_ALPHA_MAX * (i + 1) as f64 / (rows + 1) as f64).collect();
    let span = TOY_C0 + 3.5 - TOY_C0_HAT;
    let c0t = (0..cols).map(|j| TOY_C0_HAT + span * (j + 1) as f64 / (cols + 1) as f64).collect();
    (alphas, c0t)
}

/// Decides and runs one cell.
pub fn sharpness_cell(config: &SweepConfig, alpha: f64, c0_tilde: f64) -> Result<SweepCell> {
    let (sys, data) = toy_problem(alpha, c0_tilde)?;
    let report = ConditionReport::new(CouplingConstants::spectral(&spectral_bounds(&sys)?), None)?;
    let (omega, holds) = match config.scheme {
        Scheme::SemiExplicitHalf => (report.omega_hd, report.hd_holds()),
        _ => (report.omega_fd, report.fd_holds()),
    };
    let mut c = SchemeConfig::new(config.scheme, config.tau);
    c.final_time = Some(config.final_time);
    let traj = run(&sys, &data, &c)?;
    let mut r = SchemeConfig::new(Scheme::ImplicitEuler, config.reference_tau);
    r.final_time = Some(config.final_time);
    let reference = run(&sys, &data, &r)?;
    let e_total = if traj.diverged() {
        f64::INFINITY
    } else {
        final_time_error(reference.last(), traj.last(), &sys)?.e_total
    };
    let class = if !(e_total < CONVERGED_THRESHOLD) {
        CellClass::Diverged
    } else if holds {
        CellClass::Guaranteed
    } else {
        CellClass::Converged
    };
    Ok(SweepCell {
        row: 0,
        col: 0,
        alpha,
        c0_tilde,
        omega,
        e_total,
        class,
    })
}

/// All cells, row-major over α then c̃₀.
pub fn sharpness_sweep(config: &SweepConfig) -> Result<Vec<SweepCell>> {
    config.validate()?;
    let (alphas, c0t) = sweep_grid(config.rows, config.cols);
    (0..config.rows * config.cols)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / config.cols, k % config.cols);
            let mut cell = sharpness_cell(config, alphas[i], c0t[j])?;
            cell.row = i;
            cell.col = j;
            Ok(cell)
        })
        .collect()
}
