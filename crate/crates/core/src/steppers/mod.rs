//! Time stepping over an assembled system.

pub mod config;
pub mod delay;
mod schemes;

pub use config::{DampingAnchor, Scheme, SchemeConfig, Startup};
pub use delay::{reduced_delay_problem, DelayProblem, DelayStepper};
pub use schemes::{coupled_matrix, default_gamma, State, StepInfo, Stepper};

use crate::error::{Error, Result};
use crate::linalg::vector::norm2;
use crate::problems::{consistent_u0, ProblemData};
use crate::system::AssembledSystem;

/// A component norm above this multiple of its reference flags divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// stopped after producing level `step`, which blew up
    Diverged { step: usize },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scheme: Scheme,
    pub tau: f64,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// one entry per step, `info[n]` belongs to the step producing level `n + 1`
    pub info: Vec<StepInfo>,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("at least the initial time")
    }
}

/// Number of steps `N` with `N τ = T` to roundoff.
pub fn step_count(final_time: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0) || !(final_time >= tau) {
        return Err(Error::InvalidConfig(format!("need 0 < tau = {tau} <= T = {final_time}")));
    }
    let n = (final_time / tau).round();
    if (n * tau - final_time).abs() > 1e-9 * final_time {
        return Err(Error::InvalidConfig(format!(
            "T = {final_time} is not a multiple of tau = {tau}"
        )));
    }
    Ok(n as usize)
}

/// Watches component norms against the first nonzero value seen.
struct Monitor {
    reference: [f64; 3],
}

impl Monitor {
    fn norms(s: &State) -> [f64; 3] {
        [norm2(&s.u), norm2(&s.p), norm2(&s.theta)]
    }

    fn new(s: &State) -> Self {
        Self { reference: Self::norms(s) }
    }

    fn blown_up(&mut self, s: &State) -> bool {
        if !s.is_finite() {
            return true;
        }
        let n = Self::norms(s);
        for i in 0..3 {
            if self.reference[i] == 0.0 {
                self.reference[i] = n[i];
            } else if n[i] > DIVERGENCE_FACTOR * self.reference[i] {
                return true;
            }
        }
        false
    }
}

/// Integrates `data` with `config` from the consistent initial state.
/// The final time is `config.final_time` when set, else `data.final_time`.
pub fn run(sys: &AssembledSystem, data: &ProblemData, config: &SchemeConfig) -> Result<Trajectory> {
    config.validate()?;
    data.validate(sys)?;
    let tau = config.tau;
    let n_steps = step_count(config.final_time.unwrap_or(data.final_time), tau)?;
    let stepper = Stepper::new(sys, config)?;
    let startup = if config.scheme.is_two_step() && config.startup == Startup::ImplicitEulerStep {
        Some(Stepper::new(sys, &SchemeConfig::new(Scheme::ImplicitEuler, tau))?)
    } else {
        None
    };
    let init = State {
        u: consistent_u0(sys, &data.p0, &data.theta0, &data.loads.f(0.0))?,
        p: data.p0.clone(),
        theta: data.theta0.clone(),
    };
    let mut monitor = Monitor::new(&init);
    let mut traj = Trajectory {
        scheme: config.scheme,
        tau,
        times: vec![0.0],
        states: vec![init],
        info: Vec::with_capacity(n_steps),
        status: RunStatus::Completed,
    };
    for n in 0..n_steps {
        let t = n as f64 * tau;
        let cur = &traj.states[n];
        let prev = if n == 0 { cur } else { &traj.states[n - 1] };
        let (next, info) = match (&startup, n) {
            (Some(ie), 0) => ie.step(cur, prev, t, &data.loads),
            _ => stepper.step(cur, prev, t, &data.loads),
        };
        let bad = monitor.blown_up(&next);
        traj.states.push(next);
        traj.times.push((n + 1) as f64 * tau);
        traj.info.push(info);
        if bad {
            traj.status = RunStatus::Diverged { step: n + 1 };
            break;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests;
