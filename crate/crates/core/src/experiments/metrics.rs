//! Energy norms, final time errors and transfer between meshes.

use crate::error::{Error, Result};
use crate::linalg::vector::{dot, sub};
use crate::linalg::SparseMatrix;
use crate::steppers::State;
use crate::system::{AssembledSystem, Discretization};

/// Quadratic forms down to this relative negativity count as roundoff.
const NEGATIVE_TOL: f64 = 1e-12;

/// `√(vᵀ M v)`
pub fn energy_norm(m: &SparseMatrix, v: &[f64]) -> Result<f64> {
    let mv = m.mul_vec(v)?;
    let q = dot(&mv, v);
    if q < 0.0 {
        let scale = m.max_abs() * dot(v, v);
        if q < -NEGATIVE_TOL * scale.max(1.0) {
            return Err(Error::NegativeQuadraticForm(q));
        }
        return Ok(0.0);
    }
    Ok(q.sqrt())
}

/// Relative errors in the A-, C- and C̃-norms and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentErrors {
    pub e_u: f64,
    pub e_p: f64,
    pub e_theta: f64,
    pub e_total: f64,
}

impl ComponentErrors {
    pub fn new(e_u: f64, e_p: f64, e_theta: f64) -> Self {
        Self {
            e_u,
            e_p,
            e_theta,
            e_total: e_u + e_p + e_theta,
        }
    }

    /// Stand-in for a run that blew up.
    pub fn infinite() -> Self {
        Self::new(f64::INFINITY, f64::INFINITY, f64::INFINITY)
    }
}

fn relative(m: &SparseMatrix, reference: &[f64], approx: &[f64], what: &'static str) -> Result<f64> {
    if reference.len() != approx.len() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: reference {} vs approximation {}",
            reference.len(),
            approx.len()
        )));
    }
    let r = energy_norm(m, reference)?;
    if r == 0.0 {
        return Err(Error::ZeroReference(what));
    }
    Ok(energy_norm(m, &sub(reference, approx))? / r)
}

/// `e_T = ‖u − u_ref‖_A/‖u_ref‖_A + ‖p − p_ref‖_C/‖p_ref‖_C + ‖θ − θ_ref‖_C̃/‖θ_ref‖_C̃`
pub fn final_time_error(reference: &State, approx: &State, sys: &AssembledSystem) -> Result<ComponentErrors> {
    Ok(ComponentErrors::new(
        relative(&sys.a, &reference.u, &approx.u, "u")?,
        relative(&sys.c, &reference.p, &approx.p, "p")?,
        relative(&sys.c_tilde, &reference.theta, &approx.theta, "theta")?,
    ))
}

/// Interpolates a state from `coarse` onto the nodes of `fine`.
pub fn prolong(state: &State, coarse: &Discretization, fine: &Discretization) -> State {
    let u = coarse.displacement.extend(&state.u);
    let p = coarse.scalar.extend(&state.p);
    let theta = coarse.scalar.extend(&state.theta);
    State {
        u: fine.displacement.interpolate(|x, y| coarse.displacement.evaluate(&u, x, y)),
        p: fine.scalar.interpolate(|x, y| coarse.scalar.evaluate(&p, x, y)),
        theta: fine.scalar.interpolate(|x, y| coarse.scalar.evaluate(&theta, x, y)),
    }
}
