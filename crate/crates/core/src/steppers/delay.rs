//! Implicit Euler for the delay equation `E ṗ + K p + M (p − p(· − τ))/τ = r`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::vector::{axpy, concat, sub};
use crate::linalg::{Factorization, SparseMatrix};
use crate::problems::{LoadFn, Loads};
use crate::system::AssembledSystem;

/// `(E + τK) pⁿ⁺¹ = E pⁿ − M (pⁿ − pⁿ⁻¹) + τ rⁿ⁺¹`
#[derive(Clone)]
pub struct DelayProblem {
    pub e: SparseMatrix,
    pub k: SparseMatrix,
    pub m: SparseMatrix,
    pub r: LoadFn,
}

impl std::fmt::Debug for DelayProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DelayProblem")
            .field("e", &self.e.shape())
            .field("k", &self.k.shape())
            .field("m", &self.m.shape())
            .finish_non_exhaustive()
    }
}

impl DelayProblem {
    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    /// Square, same size, symmetric. Definiteness shows up when factorizing.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        for (name, m) in [("E", &self.e), ("K", &self.k), ("M", &self.m)] {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!("{name} is {:?}, expected ({n}, {n})", m.shape())));
            }
            if !m.is_symmetric(1e-12) {
                return Err(Error::AssumptionViolated(format!("{name} is not symmetric")));
            }
        }
        Ok(())
    }
}

/// The delay Euler method with a fixed step size.
pub struct DelayStepper<'a> {
    problem: &'a DelayProblem,
    tau: f64,
    lhs: Factorization,
}

impl<'a> DelayStepper<'a> {
    pub fn new(problem: &'a DelayProblem, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidConfig(format!("tau = {tau} must be positive")));
        }
        problem.validate()?;
        let lhs = SparseMatrix::lin_comb(1.0, &problem.e, tau, &problem.k)?;
        Ok(Self {
            problem,
            tau,
            lhs: Factorization::symmetric_or_lu(&lhs)?,
        })
    }

    /// `pⁿ⁺¹` from `pⁿ`, `pⁿ⁻¹` and the load at `t_next`.
    pub fn step(&self, p: &[f64], p_prev: &[f64], t_next: f64) -> Result<Vec<f64>> {
        let pb = self.problem;
        let mut rhs = pb.e.mul_vec(p)?;
        pb.m.mul_vec_acc(-1.0, &sub(p, p_prev), &mut rhs)?;
        axpy(self.tau, &(pb.r)(t_next), &mut rhs);
        self.lhs.solve_refined(&rhs, 1)
    }

    /// `steps` steps from `p⁰` and `p¹`. Passing `p1 = None` uses the
    /// constant history `p⁻¹ = p⁰` for the first step instead.
    pub fn run(&self, p0: &[f64], p1: Option<&[f64]>, steps: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![p0.to_vec()];
        let start = match p1 {
            Some(p1) => {
                if steps > 0 {
                    out.push(p1.to_vec());
                }
                1
            }
            None => 0,
        };
        for n in start..steps {
            let prev = if n == 0 { &out[0] } else { &out[n - 1] };
            let next = self.step(&out[n], prev, (n + 1) as f64 * self.tau)?;
            out.push(next);
        }
        Ok(out)
    }
}

/// The (p, θ) delay problem behind the half-decoupled scheme:
/// `E` the block mass, `K` the block diffusion, `M = 𝔻 A⁻¹ 𝔻ᵀ` and
/// `rⁿ⁺¹ = [g; h](tⁿ⁺¹) − 𝔻 A⁻¹ (f(tⁿ⁺¹) − f(tⁿ))/τ`.
pub fn reduced_delay_problem(sys: &AssembledSystem, loads: &Loads, tau: f64) -> Result<DelayProblem> {
    let a = Factorization::cholesky(&sys.a)?;
    let dd = sys.block_coupling();
    let ddt = dd.transpose();
    let n = dd.nrows();
    let mut trip = Vec::new();
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = dd.mul_vec(&a.solve_refined(&ddt.mul_vec(&e)?, 1)?)?;
        e[j] = 0.0;
        trip.extend(col.into_iter().enumerate().filter(|(_, v)| *v != 0.0).map(|(i, v)| (i, j, v)));
    }
    let m = SparseMatrix::from_triplets(n, n, &trip)?;
    // symmetrize column roundoff
    let m = SparseMatrix::lin_comb(0.5, &m, 0.5, &m.transpose())?;
    let loads = loads.clone();
    let a = Arc::new(a);
    let r: LoadFn = Arc::new(move |t| {
        let df = sub(&loads.f(t), &loads.f(t - tau));
        let mut r = concat(&[&loads.g(t), &loads.h(t)]);
        let w = dd.mul_vec(&a.solve_refined(&df, 1).expect("shape")).expect("shape");
        axpy(-1.0 / tau, &w, &mut r);
        r
    });
    Ok(DelayProblem {
        e: sys.block_mass(),
        k: sys.block_diffusion(),
        m,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(m: f64) -> DelayProblem {
        DelayProblem {
            e: SparseMatrix::identity(1),
            k: SparseMatrix::identity(1),
            m: SparseMatrix::from_diagonal(&[m]),
            r: Arc::new(|_| vec![0.0]),
        }
    }

    #[test]
    fn geometric_decay() {
        let pb = scalar(0.0);
        let tau = 0.1;
        let out = DelayStepper::new(&pb, tau).unwrap().run(&[1.0], None, 20).unwrap();
        for (n, p) in out.iter().enumerate() {
            assert_relative_eq!(p[0], (1.0 + tau).powi(-(n as i32)), max_relative = 1e-13);
        }
    }

    #[test]
    fn explicit_second_level() {
        let pb = scalar(0.5);
        let st = DelayStepper::new(&pb, 0.1).unwrap();
        let out = st.run(&[1.0], Some(&[0.9]), 3).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(out[1], vec![0.9]);
        let expect = (0.9 - 0.5 * (0.9 - 1.0)) / 1.1;
        assert_relative_eq!(out[2][0], expect, max_relative = 1e-14);
    }

    #[test]
    fn asymmetric_rejected() {
        let mut pb = scalar(0.0);
        pb.m = SparseMatrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        pb.e = SparseMatrix::identity(2);
        pb.k = SparseMatrix::identity(2);
        assert!(DelayStepper::new(&pb, 0.1).is_err());
    }
}
