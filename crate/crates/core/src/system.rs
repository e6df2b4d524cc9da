//! The semi-discrete thermo-poroelastic system
//!
//! ```text
//!   A u − Dᵀ p − D̃ᵀ θ            = f
//!   D u̇ + C ṗ − Ĉ θ̇ + B p        = g
//!   D̃ u̇ − Ĉ ṗ + C̃ θ̇ + B̃ θ        = h
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{self, FeSpace, Mesh};
use crate::linalg::SparseMatrix;

/// Physical constants of a thermo-poroelastic medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Lamé coefficient λ
    pub lambda: f64,
    /// Lamé coefficient μ
    pub mu: f64,
    /// permeability over fluid viscosity
    pub kappa_over_nu: f64,
    /// thermal conductivity
    pub kappa_tilde: f64,
    /// inverse Biot modulus
    pub c0: f64,
    /// thermal dilatation coefficient
    pub c0_hat: f64,
    /// thermal capacity
    pub c0_tilde: f64,
    /// Biot-Willis coefficient
    pub alpha: f64,
    /// thermal stress coefficient
    pub beta: f64,
}

impl MaterialParams {
    pub fn geothermal() -> Self {
        Self {
            lambda: 1.2e10,
            mu: 6.0e9,
            kappa_over_nu: 6.33e2,
            kappa_tilde: 1e2,
            c0: 7.8e3,
            c0_hat: 3.03e-11,
            c0_tilde: 0.92e3,
            alpha: 0.97,
            beta: 3.96e6,
        }
    }

    pub fn storage(&self) -> Storage {
        Storage {
            c0: self.c0,
            c0_hat: self.c0_hat,
            c0_tilde: self.c0_tilde,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("kappa_over_nu", self.kappa_over_nu),
            ("kappa_tilde", self.kappa_tilde),
            ("c0", self.c0),
            ("c0_hat", self.c0_hat),
            ("c0_tilde", self.c0_tilde),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::OutOfRange(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Coefficients of the three mass terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Storage {
    pub c0: f64,
    pub c0_hat: f64,
    pub c0_tilde: f64,
}

impl Storage {
    /// `ĉ₀ < c₀` and `ĉ₀ < c̃₀`, which makes the block mass positive definite.
    pub fn assumption_holds(&self) -> bool {
        self.c0_hat < self.c0 && self.c0_hat < self.c0_tilde
    }
}

/// Finite element spaces behind an assembled system.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Arc<Mesh>,
    pub displacement: FeSpace,
    pub scalar: FeSpace,
}

/// All matrices of the semi-discrete system.
///
/// `mass` is the unscaled mass matrix of the scalar space (so `C = c₀·mass`
/// for finite elements and `[1]` for the toy problem).
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub b_tilde: SparseMatrix,
    pub c: SparseMatrix,
    pub c_hat: SparseMatrix,
    pub c_tilde: SparseMatrix,
    pub d: SparseMatrix,
    pub d_tilde: SparseMatrix,
    pub mass: SparseMatrix,
    pub storage: Storage,
    pub params: Option<MaterialParams>,
    pub discretization: Option<Discretization>,
}

impl AssembledSystem {
    /// Builds a system from explicit matrices, checking their shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn from_matrices(
        a: SparseMatrix,
        b: SparseMatrix,
        b_tilde: SparseMatrix,
        c: SparseMatrix,
        c_hat: SparseMatrix,
        c_tilde: SparseMatrix,
        d: SparseMatrix,
        d_tilde: SparseMatrix,
        mass: SparseMatrix,
        storage: Storage,
    ) -> Result<Self> {
        let s = Self {
            a,
            b,
            b_tilde,
            c,
            c_hat,
            c_tilde,
            d,
            d_tilde,
            mass,
            storage,
            params: None,
            discretization: None,
        };
        s.check_shapes()?;
        Ok(s)
    }

    fn check_shapes(&self) -> Result<()> {
        let (nu, np, nt) = (self.a.nrows(), self.b.nrows(), self.b_tilde.nrows());
        let expect = [
            ("A", self.a.shape(), (nu, nu)),
            ("B", self.b.shape(), (np, np)),
            ("B̃", self.b_tilde.shape(), (nt, nt)),
            ("C", self.c.shape(), (np, np)),
            ("Ĉ", self.c_hat.shape(), (np, nt)),
            ("C̃", self.c_tilde.shape(), (nt, nt)),
            ("D", self.d.shape(), (np, nu)),
            ("D̃", self.d_tilde.shape(), (nt, nu)),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::DimensionMismatch(format!("{name} is {got:?}, expected {want:?}")));
            }
        }
        Ok(())
    }

    pub fn n_u(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_p(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_theta(&self) -> usize {
        self.b_tilde.nrows()
    }

    pub fn assumption_holds(&self) -> bool {
        self.storage.assumption_holds()
    }

    /// `[[C, −Ĉ], [−Ĉᵀ, C̃]]`
    pub fn block_mass(&self) -> SparseMatrix {
        let nc = self.c_hat.scaled(-1.0);
        let nct = nc.transpose();
        SparseMatrix::block(
            &[self.n_p(), self.n_theta()],
            &[self.n_p(), self.n_theta()],
            &[vec![Some(&self.c), Some(&nc)], vec![Some(&nct), Some(&self.c_tilde)]],
        )
        .expect("shapes checked")
    }

    /// `diag(B, B̃)`
    pub fn block_diffusion(&self) -> SparseMatrix {
        SparseMatrix::block(
            &[self.n_p(), self.n_theta()],
            &[self.n_p(), self.n_theta()],
            &[vec![Some(&self.b), None], vec![None, Some(&self.b_tilde)]],
        )
        .expect("shapes checked")
    }

    /// `[D; D̃]`
    pub fn block_coupling(&self) -> SparseMatrix {
        SparseMatrix::block(
            &[self.n_p(), self.n_theta()],
            &[self.n_u()],
            &[vec![Some(&self.d)], vec![Some(&self.d_tilde)]],
        )
        .expect("shapes checked")
    }
}

/// Assembles the system on `mesh` with displacement degree `u_degree` and
/// P1 pressure and temperature.
pub fn assemble_system(mesh: Arc<Mesh>, params: &MaterialParams, u_degree: usize) -> Result<AssembledSystem> {
    params.validate()?;
    let vs = FeSpace::vector(mesh.clone(), u_degree)?;
    let ss = FeSpace::scalar(mesh.clone(), 1)?;
    let mass = fem::assemble_scaled_mass(&ss, 1.0)?;
    let a = fem::assemble_elasticity(&vs, params.lambda, params.mu)?;
    let b = fem::assemble_scalar_stiffness(&ss, params.kappa_over_nu)?;
    let b_tilde = fem::assemble_scalar_stiffness(&ss, params.kappa_tilde)?;
    let d = fem::assemble_coupling(&vs, &ss, params.alpha)?;
    let d_tilde = fem::assemble_coupling(&vs, &ss, params.beta)?;
    let mut sys = AssembledSystem::from_matrices(
        a,
        b,
        b_tilde,
        mass.scaled(params.c0),
        mass.scaled(params.c0_hat),
        mass.scaled(params.c0_tilde),
        d,
        d_tilde,
        mass,
        params.storage(),
    )?;
    sys.params = Some(*params);
    sys.discretization = Some(Discretization {
        mesh,
        displacement: vs,
        scalar: ss,
    });
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{extremal_eigenvalues, Factorization};

    fn geo(n: usize, deg: usize) -> AssembledSystem {
        assemble_system(Arc::new(Mesh::new(n).unwrap()), &MaterialParams::geothermal(), deg).unwrap()
    }

    #[test]
    fn dimensions() {
        let s = geo(8, 1);
        assert_eq!((s.n_u(), s.n_p(), s.n_theta()), (98, 49, 49));
        let s = geo(2, 2);
        assert_eq!(s.n_u(), 2 * 9);
        assert_eq!(s.n_p(), 1);
    }

    #[test]
    fn symmetric_and_definite() {
        let s = geo(4, 2);
        for m in [&s.a, &s.b, &s.b_tilde, &s.c, &s.c_hat, &s.c_tilde] {
            assert!(m.is_symmetric(1e-12));
            assert!(Factorization::cholesky(m).is_ok());
        }
        assert!(Factorization::cholesky(&s.block_mass()).is_ok());
    }

    #[test]
    fn block_mass_lower_bound() {
        let s = geo(4, 1);
        let (lm, _) = extremal_eigenvalues(&s.mass).unwrap();
        let (lb, _) = extremal_eigenvalues(&s.block_mass()).unwrap();
        let st = s.storage;
        let bound = (st.c0 - st.c0_hat).min(st.c0_tilde - st.c0_hat) * lm;
        assert!(lb >= 0.99 * bound);
    }

    #[test]
    fn violated_assumption_still_assembles() {
        let mut p = MaterialParams::geothermal();
        p.c0_hat = 2.0 * p.c0;
        let s = assemble_system(Arc::new(Mesh::new(3).unwrap()), &p, 1).unwrap();
        assert!(!s.assumption_holds());
        assert!(MaterialParams::geothermal().storage().assumption_holds());
    }

    #[test]
    fn shape_check() {
        let i1 = SparseMatrix::identity(1);
        let r = AssembledSystem::from_matrices(
            SparseMatrix::identity(2),
            i1.clone(),
            i1.clone(),
            i1.clone(),
            i1.clone(),
            i1.clone(),
            SparseMatrix::zeros(1, 3),
            SparseMatrix::zeros(1, 2),
            i1,
            Storage {
                c0: 1.0,
                c0_hat: 0.0,
                c0_tilde: 1.0,
            },
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }
}
