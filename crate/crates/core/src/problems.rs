//! Problem presets: the geothermal finite element model and the 3-dof toy
//! system, together with their initial data and loads.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{self, Mesh};
use crate::linalg::{solve_spd, vector, SparseMatrix};
use crate::system::{assemble_system, AssembledSystem, MaterialParams, Storage};

/// A load vector as a function of time.
pub type LoadFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Right-hand sides `f(t)`, `g(t)`, `h(t)` of the three equations.
#[derive(Clone)]
pub struct Loads {
    pub f: LoadFn,
    pub g: LoadFn,
    pub h: LoadFn,
}

impl fmt::Debug for Loads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Loads { .. }")
    }
}

impl Loads {
    pub fn zero(n_u: usize, n_p: usize, n_theta: usize) -> Self {
        Self::constant(vec![0.0; n_u], vec![0.0; n_p], vec![0.0; n_theta])
    }

    pub fn constant(f: Vec<f64>, g: Vec<f64>, h: Vec<f64>) -> Self {
        Self {
            f: Arc::new(move |_| f.clone()),
            g: Arc::new(move |_| g.clone()),
            h: Arc::new(move |_| h.clone()),
        }
    }

    pub fn f(&self, t: f64) -> Vec<f64> {
        (self.f)(t)
    }

    pub fn g(&self, t: f64) -> Vec<f64> {
        (self.g)(t)
    }

    pub fn h(&self, t: f64) -> Vec<f64> {
        (self.h)(t)
    }
}

/// Initial values, loads and final time of a run.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub p0: Vec<f64>,
    pub theta0: Vec<f64>,
    pub loads: Loads,
    pub final_time: f64,
}

impl ProblemData {
    pub fn zero(system: &AssembledSystem, final_time: f64) -> Self {
        Self {
            p0: vec![0.0; system.n_p()],
            theta0: vec![0.0; system.n_theta()],
            loads: Loads::zero(system.n_u(), system.n_p(), system.n_theta()),
            final_time,
        }
    }

    /// Checks vector lengths against `system`, sampling the loads at `t = 0`.
    pub fn validate(&self, system: &AssembledSystem) -> Result<()> {
        let checks = [
            ("p0", self.p0.len(), system.n_p()),
            ("theta0", self.theta0.len(), system.n_theta()),
            ("f", self.loads.f(0.0).len(), system.n_u()),
            ("g", self.loads.g(0.0).len(), system.n_p()),
            ("h", self.loads.h(0.0).len(), system.n_theta()),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::DimensionMismatch(format!("{name} has length {got}, expected {want}")));
            }
        }
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(Error::OutOfRange(format!("final time {}", self.final_time)));
        }
        Ok(())
    }
}

/// Spatial source densities, integrated against the test functions at each
/// requested time.
pub type VectorSource = Arc<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;
pub type ScalarSource = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone, Default)]
pub struct Sources {
    pub f: Option<VectorSource>,
    pub g: Option<ScalarSource>,
    pub h: Option<ScalarSource>,
}

/// Load providers of a finite element system for the given source densities.
pub fn assembled_loads(system: &AssembledSystem, sources: &Sources) -> Result<Loads> {
    let disc = system
        .discretization
        .clone()
        .ok_or_else(|| Error::InvalidConfig("source densities need a finite element system".into()))?;
    let zero = Loads::zero(system.n_u(), system.n_p(), system.n_theta());
    let f: LoadFn = match sources.f.clone() {
        Some(src) => {
            let space = disc.displacement.clone();
            Arc::new(move |t| fem::assemble_load(&space, |x, y| src(x, y, t).to_vec()))
        }
        None => zero.f.clone(),
    };
    let scalar = |src: Option<ScalarSource>, fallback: LoadFn| -> LoadFn {
        match src {
            Some(src) => {
                let space = disc.scalar.clone();
                Arc::new(move |t| fem::assemble_load(&space, |x, y| vec![src(x, y, t)]))
            }
            None => fallback,
        }
    };
    Ok(Loads {
        f,
        g: scalar(sources.g.clone(), zero.g.clone()),
        h: scalar(sources.h.clone(), zero.h.clone()),
    })
}

/// Replacements for the default geothermal data.
#[derive(Debug, Clone, Default)]
pub struct DataOverrides {
    pub p0: Option<Vec<f64>>,
    pub theta0: Option<Vec<f64>>,
    pub loads: Option<Loads>,
    pub final_time: Option<f64>,
}

/// The geothermal preset on an `n × n` mesh with P1 pressure and temperature.
///
/// Default data: `p⁰ = θ⁰ = sin(πx) sin(πy)` interpolated, zero loads, `T = 1`.
pub fn geothermal_problem(
    n: usize,
    u_degree: usize,
    overrides: DataOverrides,
) -> Result<(AssembledSystem, ProblemData)> {
    geothermal_with_params(n, u_degree, &MaterialParams::geothermal(), overrides)
}

/// As [`geothermal_problem`] with custom material parameters.
pub fn geothermal_with_params(
    n: usize,
    u_degree: usize,
    params: &MaterialParams,
    overrides: DataOverrides,
) -> Result<(AssembledSystem, ProblemData)> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    let system = assemble_system(Arc::new(Mesh::new(n)?), params, u_degree)?;
    let bump = system
        .discretization
        .as_ref()
        .expect("assembled")
        .scalar
        .interpolate_scalar(|x, y| (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin());
    let data = ProblemData {
        p0: overrides.p0.unwrap_or_else(|| bump.clone()),
        theta0: overrides.theta0.unwrap_or(bump),
        loads: overrides
            .loads
            .unwrap_or_else(|| Loads::zero(system.n_u(), system.n_p(), system.n_theta())),
        final_time: overrides.final_time.unwrap_or(1.0),
    };
    data.validate(&system)?;
    Ok((system, data))
}

pub const TOY_ALPHA_MAX: f64 = 0.64;
pub const TOY_C0: f64 = 2.0;
pub const TOY_C0_HAT: f64 = 0.5;
pub const TOY_FINAL_TIME: f64 = 0.1;

/// The toy system with `β = α` and free thermal capacity `c̃₀`.
pub fn toy_system(alpha: f64, c0_tilde: f64) -> AssembledSystem {
    let s = 1.0 / (2.0 - 2f64.sqrt());
    let a = SparseMatrix::from_rows(&[&[2.0 * s, -s, 0.0], &[-s, 2.0 * s, -s], &[0.0, -s, 2.0 * s]])
        .expect("3x3");
    let one = |v: f64| SparseMatrix::from_diagonal(&[v]);
    let d = SparseMatrix::from_rows(&[&[2.0 * alpha, alpha, 2.0 * alpha]]).expect("1x3");
    AssembledSystem::from_matrices(
        a,
        one(2.0),
        one(1.0),
        one(TOY_C0),
        one(TOY_C0_HAT),
        one(c0_tilde),
        d.clone(),
        d,
        one(1.0),
        Storage {
            c0: TOY_C0,
            c0_hat: TOY_C0_HAT,
            c0_tilde,
        },
    )
    .expect("toy shapes")
}

/// The toy preset with `p⁰ = θ⁰ = 1`, zero loads and `T = 0.1`.
pub fn toy_problem(alpha: f64, c0_tilde: f64) -> Result<(AssembledSystem, ProblemData)> {
    if !(alpha > 0.0 && alpha < TOY_ALPHA_MAX) {
        return Err(Error::OutOfRange(format!("toy alpha = {alpha} outside (0, {TOY_ALPHA_MAX})")));
    }
    let hi = TOY_C0 + 3.5;
    if !(c0_tilde > TOY_C0_HAT && c0_tilde < hi) {
        return Err(Error::OutOfRange(format!(
            "toy c0_tilde = {c0_tilde} outside ({TOY_C0_HAT}, {hi})"
        )));
    }
    let system = toy_system(alpha, c0_tilde);
    let data = ProblemData {
        p0: vec![1.0],
        theta0: vec![1.0],
        loads: Loads::zero(3, 1, 1),
        final_time: TOY_FINAL_TIME,
    };
    Ok((system, data))
}

/// `u⁰ = A⁻¹(f(0) + Dᵀp⁰ + D̃ᵀθ⁰)`, the displacement consistent with the
/// algebraic equation.
pub fn consistent_u0(system: &AssembledSystem, p0: &[f64], theta0: &[f64], f0: &[f64]) -> Result<Vec<f64>> {
    let mut rhs = f0.to_vec();
    if rhs.len() != system.n_u() {
        return Err(Error::DimensionMismatch(format!("f(0) has length {}", rhs.len())));
    }
    system.d.transpose().mul_vec_acc(1.0, p0, &mut rhs)?;
    system.d_tilde.transpose().mul_vec_acc(1.0, theta0, &mut rhs)?;
    solve_spd(&system.a, &rhs)
}

/// The stationary solution for constant loads `(f, g, h)`:
/// `Bp = g`, `B̃θ = h`, `Au = f + Dᵀp + D̃ᵀθ`.
pub fn steady_state(
    system: &AssembledSystem,
    f: &[f64],
    g: &[f64],
    h: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let p = solve_spd(&system.b, g)?;
    let theta = solve_spd(&system.b_tilde, h)?;
    let u = consistent_u0(system, &p, &theta, f)?;
    Ok((u, p, theta))
}

/// Residual of the algebraic equation `Au − Dᵀp − D̃ᵀθ = f` relative to the
/// size of its terms.
pub fn algebraic_residual(system: &AssembledSystem, u: &[f64], p: &[f64], theta: &[f64], f: &[f64]) -> f64 {
    let au = system.a.mul_vec(u).expect("shape");
    let mut coupling = vec![0.0; system.n_u()];
    system.d.transpose().mul_vec_acc(1.0, p, &mut coupling).expect("shape");
    system.d_tilde.transpose().mul_vec_acc(1.0, theta, &mut coupling).expect("shape");
    let r: Vec<f64> = au.iter().zip(&coupling).zip(f).map(|((a, c), f)| a - c - f).collect();
    let scale = vector::norm2(&au) + vector::norm2(&coupling) + vector::norm2(f);
    if scale == 0.0 {
        0.0
    } else {
        vector::norm2(&r) / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{extremal_eigenvalues, extremal_singular_values};
    use approx::assert_relative_eq;

    #[test]
    fn toy_matrices() {
        let (s, data) = toy_problem(0.2, 2.0).unwrap();
        let k = 1.0 / (2.0 - 2f64.sqrt());
        let expect = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.a.get(i, j) - k * expect[i][j]).abs() < 1e-14);
            }
        }
        let (lo, hi) = extremal_eigenvalues(&s.a).unwrap();
        assert_relative_eq!(lo, 1.0, max_relative = 1e-10);
        assert_relative_eq!(hi, 3.0 + 2.0 * 2f64.sqrt(), max_relative = 1e-10);
        let (dl, dh) = extremal_singular_values(&s.d).unwrap();
        assert!((dl - 0.6).abs() < 1e-12 && (dh - 0.6).abs() < 1e-12);
        assert_eq!(data.p0, vec![1.0]);
        assert_eq!(data.final_time, 0.1);
    }

    #[test]
    fn toy_range() {
        assert!(matches!(toy_problem(0.0, 2.0), Err(Error::OutOfRange(_))));
        assert!(matches!(toy_problem(0.64, 2.0), Err(Error::OutOfRange(_))));
        assert!(matches!(toy_problem(0.3, 0.5), Err(Error::OutOfRange(_))));
        assert!(matches!(toy_problem(0.3, 5.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn toy_consistent_u0_against_adjugate() {
        let (s, d) = toy_problem(0.3, 2.0).unwrap();
        let u0 = consistent_u0(&s, &d.p0, &d.theta0, &[0.0; 3]).unwrap();
        // A⁻¹ = (2−√2)/4 · [[3,2,1],[2,4,2],[1,2,3]], rhs = 2α·[2,1,2]
        let k = (2.0 - 2f64.sqrt()) / 4.0;
        let r = [1.2, 0.6, 1.2];
        let inv = [[3.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 3.0]];
        for i in 0..3 {
            let e: f64 = (0..3).map(|j| k * inv[i][j] * r[j]).sum();
            assert!((u0[i] - e).abs() < 1e-14);
        }
        assert!(algebraic_residual(&s, &u0, &d.p0, &d.theta0, &[0.0; 3]) < 1e-12);
    }

    #[test]
    fn zero_data_zero_u0() {
        let (s, _) = toy_problem(0.3, 2.0).unwrap();
        assert_eq!(consistent_u0(&s, &[0.0], &[0.0], &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn geothermal_defaults() {
        let (s, d) = geothermal_problem(8, 1, DataOverrides::default()).unwrap();
        assert_eq!(d.p0.len(), 49);
        assert_eq!(d.final_time, 1.0);
        assert!(d.p0.iter().all(|&v| v > 0.0));
        let u0 = consistent_u0(&s, &d.p0, &d.theta0, &d.loads.f(0.0)).unwrap();
        assert!(algebraic_residual(&s, &u0, &d.p0, &d.theta0, &d.loads.f(0.0)) < 1e-10);
        assert!(matches!(geothermal_problem(1, 1, DataOverrides::default()), Err(Error::InvalidSize(1))));
    }

    #[test]
    fn sources_assemble() {
        let (s, _) = geothermal_problem(4, 1, DataOverrides::default()).unwrap();
        let src = Sources {
            g: Some(Arc::new(|_, _, t| 1.0 + t)),
            ..Default::default()
        };
        let loads = assembled_loads(&s, &src).unwrap();
        let g1 = loads.g(1.0);
        let g0 = loads.g(0.0);
        assert_eq!(g1.len(), 9);
        for (a, b) in g1.iter().zip(&g0) {
            assert!((a - 2.0 * b).abs() < 1e-15);
        }
        assert!(loads.f(0.3).iter().all(|&v| v == 0.0));
    }
}
