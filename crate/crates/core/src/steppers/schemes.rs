//! One time step of every scheme, with iteration matrices factorized once.

use crate::conditions::{condition_reports, gamma as relaxation};
use crate::error::Result;
use crate::linalg::vector::{axpy, concat, dot, sub};
use crate::linalg::{Factorization, SparseMatrix};
use crate::problems::Loads;
use crate::system::AssembledSystem;

use super::config::{DampingAnchor, Scheme, SchemeConfig};

/// Coefficient vectors at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
}

impl State {
    pub fn zeros(sys: &AssembledSystem) -> Self {
        Self {
            u: vec![0.0; sys.n_u()],
            p: vec![0.0; sys.n_p()],
            theta: vec![0.0; sys.n_theta()],
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| a * x).collect();
        Self {
            u: s(&self.u),
            p: s(&self.p),
            theta: s(&self.theta),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.p).chain(&self.theta).all(|v| v.is_finite())
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInfo {
    /// norm of the (p, θ) increment of every inner sweep
    pub increments: Vec<f64>,
}

enum Prepared {
    /// implicit Euler or midpoint: one coupled solve
    Coupled(Factorization),
    Half {
        a: Factorization,
        sp: Factorization,
    },
    HalfIterative {
        a: Factorization,
        sp: Factorization,
        gamma: f64,
        anchor: DampingAnchor,
        iterations: usize,
    },
    Full {
        a: Factorization,
        p: Factorization,
        theta: Factorization,
    },
    Sigma {
        a: Factorization,
        p: Factorization,
        theta: Factorization,
        sigma: f64,
    },
    HfM {
        a: Factorization,
        sl: Factorization,
        iterations: usize,
    },
    Triangular {
        a: Factorization,
        p: Factorization,
        theta: Factorization,
        theta_first: bool,
        iterations: usize,
    },
}

/// A scheme bound to a system and step size.
pub struct Stepper<'a> {
    sys: &'a AssembledSystem,
    config: SchemeConfig,
    prepared: Prepared,
    dt: SparseMatrix,
    dtt: SparseMatrix,
    c_hat_t: SparseMatrix,
    /// `L_p M` and `L_θ M`
    lp_mass: SparseMatrix,
    lt_mass: SparseMatrix,
    /// matrix whose norm measures (p, θ) increments
    norm: Option<SparseMatrix>,
}

fn lin(a: f64, x: &SparseMatrix, b: f64, y: &SparseMatrix) -> SparseMatrix {
    SparseMatrix::lin_comb(a, x, b, y).expect("matching shapes")
}

fn pt_block(sys: &AssembledSystem, pp: &SparseMatrix, tt: &SparseMatrix) -> SparseMatrix {
    let nc = sys.c_hat.scaled(-1.0);
    let nct = sys.c_hat.transpose().scaled(-1.0);
    SparseMatrix::block(
        &[sys.n_p(), sys.n_theta()],
        &[sys.n_p(), sys.n_theta()],
        &[vec![Some(pp), Some(&nc)], vec![Some(&nct), Some(tt)]],
    )
    .expect("shapes checked")
}

/// `[[A, −Dᵀ, −D̃ᵀ], [D, C + sB, −Ĉ], [D̃, −Ĉᵀ, C̃ + sB̃]]`
pub fn coupled_matrix(sys: &AssembledSystem, s: f64) -> SparseMatrix {
    let ndt = sys.d.transpose().scaled(-1.0);
    let ndtt = sys.d_tilde.transpose().scaled(-1.0);
    let nc = sys.c_hat.scaled(-1.0);
    let nct = sys.c_hat.transpose().scaled(-1.0);
    let pp = lin(1.0, &sys.c, s, &sys.b);
    let tt = lin(1.0, &sys.c_tilde, s, &sys.b_tilde);
    let sizes = [sys.n_u(), sys.n_p(), sys.n_theta()];
    SparseMatrix::block(
        &sizes,
        &sizes,
        &[
            vec![Some(&sys.a), Some(&ndt), Some(&ndtt)],
            vec![Some(&sys.d), Some(&pp), Some(&nc)],
            vec![Some(&sys.d_tilde), Some(&nct), Some(&tt)],
        ],
    )
    .expect("shapes checked")
}

/// Relaxation factor `2/(2 + ω_HD)` from the first available condition report.
pub fn default_gamma(sys: &AssembledSystem) -> Result<f64> {
    let reports = condition_reports(sys)?;
    Ok(relaxation(reports[0].omega_hd))
}

fn energy(m: &SparseMatrix, v: &[f64]) -> f64 {
    dot(&m.mul_vec(v).expect("shape"), v).max(0.0).sqrt()
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a AssembledSystem, config: &SchemeConfig) -> Result<Self> {
        config.validate()?;
        let tau = config.tau;
        let a_fact = || Factorization::cholesky(&sys.a);
        // s·C + τB + l·M and its temperature counterpart
        let pp = |s: f64, l: f64| lin(1.0, &lin(s, &sys.c, tau, &sys.b), l, &sys.mass);
        let tt = |s: f64, l: f64| lin(1.0, &lin(s, &sys.c_tilde, tau, &sys.b_tilde), l, &sys.mass);
        let spd = |m: &SparseMatrix| Factorization::symmetric_or_lu(m);
        let mut norm = None;
        let prepared = match config.scheme {
            Scheme::ImplicitEuler => Prepared::Coupled(Factorization::lu(&coupled_matrix(sys, tau))?),
            Scheme::ImplicitMidpoint => Prepared::Coupled(Factorization::lu(&coupled_matrix(sys, 0.5 * tau))?),
            Scheme::SemiExplicitHalf => Prepared::Half {
                a: a_fact()?,
                sp: spd(&pt_block(sys, &pp(1.0, 0.0), &tt(1.0, 0.0)))?,
            },
            Scheme::SemiExplicitHalfIterative => {
                let sp_m = pt_block(sys, &pp(1.0, 0.0), &tt(1.0, 0.0));
                let gamma = match config.gamma {
                    Some(g) => g,
                    None => default_gamma(sys)?,
                };
                let f = Prepared::HalfIterative {
                    a: a_fact()?,
                    sp: spd(&sp_m)?,
                    gamma,
                    anchor: config.damping_anchor,
                    iterations: config.inner_iterations,
                };
                norm = Some(sp_m);
                f
            }
            Scheme::SemiExplicitFull => Prepared::Full {
                a: a_fact()?,
                p: spd(&pp(1.0, 0.0))?,
                theta: spd(&tt(1.0, 0.0))?,
            },
            Scheme::SigmaSplitting => Prepared::Sigma {
                a: a_fact()?,
                p: spd(&pp(config.sigma, 0.0))?,
                theta: spd(&tt(config.sigma, 0.0))?,
                sigma: config.sigma,
            },
            Scheme::HfMIterative => {
                let sl = pt_block(sys, &pp(1.0, config.l_p), &tt(1.0, config.l_theta));
                let f = Prepared::HfM {
                    a: a_fact()?,
                    sl: spd(&sl)?,
                    iterations: config.inner_iterations,
                };
                norm = Some(sl);
                f
            }
            Scheme::HFMIterative | Scheme::FHMIterative => {
                let pm = pp(1.0, config.l_p);
                let tm = tt(1.0, config.l_theta);
                norm = Some(
                    SparseMatrix::block(
                        &[sys.n_p(), sys.n_theta()],
                        &[sys.n_p(), sys.n_theta()],
                        &[vec![Some(&pm), None], vec![None, Some(&tm)]],
                    )
                    .expect("shapes"),
                );
                Prepared::Triangular {
                    a: a_fact()?,
                    p: spd(&pm)?,
                    theta: spd(&tm)?,
                    theta_first: config.scheme == Scheme::HFMIterative,
                    iterations: config.inner_iterations,
                }
            }
        };
        Ok(Self {
            sys,
            config: config.clone(),
            prepared,
            dt: sys.d.transpose(),
            dtt: sys.d_tilde.transpose(),
            c_hat_t: sys.c_hat.transpose(),
            lp_mass: sys.mass.scaled(config.l_p),
            lt_mass: sys.mass.scaled(config.l_theta),
            norm,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn tau(&self) -> f64 {
        self.config.tau
    }

    fn mv(m: &SparseMatrix, x: &[f64]) -> Vec<f64> {
        m.mul_vec(x).expect("shapes checked")
    }

    fn acc(y: &mut [f64], a: f64, m: &SparseMatrix, x: &[f64]) {
        m.mul_vec_acc(a, x, y).expect("shapes checked")
    }

    fn solve(f: &Factorization, rhs: &[f64]) -> Vec<f64> {
        f.solve_refined(rhs, 1).expect("shapes checked")
    }

    /// `D u + C p − Ĉ θ`
    fn mass_row_p(&self, s: &State) -> Vec<f64> {
        let mut r = Self::mv(&self.sys.d, &s.u);
        Self::acc(&mut r, 1.0, &self.sys.c, &s.p);
        Self::acc(&mut r, -1.0, &self.sys.c_hat, &s.theta);
        r
    }

    /// `D̃ u − Ĉᵀ p + C̃ θ`
    fn mass_row_theta(&self, s: &State) -> Vec<f64> {
        let mut r = Self::mv(&self.sys.d_tilde, &s.u);
        Self::acc(&mut r, -1.0, &self.c_hat_t, &s.p);
        Self::acc(&mut r, 1.0, &self.sys.c_tilde, &s.theta);
        r
    }

    /// `A⁻¹ (f + Dᵀ p + D̃ᵀ θ)`
    fn displacement(&self, a: &Factorization, f: &[f64], p: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut rhs = f.to_vec();
        Self::acc(&mut rhs, 1.0, &self.dt, p);
        Self::acc(&mut rhs, 1.0, &self.dtt, theta);
        Self::solve(a, &rhs)
    }

    fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let np = self.sys.n_p();
        (x[..np].to_vec(), x[np..].to_vec())
    }

    fn increment(&self, p_new: &[f64], t_new: &[f64], p_old: &[f64], t_old: &[f64]) -> f64 {
        let d = concat(&[&sub(p_new, p_old), &sub(t_new, t_old)]);
        energy(self.norm.as_ref().expect("iterative scheme"), &d)
    }

    /// Advances `cur` (at `t`) to `t + τ`. `prev` is the level before `cur`
    /// and only read by two-step schemes.
    pub fn step(&self, cur: &State, prev: &State, t: f64, loads: &Loads) -> (State, StepInfo) {
        let tau = self.config.tau;
        let t1 = t + tau;
        let sys = self.sys;
        let mut info = StepInfo::default();
        let state = match &self.prepared {
            Prepared::Coupled(f) => {
                let midpoint = self.config.scheme == Scheme::ImplicitMidpoint;
                let tl = if midpoint { t + 0.5 * tau } else { t1 };
                let mut r1 = loads.f(tl);
                let mut r2 = self.mass_row_p(cur);
                let mut r3 = self.mass_row_theta(cur);
                axpy(tau, &loads.g(tl), &mut r2);
                axpy(tau, &loads.h(tl), &mut r3);
                if midpoint {
                    // trapezoidal average of the algebraic row and of B p, B̃ θ
                    r1.iter_mut().for_each(|v| *v *= 2.0);
                    Self::acc(&mut r1, -1.0, &sys.a, &cur.u);
                    Self::acc(&mut r1, 1.0, &self.dt, &cur.p);
                    Self::acc(&mut r1, 1.0, &self.dtt, &cur.theta);
                    Self::acc(&mut r2, -0.5 * tau, &sys.b, &cur.p);
                    Self::acc(&mut r3, -0.5 * tau, &sys.b_tilde, &cur.theta);
                }
                let x = Self::solve(f, &concat(&[&r1, &r2, &r3]));
                let (nu, np) = (sys.n_u(), sys.n_p());
                State {
                    u: x[..nu].to_vec(),
                    p: x[nu..nu + np].to_vec(),
                    theta: x[nu + np..].to_vec(),
                }
            }
            Prepared::Half { a, sp } => {
                let u = self.displacement(a, &loads.f(t1), &cur.p, &cur.theta);
                let (p, theta) = self.pressure_temperature(sp, cur, &u, &loads.g(t1), &loads.h(t1));
                State { u, p, theta }
            }
            Prepared::HalfIterative {
                a,
                sp,
                gamma,
                anchor,
                iterations,
            } => {
                let (f1, g1, h1) = (loads.f(t1), loads.g(t1), loads.h(t1));
                let mut p = cur.p.clone();
                let mut theta = cur.theta.clone();
                let mut out = cur.clone();
                for k in 0..*iterations {
                    let u = self.displacement(a, &f1, &p, &theta);
                    let (ph, th) = self.pressure_temperature(sp, cur, &u, &g1, &h1);
                    info.increments.push(self.increment(&ph, &th, &p, &theta));
                    if k + 1 < *iterations {
                        let (ap, at) = match anchor {
                            DampingAnchor::PreviousIterate => (&p, &theta),
                            DampingAnchor::PreviousStep => (&cur.p, &cur.theta),
                        };
                        let damp = |hat: &[f64], base: &[f64]| -> Vec<f64> {
                            hat.iter().zip(base).map(|(h, b)| gamma * h + (1.0 - gamma) * b).collect()
                        };
                        let np = damp(&ph, ap);
                        let nt = damp(&th, at);
                        p = np;
                        theta = nt;
                    } else {
                        out = State { u, p: ph, theta: th };
                    }
                }
                out
            }
            Prepared::Full { a, p: fp, theta: ft } => {
                let u = self.displacement(a, &loads.f(t1), &cur.p, &cur.theta);
                let du = sub(&cur.u, &u);
                let mut rp = Self::mv(&sys.d, &du);
                Self::acc(&mut rp, 1.0, &sys.c, &cur.p);
                Self::acc(&mut rp, 1.0, &sys.c_hat, &sub(&cur.theta, &prev.theta));
                axpy(tau, &loads.g(t1), &mut rp);
                let mut rt = Self::mv(&sys.d_tilde, &du);
                Self::acc(&mut rt, 1.0, &sys.c_tilde, &cur.theta);
                Self::acc(&mut rt, 1.0, &self.c_hat_t, &sub(&cur.p, &prev.p));
                axpy(tau, &loads.h(t1), &mut rt);
                State {
                    u,
                    p: Self::solve(fp, &rp),
                    theta: Self::solve(ft, &rt),
                }
            }
            Prepared::Sigma {
                a,
                p: fp,
                theta: ft,
                sigma,
            } => {
                let s = *sigma;
                let u = self.displacement(a, &loads.f(t1), &cur.p, &cur.theta);
                let du = sub(&cur.u, &u);
                let mut rp = Self::mv(&sys.d, &du);
                Self::acc(&mut rp, 2.0 * s - 1.0, &sys.c, &cur.p);
                Self::acc(&mut rp, 1.0, &sys.c_hat, &cur.theta);
                Self::acc(&mut rp, 1.0 - s, &sys.c, &prev.p);
                Self::acc(&mut rp, -1.0, &sys.c_hat, &prev.theta);
                axpy(tau, &loads.g(t1), &mut rp);
                let mut rt = Self::mv(&sys.d_tilde, &du);
                Self::acc(&mut rt, 2.0 * s - 1.0, &sys.c_tilde, &cur.theta);
                Self::acc(&mut rt, 1.0, &self.c_hat_t, &cur.p);
                Self::acc(&mut rt, 1.0 - s, &sys.c_tilde, &prev.theta);
                Self::acc(&mut rt, -1.0, &self.c_hat_t, &prev.p);
                axpy(tau, &loads.h(t1), &mut rt);
                State {
                    u,
                    p: Self::solve(fp, &rp),
                    theta: Self::solve(ft, &rt),
                }
            }
            Prepared::HfM { a, sl, iterations } => {
                let f1 = loads.f(t1);
                let mut bp = self.mass_row_p(cur);
                let mut bt = self.mass_row_theta(cur);
                axpy(tau, &loads.g(t1), &mut bp);
                axpy(tau, &loads.h(t1), &mut bt);
                let mut it = cur.clone();
                for _ in 0..*iterations {
                    let mut rp = bp.clone();
                    Self::acc(&mut rp, 1.0, &self.lp_mass, &it.p);
                    Self::acc(&mut rp, -1.0, &sys.d, &it.u);
                    let mut rt = bt.clone();
                    Self::acc(&mut rt, 1.0, &self.lt_mass, &it.theta);
                    Self::acc(&mut rt, -1.0, &sys.d_tilde, &it.u);
                    let (p, theta) = self.split(&Self::solve(sl, &concat(&[&rp, &rt])));
                    info.increments.push(self.increment(&p, &theta, &it.p, &it.theta));
                    let u = self.displacement(a, &f1, &p, &theta);
                    it = State { u, p, theta };
                }
                it
            }
            Prepared::Triangular {
                a,
                p: fp,
                theta: ft,
                theta_first,
                iterations,
            } => {
                let f1 = loads.f(t1);
                let mut bp = self.mass_row_p(cur);
                let mut bt = self.mass_row_theta(cur);
                axpy(tau, &loads.g(t1), &mut bp);
                axpy(tau, &loads.h(t1), &mut bt);
                let mut it = cur.clone();
                for _ in 0..*iterations {
                    let mut rp = bp.clone();
                    Self::acc(&mut rp, 1.0, &self.lp_mass, &it.p);
                    Self::acc(&mut rp, -1.0, &sys.d, &it.u);
                    let mut rt = bt.clone();
                    Self::acc(&mut rt, 1.0, &self.lt_mass, &it.theta);
                    Self::acc(&mut rt, -1.0, &sys.d_tilde, &it.u);
                    let (p, theta) = if *theta_first {
                        Self::acc(&mut rt, 1.0, &self.c_hat_t, &it.p);
                        let theta = Self::solve(ft, &rt);
                        Self::acc(&mut rp, 1.0, &sys.c_hat, &theta);
                        (Self::solve(fp, &rp), theta)
                    } else {
                        Self::acc(&mut rp, 1.0, &sys.c_hat, &it.theta);
                        let p = Self::solve(fp, &rp);
                        Self::acc(&mut rt, 1.0, &self.c_hat_t, &p);
                        (p, Self::solve(ft, &rt))
                    };
                    info.increments.push(self.increment(&p, &theta, &it.p, &it.theta));
                    let u = self.displacement(a, &f1, &p, &theta);
                    it = State { u, p, theta };
                }
                it
            }
        };
        (state, info)
    }

    /// The coupled (p, θ) solve of the half-decoupled schemes with the new
    /// displacement `u`.
    fn pressure_temperature(
        &self,
        sp: &Factorization,
        cur: &State,
        u: &[f64],
        g: &[f64],
        h: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let du = sub(&cur.u, u);
        let mut rp = Self::mv(&self.sys.d, &du);
        Self::acc(&mut rp, 1.0, &self.sys.c, &cur.p);
        Self::acc(&mut rp, -1.0, &self.sys.c_hat, &cur.theta);
        axpy(self.config.tau, g, &mut rp);
        let mut rt = Self::mv(&self.sys.d_tilde, &du);
        Self::acc(&mut rt, -1.0, &self.c_hat_t, &cur.p);
        Self::acc(&mut rt, 1.0, &self.sys.c_tilde, &cur.theta);
        axpy(self.config.tau, h, &mut rt);
        self.split(&Self::solve(sp, &concat(&[&rp, &rt])))
    }
}
