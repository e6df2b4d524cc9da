use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};

use super::*;
use crate::linalg::vector::{concat, sub};
use crate::linalg::SparseMatrix;
use crate::problems::{geothermal_problem, steady_state, toy_system, DataOverrides, Loads};

fn rel(a: &State, b: &State) -> f64 {
    let x = concat(&[&a.u, &a.p, &a.theta]);
    let y = concat(&[&b.u, &b.p, &b.theta]);
    norm2(&sub(&x, &y)) / norm2(&y).max(1e-300)
}

fn cfg(scheme: Scheme, tau: f64) -> SchemeConfig {
    SchemeConfig::new(scheme, tau)
}

fn initial(sys: &AssembledSystem, data: &ProblemData) -> State {
    State {
        u: consistent_u0(sys, &data.p0, &data.theta0, &data.loads.f(0.0)).unwrap(),
        p: data.p0.clone(),
        theta: data.theta0.clone(),
    }
}

fn toy_data(p0: f64, theta0: f64, loads: Loads, t: f64) -> ProblemData {
    ProblemData {
        p0: vec![p0],
        theta0: vec![theta0],
        loads,
        final_time: t,
    }
}

fn geo(n: usize) -> (AssembledSystem, ProblemData) {
    geothermal_problem(n, 2, DataOverrides::default()).unwrap()
}

#[test]
fn steady_state_is_fixed_point_for_every_scheme() {
    let sys = toy_system(0.3, 2.0);
    let (f, g, h) = (vec![1.0, -0.5, 0.25], vec![0.7], vec![-0.3]);
    let (u, p, theta) = steady_state(&sys, &f, &g, &h).unwrap();
    let steady = State { u, p, theta };
    let data = toy_data(steady.p[0], steady.theta[0], Loads::constant(f, g, h), 12.5);
    for scheme in Scheme::ALL {
        let traj = run(&sys, &data, &SchemeConfig::new(scheme, 0.125)).unwrap();
        assert_eq!(traj.states.len(), 101);
        for s in &traj.states {
            assert!(rel(s, &steady) < 1e-10, "{scheme}: {}", rel(s, &steady));
        }
    }
}

#[test]
fn zero_data_gives_zero() {
    let sys = toy_system(0.3, 2.0);
    let data = toy_data(0.0, 0.0, Loads::zero(3, 1, 1), 0.5);
    for scheme in Scheme::ALL {
        let traj = run(&sys, &data, &cfg(scheme, 0.1)).unwrap();
        for s in &traj.states {
            assert!(s.u.iter().chain(&s.p).chain(&s.theta).all(|v| *v == 0.0), "{scheme}");
        }
    }
}

#[test]
fn implicit_euler_matches_dense_solve() {
    let alpha = 0.3;
    let tau = 0.05;
    let sys = toy_system(alpha, 2.0);
    let data = toy_data(1.0, 1.0, Loads::zero(3, 1, 1), tau);
    let traj = run(&sys, &data, &cfg(Scheme::ImplicitEuler, tau)).unwrap();

    let s = 1.0 / (2.0 - 2f64.sqrt());
    let d = [2.0 * alpha, alpha, 2.0 * alpha];
    let mut m = DMatrix::<f64>::zeros(5, 5);
    for i in 0..3 {
        m[(i, i)] = 2.0 * s;
        if i + 1 < 3 {
            m[(i, i + 1)] = -s;
            m[(i + 1, i)] = -s;
        }
        m[(i, 3)] = -d[i];
        m[(i, 4)] = -d[i];
        m[(3, i)] = d[i];
        m[(4, i)] = d[i];
    }
    m[(3, 3)] = 2.0 + tau * 2.0;
    m[(3, 4)] = -0.5;
    m[(4, 3)] = -0.5;
    m[(4, 4)] = 2.0 + tau;
    let u0 = &traj.states[0].u;
    let du0: f64 = d.iter().zip(u0).map(|(a, b)| a * b).sum();
    let rhs = DVector::from_vec(vec![0.0, 0.0, 0.0, du0 + 2.0 - 0.5, du0 - 0.5 + 2.0]);
    let x = m.lu().solve(&rhs).unwrap();
    let got = traj.last();
    let want = State {
        u: x.as_slice()[..3].to_vec(),
        p: vec![x[3]],
        theta: vec![x[4]],
    };
    assert!(rel(got, &want) < 1e-12);
}

fn decoupled_toy() -> AssembledSystem {
    let mut sys = toy_system(0.3, 2.0);
    sys.d = SparseMatrix::zeros(1, 3);
    sys.d_tilde = SparseMatrix::zeros(1, 3);
    sys
}

#[test]
fn decoupled_limits_match_implicit_euler() {
    let sys = decoupled_toy();
    let data = toy_data(1.0, -0.5, Loads::constant(vec![1.0, 0.0, 0.0], vec![0.2], vec![0.1]), 0.5);
    let ie = run(&sys, &data, &cfg(Scheme::ImplicitEuler, 0.1)).unwrap();
    let half = run(&sys, &data, &cfg(Scheme::SemiExplicitHalf, 0.1)).unwrap();
    let mut c = cfg(Scheme::HfMIterative, 0.1);
    c.l_p = 0.0;
    c.l_theta = 0.0;
    c.inner_iterations = 1;
    let hfm = run(&sys, &data, &c).unwrap();
    for n in 0..ie.states.len() {
        assert!(rel(&half.states[n], &ie.states[n]) < 1e-12);
        assert!(rel(&hfm.states[n], &ie.states[n]) < 1e-12);
    }
}

#[test]
fn half_scheme_equals_reduced_delay_euler() {
    let (sys, mut data) = geo(4);
    let nu = sys.n_u();
    data.loads.f = Arc::new(move |t| (0..nu).map(|i| (t * (1.0 + i as f64 * 0.01)).sin()).collect());
    let tau = 0.125;
    let traj = run(&sys, &data, &cfg(Scheme::SemiExplicitHalf, tau)).unwrap();
    let pb = reduced_delay_problem(&sys, &data.loads, tau).unwrap();
    let p0 = concat(&[&data.p0, &data.theta0]);
    let delay = DelayStepper::new(&pb, tau).unwrap().run(&p0, None, 8).unwrap();
    for (s, d) in traj.states.iter().zip(&delay) {
        let x = concat(&[&s.p, &s.theta]);
        assert!(norm2(&sub(&x, d)) <= 1e-10 * norm2(d));
    }
}

#[test]
fn sigma_one_is_semi_explicit_full() {
    let (sys, data) = geo(4);
    for startup in [Startup::ConstantHistory, Startup::ImplicitEulerStep] {
        let mut full = cfg(Scheme::SemiExplicitFull, 0.125);
        full.startup = startup;
        let mut sigma = full.clone();
        sigma.scheme = Scheme::SigmaSplitting;
        sigma.sigma = 1.0;
        let a = run(&sys, &data, &full).unwrap();
        let b = run(&sys, &data, &sigma).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(rel(x, y) < 1e-10);
        }
    }
}

#[test]
fn full_scheme_without_thermal_coupling_is_block_triangular() {
    let mut sys = toy_system(0.3, 2.0);
    sys.c_hat = SparseMatrix::zeros(1, 1);
    let tau = 0.1;
    let data = toy_data(1.0, 0.5, Loads::constant(vec![0.1, 0.2, 0.3], vec![0.4], vec![0.5]), tau);
    let traj = run(&sys, &data, &cfg(Scheme::SemiExplicitFull, tau)).unwrap();
    // hand solve: u from the old scalars, then two scalar equations
    let x0 = &traj.states[0];
    let a = DMatrix::from_row_slice(3, 3, &sys.a.to_dense());
    let d = DVector::from_vec(vec![0.6, 0.3, 0.6]);
    let u1 = a.clone().lu().solve(&(DVector::from_vec(vec![0.1, 0.2, 0.3]) + &d * 1.5)).unwrap();
    let du = d.dot(&(DVector::from_column_slice(&x0.u) - &u1));
    let p1 = (du + 2.0 * 1.0 + tau * 0.4) / (2.0 + tau * 2.0);
    let t1 = (du + 2.0 * 0.5 + tau * 0.5) / (2.0 + tau);
    let got = traj.last();
    assert!(norm2(&sub(&got.u, u1.as_slice())) < 1e-12);
    assert_relative_eq!(got.p[0], p1, max_relative = 1e-12);
    assert_relative_eq!(got.theta[0], t1, max_relative = 1e-12);
}

#[test]
fn sigma_splitting_runs_on_toy() {
    let sys = toy_system(0.63, 0.6);
    let data = toy_data(1.0, 1.0, Loads::zero(3, 1, 1), 0.1);
    // coarse steps: the splitting is known to blow up for small τ at this σ
    let mut c = cfg(Scheme::SigmaSplitting, 0.1 / 8.0);
    c.sigma = 0.77;
    let traj = run(&sys, &data, &c).unwrap();
    assert_eq!(traj.states.len(), 9);
    assert!(traj.states.iter().all(State::is_finite));
}

#[test]
fn stabilized_iterations_converge_to_implicit_euler() {
    let (sys, data) = geo(4);
    let tau = 0.125;
    let ie = run(&sys, &data, &cfg(Scheme::ImplicitEuler, tau)).unwrap();
    for scheme in [Scheme::HfMIterative, Scheme::HFMIterative, Scheme::FHMIterative] {
        let mut c = cfg(scheme, tau);
        c.inner_iterations = 200;
        c.final_time = Some(tau);
        let t = run(&sys, &data, &c).unwrap();
        assert!(rel(t.last(), &ie.states[1]) < 1e-8, "{scheme}: {}", rel(t.last(), &ie.states[1]));
        if scheme == Scheme::HfMIterative {
            let inc = &t.info[0].increments;
            assert_eq!(inc.len(), 200);
            for k in (1..199).take_while(|&k| inc[k + 1] > 1e-12 * inc[0]) {
                assert!(inc[k + 1] <= inc[k], "sweep {k}: {} > {}", inc[k + 1], inc[k]);
            }
        }
    }
}

#[test]
fn triangular_orderings_coincide_without_thermal_coupling() {
    let mut sys = toy_system(0.3, 2.0);
    sys.c_hat = SparseMatrix::zeros(1, 1);
    let data = toy_data(1.0, 0.5, Loads::constant(vec![0.1, 0.2, 0.3], vec![0.4], vec![0.5]), 0.5);
    let a = run(&sys, &data, &cfg(Scheme::HFMIterative, 0.1)).unwrap();
    let b = run(&sys, &data, &cfg(Scheme::FHMIterative, 0.1)).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!(rel(x, y) < 1e-13);
    }
}

#[test]
fn damped_iteration_limits() {
    let (sys, data) = geo(4);
    let tau = 0.125;
    let half = run(&sys, &data, &cfg(Scheme::SemiExplicitHalf, tau)).unwrap();
    let mut c = cfg(Scheme::SemiExplicitHalfIterative, tau);
    c.inner_iterations = 1;
    let one = run(&sys, &data, &c).unwrap();
    for (x, y) in one.states.iter().zip(&half.states) {
        assert_eq!(x, y);
    }

    let ie = run(&sys, &data, &cfg(Scheme::ImplicitEuler, tau)).unwrap();
    c.inner_iterations = 200;
    c.gamma = Some(1.0);
    c.final_time = Some(tau);
    let many = run(&sys, &data, &c).unwrap();
    assert!(rel(many.last(), &ie.states[1]) < 1e-8);
}

#[test]
fn midpoint_reproduces_linear_solutions() {
    // P(t) = P0 + P1 t, u(t) = A⁻¹(f(t) + 𝔻ᵀP(t)) with f linear in time
    let sys = toy_system(0.3, 2.0);
    let (p0, p1, q0, q1) = (1.0, -0.4, 0.5, 0.8);
    let fv = |t: f64| vec![0.1 + t, -0.2 * t, 0.3];
    let u_of = |t: f64| consistent_u0(&sys, &[p0 + p1 * t], &[q0 + q1 * t], &fv(t)).unwrap();
    let ud: Vec<f64> = sub(&u_of(1.0), &u_of(0.0));
    let du = sys.d.mul_vec(&ud).unwrap()[0];
    let dtu = sys.d_tilde.mul_vec(&ud).unwrap()[0];
    // G(t) = 𝔻u̇ + ℂṖ + 𝔹P
    let g = move |t: f64| vec![du + 2.0 * p1 - 0.5 * q1 + 2.0 * (p0 + p1 * t)];
    let h = move |t: f64| vec![dtu - 0.5 * p1 + 2.0 * q1 + (q0 + q1 * t)];
    let loads = Loads {
        f: Arc::new(fv),
        g: Arc::new(g),
        h: Arc::new(h),
    };
    let data = toy_data(p0, q0, loads, 1.0);
    let traj = run(&sys, &data, &cfg(Scheme::ImplicitMidpoint, 0.25)).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        assert_relative_eq!(s.p[0], p0 + p1 * t, max_relative = 1e-12);
        assert_relative_eq!(s.theta[0], q0 + q1 * t, max_relative = 1e-12);
        assert!(norm2(&sub(&s.u, &u_of(*t))) < 1e-12);
    }
}

#[test]
fn steps_are_linear() {
    let (sys, data) = geo(3);
    let x = initial(&sys, &data);
    let loads = Loads::zero(sys.n_u(), sys.n_p(), sys.n_theta());
    let a = -2.5;
    for scheme in Scheme::ALL {
        let st = Stepper::new(&sys, &cfg(scheme, 0.125)).unwrap();
        let (y, _) = st.step(&x, &x, 0.0, &loads);
        let (ya, _) = st.step(&x.scaled(a), &x.scaled(a), 0.0, &loads);
        assert!(rel(&ya, &y.scaled(a)) < 1e-12, "{scheme}");
    }
}

#[test]
fn geothermal_implicit_euler_run() {
    let (sys, data) = geo(4);
    let traj = run(&sys, &data, &cfg(Scheme::ImplicitEuler, 0.125)).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.states.len(), 9);
    assert!(traj.states.iter().all(State::is_finite));
    assert_relative_eq!(traj.final_time(), 1.0, max_relative = 1e-15);
}

#[test]
fn single_step_run_equals_step() {
    let (sys, data) = geo(3);
    let x = initial(&sys, &data);
    for scheme in Scheme::ALL {
        let mut c = cfg(scheme, 0.25);
        c.final_time = Some(0.25);
        let traj = run(&sys, &data, &c).unwrap();
        let (y, _) = Stepper::new(&sys, &c).unwrap().step(&x, &x, 0.0, &data.loads);
        assert_eq!(traj.last(), &y);
    }
}

#[test]
fn divergence_is_flagged() {
    // an unstable splitting on a strongly coupled toy
    let sys = toy_system(0.63, 0.55);
    let data = toy_data(1.0, 1.0, Loads::zero(3, 1, 1), 200.0);
    let mut c = cfg(Scheme::SigmaSplitting, 0.1 / 256.0);
    c.sigma = 0.3;
    let traj = run(&sys, &data, &c).unwrap();
    if let RunStatus::Diverged { step } = traj.status {
        assert_eq!(traj.states.len(), step + 1);
    }
}

#[test]
fn step_count_checks_multiples() {
    assert_eq!(step_count(1.0, 0.125).unwrap(), 8);
    assert_eq!(step_count(0.1, 0.1 / 256.0).unwrap(), 256);
    assert!(step_count(1.0, 0.3).is_err());
    assert!(step_count(0.1, 0.2).is_err());
}
