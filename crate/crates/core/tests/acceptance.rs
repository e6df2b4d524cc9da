//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::Parser;

use thermoporo::cli::{execute, Cli};
use thermoporo::conditions::{spectral_bounds, CouplingConstants};
use thermoporo::experiments::{convergence_study, fit_slope, halving_taus, sharpness_sweep, CellClass, SweepConfig};
use thermoporo::linalg::vector::{concat, norm2, sub};
use thermoporo::linalg::SparseMatrix;
use thermoporo::problems::{consistent_u0, geothermal_problem, steady_state, toy_system, DataOverrides, Loads};
use thermoporo::steppers::{
    reduced_delay_problem, run, DelayProblem, DelayStepper, Scheme, SchemeConfig, State, Stepper,
};
use thermoporo::{AssembledSystem, ProblemData};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel_state(a: &State, b: &State) -> f64 {
    let x = concat(&[&a.u, &a.p, &a.theta]);
    let y = concat(&[&b.u, &b.p, &b.theta]);
    norm2(&sub(&x, &y)) / norm2(&y).max(1e-300)
}

fn geo(n: usize) -> (AssembledSystem, ProblemData) {
    geothermal_problem(n, 2, DataOverrides::default()).expect("geothermal preset")
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit {
        Ok(())
    } else {
        Err(format!("took {:.1} s, limit {limit} s", elapsed.as_secs_f64()))
    }
}

fn cli(args: &[&str]) -> Result<String, String> {
    let parsed = Cli::try_parse_from(std::iter::once("thermoporo").chain(args.iter().copied()))
        .map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    execute(&parsed.command, &mut out).map_err(|e| e.to_string())?;
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn conditions_geothermal() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let text = cli(&["check-conditions", "--preset", "geothermal", "--out", dir.path().to_str().unwrap()])?;
    let elapsed = start.elapsed();
    let line = text
        .lines()
        .find(|l| l.starts_with("physical mode:"))
        .ok_or("no physical mode line in the output")?;
    let value = |key: &str| -> Result<f64, String> {
        let rest = line.split(key).nth(1).ok_or(format!("{key} missing"))?;
        let num = rest.trim_start_matches([' ', '=']).split(',').next().unwrap().trim();
        num.parse().map_err(|_| format!("cannot parse {key} from `{line}`"))
    };
    let (hd, fd) = (value("omega_HD")?, value("omega_FD")?);
    if (hd - 0.947).abs() > 1e-3 || (fd - 0.947).abs() > 1e-3 {
        return Err(format!("omega_HD = {hd}, omega_FD = {fd}"));
    }
    within(elapsed, 1.0)?;
    Ok(format!("omega_HD = {hd:.4}, omega_FD = {fd:.4} in {:.2} s", elapsed.as_secs_f64()))
}

fn toy_constants() -> Outcome {
    let cap = 3.0 + 2.0 * 2f64.sqrt();
    let mut worst = 0.0f64;
    for alpha in [0.05, 0.2, 0.41, 0.63] {
        let sb = spectral_bounds(&toy_system(alpha, 2.0)).map_err(|e| e.to_string())?;
        let k = CouplingConstants::spectral(&sb);
        let ra = (k.c_a - 1.0).abs();
        let rca = (k.cap_a - cap).abs() / cap;
        if ra > 1e-8 || rca > 1e-8 {
            return Err(format!("alpha = {alpha}: c_a = {}, C_a = {}", k.c_a, k.cap_a));
        }
        for (name, v) in [("c_d", k.c_d), ("C_d", k.cap_d)] {
            if (v - 3.0 * alpha).abs() > 1e-10 {
                return Err(format!("alpha = {alpha}: {name} = {v}, expected {}", 3.0 * alpha));
            }
        }
        worst = worst.max(ra).max(rca);
    }
    Ok(format!("max relative deviation of c_a, C_a = {worst:.1e}"))
}

fn order_one() -> Outcome {
    let (sys, data) = geo(8);
    let schemes: Vec<SchemeConfig> = [Scheme::ImplicitEuler, Scheme::SemiExplicitHalf, Scheme::SemiExplicitFull]
        .into_iter()
        .map(|s| SchemeConfig::new(s, 0.125))
        .collect();
    let taus = halving_taus(0.125, 6);
    let reference = SchemeConfig::new(Scheme::ImplicitMidpoint, taus[5] / 8.0);
    let start = Instant::now();
    let table = convergence_study(&sys, &data, &schemes, &taus, &reference).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut parts = Vec::new();
    for c in &schemes {
        let label = c.scheme.to_string();
        let s = table.slope(&label).ok_or(format!("no slope for {label}"))?;
        if !(0.85..=1.15).contains(&s) {
            return Err(format!("{label} slope {s:.3}"));
        }
        parts.push(format!("{label} {s:.3}"));
    }
    within(elapsed, 60.0)?;
    Ok(format!("{} in {:.1} s", parts.join(", "), elapsed.as_secs_f64()))
}

fn equivalences() -> Outcome {
    let (sys, data) = geo(8);
    let tau = 1.0 / 64.0;

    // sigma = 1 against the full scheme
    let full = run(&sys, &data, &SchemeConfig::new(Scheme::SemiExplicitFull, tau)).map_err(|e| e.to_string())?;
    let mut sc = SchemeConfig::new(Scheme::SigmaSplitting, tau);
    sc.sigma = 1.0;
    let sigma = run(&sys, &data, &sc).map_err(|e| e.to_string())?;
    if full.states.len() != 65 || sigma.states.len() != 65 {
        return Err("expected 64 steps".into());
    }
    let a = full.states.iter().zip(&sigma.states).map(|(x, y)| rel_state(y, x)).fold(0.0, f64::max);
    if a > 1e-10 {
        return Err(format!("sigma = 1 vs full: {a:.2e}"));
    }

    // half scheme against the reduced delay problem, constant nonzero f
    let mut data_f = data.clone();
    data_f.loads = Loads::constant(
        (0..sys.n_u()).map(|i| 0.1 * ((i % 7) as f64 - 3.0)).collect(),
        vec![0.0; sys.n_p()],
        vec![0.0; sys.n_theta()],
    );
    let half = run(&sys, &data_f, &SchemeConfig::new(Scheme::SemiExplicitHalf, tau)).map_err(|e| e.to_string())?;
    let pb = reduced_delay_problem(&sys, &data_f.loads, tau).map_err(|e| e.to_string())?;
    let p0 = concat(&[&data_f.p0, &data_f.theta0]);
    let delay = DelayStepper::new(&pb, tau)
        .and_then(|s| s.run(&p0, None, 64))
        .map_err(|e| e.to_string())?;
    let b = half
        .states
        .iter()
        .zip(&delay)
        .map(|(s, d)| norm2(&sub(&concat(&[&s.p, &s.theta]), d)) / norm2(d))
        .fold(0.0, f64::max);
    if half.states.len() != 65 || b > 1e-10 {
        return Err(format!("half vs delay Euler: {b:.2e}"));
    }

    // stabilized iteration against implicit Euler, one step from the same state
    let x0 = State {
        u: consistent_u0(&sys, &data.p0, &data.theta0, &data.loads.f(0.0)).map_err(|e| e.to_string())?,
        p: data.p0.clone(),
        theta: data.theta0.clone(),
    };
    let mut c = 0.0f64;
    for t in [0.125, 1.0 / 64.0] {
        let ie = Stepper::new(&sys, &SchemeConfig::new(Scheme::ImplicitEuler, t)).map_err(|e| e.to_string())?;
        let mut hc = SchemeConfig::new(Scheme::HfMIterative, t);
        hc.inner_iterations = 200;
        hc.l_p = 0.025;
        hc.l_theta = 0.025;
        let hfm = Stepper::new(&sys, &hc).map_err(|e| e.to_string())?;
        let (y_ie, _) = ie.step(&x0, &x0, 0.0, &data.loads);
        let (y_it, _) = hfm.step(&x0, &x0, 0.0, &data.loads);
        c = c.max(rel_state(&y_it, &y_ie));
    }
    if c > 1e-8 {
        return Err(format!("hf_m_iterative vs implicit Euler: {c:.2e}"));
    }
    Ok(format!("(a) {a:.1e}, (b) {b:.1e}, (c) {c:.1e}"))
}

fn steady_states() -> Outcome {
    let mut worst = 0.0f64;
    let toy = toy_system(0.3, 2.0);
    let toy_loads = (vec![1.0, -0.5, 0.25], vec![0.7], vec![-0.3]);
    let (geo_sys, _) = geo(4);
    let geo_loads = (
        (0..geo_sys.n_u()).map(|i| ((i % 5) as f64 - 2.0) * 0.3).collect::<Vec<_>>(),
        vec![1.0; geo_sys.n_p()],
        vec![-0.5; geo_sys.n_theta()],
    );
    for (sys, (f, g, h)) in [(&toy, toy_loads), (&geo_sys, geo_loads)] {
        let (u, p, theta) = steady_state(sys, &f, &g, &h).map_err(|e| e.to_string())?;
        let steady = State { u, p, theta };
        let data = ProblemData {
            p0: steady.p.clone(),
            theta0: steady.theta.clone(),
            loads: Loads::constant(f, g, h),
            final_time: 100.0 * 0.05,
        };
        for scheme in Scheme::ALL {
            let traj = run(sys, &data, &SchemeConfig::new(scheme, 0.05)).map_err(|e| e.to_string())?;
            if traj.states.len() != 101 {
                return Err(format!("{scheme}: {} levels", traj.states.len()));
            }
            let d = traj.states.iter().map(|s| rel_state(s, &steady)).fold(0.0, f64::max);
            if d > 1e-9 {
                return Err(format!("{scheme}: drift {d:.2e}"));
            }
            worst = worst.max(d);
        }
    }
    Ok(format!("{} schemes, max drift {worst:.1e}", Scheme::ALL.len()))
}

fn sharpness() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for scheme in [Scheme::SemiExplicitHalf, Scheme::SemiExplicitFull] {
        let cfg = SweepConfig {
            scheme,
            rows: 16,
            cols: 16,
            ..SweepConfig::default()
        };
        let cells = sharpness_sweep(&cfg).map_err(|e| e.to_string())?;
        let bad: Vec<_> = cells.iter().filter(|c| c.omega <= 1.0 && c.e_total.partial_cmp(&1e-2) != Some(std::cmp::Ordering::Less)).collect();
        if let Some(c) = bad.first() {
            return Err(format!(
                "{scheme}: omega = {:.3} <= 1 but e_T = {:.2e} at alpha = {:.3}, c0_tilde = {:.3}",
                c.omega, c.e_total, c.alpha, c.c0_tilde
            ));
        }
        let sound = cells.iter().filter(|c| c.omega <= 1.0).count();
        let diverged = cells.iter().filter(|c| c.class == CellClass::Diverged).count();
        if scheme == Scheme::SemiExplicitFull {
            // upper quarter of α, lower quarter of c̃₀ − ĉ₀
            let corner = cells
                .iter()
                .filter(|c| c.row >= 12 && c.col < 4 && c.class == CellClass::Diverged)
                .count();
            if corner == 0 {
                return Err("no diverged cell at large alpha and small c0_tilde".into());
            }
            parts.push(format!("{scheme}: {sound} cells with omega <= 1 converge, {diverged} diverged ({corner} in the strongly coupled corner)"));
        } else {
            parts.push(format!("{scheme}: {sound} cells with omega <= 1 converge, {diverged} diverged"));
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 120.0)?;
    Ok(format!("{} in {:.1} s", parts.join("; "), elapsed.as_secs_f64()))
}

fn manufactured_delay(e: SparseMatrix, k: SparseMatrix, m: SparseMatrix) -> Result<f64, String> {
    let n = e.nrows();
    let exact = move |t: f64| -> Vec<f64> { (0..n).map(|i| (t + i as f64).cos() + 0.5 * (2.0 * t).sin()).collect() };
    let deriv = move |t: f64| -> Vec<f64> { (0..n).map(|i| -(t + i as f64).sin() + (2.0 * t).cos()).collect() };
    let final_time = 1.0;
    let mut points = Vec::new();
    for tau in halving_taus(0.1, 6) {
        let (e2, k2, m2) = (e.clone(), k.clone(), m.clone());
        // r = E p' + K p + M p'(t − τ) for the exact solution
        let r = Arc::new(move |t: f64| -> Vec<f64> {
            let mut out = e2.mul_vec(&deriv(t)).expect("shape");
            k2.mul_vec_acc(1.0, &exact(t), &mut out).expect("shape");
            m2.mul_vec_acc(1.0, &deriv(t - tau), &mut out).expect("shape");
            out
        });
        let pb = DelayProblem {
            e: e.clone(),
            k: k.clone(),
            m: m.clone(),
            r,
        };
        let steps = (final_time / tau).round() as usize;
        let p1 = exact(tau);
        let traj = DelayStepper::new(&pb, tau)
            .and_then(|s| s.run(&exact(0.0), Some(&p1), steps))
            .map_err(|e| e.to_string())?;
        let err = norm2(&sub(traj.last().unwrap(), &exact(steps as f64 * tau)));
        points.push((tau, err));
    }
    fit_slope(&points).ok_or("no usable points".into())
}

fn delay_order() -> Outcome {
    let scalar = manufactured_delay(
        SparseMatrix::from_diagonal(&[2.0]),
        SparseMatrix::from_diagonal(&[1.5]),
        SparseMatrix::from_diagonal(&[1.0]),
    )?;
    // c_E = 2 − √2 ≈ 0.586, C_M ≈ 0.462
    let e = SparseMatrix::from_rows(&[&[2.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 2.0]]).unwrap();
    let k = SparseMatrix::from_rows(&[&[3.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 3.0]]).unwrap();
    let m = SparseMatrix::from_rows(&[&[0.4, 0.1, 0.0], &[0.1, 0.3, 0.0], &[0.0, 0.0, 0.2]]).unwrap();
    let three = manufactured_delay(e, k, m)?;
    for (name, s) in [("scalar", scalar), ("3x3", three)] {
        if !(0.85..=1.15).contains(&s) {
            return Err(format!("{name} slope {s:.3}"));
        }
    }
    Ok(format!("scalar {scalar:.3}, 3x3 {three:.3}"))
}

fn read_all(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap_or_default()))
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 3] = [
        &["convergence", "--preset", "geothermal", "--n", "4", "--tau", "0.25:halve:3"],
        &["sharpness", "--grid", "4x4"],
        &["run", "--preset", "toy", "--schemes", "implicit_euler,semi_explicit_full", "--tau", "0.0125"],
    ];
    let dirs: Vec<_> = (0..2).map(|_| tempfile::tempdir().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    for d in &dirs {
        for c in commands {
            let mut args = c.to_vec();
            let out = d.path().to_str().unwrap();
            args.extend(["--out", out]);
            cli(&args)?;
        }
    }
    let first = read_all(dirs[0].path())?;
    let second = read_all(dirs[1].path())?;
    if first.is_empty() {
        return Err("no CSV files written".into());
    }
    if first != second {
        let names: Vec<_> = first
            .iter()
            .zip(&second)
            .filter(|(a, b)| a != b)
            .map(|(a, _)| a.0.clone())
            .collect();
        return Err(format!("files differ: {names:?}"));
    }
    Ok(format!("{} CSV files identical across two runs", first.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("geothermal weak coupling constants", conditions_geothermal),
        ("toy spectral constants", toy_constants),
        ("first order convergence", order_one),
        ("scheme equivalences", equivalences),
        ("steady state preservation", steady_states),
        ("sharpness soundness", sharpness),
        ("delay Euler order", delay_order),
        ("deterministic CSV output", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
