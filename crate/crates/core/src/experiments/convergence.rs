//! Temporal convergence studies against a fine reference run.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::ProblemData;
use crate::steppers::{run, Scheme, SchemeConfig, State};
use crate::system::AssembledSystem;

use super::metrics::{final_time_error, prolong, ComponentErrors};

/// Points with an error at or above this are considered pre-asymptotic.
pub const FIT_CUTOFF: f64 = 0.5;

/// Error of one scheme at one step size.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub label: String,
    pub scheme: Scheme,
    pub tau: f64,
    /// mesh width, `None` for systems without a mesh
    pub h: Option<f64>,
    pub errors: ComponentErrors,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// scheme-major, step sizes in the given order
    pub rows: Vec<ErrorReport>,
    /// least squares order per scheme label, `None` with fewer than two usable points
    pub slopes: Vec<(String, Option<f64>)>,
    pub reference: SchemeConfig,
}

impl ConvergenceTable {
    pub fn slope(&self, label: &str) -> Option<f64> {
        self.slopes.iter().find(|(l, _)| l == label).and_then(|(_, s)| *s)
    }

    pub fn rows_for<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a ErrorReport> + 'a {
        self.rows.iter().filter(move |r| r.label == label)
    }
}

/// Name of a configured scheme, with the knobs that distinguish variants.
pub fn scheme_label(c: &SchemeConfig) -> String {
    match c.scheme {
        Scheme::SigmaSplitting => format!("{}(sigma={})", c.scheme, c.sigma),
        s if s.uses_inner_iterations() => format!("{}(K={})", s, c.inner_iterations),
        s => s.to_string(),
    }
}

/// `start · 2^-k` for `k = 0..count`.
pub fn halving_taus(start: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start / 2f64.powi(k as i32)).collect()
}

/// Implicit midpoint at an eighth of the smallest step size.
pub fn default_reference(taus: &[f64]) -> SchemeConfig {
    let min = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    SchemeConfig::new(Scheme::ImplicitMidpoint, min / 8.0)
}

/// Ordinary least squares slope of `log e` against `log τ` over the points
/// with `0 < e < FIT_CUTOFF`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, e)| *t > 0.0 && e.is_finite() && *e > 0.0 && *e < FIT_CUTOFF)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

fn check_inputs(schemes: &[SchemeConfig], taus: &[f64], reference: &SchemeConfig) -> Result<()> {
    if schemes.is_empty() || taus.is_empty() {
        return Err(Error::InvalidConfig("need at least one scheme and one step size".into()));
    }
    if let Some(t) = taus.iter().find(|t| !(**t >= reference.tau)) {
        return Err(Error::InvalidConfig(format!(
            "reference step {} is coarser than tested step {t}",
            reference.tau
        )));
    }
    Ok(())
}

fn reference_state(sys: &AssembledSystem, data: &ProblemData, reference: &SchemeConfig) -> Result<State> {
    let traj = run(sys, data, reference)?;
    if traj.diverged() {
        return Err(Error::InvalidConfig(format!("reference run {} diverged", scheme_label(reference))));
    }
    Ok(traj.last().clone())
}

/// Runs every `(scheme, τ)` pair. `error` maps a final state to its errors.
fn tabulate(
    sys: &AssembledSystem,
    data: &ProblemData,
    schemes: &[SchemeConfig],
    taus: &[f64],
    reference: &SchemeConfig,
    h: Option<f64>,
    error: &(dyn Fn(&State) -> Result<ComponentErrors> + Sync),
) -> Result<ConvergenceTable> {
    let jobs: Vec<(usize, usize)> = (0..schemes.len()).flat_map(|s| (0..taus.len()).map(move |t| (s, t))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, t)| {
            let mut c = schemes[s].clone();
            c.tau = taus[t];
            c.final_time = reference.final_time;
            let traj = run(sys, data, &c)?;
            let diverged = traj.diverged();
            let errors = if diverged {
                ComponentErrors::infinite()
            } else {
                error(traj.last())?
            };
            Ok(ErrorReport {
                label: scheme_label(&schemes[s]),
                scheme: c.scheme,
                tau: c.tau,
                h,
                errors,
                diverged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut slopes: Vec<(String, Option<f64>)> = Vec::new();
    for c in schemes {
        let label = scheme_label(c);
        if slopes.iter().any(|(l, _)| *l == label) {
            continue;
        }
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.label == label)
            .map(|r| (r.tau, r.errors.e_total))
            .collect();
        slopes.push((label, fit_slope(&pts)));
    }
    Ok(ConvergenceTable {
        rows,
        slopes,
        reference: reference.clone(),
    })
}

/// Errors at the final time of every scheme and step size against
/// `reference` on the same mesh.
pub fn convergence_study(
    sys: &AssembledSystem,
    data: &ProblemData,
    schemes: &[SchemeConfig],
    taus: &[f64],
    reference: &SchemeConfig,
) -> Result<ConvergenceTable> {
    check_inputs(schemes, taus, reference)?;
    let r = reference_state(sys, data, reference)?;
    let h = sys.discretization.as_ref().map(|d| d.mesh.h());
    tabulate(sys, data, schemes, taus, reference, h, &|s| final_time_error(&r, s, sys))
}

/// As [`convergence_study`] with the reference computed on a finer mesh.
/// Coarse solutions are interpolated to the fine mesh and measured with
/// the fine matrices.
pub fn convergence_study_cross_mesh(
    coarse: (&AssembledSystem, &ProblemData),
    fine: (&AssembledSystem, &ProblemData),
    schemes: &[SchemeConfig],
    taus: &[f64],
    reference: &SchemeConfig,
) -> Result<ConvergenceTable> {
    check_inputs(schemes, taus, reference)?;
    let (cs, cd) = coarse;
    let (fs, fd) = fine;
    let (Some(cdisc), Some(fdisc)) = (cs.discretization.as_ref(), fs.discretization.as_ref()) else {
        return Err(Error::InvalidConfig("cross mesh studies need finite element systems".into()));
    };
    let r = reference_state(fs, fd, reference)?;
    let h = Some(cdisc.mesh.h());
    tabulate(cs, cd, schemes, taus, reference, h, &|s| {
        final_time_error(&r, &prolong(s, cdisc, fdisc), fs)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{geothermal_problem, DataOverrides};
    use approx::assert_relative_eq;

    #[test]
    fn slopes() {
        let pts: Vec<_> = halving_taus(0.1, 5).into_iter().map(|t| (t, 3.0 * t * t)).collect();
        assert_relative_eq!(fit_slope(&pts).unwrap(), 2.0, max_relative = 1e-12);
        assert_eq!(fit_slope(&[(0.1, 0.9), (0.05, 0.6)]), None);
        assert_eq!(fit_slope(&[(0.1, 0.01)]), None);
    }

    #[test]
    fn labels() {
        let mut c = SchemeConfig::new(Scheme::SigmaSplitting, 0.1);
        c.sigma = 0.77;
        assert_eq!(scheme_label(&c), "sigma_splitting(sigma=0.77)");
        assert_eq!(scheme_label(&SchemeConfig::new(Scheme::HfMIterative, 0.1)), "hf_m_iterative(K=10)");
        assert_eq!(scheme_label(&SchemeConfig::new(Scheme::ImplicitEuler, 0.1)), "implicit_euler");
    }

    #[test]
    fn self_reference_is_exact() {
        let (sys, data) = geothermal_problem(3, 2, DataOverrides::default()).unwrap();
        let reference = SchemeConfig::new(Scheme::ImplicitEuler, 0.125);
        let t = convergence_study(&sys, &data, std::slice::from_ref(&reference), &[0.125], &reference).unwrap();
        assert_eq!(t.rows[0].errors.e_total, 0.0);
        let coarse = SchemeConfig::new(Scheme::ImplicitEuler, 0.0625);
        assert!(convergence_study(&sys, &data, &[reference], &[0.125], &coarse).is_ok());
        let too_coarse = SchemeConfig::new(Scheme::ImplicitEuler, 0.25);
        assert!(convergence_study(&sys, &data, std::slice::from_ref(&too_coarse), &[0.125], &too_coarse).is_err());
    }

    #[test]
    fn implicit_euler_is_first_order() {
        let (sys, data) = geothermal_problem(4, 2, DataOverrides::default()).unwrap();
        let taus = halving_taus(0.125, 5);
        let schemes = [SchemeConfig::new(Scheme::ImplicitEuler, 0.125)];
        let t = convergence_study(&sys, &data, &schemes, &taus, &default_reference(&taus)).unwrap();
        let s = t.slope("implicit_euler").unwrap();
        assert!((0.85..=1.15).contains(&s), "slope {s}");
    }

    #[test]
    fn cross_mesh_runs() {
        let (cs, cd) = geothermal_problem(2, 2, DataOverrides::default()).unwrap();
        let (fs, fd) = geothermal_problem(4, 2, DataOverrides::default()).unwrap();
        let schemes = [SchemeConfig::new(Scheme::ImplicitEuler, 0.25)];
        let reference = SchemeConfig::new(Scheme::ImplicitMidpoint, 0.125);
        let t = convergence_study_cross_mesh((&cs, &cd), (&fs, &fd), &schemes, &[0.25], &reference).unwrap();
        let e = t.rows[0].errors;
        assert!(e.e_total.is_finite() && e.e_total > 0.0);
        assert_eq!(t.rows[0].h, Some(0.5));
    }
}
