//! CSV tables and SVG plots. Numbers use 17 significant digits so equal
//! results give byte-identical files.

use std::fmt::Write as _;

use crate::error::Result;
use crate::steppers::Trajectory;
use crate::system::AssembledSystem;

use super::convergence::ConvergenceTable;
use super::metrics::energy_norm;
use super::sweep::{CellClass, SweepCell};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub const CONVERGENCE_HEADER: &str = "scheme,tau,h,e_u,e_p,e_theta,e_T";
pub const SLOPES_HEADER: &str = "scheme,slope";
pub const SWEEP_HEADER: &str = "alpha,ctilde0,omega,e_T,class";
pub const TRAJECTORY_HEADER: &str = "step,t,norm_u,norm_p,norm_theta";

pub fn convergence_csv(t: &ConvergenceTable) -> String {
    let mut s = format!("{CONVERGENCE_HEADER}\n");
    for r in &t.rows {
        let e = &r.errors;
        let h = r.h.map(num).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.label,
            num(r.tau),
            h,
            num(e.e_u),
            num(e.e_p),
            num(e.e_theta),
            num(e.e_total)
        );
    }
    s
}

pub fn slopes_csv(t: &ConvergenceTable) -> String {
    let mut s = format!("{SLOPES_HEADER}\n");
    for (label, slope) in &t.slopes {
        let _ = writeln!(s, "{label},{}", slope.map(num).unwrap_or_default());
    }
    s
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for c in cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(c.alpha),
            num(c.c0_tilde),
            num(c.omega),
            num(c.e_total),
            c.class
        );
    }
    s
}

/// Energy norms of every level of a run.
pub fn trajectory_csv(traj: &Trajectory, sys: &AssembledSystem) -> Result<String> {
    let mut s = format!("{TRAJECTORY_HEADER}\n");
    for (n, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let _ = writeln!(
            s,
            "{n},{},{},{},{}",
            num(*t),
            num(energy_norm(&sys.a, &x.u)?),
            num(energy_norm(&sys.c, &x.p)?),
            num(energy_norm(&sys.c_tilde, &x.theta)?)
        );
    }
    Ok(s)
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Log-log plot of `e_T` against `τ`, one polyline per scheme.
pub fn convergence_svg(t: &ConvergenceTable) -> String {
    let (w, h, m) = (640.0, 480.0, 60.0);
    let pts: Vec<(f64, f64)> = t
        .rows
        .iter()
        .filter(|r| r.tau > 0.0 && r.errors.e_total > 0.0 && r.errors.e_total.is_finite())
        .map(|r| (r.tau.log10(), r.errors.e_total.log10()))
        .collect();
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).floor();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil();
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else {
            (-1.0, 0.0)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    for e in x0 as i32..=x1 as i32 {
        let x = sx(e as f64);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">1e{e}</text>"#, h - m + 18.0);
    }
    for e in y0 as i32..=y1 as i32 {
        let y = sy(e as f64);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}" font-size="12" text-anchor="end">1e{e}</text>"#, m - 6.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">tau</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{:.2}" font-size="14" transform="rotate(-90 15 {:.2})" text-anchor="middle">e_T</text>"#, h / 2.0, h / 2.0);
    for (k, (label, slope)) in t.slopes.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let line: Vec<String> = t
            .rows_for(label)
            .filter(|r| r.errors.e_total > 0.0 && r.errors.e_total.is_finite())
            .map(|r| format!("{:.2},{:.2}", sx(r.tau.log10()), sy(r.errors.e_total.log10())))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, line.join(" "));
        let legend = match slope {
            Some(v) => format!("{label} (slope {v:.2})"),
            None => label.clone(),
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{legend}</text>"#,
            m + 10.0,
            m + 18.0 + 16.0 * k as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Cells colored green, yellow and red by class; α grows upward.
pub fn sweep_svg(cells: &[SweepCell], rows: usize, cols: usize) -> String {
    let cell = 12.0;
    let m = 50.0;
    let (w, h) = (2.0 * m + cols as f64 * cell, 2.0 * m + rows as f64 * cell);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for c in cells {
        let color = match c.class {
            CellClass::Guaranteed => "#2ca02c",
            CellClass::Converged => "#f2d600",
            CellClass::Diverged => "#d62728",
        };
        let x = m + c.col as f64 * cell;
        let y = h - m - (c.row + 1) as f64 * cell;
        let _ = writeln!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="{cell}" height="{cell}" fill="{color}"/>"#);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">ctilde0</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(s, r#"<text x="20" y="{:.2}" font-size="14" transform="rotate(-90 20 {:.2})" text-anchor="middle">alpha</text>"#, h / 2.0, h / 2.0);
    s.push_str("</svg>\n");
    s
}
