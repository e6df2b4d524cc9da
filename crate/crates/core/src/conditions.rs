//! Ellipticity and continuity constants and the weak coupling conditions of
//! the semi-explicit schemes.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{extremal_eigenvalues, extremal_singular_values};
use crate::system::{AssembledSystem, MaterialParams, Storage};

/// Lower and upper extreme of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub lo: f64,
    pub hi: f64,
}

impl Extremes {
    pub fn constant(v: f64) -> Self {
        Self { lo: v, hi: v }
    }
}

impl From<(f64, f64)> for Extremes {
    fn from((lo, hi): (f64, f64)) -> Self {
        Self { lo, hi }
    }
}

/// Constants identified with eigenvalues (A, B, B̃) and singular values
/// (D, D̃) of the assembled matrices. The storage constants are the
/// coefficients the mass matrices were built with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub a: Extremes,
    pub b: Extremes,
    pub b_tilde: Extremes,
    pub d: Extremes,
    pub d_tilde: Extremes,
    pub storage: Storage,
    /// λ_min of the block mass `[[C, −Ĉ], [−Ĉ, C̃]]`
    pub block_mass_min: f64,
    /// λ_min of the unscaled mass matrix
    pub mass_min: f64,
}

pub fn spectral_bounds(system: &AssembledSystem) -> Result<SpectralBounds> {
    Ok(SpectralBounds {
        a: extremal_eigenvalues(&system.a)?.into(),
        b: extremal_eigenvalues(&system.b)?.into(),
        b_tilde: extremal_eigenvalues(&system.b_tilde)?.into(),
        d: extremal_singular_values(&system.d)?.into(),
        d_tilde: extremal_singular_values(&system.d_tilde)?.into(),
        storage: system.storage,
        block_mass_min: extremal_eigenvalues(&system.block_mass())?.0,
        mass_min: extremal_eigenvalues(&system.mass)?.0,
    })
}

/// Constants of the block operators 𝔹, ℂ, 𝔻.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockBounds {
    /// continuity of 𝔹
    pub cap_b: f64,
    /// ellipticity of 𝔹
    pub c_b: f64,
    /// continuity of ℂ
    pub cap_c: f64,
    /// ellipticity of ℂ
    pub c_c: f64,
    /// continuity of 𝔻
    pub cap_d: f64,
}

pub fn block_bounds(sb: &SpectralBounds) -> Result<BlockBounds> {
    let st = sb.storage;
    if !st.assumption_holds() {
        return Err(Error::AssumptionViolated(format!(
            "c0_hat = {} with c0 = {}, c0_tilde = {}",
            st.c0_hat, st.c0, st.c0_tilde
        )));
    }
    Ok(BlockBounds {
        cap_b: sb.b.hi.max(sb.b_tilde.hi),
        c_b: sb.b.lo.min(sb.b_tilde.lo),
        cap_c: (2.0 * st.c0 * st.c0 + 2.0 * st.c0_tilde * st.c0_tilde).sqrt(),
        c_c: (st.c0 - st.c0_hat).min(st.c0_tilde - st.c0_hat),
        cap_d: sb.d.hi.hypot(sb.d_tilde.hi),
    })
}

/// Where the constants of a condition come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// eigen- and singular values of the assembled matrices
    Spectral,
    /// material parameters: `C_d = c_d = α`, `C_d̃ = c_d̃ = β`, `c_a = μ + λ`
    Physical,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Spectral => "spectral",
            Provenance::Physical => "physical",
        })
    }
}

/// The constants entering the weak coupling conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConstants {
    pub provenance: Provenance,
    pub c_a: f64,
    pub cap_a: f64,
    pub c_d: f64,
    pub cap_d: f64,
    pub c_d_tilde: f64,
    pub cap_d_tilde: f64,
    pub storage: Storage,
}

impl CouplingConstants {
    pub fn spectral(sb: &SpectralBounds) -> Self {
        Self {
            provenance: Provenance::Spectral,
            c_a: sb.a.lo,
            cap_a: sb.a.hi,
            c_d: sb.d.lo,
            cap_d: sb.d.hi,
            c_d_tilde: sb.d_tilde.lo,
            cap_d_tilde: sb.d_tilde.hi,
            storage: sb.storage,
        }
    }

    /// Physical constants; `C_a` is taken from `spectral` when given and is
    /// `μ + λ` otherwise.
    pub fn physical(params: &MaterialParams, spectral: Option<&SpectralBounds>) -> Self {
        let ca = params.mu + params.lambda;
        Self {
            provenance: Provenance::Physical,
            c_a: ca,
            cap_a: spectral.map_or(ca, |s| s.a.hi),
            c_d: params.alpha,
            cap_d: params.alpha,
            c_d_tilde: params.beta,
            cap_d_tilde: params.beta,
            storage: params.storage(),
        }
    }
}

fn checked_quotient(num: f64, den: f64, what: &'static str) -> Result<f64> {
    let q = num / den;
    if !(den > 0.0) || !q.is_finite() {
        return Err(Error::DegenerateDenominator(what));
    }
    Ok(q)
}

/// `ω_HD = (C_d² + C_d̃²) / (c_a · min(c₀ − ĉ₀, c̃₀ − ĉ₀))`
pub fn omega_hd(k: &CouplingConstants) -> Result<f64> {
    let st = k.storage;
    let den = k.c_a * (st.c0 - st.c0_hat).min(st.c0_tilde - st.c0_hat);
    checked_quotient(k.cap_d.powi(2) + k.cap_d_tilde.powi(2), den, "omega_hd")
}

/// `ω_FD = (C_d² + C_d̃² + c_a ĉ₀) / (c_a · min(c₀, c̃₀))`
pub fn omega_fd(k: &CouplingConstants) -> Result<f64> {
    let st = k.storage;
    let den = k.c_a * st.c0.min(st.c0_tilde);
    checked_quotient(
        k.cap_d.powi(2) + k.cap_d_tilde.powi(2) + k.c_a * st.c0_hat,
        den,
        "omega_fd",
    )
}

/// `min(c_d², c_d̃²) > C_a ĉ₀`
pub fn fd_precondition(k: &CouplingConstants) -> bool {
    k.c_d.powi(2).min(k.c_d_tilde.powi(2)) > k.cap_a * k.storage.c0_hat
}

/// `2 max(α², β²) / ((μ + λ) · min(c₀ − ĉ₀, c̃₀ − ĉ₀))`
pub fn relaxed_hd(p: &MaterialParams) -> Result<f64> {
    let den = (p.mu + p.lambda) * (p.c0 - p.c0_hat).min(p.c0_tilde - p.c0_hat);
    checked_quotient(2.0 * (p.alpha * p.alpha).max(p.beta * p.beta), den, "relaxed_hd")
}

/// Relaxation parameter `γ = 2 / (2 + ω)` of the damped inner iteration.
pub fn gamma(omega: f64) -> f64 {
    2.0 / (2.0 + omega.max(0.0))
}

pub const MAX_INNER_ITERATIONS: usize = 1_000_000;

/// Smallest `K ≥ 1` with `ω^K / (2 + ω)^(K−1) < 1`.
pub fn min_inner_iterations(omega: f64) -> usize {
    let omega = omega.max(0.0);
    let ratio = omega / (2.0 + omega);
    let mut q = omega;
    let mut k = 1;
    while !(q < 1.0) && k < MAX_INNER_ITERATIONS {
        q *= ratio;
        k += 1;
    }
    k
}

/// Condition numbers for one set of constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub constants: CouplingConstants,
    pub omega_hd: f64,
    pub omega_fd: f64,
    /// only available with material parameters
    pub relaxed_hd: Option<f64>,
    pub gamma: f64,
    pub k_min: usize,
    pub fd_precondition: bool,
    pub assumption: bool,
}

impl ConditionReport {
    pub fn new(constants: CouplingConstants, params: Option<&MaterialParams>) -> Result<Self> {
        let w_hd = omega_hd(&constants)?;
        Ok(Self {
            constants,
            omega_hd: w_hd,
            omega_fd: omega_fd(&constants)?,
            relaxed_hd: params.map(relaxed_hd).transpose()?,
            gamma: gamma(w_hd),
            k_min: min_inner_iterations(w_hd),
            fd_precondition: fd_precondition(&constants),
            assumption: constants.storage.assumption_holds(),
        })
    }

    pub fn hd_holds(&self) -> bool {
        self.omega_hd <= 1.0
    }

    pub fn fd_holds(&self) -> bool {
        self.omega_fd <= 1.0 && self.fd_precondition
    }

    pub const CSV_HEADER: &'static str =
        "mode,c_a,C_a,c_d,C_d,c_dt,C_dt,omega_hd,omega_fd,relaxed_hd,gamma,k_min,fd_precondition,assumption";

    pub fn csv_row(&self) -> String {
        let k = &self.constants;
        let g = |v: f64| format!("{v:.16e}");
        [
            k.provenance.to_string(),
            g(k.c_a),
            g(k.cap_a),
            g(k.c_d),
            g(k.cap_d),
            g(k.c_d_tilde),
            g(k.cap_d_tilde),
            g(self.omega_hd),
            g(self.omega_fd),
            self.relaxed_hd.map(g).unwrap_or_default(),
            g(self.gamma),
            self.k_min.to_string(),
            self.fd_precondition.to_string(),
            self.assumption.to_string(),
        ]
        .join(",")
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = &self.constants;
        let verdict = |ok: bool| if ok { "holds" } else { "fails" };
        writeln!(f, "constants ({})", k.provenance)?;
        writeln!(f, "  c_a             = {:.6e}", k.c_a)?;
        writeln!(f, "  C_a             = {:.6e}", k.cap_a)?;
        writeln!(f, "  c_d, C_d        = {:.6e}, {:.6e}", k.c_d, k.cap_d)?;
        writeln!(f, "  c_dt, C_dt      = {:.6e}, {:.6e}", k.c_d_tilde, k.cap_d_tilde)?;
        writeln!(f, "  omega_HD        = {:.6}  ({})", self.omega_hd, verdict(self.hd_holds()))?;
        writeln!(f, "  omega_FD        = {:.6}  ({})", self.omega_fd, verdict(self.omega_fd <= 1.0))?;
        writeln!(f, "  FD precondition = {}", self.fd_precondition)?;
        if let Some(r) = self.relaxed_hd {
            writeln!(f, "  relaxed HD      = {:.6}  ({})", r, verdict(r <= 1.0))?;
        }
        writeln!(f, "  gamma           = {:.6}", self.gamma)?;
        writeln!(f, "  K_min           = {}", self.k_min)?;
        write!(f, "  c0_hat < min(c0, c0_tilde): {}", self.assumption)
    }
}

/// Reports for all provenances available for `system`: physical when
/// material parameters are attached, and spectral.
pub fn condition_reports(system: &AssembledSystem) -> Result<Vec<ConditionReport>> {
    let sb = spectral_bounds(system)?;
    let mut out = Vec::new();
    if let Some(p) = &system.params {
        out.push(ConditionReport::new(CouplingConstants::physical(p, Some(&sb)), Some(p))?);
    }
    out.push(ConditionReport::new(CouplingConstants::spectral(&sb), system.params.as_ref())?);
    Ok(out)
}
