use nalgebra::DVector;
use num_complex::Complex64;

use super::{effective_operator, Pencil};
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LogLogFit};
use crate::operator::{norm2, DenseOperator};
use crate::riesz::{validate_betas, RieszProjection};

/// Errors below this multiple of machine epsilon are treated as round-off and
/// excluded from rate fits.
const FIT_FLOOR: f64 = 100.0 * f64::EPSILON;

/// Smallest number of samples a rate fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum ErrorMode {
    /// Operator-norm error of the resolvent.
    Norm,
    /// Error of the resolvent applied to a fixed vector.
    Strong(DVector<Complex64>),
}

/// Samples of `e(β)` and a fitted power law `e ≈ C β^slope`.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub z: Complex64,
    /// β values with a finite error, increasing.
    pub betas: Vec<f64>,
    pub errors: Vec<f64>,
    /// β values at which `A + βB − z` was singular.
    pub singular_betas: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub fitted_intercept: Option<f64>,
    pub r_squared: Option<f64>,
    /// `max β · e(β)` over the samples.
    pub sup_beta_times_error: f64,
    pub mode: ErrorMode,
}

impl ConvergenceReport {
    pub(crate) fn from_samples(
        z: Complex64,
        betas: Vec<f64>,
        errors: Vec<f64>,
        singular_betas: Vec<f64>,
        mode: ErrorMode,
    ) -> Self {
        let sup_beta_times_error = betas
            .iter()
            .zip(&errors)
            .map(|(b, e)| b * e)
            .fold(0.0, f64::max);
        let mut report = Self {
            z,
            betas,
            errors,
            singular_betas,
            fitted_slope: None,
            fitted_intercept: None,
            r_squared: None,
            sup_beta_times_error,
            mode,
        };
        if let Ok(fit) = fit_rate(&report) {
            report.fitted_slope = Some(fit.slope);
            report.fitted_intercept = Some(fit.intercept);
            report.r_squared = Some(fit.r_squared);
        }
        report
    }

    /// `β · e(β)` per sample.
    pub fn scaled_errors(&self) -> Vec<f64> {
        self.betas.iter().zip(&self.errors).map(|(b, e)| b * e).collect()
    }

    /// `max / min` of `β · e(β)` over samples with `β ≥ β_max / 10^decades`.
    /// Returns `None` if fewer than two samples fall in the window or the
    /// minimum is zero.
    pub fn scaled_band(&self, decades: f64) -> Option<f64> {
        let top = *self.betas.last()?;
        let cutoff = top / 10f64.powf(decades) * (1.0 - 1e-12);
        let window: Vec<f64> = self
            .betas
            .iter()
            .zip(&self.errors)
            .filter(|(b, _)| **b >= cutoff)
            .map(|(b, e)| b * e)
            .collect();
        if window.len() < 2 {
            return None;
        }
        let max = window.iter().copied().fold(0.0, f64::max);
        let min = window.iter().copied().fold(f64::INFINITY, f64::min);
        (min > 0.0).then_some(max / min)
    }
}

/// Logarithmic grid `10^e` for `e` from `min_exponent` to `max_exponent`
/// (inclusive) with `points_per_decade` steps per decade.
pub fn log_beta_grid(min_exponent: f64, max_exponent: f64, points_per_decade: usize) -> Vec<f64> {
    if points_per_decade == 0 || !(max_exponent >= min_exponent) {
        return Vec::new();
    }
    let steps = ((max_exponent - min_exponent) * points_per_decade as f64).round() as usize;
    (0..=steps)
        .map(|k| 10f64.powf(min_exponent + k as f64 / points_per_decade as f64))
        .collect()
}

/// Least-squares fit of `ln e` against `ln β` over the longest contiguous run
/// of samples whose error is above round-off.
pub fn fit_rate(report: &ConvergenceReport) -> Result<LogLogFit> {
    let mut best = (0, 0);
    let mut start = None;
    for (i, e) in report.errors.iter().enumerate() {
        match (e.is_finite() && *e > FIT_FLOOR, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if report.errors.len() - s > best.1 - best.0 {
            best = (s, report.errors.len());
        }
    }
    let usable = best.1 - best.0;
    if usable < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { usable });
    }
    loglog_fit(&report.betas[best.0..best.1], &report.errors[best.0..best.1])
        .ok_or(Error::TooFewPoints { usable })
}

/// `e(β) = ‖(A + βB − z)⁻¹ − P(PAP − z)⁻¹P‖` over `betas`.
///
/// Singular shifts are recorded in `singular_betas` and skipped.
pub fn resolvent_error_curve(
    a: &DenseOperator,
    b: &DenseOperator,
    rp: &RieszProjection,
    z: Complex64,
    betas: &[f64],
) -> Result<ConvergenceReport> {
    validate_betas(betas)?;
    let limit = effective_operator(a, rp)?.embed_resolvent(z)?;
    error_curve_against(a, b, z, betas, &limit)
}

/// `e(β) = ‖(A + βB − z)⁻¹ − T‖` for a given limit `T`.
///
/// Limits of the form `P(PAP − z)⁻¹P` respect the joint block structure of
/// `A` and `B`, so the error is computed blockwise; any other `T` falls back
/// to full solves.
pub(crate) fn error_curve_against(
    a: &DenseOperator,
    b: &DenseOperator,
    z: Complex64,
    betas: &[f64],
    limit: &DenseOperator,
) -> Result<ConvergenceReport> {
    validate_betas(betas)?;
    let mut pencil = Pencil::new(a, b)?;
    let mut target = pencil.split(limit.matrix());
    let leak = norm2(&(limit.matrix() - pencil.assemble(&target)));
    if leak > 1e-12 * (1.0 + limit.norm()) {
        pencil = Pencil::single_block(a, b)?;
        target = pencil.split(limit.matrix());
    }
    let mut kept = Vec::with_capacity(betas.len());
    let mut errors = Vec::with_capacity(betas.len());
    let mut singular = Vec::new();
    for &beta in betas {
        match pencil.resolvent_distance(beta, z, &target) {
            Ok(e) => {
                kept.push(beta);
                errors.push(e);
            }
            Err(Error::SingularShift { .. }) => singular.push(beta),
            Err(other) => return Err(other),
        }
    }
    Ok(ConvergenceReport::from_samples(z, kept, errors, singular, ErrorMode::Norm))
}

/// Relative tolerance for the self-adjointness hypothesis of the strong
/// curves.
const SELF_ADJOINT_TOL: f64 = 1e-12;

/// `e(β) = ‖(A + βB − z)⁻¹ψ − P(PAP − z)⁻¹Pψ‖` for self-adjoint `A`, `B`.
pub fn strong_error_curve(
    a: &DenseOperator,
    b: &DenseOperator,
    rp: &RieszProjection,
    z: Complex64,
    psi: &DVector<Complex64>,
    betas: &[f64],
) -> Result<ConvergenceReport> {
    for (which, op) in [("A", a), ("B", b)] {
        if !op.is_hermitian(SELF_ADJOINT_TOL) {
            return Err(Error::NotSelfAdjoint {
                which,
                defect: op.hermitian_defect(),
            });
        }
    }
    if z.im == 0.0 {
        return Err(Error::InvalidParameter("strong curves need Im z ≠ 0".into()));
    }
    if psi.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: psi.len(),
        });
    }
    validate_betas(betas)?;
    let limit = effective_operator(a, rp)?.embed_resolvent(z)?;
    let target = limit.apply(psi);
    let pencil = Pencil::new(a, b)?;
    let mut kept = Vec::with_capacity(betas.len());
    let mut errors = Vec::with_capacity(betas.len());
    let mut singular = Vec::new();
    for &beta in betas {
        match pencil.block_resolvents(beta, z) {
            Ok(blocks) => {
                let mut err2 = 0.0;
                for (idx, r) in pencil.index_blocks().iter().zip(&blocks) {
                    let local = DVector::from_iterator(idx.len(), idx.iter().map(|&i| psi[i]));
                    let applied = r * local;
                    for (k, &i) in idx.iter().enumerate() {
                        err2 += (applied[k] - target[i]).norm_sqr();
                    }
                }
                kept.push(beta);
                errors.push(err2.sqrt());
            }
            Err(Error::SingularShift { .. }) => singular.push(beta),
            Err(other) => return Err(other),
        }
    }
    Ok(ConvergenceReport::from_samples(
        z,
        kept,
        errors,
        singular,
        ErrorMode::Strong(psi.clone()),
    ))
}
