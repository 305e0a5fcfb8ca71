//! Runs the requested checks on one instance.

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use spectral_coupling::coupling::{
    anticommutator_lower_bound_check, block_decompose, cauchy_net_check, neumann_s_inverse, pseudo_resolvent_check,
    resolvent_error_curve, schur_inverse, uniform_resolvent_bound_scan,
};
use spectral_coupling::graph::{verify_reduction, SupernodeConvention};
use spectral_coupling::operator::{op_norm, resolvent, Matrix};
use spectral_coupling::riesz::{projector_is_orthogonal, scaled_resolvent_limit_check, LimitVerdict};
use spectral_coupling::zoo::ModelInstance;
use spectral_coupling::{Error, LogLogFit};

use crate::config::{complex_json, Check, ExperimentConfig, Expectation};

pub const RATE_SLOPE: (f64, f64) = (-1.2, -0.8);
pub const DIVERGENT_MIN_SLOPE: f64 = 0.9;
pub const BAND_MAX: f64 = 10.0;
pub const RIESZ_IDEMPOTENT_TOL: f64 = 1e-9;
pub const SCHUR_TOL: f64 = 1e-8;
pub const NEUMANN_TOL: f64 = 1e-10;
pub const NEUMANN_MAX_RATIO: f64 = 0.5;
pub const PSEUDO_RESOLVENT_TOL: f64 = 1e-4;
pub const REDUCTION_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Curve {
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub check: Check,
    pub z: Option<Complex64>,
    pub passed: bool,
    pub threshold: String,
    pub metrics: Map<String, Value>,
    pub note: Option<String>,
    pub curve: Option<Curve>,
    /// Every β hit a singular shift; nothing was measured.
    pub all_singular: bool,
}

impl CheckOutcome {
    fn new(check: Check, z: Option<Complex64>, threshold: impl Into<String>) -> Self {
        Self {
            check,
            z,
            passed: false,
            threshold: threshold.into(),
            metrics: Map::new(),
            note: None,
            curve: None,
            all_singular: false,
        }
    }

    fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    fn fail(mut self, note: impl Into<String>) -> Self {
        self.passed = false;
        self.note = Some(note.into());
        self
    }

    /// File name of the curve CSV, when there is a curve.
    pub fn curve_file(&self) -> Option<String> {
        self.curve.as_ref()?;
        let z = match self.z {
            Some(z) => format!("{}_{}", crate::output::format_g17(z.re), crate::output::format_g17(z.im)),
            None => "none".into(),
        };
        Some(format!("curve_{}_{z}.csv", self.check))
    }
}

fn matrix_json(m: &Matrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|z| complex_json(*z)).collect()))
            .collect(),
    )
}

const MATRIX_ECHO_MAX_DIM: usize = 16;

fn in_range(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

/// `max / min` of `values` over samples with `β ≥ β_max / 10^decades`.
fn band(betas: &[f64], values: &[f64], decades: f64) -> Option<f64> {
    let top = *betas.last()?;
    let cutoff = top / 10f64.powf(decades) * (1.0 - 1e-12);
    let window: Vec<f64> = betas
        .iter()
        .zip(values)
        .filter(|(b, _)| **b >= cutoff)
        .map(|(_, v)| *v)
        .collect();
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    (window.len() >= 2 && min > 0.0).then(|| max / min)
}

fn is_singular(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularShift { .. } | Error::ShiftInSpectrum { .. } | Error::SchurSingular { .. }
    )
}

/// Runs every check of `config` on `instance`, in config order, shifts in
/// config order within each check.
pub fn run_checks(config: &ExperimentConfig, instance: &ModelInstance) -> Vec<CheckOutcome> {
    let betas = config.beta_grid.betas();
    let mut tasks = Vec::new();
    for &check in &config.checks {
        if check.per_shift() {
            tasks.extend(config.z_values.iter().map(|&z| (check, Some(z))));
        } else {
            tasks.push((check, None));
        }
    }
    tasks
        .par_iter()
        .map(|&(check, z)| run_check(check, z, instance, &betas, config))
        .collect()
}

fn run_check(
    check: Check,
    z: Option<Complex64>,
    inst: &ModelInstance,
    betas: &[f64],
    config: &ExperimentConfig,
) -> CheckOutcome {
    let expectation = config.expectation;
    match (check, z) {
        (Check::Riesz, Some(z)) => riesz(inst, z, betas, expectation),
        (Check::Rate, Some(z)) => rate(inst, z, betas, expectation),
        (Check::Schur, Some(z)) => schur(inst, z, betas),
        (Check::Anticommutator, _) => anticommutator(inst),
        (Check::UniformBound, Some(z)) => uniform_bound(inst, z, betas),
        (Check::Cauchy, Some(z)) => cauchy(inst, z, betas, expectation),
        (Check::PseudoResolvent, Some(z)) => pseudo_resolvent(inst, z, config.beta_grid.max_exponent),
        (Check::Reduction, Some(z)) => reduction(inst, z, betas),
        (_, None) => unreachable!("per-shift checks always get a shift"),
    }
}

fn riesz(inst: &ModelInstance, z: Complex64, betas: &[f64], expectation: Expectation) -> CheckOutcome {
    let threshold = match expectation {
        Expectation::Convergent => format!(
            "‖P² − P‖ ≤ {RIESZ_IDEMPOTENT_TOL:e}, (βB − z)⁻¹ → −P/z with β·d(β) within a factor {BAND_MAX} over the final two decades"
        ),
        Expectation::Divergent => {
            format!("‖P² − P‖ ≤ {RIESZ_IDEMPOTENT_TOL:e}, ‖(βB − z)⁻¹‖ growth slope ≥ {DIVERGENT_MIN_SLOPE}")
        }
    };
    let mut out = CheckOutcome::new(Check::Riesz, Some(z), threshold);
    let rp = match inst.require_projector() {
        Ok(rp) => rp,
        Err(e) => return out.fail(e.to_string()),
    };
    out.metric("rank", rp.rank());
    out.metric("gap", rp.gap);
    out.metric("radius", rp.radius);
    out.metric("nodes", rp.nodes);
    out.metric("residual_idempotent", rp.residual_idempotent);
    out.metric("residual_commute", rp.residual_commute);
    out.metric("quasinilpotent_norm", rp.quasinilpotent_norm);
    out.metric("orthogonal", projector_is_orthogonal(rp, 1e-10));
    if rp.p.dim() <= MATRIX_ECHO_MAX_DIM {
        out.metric("projector", matrix_json(rp.p.matrix()));
    }
    let idempotent = rp.residual_idempotent <= RIESZ_IDEMPOTENT_TOL;

    if z.norm() == 0.0 {
        return out.fail("the scaled-resolvent limit needs z ≠ 0");
    }
    let min_beta = 2.0 * z.norm() / rp.gap;
    let usable: Vec<f64> = betas.iter().copied().filter(|&b| b >= min_beta).collect();
    if usable.len() < 2 {
        return out.fail(format!("fewer than two grid points above 2|z|/gap = {min_beta}"));
    }
    let curve = match scaled_resolvent_limit_check(&inst.b, rp, z, &usable) {
        Ok(c) => c,
        Err(e) => {
            out.all_singular = is_singular(&e);
            return out.fail(e.to_string());
        }
    };
    out.metric("sup_beta_deviation", curve.sup_beta_deviation);
    let scaled = curve.scaled_deviations();
    let band2 = band(&curve.betas, &scaled, 2.0);
    out.metric("scaled_band_two_decades", band2);
    let verdict_ok = match (&curve.verdict, expectation) {
        (LimitVerdict::Convergent, Expectation::Convergent) => {
            out.metric("verdict", "convergent");
            band2.is_some_and(|b| b <= BAND_MAX)
        }
        (LimitVerdict::Divergent { growth_exponent }, Expectation::Divergent) => {
            out.metric("verdict", "divergent as predicted");
            out.metric("growth_exponent", *growth_exponent);
            growth_exponent.is_some_and(|s| s >= DIVERGENT_MIN_SLOPE)
        }
        (LimitVerdict::Convergent, Expectation::Divergent) => {
            out.metric("verdict", "convergent, divergence was expected");
            false
        }
        (LimitVerdict::Divergent { growth_exponent }, Expectation::Convergent) => {
            out.metric("verdict", "divergent");
            out.metric("growth_exponent", *growth_exponent);
            false
        }
    };
    out.curve = Some(Curve {
        betas: curve.betas.clone(),
        values: curve.deviations.clone(),
    });
    out.passed = idempotent && verdict_ok;
    out
}

fn rate(inst: &ModelInstance, z: Complex64, betas: &[f64], expectation: Expectation) -> CheckOutcome {
    match expectation {
        Expectation::Convergent => rate_convergent(inst, z, betas),
        Expectation::Divergent => rate_divergent(inst, z, betas),
    }
}

fn rate_convergent(inst: &ModelInstance, z: Complex64, betas: &[f64]) -> CheckOutcome {
    let mut out = CheckOutcome::new(
        Check::Rate,
        Some(z),
        format!(
            "slope of ‖R_β(z) − limit‖ in [{}, {}], β·e(β) within a factor {BAND_MAX} over the final decade",
            RATE_SLOPE.0, RATE_SLOPE.1
        ),
    );
    let rp = match inst.require_projector() {
        Ok(rp) => rp,
        Err(e) => return out.fail(e.to_string()),
    };
    let report = match resolvent_error_curve(&inst.a, &inst.b, rp, z, betas) {
        Ok(r) => r,
        Err(e) => {
            out.all_singular = is_singular(&e);
            return out.fail(e.to_string());
        }
    };
    out.metric("singular_betas", report.singular_betas.clone());
    if report.betas.is_empty() {
        out.all_singular = true;
        return out.fail("A + βB − z is singular for every β");
    }
    out.metric("fitted_slope", report.fitted_slope);
    out.metric("fitted_intercept", report.fitted_intercept);
    out.metric("r_squared", report.r_squared);
    out.metric("sup_beta_times_error", report.sup_beta_times_error);
    let band1 = report.scaled_band(1.0);
    out.metric("scaled_band_one_decade", band1);
    out.curve = Some(Curve {
        betas: report.betas.clone(),
        values: report.errors.clone(),
    });
    let slope_ok = report.fitted_slope.is_some_and(|s| in_range(s, RATE_SLOPE));
    out.passed = slope_ok && band1.is_some_and(|b| b <= BAND_MAX);
    if report.fitted_slope.is_none() {
        out.note = Some("too few errors above the rounding floor to fit a slope".into());
    }
    out
}

fn rate_divergent(inst: &ModelInstance, z: Complex64, betas: &[f64]) -> CheckOutcome {
    let mut out = CheckOutcome::new(
        Check::Rate,
        Some(z),
        format!("slope of ‖R_β(z)‖ ≥ {DIVERGENT_MIN_SLOPE}"),
    );
    let mut kept = Vec::new();
    let mut norms = Vec::new();
    let mut singular = Vec::new();
    for &beta in betas {
        let m = match inst.a.plus_scaled(beta, &inst.b) {
            Ok(m) => m,
            Err(e) => return out.fail(e.to_string()),
        };
        match resolvent(&m, z) {
            Ok(r) => {
                kept.push(beta);
                norms.push(op_norm(&r));
            }
            Err(_) => singular.push(beta),
        }
    }
    out.metric("singular_betas", singular);
    if kept.is_empty() {
        out.all_singular = true;
        return out.fail("A + βB − z is singular for every β");
    }
    let fit = LogLogFit::fit(&kept, &norms);
    out.metric("fitted_slope", fit.map(|f| f.slope));
    out.metric("r_squared", fit.map(|f| f.r_squared));
    out.curve = Some(Curve {
        betas: kept,
        values: norms,
    });
    out.passed = fit.is_some_and(|f| f.slope >= DIVERGENT_MIN_SLOPE);
    out.metric(
        "verdict",
        if out.passed {
            "divergent as predicted"
        } else {
            "no divergence observed"
        },
    );
    out
}

fn schur(inst: &ModelInstance, z: Complex64, betas: &[f64]) -> CheckOutcome {
    let mut out = CheckOutcome::new(
        Check::Schur,
        Some(z),
        format!(
            "‖T − R_β(z)‖ ≤ {SCHUR_TOL:e}·‖T‖, one-sided residuals within tolerance, Neumann S⁻¹ within {NEUMANN_TOL:e} when the ratio < {NEUMANN_MAX_RATIO}"
        ),
    );
    let rp = match inst.require_projector() {
        Ok(rp) => rp,
        Err(e) => return out.fail(e.to_string()),
    };
    let mut kept = Vec::new();
    let mut diffs = Vec::new();
    let mut max_left: f64 = 0.0;
    let mut max_right: f64 = 0.0;
    let mut residuals_ok = true;
    let mut neumann_checked = 0usize;
    let mut neumann_max: f64 = 0.0;
    let mut skipped = Vec::new();
    let mut singular = 0usize;
    for &beta in betas {
        let t = block_decompose(&inst.a, &inst.b, rp, z, beta).and_then(|bd| {
            let t = schur_inverse(&bd)?;
            Ok((bd, t))
        });
        let (bd, t) = match t {
            Ok(x) => x,
            Err(e) => {
                singular += usize::from(is_singular(&e));
                skipped.push(json!({ "beta": beta, "reason": e.to_string() }));
                continue;
            }
        };
        let direct = match inst.a.plus_scaled(beta, &inst.b).map(|m| resolvent(&m, z)) {
            Ok(Ok(r)) => r,
            _ => {
                singular += 1;
                skipped.push(json!({ "beta": beta, "reason": "direct resolvent is singular" }));
                continue;
            }
        };
        let diff = op_norm(&(&t - &direct)) / op_norm(&t);
        let (left, right) = bd.inverse_residuals(&t);
        let tol = bd.residual_tolerance(&t);
        residuals_ok &= left <= tol && right <= tol;
        max_left = max_left.max(left);
        max_right = max_right.max(right);
        if let Ok(ratio) = bd.neumann_ratio() {
            if ratio < NEUMANN_MAX_RATIO && bd.s.nrows() > 0 {
                if let (Ok((series, _)), Some(direct_s)) = (neumann_s_inverse(&bd, 500), bd.s.clone().try_inverse()) {
                    let rel = (&series - &direct_s).norm() / direct_s.norm();
                    neumann_max = neumann_max.max(rel);
                    neumann_checked += 1;
                }
            }
        }
        kept.push(beta);
        diffs.push(diff);
    }
    out.metric("skipped", skipped);
    if kept.is_empty() {
        out.all_singular = singular == betas.len();
        return out.fail("no β gave a Schur inverse to compare");
    }
    let max_diff = diffs.iter().copied().fold(0.0, f64::max);
    out.metric("max_relative_difference", max_diff);
    out.metric("max_left_residual", max_left);
    out.metric("max_right_residual", max_right);
    out.metric("neumann_checked", neumann_checked);
    out.metric("neumann_max_relative_difference", neumann_max);
    out.curve = Some(Curve {
        betas: kept,
        values: diffs,
    });
    out.passed = max_diff <= SCHUR_TOL && residuals_ok && neumann_max <= NEUMANN_TOL;
    out
}

fn anticommutator(inst: &ModelInstance) -> CheckOutcome {
    let mut out = CheckOutcome::new(Check::Anticommutator, None, "a finite γ* exists");
    let rp = match inst.require_projector() {
        Ok(rp) => rp,
        Err(e) => return out.fail(e.to_string()),
    };
    let report = match anticommutator_lower_bound_check(&inst.a, &inst.b, rp) {
        Ok(r) => r,
        Err(e) => return out.fail(e.to_string()),
    };
    let h = op_norm(&report.hermitianized_form);
    let scale = op_norm(&inst.a) * op_norm(&inst.b);
    out.metric("gamma_star", report.gamma_star);
    out.metric("gamma_direct", report.gamma_direct);
    out.metric("gamma_adjoint", report.gamma_adjoint);
    out.metric("anticommutator_norm", h);
    out.metric("relative_anticommutator_norm", if scale > 0.0 { h / scale } else { 0.0 });
    out.passed = report.is_feasible();
    if !out.passed {
        out.note = Some("the form A*B + B*A is negative on ran(P); no γ works".into());
    }
    out
}

fn uniform_bound(inst: &ModelInstance, z: Complex64, betas: &[f64]) -> CheckOutcome {
    let mut out = CheckOutcome::new(
        Check::UniformBound,
        Some(z),
        "‖Q(B + δ(A − z))⁻¹‖ and ‖(B + δ(A − z))⁻¹Q‖ vary by < 10% over the last decade of δ",
    );
    let rp = match inst.require_projector() {
        Ok(rp) => rp,
        Err(e) => return out.fail(e.to_string()),
    };
    let deltas: Vec<f64> = betas.iter().map(|b| 1.0 / b).collect();
    let scan = match uniform_resolvent_bound_scan(&inst.a, &inst.b, rp, z, &deltas) {
        Ok(s) => s,
        Err(e) => {
            out.all_singular = is_singular(&e);
            return out.fail(e.to_string());
        }
    };
    if scan.deltas.is_empty() {
        out.all_singular = true;
        return out.fail("singular for every δ");
    }
    out.metric("max_norm", scan.max_norm);
    out.metric("singular_deltas", scan.singular_deltas.clone());
    let mut pairs: Vec<(f64, f64)> = scan
        .deltas
        .iter()
        .zip(scan.left_norms.iter().zip(&scan.right_norms))
        .map(|(d, (l, r))| (1.0 / d, l.max(*r)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    out.curve = Some(Curve {
        betas: pairs.iter().map(|p| p.0).collect(),
        values: pairs.iter().map(|p| p.1).collect(),
    });
    out.passed = scan.bounded;
    out
}

fn cauchy(inst: &ModelInstance, z: Complex64, betas: &[f64], expectation: Expectation) -> CheckOutcome {
    let threshold = match expectation {
        Expectation::Convergent => {
            format!("‖R_β − R_β̃‖·ββ̃/|β − β̃| within a factor {BAND_MAX} over the final two decades")
        }
        Expectation::Divergent => format!("‖R_β − R_β̃‖·ββ̃/|β − β̃| varies by more than a factor {BAND_MAX}"),
    };
    let mut out = CheckOutcome::new(Check::Cauchy, Some(z), threshold);
    if betas.len() < 3 {
        return out.fail("needs at least three grid points");
    }
    let pairs: Vec<(f64, f64)> = betas.windows(2).map(|w| (w[0], w[1])).collect();
    let report = match cauchy_net_check(&inst.a, &inst.b, z, &pairs) {
        Ok(r) => r,
        Err(e) => {
            out.all_singular = is_singular(&e);
            return out.fail(e.to_string());
        }
    };
    let upper: Vec<f64> = report.pairs.iter().map(|p| p.1).collect();
    let band2 = band(&upper, &report.values, 2.0);
    out.metric("max", report.max);
    out.metric("band_two_decades", band2);
    out.curve = Some(Curve {
        betas: upper,
        values: report.values.clone(),
    });
    let bounded = band2.is_some_and(|b| b <= BAND_MAX);
    out.passed = match expectation {
        Expectation::Convergent => bounded,
        Expectation::Divergent => band2.is_some() && !bounded,
    };
    out
}

fn pseudo_resolvent(inst: &ModelInstance, z: Complex64, max_exponent: f64) -> CheckOutcome {
    let y = z + Complex64::new(0.0, 1.0);
    let beta = 10f64.powf(max_exponent);
    let mut out = CheckOutcome::new(
        Check::PseudoResolvent,
        Some(z),
        format!("‖T_z − T_y − (z − y)T_zT_y‖ ≤ {PSEUDO_RESOLVENT_TOL:e} at y = z + i, β = 10^max_exponent"),
    );
    out.metric("y", complex_json(y));
    out.metric("beta", beta);
    match pseudo_resolvent_check(&inst.a, &inst.b, z, y, beta) {
        Ok(r) => {
            out.metric("residual", r);
            out.passed = r <= PSEUDO_RESOLVENT_TOL;
            out
        }
        Err(e) => {
            out.all_singular = is_singular(&e);
            out.fail(e.to_string())
        }
    }
}

fn reduction(inst: &ModelInstance, z: Complex64, betas: &[f64]) -> CheckOutcome {
    let mut out = CheckOutcome::new(
        Check::Reduction,
        Some(z),
        format!(
            "rate slope in [{}, {}]; for Kirchhoff clusters also ‖PAP − J L_red J♯‖ ≤ {REDUCTION_RESIDUAL_TOL:e}·(1 + ‖A‖)",
            RATE_SLOPE.0, RATE_SLOPE.1
        ),
    );
    let Some(src) = &inst.graph else {
        return out.fail("the instance has no graph");
    };
    if z.im != 0.0 || z.re >= 0.0 {
        return out.fail("the reduction check needs a real negative shift");
    }
    let report = match verify_reduction(&src.graph, &src.cluster, z.re, betas, SupernodeConvention::MassWeighted) {
        Ok(r) => r,
        Err(e) => {
            out.all_singular = is_singular(&e);
            return out.fail(e.to_string());
        }
    };
    let conv = &report.convergence;
    out.metric("supernode", report.reduced.supernode_id());
    out.metric("reduced_nodes", report.reduced.graph.node_count());
    out.metric("identification_residual", report.identification_residual);
    out.metric("kirchhoff_deficit", report.kirchhoff_deficit);
    out.metric("hypothesis_violation", report.hypothesis_violation);
    out.metric("fitted_slope", conv.fitted_slope);
    out.metric("sup_beta_times_error", conv.sup_beta_times_error);
    if report.compression.rank() <= MATRIX_ECHO_MAX_DIM {
        out.metric("compression", matrix_json(report.compression.compressed()));
        if let Ok(l) = report.reduced.laplacian() {
            out.metric("reduced_laplacian", matrix_json(l.matrix()));
        }
    }
    out.curve = Some(Curve {
        betas: conv.betas.clone(),
        values: conv.errors.clone(),
    });
    if conv.betas.is_empty() {
        out.all_singular = true;
        return out.fail("singular for every β");
    }
    let slope_ok = conv.fitted_slope.is_some_and(|s| in_range(s, RATE_SLOPE));
    let residual_ok = report.hypothesis_violation
        || report.identification_residual <= REDUCTION_RESIDUAL_TOL * (1.0 + op_norm(&inst.a));
    out.passed = slope_ok && residual_ok;
    if report.hypothesis_violation {
        out.note = Some("cluster is not Kirchhoff; convergence measured against the compression PAP".into());
    }
    out
}
