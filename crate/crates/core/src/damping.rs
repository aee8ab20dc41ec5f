//! Damping ratios of an LEP3 run against a reference run that differs only in
//! the coupling strength, and the critical-damping verdict.

use nalgebra::Matrix3;
use serde::Serialize;

use crate::dynamics::{initial_state, lep3_expansion, nonlep_expansion, InitialCoefficients, ModalExpansion};
use crate::error::{Error, Result};
use crate::jordan::{bi_eigensystem, jordan_chain};
use crate::model::{build_blocks, devectorize, Bath, HSVector, C64};
use crate::spectral::Lep3Point;
use crate::thermo::{heat_series, ScalarSeries};

/// Default length of a damping series, in units of `1/ω`.
pub const DEFAULT_HORIZON: f64 = 40.0;
pub const DEFAULT_SAMPLES: usize = 4001;
/// Reference residual norms below this are treated as exact zeros.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;
/// Heat-ratio points whose denominator is below this fraction of its envelope
/// are masked.
pub const HEAT_MASK_RTOL: f64 = 1e-12;
/// The series must end below this fraction of its value at `τ`.
pub const DECAY_FACTOR: f64 = 0.05;
/// Minimum horizon, in units of `1/|λ⁽³⁾|`.
pub const MIN_HORIZON_RATES: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
pub enum NormMode {
    /// Sum of moduli of the block-vector components.
    #[default]
    Vector1,
    /// Trace norm of the 3×3 matrix.
    Trace,
}

pub fn residual_norm(v: &HSVector, mode: NormMode) -> f64 {
    match mode {
        NormMode::Vector1 => v.norm1(),
        NormMode::Trace => {
            let m: Matrix3<C64> = devectorize(v).0;
            m.singular_values().sum()
        }
    }
}

/// `R_s(t) = ‖ρ(t) − ρ_ss‖ / ‖ρ̃(t) − ρ̃_ss‖`. `None` when the reference
/// residual vanishes.
pub fn ratio_state(num: &ModalExpansion, den: &ModalExpansion, t: f64, mode: NormMode) -> Option<f64> {
    let (sn, vn) = num.residual_scaled(t);
    let (sd, vd) = den.residual_scaled(t);
    let d = residual_norm(&vd, mode);
    if d < DENOMINATOR_FLOOR {
        return None;
    }
    Some(residual_norm(&vn, mode) / d * ((sn - sd) * t).exp())
}

/// Ratio of two residual vectors given directly, e.g. from numeric runs.
pub fn ratio_of_residuals(num: &HSVector, den: &HSVector, mode: NormMode) -> Option<f64> {
    let d = residual_norm(den, mode);
    (d >= DENOMINATOR_FLOOR).then(|| residual_norm(num, mode) / d)
}

/// `Q̇_c(t) − Q̇_c^ss` written as `e^{s t}·(value)`, with the matching envelope
/// `Σ |q_k| tᵏ e^{(Re λ − s) t}`. Returns `(s, value, envelope)`.
fn cold_residual_scaled(series: &ScalarSeries, t: f64) -> (f64, f64, f64) {
    let active = || series.modes.iter().filter(|m| m.1.iter().any(|q| q.norm() > 0.0));
    let shift = active().map(|m| m.0.re).reduce(f64::max).unwrap_or(0.0);
    let mut value = C64::new(0.0, 0.0);
    let mut envelope = 0.0;
    for (lambda, poly) in active() {
        let e = ((lambda - shift) * t).exp();
        let mut tk = 1.0;
        for q in poly {
            value += q * e * tk;
            envelope += q.norm() * e.norm() * tk;
            tk *= t;
        }
    }
    (shift, value.re, envelope)
}

fn heat_ratio_of_series(num: &ScalarSeries, den: &ScalarSeries, t: f64) -> Option<f64> {
    let (sn, n, _) = cold_residual_scaled(num, t);
    let (sd, d, env) = cold_residual_scaled(den, t);
    if d.abs() < DENOMINATOR_FLOOR || d.abs() < HEAT_MASK_RTOL * env {
        return None;
    }
    Some(n.abs() / d.abs() * ((sn - sd) * t).exp())
}

/// `R_c(t) = |Q̇_c(t) − Q̇_c^ss| / |Q̇̃_c(t) − Q̇̃_c^ss|`. `None` at masked
/// denominator zeros.
pub fn ratio_heat(num: &ModalExpansion, den: &ModalExpansion, t: f64) -> Option<f64> {
    heat_ratio_of_series(&heat_series(num, Bath::Cold), &heat_series(den, Bath::Cold), t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    /// Earliest time after which every valid point is below 1.
    pub tau: Option<f64>,
    pub holds: bool,
    /// Number of masked points.
    pub excluded: usize,
}

/// Decides critical damping for a ratio series.
///
/// `holds` requires a crossing time `τ`, `R(t_end) < 0.05·R(τ)`, and a
/// negative least-squares slope of `ln R` over the last tenth of the valid
/// points.
pub fn check_critical_damping(times: &[f64], values: &[Option<f64>], lambda3: f64) -> Result<Verdict> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: values.len(),
        });
    }
    let t_end = times.last().copied().unwrap_or(0.0);
    let required = MIN_HORIZON_RATES / lambda3.abs();
    if t_end < required {
        return Err(Error::InsufficientHorizon { t_end, required });
    }
    let valid: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter_map(|(&t, v)| v.map(|r| (t, r)))
        .collect();
    let excluded = values.len() - valid.len();
    let start = match valid.iter().rposition(|&(_, r)| r >= 1.0) {
        None => 0,
        Some(k) => k + 1,
    };
    let Some(&(tau, r_tau)) = valid.get(start) else {
        return Ok(Verdict {
            tau: None,
            holds: false,
            excluded,
        });
    };
    let r_end = valid.last().map(|p| p.1).unwrap_or(f64::NAN);
    let tail_len = (valid.len() / 10).max(2);
    let tail: Vec<(f64, f64)> = valid[valid.len().saturating_sub(tail_len)..]
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(t, r)| (t, r.ln()))
        .collect();
    let decreasing = log_slope(&tail).is_some_and(|s| s < 0.0);
    Ok(Verdict {
        tau: Some(tau),
        holds: r_end < DECAY_FACTOR * r_tau && decreasing,
        excluded,
    })
}

/// Least-squares slope of `y` against `t`.
pub fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct DampingSeries {
    pub times: Vec<f64>,
    pub r_s: Vec<Option<f64>>,
    pub r_c: Vec<Option<f64>>,
    pub norm: NormMode,
    pub state: Verdict,
    pub heat: Verdict,
}

/// Evenly spaced grid `[0, t_end]` with `n ≥ 2` points.
pub fn time_grid(t_end: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}

pub fn damping_series(
    num: &ModalExpansion,
    den: &ModalExpansion,
    lambda3: f64,
    times: &[f64],
    mode: NormMode,
) -> Result<DampingSeries> {
    let r_s: Vec<_> = times.iter().map(|&t| ratio_state(num, den, t, mode)).collect();
    let (qn, qd) = (heat_series(num, Bath::Cold), heat_series(den, Bath::Cold));
    let r_c: Vec<_> = times.iter().map(|&t| heat_ratio_of_series(&qn, &qd, t)).collect();
    Ok(DampingSeries {
        state: check_critical_damping(times, &r_s, lambda3)?,
        heat: check_critical_damping(times, &r_c, lambda3)?,
        times: times.to_vec(),
        r_s,
        r_c,
        norm: mode,
    })
}

/// Reference run: the LEP3 rates with coupling `g_ref`, started from the same
/// physical initial state expanded in the reference eigenbasis.
pub fn reference_expansion(lep: &Lep3Point, g_ref: f64, rho0: &HSVector) -> Result<ModalExpansion> {
    let params = lep.params()?.with_coupling(lep.case, g_ref)?;
    let (l5, _) = build_blocks(&params, lep.case)?;
    nonlep_expansion(&bi_eigensystem(&l5)?, rho0)
}

/// Both runs of a damping comparison.
pub fn damping_runs(
    lep: &Lep3Point,
    coeffs: &InitialCoefficients,
    g_ref: f64,
) -> Result<(ModalExpansion, ModalExpansion)> {
    let (l5, _) = build_blocks(&lep.params()?, lep.case)?;
    let sys = jordan_chain(&l5, lep)?;
    let rho0 = initial_state(coeffs, &sys);
    let reference = reference_expansion(lep, g_ref, &rho0)?;
    Ok((lep3_expansion(&sys, coeffs), reference))
}

/// Damping series on the default grid of `DEFAULT_HORIZON/ω`.
pub fn lep3_damping(
    lep: &Lep3Point,
    coeffs: &InitialCoefficients,
    g_ref: f64,
    mode: NormMode,
) -> Result<DampingSeries> {
    let (num, den) = damping_runs(lep, coeffs, g_ref)?;
    let times = time_grid(DEFAULT_HORIZON / lep.omega, DEFAULT_SAMPLES);
    damping_series(&num, &den, lep.lambda3, &times, mode)
}
