//! Heat currents, accumulated heats, coefficients of performance and the
//! operating mode of the machine.
//!
//! Sign convention: a positive current is heat flowing from the bath into the
//! system.

use serde::Serialize;

use crate::dynamics::{ModalExpansion, Trajectory};
use crate::error::{Error, Result};
use crate::model::{
    bath_dissipator, build_blocks, devectorize, Bath, CouplingCase, DensityMatrix3, HSVector, SystemParams, C64,
};

/// Denominators of a COP below this (relative to the numerator, at least
/// absolute) are reported as [`Error::DenominatorNearZero`].
pub const COP_DENOMINATOR_TOL: f64 = 1e-12;

/// One value per bath.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HeatCurrents {
    pub hot: f64,
    pub cold: f64,
    pub work: f64,
}

impl HeatCurrents {
    pub fn from_fn(mut f: impl FnMut(Bath) -> f64) -> Self {
        Self {
            hot: f(Bath::Hot),
            cold: f(Bath::Cold),
            work: f(Bath::Work),
        }
    }

    pub fn get(&self, bath: Bath) -> f64 {
        match bath {
            Bath::Hot => self.hot,
            Bath::Cold => self.cold,
            Bath::Work => self.work,
        }
    }

    pub fn sum(&self) -> f64 {
        self.hot + self.cold + self.work
    }
}

/// `tr(H_s L_α v)` for an arbitrary (possibly non-Hermitian) matrix `v`.
pub fn heat_functional(v: &DensityMatrix3, params: &SystemParams, bath: Bath) -> C64 {
    (params.hamiltonian() * bath_dissipator(params, bath, v).0).trace()
}

/// Heat current `Q̇_α = tr(H_s L_α ρ)` of a density matrix.
pub fn heat_current_dm(rho: &DensityMatrix3, params: &SystemParams, bath: Bath) -> f64 {
    heat_functional(rho, params, bath).re
}

/// Heat current of a state vector; block vectors are zero-filled.
pub fn heat_current(rho: &HSVector, params: &SystemParams, bath: Bath) -> f64 {
    heat_current_dm(&devectorize(rho), params, bath)
}

pub fn heat_currents(rho: &HSVector, params: &SystemParams) -> HeatCurrents {
    let m = devectorize(rho);
    HeatCurrents::from_fn(|b| heat_current_dm(&m, params, b))
}

/// Internal energy `tr(H_s ρ)`.
pub fn energy(rho: &HSVector, params: &SystemParams) -> f64 {
    (params.hamiltonian() * devectorize(rho).0).trace().re
}

/// Currents at the unique steady state of the one-coupling block.
pub fn steady_heat_currents(params: &SystemParams, case: CouplingCase) -> Result<HeatCurrents> {
    let (l5, _) = build_blocks(params, case)?;
    Ok(heat_currents(&l5.steady_state()?, params))
}

/// Scalar `f(t) = constant + Re Σ_modes e^{λt} Σ_k p_k t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    pub constant: f64,
    pub modes: Vec<(C64, Vec<C64>)>,
}

impl ScalarSeries {
    pub fn value(&self, t: f64) -> f64 {
        let mut acc = C64::new(self.constant, 0.0);
        for (lambda, poly) in &self.modes {
            let e = (lambda * t).exp();
            let mut tk = 1.0;
            for p in poly {
                acc += p * e * tk;
                tk *= t;
            }
        }
        acc.re
    }

    /// `∫₀ᵗ f(τ) dτ`, integrating each `τᵏe^{λτ}` term in closed form.
    pub fn integral(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let mut acc = C64::new(self.constant * t, 0.0);
        for (lambda, poly) in &self.modes {
            let e = (lambda * t).exp();
            let mut ik = (e - 1.0) / lambda;
            let mut tk = 1.0;
            for (k, p) in poly.iter().enumerate() {
                if k > 0 {
                    tk *= t;
                    ik = (e * tk - ik * k as f64) / lambda;
                }
                acc += p * ik;
            }
        }
        Ok(acc.re)
    }
}

/// Heat current of bath `α` along a modal expansion, as a closed-form series.
pub fn heat_series(exp: &ModalExpansion, bath: Bath) -> ScalarSeries {
    let q = |v: &HSVector| heat_functional(&devectorize(v), &exp.params, bath);
    ScalarSeries {
        constant: q(&exp.steady).re,
        modes: exp
            .modes
            .iter()
            .map(|m| (m.lambda, m.poly.iter().map(q).collect()))
            .collect(),
    }
}

/// Analytic accumulated heat `Q_α(t) = ∫₀ᵗ Q̇_α dτ`.
pub fn accumulated_heat(exp: &ModalExpansion, bath: Bath, t: f64) -> Result<f64> {
    heat_series(exp, bath).integral(t)
}

/// Composite-trapezoid accumulated heats at every point of a trajectory.
pub fn accumulated_heat_trapezoid(traj: &Trajectory, params: &SystemParams) -> Vec<HeatCurrents> {
    let mut out = Vec::with_capacity(traj.len());
    let mut acc = HeatCurrents::default();
    let mut prev: Option<HeatCurrents> = None;
    for s in &traj.states {
        let q = heat_currents(s, params);
        if let Some(p) = prev {
            let h = 0.5 * traj.dt;
            acc.hot += h * (p.hot + q.hot);
            acc.cold += h * (p.cold + q.cold);
            acc.work += h * (p.work + q.work);
        }
        out.push(acc);
        prev = Some(q);
    }
    out
}

/// `numerator / denominator`, refusing near-zero denominators.
pub fn cop(numerator: f64, denominator: f64) -> Result<f64> {
    if denominator.abs() <= COP_DENOMINATOR_TOL * numerator.abs().max(1.0) {
        return Err(Error::DenominatorNearZero(denominator));
    }
    Ok(numerator / denominator)
}

/// Instantaneous COP `Q̇_c / Q̇_w`.
pub fn cop_inst(rho: &HSVector, params: &SystemParams) -> Result<f64> {
    let q = heat_currents(rho, params);
    cop(q.cold, q.work)
}

/// Accumulated COP `Q_c / Q_w`.
pub fn cop_accum(q_c: f64, q_w: f64) -> Result<f64> {
    cop(q_c, q_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MachineMode {
    /// `Q̇_h > 0`, `Q̇_c < 0`, `Q̇_w < 0`; the work bath is a heat sink here.
    EngineLike,
    /// `Q̇_h < 0`, `Q̇_c > 0`, `Q̇_w > 0`.
    Refrigerator,
    /// `Q̇_h > 0`, `Q̇_c < 0`, `Q̇_w > 0`.
    Heater,
    Undetermined,
}

pub fn classify_machine(q: &HeatCurrents, tol: f64) -> MachineMode {
    let sign = |x: f64| {
        if x > tol {
            1
        } else if x < -tol {
            -1
        } else {
            0
        }
    };
    match (sign(q.hot), sign(q.cold), sign(q.work)) {
        (1, -1, -1) => MachineMode::EngineLike,
        (-1, 1, 1) => MachineMode::Refrigerator,
        (1, -1, 1) => MachineMode::Heater,
        _ => MachineMode::Undetermined,
    }
}

/// Heat bookkeeping at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatRecord {
    pub t: f64,
    pub qdot: HeatCurrents,
    pub accumulated: HeatCurrents,
    pub eta_inst: Option<f64>,
    pub eta_accum: Option<f64>,
}

/// Analytic heat records on the given times.
pub fn heat_records(exp: &ModalExpansion, times: &[f64]) -> Result<Vec<HeatRecord>> {
    let series = Bath::ALL.map(|b| heat_series(exp, b));
    let pick = |b: Bath| &series[b.index()];
    times
        .iter()
        .map(|&t| {
            let qdot = HeatCurrents::from_fn(|b| pick(b).value(t));
            let mut accumulated = HeatCurrents::default();
            for b in Bath::ALL {
                let v = pick(b).integral(t)?;
                match b {
                    Bath::Hot => accumulated.hot = v,
                    Bath::Cold => accumulated.cold = v,
                    Bath::Work => accumulated.work = v,
                }
            }
            Ok(HeatRecord {
                t,
                qdot,
                accumulated,
                eta_inst: cop(qdot.cold, qdot.work).ok(),
                eta_accum: cop_accum(accumulated.cold, accumulated.work).ok(),
            })
        })
        .collect()
}
