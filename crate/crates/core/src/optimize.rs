//! Coefficient and dissipation-rate sweeps of the initial heat currents, the
//! better-performance constraints, and the search for the largest initial
//! cold-bath current.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{initial_state_unchecked, InitialCoefficients};
use crate::error::{Error, Result};
use crate::jordan::{jordan_chain, JordanChainSystem};
use crate::model::{
    build_blocks, devectorize, validate_state, Bath, CouplingCase, HSVector, SystemParams, PSD_TOLERANCE,
};
use crate::spectral::{critical_damping_window, lep3_point};
use crate::thermo::{heat_currents, HeatCurrents};

/// Strictness margin of every inequality in [`check_constraints`].
pub const CONSTRAINT_MARGIN: f64 = 1e-9;
/// Margin used inside the linear program, so that optima pass the
/// re-evaluation at [`CONSTRAINT_MARGIN`].
pub const LP_MARGIN: f64 = 2e-9;
pub const DEFAULT_COEFF_BOX: (f64, f64) = (-0.5, 0.5);
pub const DEFAULT_GAMMA_STEP: f64 = 0.01;
pub const DEFAULT_REFINE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PerformanceConstraints {
    /// `Q̇_c(0) > Q̇_c^ss > 0` and `Q̇_h(0) < Q̇_h^ss < 0`.
    pub more_transfer: bool,
    /// `η_inst(0) > η^ss > 0`.
    pub higher_cop: bool,
    /// `Q̇_c(0) > 0`, `Q̇_w(0) > 0`, `Q̇_h(0) < 0`.
    pub refrigerator_signs: bool,
}

impl PerformanceConstraints {
    pub fn all(&self) -> bool {
        self.more_transfer && self.higher_cop && self.refrigerator_signs
    }
}

/// Constraint flags from the initial and steady currents.
pub fn constraints_from_currents(qi: &HeatCurrents, qss: &HeatCurrents) -> PerformanceConstraints {
    let m = CONSTRAINT_MARGIN;
    let more_transfer = qi.cold > qss.cold + m && qss.cold > m && qi.hot < qss.hot - m && qss.hot < -m;
    let higher_cop = if qi.work > m && qss.work > m {
        let (eta_i, eta_ss) = (qi.cold / qi.work, qss.cold / qss.work);
        eta_i > eta_ss + m && eta_ss > m
    } else {
        false
    };
    let refrigerator_signs = qi.cold > m && qi.work > m && qi.hot < -m;
    PerformanceConstraints {
        more_transfer,
        higher_cop,
        refrigerator_signs,
    }
}

pub fn check_constraints(rho0: &HSVector, params: &SystemParams, case: CouplingCase) -> Result<PerformanceConstraints> {
    let (l5, _) = build_blocks(params, case)?;
    let qss = heat_currents(&l5.steady_state()?, params);
    Ok(constraints_from_currents(&heat_currents(rho0, params), &qss))
}

/// Initial currents as an affine function of the coefficients:
/// `Q̇_α(0) = Q̇_α^ss + Σ_k c_k slope[k]_α`.
#[derive(Debug, Clone)]
pub struct AffineCurrents {
    pub steady: HeatCurrents,
    pub slopes: [HeatCurrents; 4],
}

impl AffineCurrents {
    pub fn new(sys: &JordanChainSystem) -> Self {
        let q = |v: &HSVector| heat_currents(v, &sys.params);
        Self {
            steady: q(&sys.rho_ss),
            slopes: [q(&sys.rho_1), q(&sys.rho_ep[0]), q(&sys.rho_ep[1]), q(&sys.rho_ep[2])],
        }
    }

    pub fn eval(&self, c: &InitialCoefficients) -> HeatCurrents {
        let c = c.to_array();
        HeatCurrents::from_fn(|b| self.steady.get(b) + (0..4).map(|k| c[k] * self.slopes[k].get(b)).sum::<f64>())
    }

    fn slope(&self, bath: Bath) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.slopes[k].get(bath))
    }
}

/// The chain system at the LEP3 point for `(ω, γ⁻)`.
pub fn lep3_system(omega: f64, gamma_minus: f64, case: CouplingCase) -> Result<JordanChainSystem> {
    let lep = lep3_point(omega, gamma_minus, case)?;
    let (l5, _) = build_blocks(&lep.params()?, case)?;
    jordan_chain(&l5, &lep)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub variable: String,
    pub value: f64,
    pub case: CouplingCase,
    pub omega: f64,
    pub gamma_minus: f64,
    pub coeffs: InitialCoefficients,
    pub qdot_i: HeatCurrents,
    pub qdot_ss: HeatCurrents,
    pub constraints: PerformanceConstraints,
    pub psd: bool,
}

impl SweepRecord {
    /// `ΔQ̇_c^i = Q̇_c^i − Q̇_c^ss`.
    pub fn delta_cold(&self) -> f64 {
        self.qdot_i.cold - self.qdot_ss.cold
    }
}

fn record(
    variable: &str,
    value: f64,
    sys: &JordanChainSystem,
    qss: HeatCurrents,
    coeffs: InitialCoefficients,
) -> SweepRecord {
    let rho0 = initial_state_unchecked(&coeffs, sys);
    let qdot_i = heat_currents(&rho0, &sys.params);
    SweepRecord {
        variable: variable.to_string(),
        value,
        case: sys.lep3.case,
        omega: sys.lep3.omega,
        gamma_minus: sys.lep3.gamma_minus,
        coeffs,
        qdot_i,
        qdot_ss: qss,
        constraints: constraints_from_currents(&qdot_i, &qss),
        psd: validate_state(&devectorize(&rho0), PSD_TOLERANCE).psd,
    }
}

/// Varies `c_k` (1-based) over `values` with the other coefficients zero.
pub fn sweep_coefficient(
    case: CouplingCase,
    k: usize,
    values: &[f64],
    omega: f64,
    gamma_minus: f64,
) -> Result<Vec<SweepRecord>> {
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("coefficient index {k} is not in 1..=4"),
        });
    }
    let sys = lep3_system(omega, gamma_minus, case)?;
    let qss = heat_currents(&sys.rho_ss, &sys.params);
    let name = format!("c{k}");
    Ok(values
        .iter()
        .map(|&v| record(&name, v, &sys, qss, InitialCoefficients::default().with(k, v)))
        .collect())
}

/// Varies `γ⁻` with fixed coefficients. Grid points where the chain cannot be
/// built are skipped.
pub fn sweep_gamma(case: CouplingCase, coeffs: &InitialCoefficients, gammas: &[f64], omega: f64) -> Vec<SweepRecord> {
    gammas
        .par_iter()
        .map(|&gm| {
            let sys = lep3_system(omega, gm, case).ok()?;
            let qss = heat_currents(&sys.rho_ss, &sys.params);
            Some(record("gamma_minus", gm, &sys, qss, *coeffs))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
    Mixed,
}

/// Monotone trend of a sampled curve by finite differences. Differences
/// within `tol · max|y|` count as zero.
pub fn trend(ys: &[f64], tol: f64) -> Trend {
    let scale = ys.iter().fold(0.0_f64, |m, y| m.max(y.abs())).max(f64::MIN_POSITIVE);
    let (mut up, mut down) = (false, false);
    for w in ys.windows(2) {
        let d = w[1] - w[0];
        if d > tol * scale {
            up = true;
        } else if d < -tol * scale {
            down = true;
        }
    }
    match (up, down) {
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (false, false) => Trend::Flat,
        (true, true) => Trend::Mixed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizeConfig {
    pub case: CouplingCase,
    pub omega: f64,
    /// 1-based index and value of the coefficient held fixed.
    pub fixed: (usize, f64),
    /// Inclusive search interval for `γ⁻`; defaults to the multiples of
    /// `gamma_step` strictly inside the critical-damping window.
    pub gamma_bounds: Option<(f64, f64)>,
    pub coeff_box: (f64, f64),
    pub gamma_step: f64,
    pub refine_step: f64,
    /// Also require `ρ(0)` to be positive semidefinite.
    pub strict_psd: bool,
}

impl OptimizeConfig {
    /// The fixed coefficient conventionally used for each case: `c₃ = 0.1`
    /// for `GwOnly`, `c₂ = 0.1` for `GcOnly`.
    pub fn standard(case: CouplingCase) -> Self {
        let fixed = match case {
            CouplingCase::GwOnly => (3, 0.1),
            CouplingCase::GcOnly => (2, 0.1),
        };
        Self {
            case,
            omega: 1.0,
            fixed,
            gamma_bounds: None,
            coeff_box: DEFAULT_COEFF_BOX,
            gamma_step: DEFAULT_GAMMA_STEP,
            refine_step: DEFAULT_REFINE_STEP,
            strict_psd: false,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.gamma_bounds.unwrap_or_else(|| {
            let (lo, hi) = critical_damping_window(self.omega, self.case);
            let h = self.gamma_step;
            (((lo / h).floor() + 1.0) * h, ((hi / h).ceil() - 1.0) * h)
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimumResult {
    pub case: CouplingCase,
    pub gamma_minus: f64,
    pub coeffs: InitialCoefficients,
    pub qdot_c_i: f64,
    pub qdot_i: HeatCurrents,
    pub qdot_ss: HeatCurrents,
    pub constraints: PerformanceConstraints,
    pub psd: bool,
    pub evaluations: usize,
}

/// Best feasible coefficients at one `γ⁻`, as `(objective, coefficients)`.
pub fn best_coefficients(sys: &JordanChainSystem, cfg: &OptimizeConfig) -> Option<(f64, InitialCoefficients)> {
    let aff = AffineCurrents::new(sys);
    let ss = aff.steady;
    let m = LP_MARGIN;
    if !(ss.cold > m && ss.hot < -m && ss.work > m) {
        return None;
    }
    let eta_ss = ss.cold / ss.work;
    let (kf, vf) = cfg.fixed;
    let free: Vec<usize> = (1..=4).filter(|&k| k != kf).collect();
    let (sc, sw, sh) = (aff.slope(Bath::Cold), aff.slope(Bath::Work), aff.slope(Bath::Hot));

    // Rows `a·x ≥ b` over the free coefficients.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let fixed_part = |s: &[f64; 4]| s[kf - 1] * vf;
    let mut push = |coef: [f64; 4], offset: f64| {
        let a: Vec<f64> = free.iter().map(|&k| coef[k - 1]).collect();
        rows.push((a, m - offset - fixed_part(&coef)));
    };
    let neg = |s: [f64; 4]| s.map(|x| -x);
    // Q̇_c(0) − Q̇_c^ss > 0, Q̇_h^ss − Q̇_h(0) > 0.
    push(sc, 0.0);
    push(neg(sh), 0.0);
    // Q̇_c(0) > 0, Q̇_w(0) > 0, −Q̇_h(0) > 0.
    push(sc, ss.cold);
    push(sw, ss.work);
    push(neg(sh), -ss.hot);
    // Q̇_c(0) − (η^ss + m) Q̇_w(0) > 0, which with Q̇_w(0) > 0 is η(0) > η^ss + m.
    let e = eta_ss + m;
    push([0, 1, 2, 3].map(|k| sc[k] - e * sw[k]), ss.cold - e * ss.work);
    let (lo, hi) = cfg.coeff_box;
    for j in 0..free.len() {
        let mut a = vec![0.0; free.len()];
        a[j] = 1.0;
        rows.push((a.clone(), lo));
        a[j] = -1.0;
        rows.push((a, -hi));
    }

    let objective: Vec<f64> = free.iter().map(|&k| sc[k - 1]).collect();
    let assemble = |x: &[f64]| {
        let mut c = InitialCoefficients::default().with(kf, vf);
        for (j, &k) in free.iter().enumerate() {
            c = c.with(k, x[j]);
        }
        c
    };
    let vertices = lp_vertices(&rows, free.len());
    let mut best: Option<(f64, InitialCoefficients)> = None;
    let mut candidates: Vec<(f64, InitialCoefficients)> = vertices
        .iter()
        .map(|x| {
            let c = assemble(x);
            (aff.eval(&c).cold, c)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(cmp_coeffs(&a.1, &b.1)));
    let scale = objective.iter().fold(ss.cold.abs(), |m, s| m.max(s.abs()));
    for (q, c) in candidates {
        if cfg.strict_psd {
            let rho0 = initial_state_unchecked(&c, sys);
            if !validate_state(&devectorize(&rho0), PSD_TOLERANCE).psd {
                continue;
            }
        }
        match best {
            None => best = Some((q, c)),
            Some((bq, bc)) => {
                if (q - bq).abs() <= 1e-12 * scale && cmp_coeffs(&c, &bc).is_lt() {
                    best = Some((q, c));
                }
            }
        }
    }
    best
}

fn cmp_coeffs(a: &InitialCoefficients, b: &InitialCoefficients) -> std::cmp::Ordering {
    let (a, b) = (a.to_array(), b.to_array());
    (0..4).fold(std::cmp::Ordering::Equal, |o, k| o.then(a[k].total_cmp(&b[k])))
}

/// Feasible vertices of `{x ∈ ℝⁿ : a_i·x ≥ b_i}` by enumerating every
/// `n`-subset of active rows.
fn lp_vertices(rows: &[(Vec<f64>, f64)], n: usize) -> Vec<Vec<f64>> {
    if n == 0 {
        return if rows.iter().all(|(_, b)| *b <= 0.0) {
            vec![vec![]]
        } else {
            vec![]
        };
    }
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| rows[subset[i]].0[j]);
        let b = DVector::from_fn(n, |i, _| rows[subset[i]].1);
        if let Some(x) = a.lu().solve(&b) {
            let feasible = x.iter().all(|v| v.is_finite())
                && rows.iter().all(|(r, rb)| {
                    let lhs: f64 = r.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
                    lhs >= rb - 1e-12 * (1.0 + rb.abs())
                });
            if feasible {
                out.push(x.iter().copied().collect());
            }
        }
        // Next combination in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if subset[i] < rows.len() - n + i {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Points `lo, lo + step, …` up to `hi`, inclusive within rounding.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

/// Deterministic maximum of `Q̇_c(0)` over `γ⁻` and the free coefficients,
/// subject to all three performance constraints.
///
/// `γ⁻` is scanned on a coarse grid and then refined by successively finer
/// local grids down to `refine_step`; at each `γ⁻` the coefficients solve an
/// exact linear program. Ties go to the smallest `γ⁻`, then the
/// lexicographically smallest coefficients.
pub fn find_optimal_qc(cfg: &OptimizeConfig) -> Result<OptimumResult> {
    let (lo, hi) = cfg.bounds();
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidParameter {
            name: "gamma_bounds",
            reason: format!("empty interval [{lo}, {hi}]"),
        });
    }
    let eval = |gm: f64| -> Option<(f64, f64, InitialCoefficients)> {
        let sys = lep3_system(cfg.omega, gm, cfg.case).ok()?;
        best_coefficients(&sys, cfg).map(|(q, c)| (gm, q, c))
    };
    let scan = |points: Vec<f64>| -> (usize, Option<(f64, f64, InitialCoefficients)>) {
        let n = points.len();
        let best = points
            .par_iter()
            .map(|&g| eval(g))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .reduce(|a, b| if b.1 > a.1 { b } else { a });
        (n, best)
    };
    let (mut evaluations, mut best) = scan(grid(lo, hi, cfg.gamma_step.max(f64::MIN_POSITIVE)));
    let mut step = cfg.gamma_step;
    while step > cfg.refine_step * (1.0 + 1e-9) {
        let Some((g0, _, _)) = best else { break };
        let fine = (step / 10.0).max(cfg.refine_step);
        let points: Vec<f64> = grid((g0 - step).max(lo), (g0 + step).min(hi), fine);
        let (n, b) = scan(points);
        evaluations += n;
        if let (Some(nb), Some(ob)) = (b, best) {
            if nb.1 > ob.1 || (nb.1 == ob.1 && nb.0 < ob.0) {
                best = Some(nb);
            }
        }
        step = fine;
    }
    let (gm, _, coeffs) = best.ok_or(Error::EmptyFeasibleSet)?;
    let sys = lep3_system(cfg.omega, gm, cfg.case)?;
    let qss = heat_currents(&sys.rho_ss, &sys.params);
    let r = record("optimum", gm, &sys, qss, coeffs);
    Ok(OptimumResult {
        case: cfg.case,
        gamma_minus: gm,
        coeffs,
        qdot_c_i: r.qdot_i.cold,
        qdot_i: r.qdot_i,
        qdot_ss: r.qdot_ss,
        constraints: r.constraints,
        psd: r.psd,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::initial_state;

    fn steady_record_currents(case: CouplingCase, gm: f64) -> (HeatCurrents, HeatCurrents) {
        let r = &sweep_coefficient(case, 1, &[0.0], 1.0, gm).unwrap()[0];
        (r.qdot_i, r.qdot_ss)
    }

    #[test]
    fn zero_coefficients_give_steady_currents() {
        for case in CouplingCase::ALL {
            let (lo, hi) = critical_damping_window(1.0, case);
            for k in 1..10 {
                let gm = lo + (hi - lo) * k as f64 / 10.0;
                let (qi, qss) = steady_record_currents(case, gm);
                for b in Bath::ALL {
                    assert!((qi.get(b) - qss.get(b)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn steady_state_fails_more_transfer() {
        let sys = lep3_system(1.0, 7.159, CouplingCase::GwOnly).unwrap();
        let c = check_constraints(&sys.rho_ss, &sys.params, CouplingCase::GwOnly).unwrap();
        assert!(!c.more_transfer);
        assert!(c.refrigerator_signs);
    }

    #[test]
    fn coefficient_trends() {
        let vals: Vec<f64> = (0..=10).map(|k| -0.2 + 0.04 * k as f64).collect();
        let cold = |case, k, gm| -> Vec<f64> {
            sweep_coefficient(case, k, &vals, 1.0, gm)
                .unwrap()
                .iter()
                .map(|r| r.qdot_i.cold)
                .collect()
        };
        assert_eq!(trend(&cold(CouplingCase::GwOnly, 3, 7.0), 1e-12), Trend::Increasing);
        assert_eq!(trend(&cold(CouplingCase::GwOnly, 2, 7.0), 1e-12), Trend::Flat);
        let gc = |k| trend(&cold(CouplingCase::GcOnly, k, 5.5), 1e-12);
        assert_eq!(gc(2), Trend::Increasing);
        assert_eq!(gc(4), Trend::Increasing);
    }

    #[test]
    fn sweeps_are_affine_and_keep_steady_currents() {
        let vals = [-0.3, 0.05, 0.4];
        for case in CouplingCase::ALL {
            for k in 1..=4 {
                let recs = sweep_coefficient(case, k, &vals, 1.0, 6.0).unwrap();
                for r in &recs {
                    assert_eq!(r.qdot_ss, recs[0].qdot_ss);
                }
                for b in Bath::ALL {
                    let y: Vec<f64> = recs.iter().map(|r| r.qdot_i.get(b)).collect();
                    let s1 = (y[1] - y[0]) / (vals[1] - vals[0]);
                    let s2 = (y[2] - y[1]) / (vals[2] - vals[1]);
                    assert!((s1 - s2).abs() < 1e-10 * (1.0 + s1.abs()));
                }
            }
        }
    }

    #[test]
    fn affine_model_matches_states() {
        let sys = lep3_system(1.0, 6.3, CouplingCase::GcOnly).unwrap();
        let aff = AffineCurrents::new(&sys);
        let c = InitialCoefficients::new(0.1, -0.2, 0.3, 0.05);
        let direct = heat_currents(&initial_state(&c, &sys), &sys.params);
        let model = aff.eval(&c);
        for b in Bath::ALL {
            assert!((direct.get(b) - model.get(b)).abs() < 1e-13);
        }
    }

    #[test]
    fn gamma_sweep_shapes() {
        let (lo, hi) = critical_damping_window(1.0, CouplingCase::GwOnly);
        let gammas = grid(lo + 0.05, hi - 0.05, 0.05);
        let gw = sweep_gamma(
            CouplingCase::GwOnly,
            &InitialCoefficients::new(0.0, 0.0, 0.1, 0.1),
            &gammas,
            1.0,
        );
        assert_eq!(gw.len(), gammas.len());
        let y: Vec<f64> = gw.iter().map(|r| r.qdot_i.cold).collect();
        let peak = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(peak > 0 && peak < y.len() - 1, "peak at edge {peak}");
        assert_eq!(trend(&y[..=peak], 0.0), Trend::Increasing);
        assert_eq!(trend(&y[peak..], 0.0), Trend::Decreasing);
        for r in &gw {
            let sys = lep3_system(1.0, r.gamma_minus, CouplingCase::GwOnly).unwrap();
            let qi = heat_currents(&initial_state(&r.coeffs, &sys), &sys.params).cold;
            let qss = crate::thermo::steady_heat_currents(&sys.params, CouplingCase::GwOnly)
                .unwrap()
                .cold;
            assert!((r.delta_cold() - (qi - qss)).abs() < 1e-12);
        }

        let (lo, hi) = critical_damping_window(1.0, CouplingCase::GcOnly);
        let gammas = grid(lo + 0.05, hi - 0.05, 0.05);
        let gc = sweep_gamma(
            CouplingCase::GcOnly,
            &InitialCoefficients::new(0.1, 0.1, 0.0, 0.0),
            &gammas,
            1.0,
        );
        assert_eq!(gc.len(), gammas.len());
    }

    #[test]
    fn strongly_negative_c3_breaks_refrigerator_signs() {
        let recs = sweep_coefficient(CouplingCase::GwOnly, 3, &[0.0, -1.0], 1.0, 7.159).unwrap();
        assert!(recs[0].constraints.refrigerator_signs);
        assert!(!recs[1].constraints.refrigerator_signs, "{:?}", recs[1].qdot_i);
    }

    #[test]
    fn lp_vertices_of_unit_square() {
        let rows = vec![
            (vec![1.0, 0.0], 0.0),
            (vec![-1.0, 0.0], -1.0),
            (vec![0.0, 1.0], 0.0),
            (vec![0.0, -1.0], -1.0),
            (vec![-1.0, -1.0], -1.5),
        ];
        let mut v = lp_vertices(&rows, 2);
        v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], vec![0.0, 0.0]);
        assert!(v.iter().all(|x| x[0] + x[1] <= 1.5 + 1e-12));
    }

    #[test]
    fn optimum_is_feasible_and_reproducible() {
        for case in CouplingCase::ALL {
            let cfg = OptimizeConfig::standard(case);
            let a = find_optimal_qc(&cfg).unwrap();
            assert!(a.constraints.all(), "{case:?} {:?}", a.constraints);
            let sys = lep3_system(1.0, a.gamma_minus, case).unwrap();
            let c = check_constraints(&initial_state(&a.coeffs, &sys), &sys.params, case).unwrap();
            assert!(c.all());
            let b = find_optimal_qc(&cfg).unwrap();
            assert_eq!(a.gamma_minus.to_bits(), b.gamma_minus.to_bits());
            assert_eq!(a.coeffs, b.coeffs);
            assert_eq!(a.coeffs.get(cfg.fixed.0), cfg.fixed.1);
        }
    }

    #[test]
    fn degenerate_bounds_evaluate_single_point() {
        let mut cfg = OptimizeConfig::standard(CouplingCase::GwOnly);
        cfg.gamma_bounds = Some((7.0, 7.0));
        let r = find_optimal_qc(&cfg).unwrap();
        assert_eq!(r.gamma_minus, 7.0);
        let sys = lep3_system(1.0, 7.0, CouplingCase::GwOnly).unwrap();
        let (q, c) = best_coefficients(&sys, &cfg).unwrap();
        assert_eq!(r.coeffs, c);
        assert!((r.qdot_c_i - q).abs() < 1e-12);
    }

    #[test]
    fn infeasible_region_is_reported() {
        // Below 3√3 the LEP3 steady state is not a refrigerator.
        let mut cfg = OptimizeConfig::standard(CouplingCase::GwOnly);
        cfg.gamma_bounds = Some((3.5, 4.0));
        assert!(matches!(find_optimal_qc(&cfg), Err(Error::EmptyFeasibleSet)));
    }
}
