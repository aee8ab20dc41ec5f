//! Time evolution of block states: analytic modal sums away from exceptional
//! points, the Jordan-chain formula at the third-order point, and a fixed-step
//! RK4 integrator.

use log::warn;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jordan::{BiorthoEigenSystem, JordanChainSystem};
use crate::model::{
    build_blocks, devectorize, same_basis, validate_state, BasisTag, CouplingCase, HSVector, Superoperator,
    SystemParams, C64,
};

/// Default integration step in units of `1/ω`.
pub const DEFAULT_DT: f64 = 1e-3;

/// Weights of `ρ₁, ρ⁽¹⁾, ρ⁽²⁾, ρ⁽³⁾` in `ρ(0) = ρ_ss + c₁ρ₁ + c₂ρ⁽¹⁾ + c₃ρ⁽²⁾ + c₄ρ⁽³⁾`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl InitialCoefficients {
    pub fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Self {
        Self { c1, c2, c3, c4 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.c1, self.c2, self.c3, self.c4]
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    /// Coefficient by 1-based index, matching the `c₁…c₄` naming.
    pub fn get(&self, k: usize) -> f64 {
        self.to_array()[k - 1]
    }

    pub fn with(&self, k: usize, value: f64) -> Self {
        let mut c = self.to_array();
        c[k - 1] = value;
        Self::from_array(c)
    }
}

fn combine(basis: BasisTag, terms: &[(C64, &HSVector)]) -> HSVector {
    let mut out = HSVector::zeros(basis);
    for (w, v) in terms {
        out.axpy(*w, v).expect("vectors share the system basis");
    }
    out
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Builds `ρ(0)` from chain coefficients. Logs a warning when the result is not
/// positive semidefinite.
pub fn initial_state(coeffs: &InitialCoefficients, sys: &JordanChainSystem) -> HSVector {
    let rho = initial_state_unchecked(coeffs, sys);
    let report = validate_state(&devectorize(&rho), 1e-9);
    if !report.psd {
        warn!(
            "initial state for {coeffs:?} is not positive semidefinite (min eigenvalue {:.3e})",
            report.min_eigenvalue
        );
    }
    rho
}

/// [`initial_state`] without the positivity check, for bulk sweeps.
pub fn initial_state_unchecked(coeffs: &InitialCoefficients, sys: &JordanChainSystem) -> HSVector {
    let [c1, c2, c3, c4] = coeffs.to_array();
    combine(
        sys.basis,
        &[
            (r(1.0), &sys.rho_ss),
            (r(c1), &sys.rho_1),
            (r(c2), &sys.rho_ep[0]),
            (r(c3), &sys.rho_ep[1]),
            (r(c4), &sys.rho_ep[2]),
        ],
    )
}

/// Projections of a state onto the Jordan-chain basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCoefficients {
    pub c_ss: f64,
    pub coeffs: InitialCoefficients,
    /// Largest imaginary part among the raw projections; zero for Hermitian input.
    pub imag_defect: f64,
}

pub fn coefficients_from_state(rho0: &HSVector, sys: &JordanChainSystem) -> Result<StateCoefficients> {
    same_basis(sys.basis, rho0.basis())?;
    let raw: Vec<C64> = sys.left_vectors().iter().map(|s| s.dot(rho0.data())).collect();
    let imag_defect = raw.iter().map(|x| x.im.abs()).fold(0.0, f64::max);
    Ok(StateCoefficients {
        c_ss: raw[0].re,
        coeffs: InitialCoefficients::new(raw[1].re, raw[2].re, raw[3].re, raw[4].re),
        imag_defect,
    })
}

/// One exponential mode `e^{λt} Σ_k p_k t^k`.
#[derive(Debug, Clone)]
pub struct Mode {
    pub lambda: C64,
    pub poly: Vec<HSVector>,
}

/// `ρ(t) = ρ_ss + Σ_modes e^{λt} Σ_k p_k t^k`, the closed-form solution in a
/// spectral or Jordan basis.
#[derive(Debug, Clone)]
pub struct ModalExpansion {
    pub params: SystemParams,
    pub basis: BasisTag,
    pub steady: HSVector,
    pub modes: Vec<Mode>,
}

impl ModalExpansion {
    /// Largest real part among modes with a nonzero amplitude.
    pub fn slowest_rate(&self) -> Option<f64> {
        self.active_modes().map(|m| m.lambda.re).reduce(f64::max)
    }

    fn active_modes(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| m.poly.iter().any(|p| p.norm1() > 0.0))
    }

    /// The transient `ρ(t) − ρ_ss` written as `e^{s t} v`, returning `(s, v)`.
    /// `v` stays representable when `e^{s t}` would underflow.
    pub fn residual_scaled(&self, t: f64) -> (f64, HSVector) {
        let shift = self.slowest_rate().unwrap_or(0.0);
        let mut out = HSVector::zeros(self.basis);
        for m in self.active_modes() {
            let e = ((m.lambda - shift) * t).exp();
            let mut tk = 1.0;
            for p in &m.poly {
                out.axpy(e * tk, p).expect("same basis");
                tk *= t;
            }
        }
        (shift, out)
    }

    pub fn residual(&self, t: f64) -> HSVector {
        let (s, v) = self.residual_scaled(t);
        v.scale(r((s * t).exp()))
    }

    pub fn state(&self, t: f64) -> HSVector {
        let mut out = self.steady.clone();
        out.axpy(r(1.0), &self.residual(t)).expect("same basis");
        out
    }

    pub fn initial_state(&self) -> HSVector {
        self.state(0.0)
    }
}

/// Modal expansion of `ρ(t)` for a diagonalizable system.
pub fn nonlep_expansion(sys: &BiorthoEigenSystem, rho0: &HSVector) -> Result<ModalExpansion> {
    let c = sys.project(rho0)?;
    let steady = sys.right[0].scale(c[0]);
    let modes = (1..sys.len())
        .map(|j| Mode {
            lambda: sys.eigenvalues[j],
            poly: vec![sys.right[j].scale(c[j])],
        })
        .collect();
    Ok(ModalExpansion {
        params: sys.params,
        basis: sys.basis,
        steady,
        modes,
    })
}

/// Modal expansion of `ρ(t)` at the third-order point:
/// `ρ_ss + c₁e^{λ₁t}ρ₁ + e^{λ⁽³⁾t}[(c₂+c₃t+c₄t²/2)ρ⁽¹⁾ + (c₃+c₄t)ρ⁽²⁾ + c₄ρ⁽³⁾]`.
pub fn lep3_expansion(sys: &JordanChainSystem, coeffs: &InitialCoefficients) -> ModalExpansion {
    let [c1, c2, c3, c4] = coeffs.to_array();
    let [e1, e2, e3] = &sys.rho_ep;
    let b = sys.basis;
    let p0 = combine(b, &[(r(c2), e1), (r(c3), e2), (r(c4), e3)]);
    let p1 = combine(b, &[(r(c3), e1), (r(c4), e2)]);
    let p2 = e1.scale(r(0.5 * c4));
    ModalExpansion {
        params: sys.params,
        basis: b,
        steady: sys.rho_ss.clone(),
        modes: vec![
            Mode {
                lambda: r(sys.lambda1),
                poly: vec![sys.rho_1.scale(r(c1))],
            },
            Mode {
                lambda: r(sys.lambda3),
                poly: vec![p0, p1, p2],
            },
        ],
    }
}

/// `ρ(t)` from the spectral resolution; `t = 0` returns `ρ0` itself.
pub fn evolve_nonlep(sys: &BiorthoEigenSystem, rho0: &HSVector, t: f64) -> Result<HSVector> {
    if t == 0.0 {
        same_basis(sys.basis, rho0.basis())?;
        return Ok(rho0.clone());
    }
    Ok(nonlep_expansion(sys, rho0)?.state(t))
}

pub fn evolve_lep3(sys: &JordanChainSystem, coeffs: &InitialCoefficients, t: f64) -> HSVector {
    lep3_expansion(sys, coeffs).state(t)
}

/// States on a uniform time grid `t_k = k·dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<HSVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn last(&self) -> &HSVector {
        self.states.last().expect("trajectory has at least the initial point")
    }
}

/// Number of steps needed to reach `t_end` with step `dt` (the final step
/// lands on or just past `t_end`).
pub fn step_count(t_end: f64, dt: f64) -> usize {
    (t_end / dt - 1e-9).ceil().max(0.0) as usize
}

/// Classic fixed-step fourth-order Runge-Kutta for `dρ/dt = Lρ`.
pub fn evolve_numeric(l: &Superoperator, rho0: &HSVector, t_end: f64, dt: f64) -> Result<Trajectory> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    if t_end < 0.0 {
        return Err(Error::NegativeTime(t_end));
    }
    same_basis(l.basis(), rho0.basis())?;
    let m = l.matrix();
    let n = step_count(t_end, dt);
    let h = r(dt);
    let mut states = Vec::with_capacity(n + 1);
    let mut y: DVector<C64> = rho0.data().clone();
    states.push(rho0.clone());
    for _ in 0..n {
        let k1 = m * &y;
        let k2 = m * (&y + &k1 * (h * 0.5));
        let k3 = m * (&y + &k2 * (h * 0.5));
        let k4 = m * (&y + &k3 * h);
        y += (k1 + k2 * r(2.0) + k3 * r(2.0) + k4) * (h / 6.0);
        states.push(HSVector::new(y.clone(), l.basis())?);
    }
    Ok(Trajectory { dt, states })
}

/// Full nine-component state at time `t`: the population block is taken from
/// `block5_at_t`, and the two coherence blocks of `rho0_full` are propagated
/// with their exact matrix exponentials.
pub fn evolve_full(
    params: &SystemParams,
    case: CouplingCase,
    rho0_full: &HSVector,
    block5_at_t: &HSVector,
    t: f64,
) -> Result<HSVector> {
    same_basis(BasisTag::Full9, rho0_full.basis())?;
    same_basis(BasisTag::block5(case), block5_at_t.basis())?;
    let (_, l2) = build_blocks(params, case)?;
    let u = (l2.matrix() * r(t)).exp();
    let b2 = BasisTag::block2(case);
    let coh = HSVector::new(&u * rho0_full.extract(b2).data(), b2)?;
    let u_conj = u.map(|x| x.conj());
    let b2c = b2.adjoint();
    let coh_conj = HSVector::new(&u_conj * rho0_full.extract(b2c).data(), b2c)?;
    let mut full = block5_at_t.embed();
    full.axpy(r(1.0), &coh.embed())?;
    full.axpy(r(1.0), &coh_conj.embed())?;
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{bi_eigensystem, jordan_chain};
    use crate::linalg::MaxAbs;
    use crate::model::{build_liouvillian_9, vectorize, DensityMatrix3};
    use crate::spectral::lep3_point;
    use nalgebra::{DMatrix, Matrix3};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    pub(crate) fn random_density(rng: &mut StdRng) -> DensityMatrix3 {
        let a = Matrix3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let p = a * a.adjoint();
        DensityMatrix3(p / p.trace())
    }

    fn lep_system(case: CouplingCase, gm: f64) -> (Superoperator, JordanChainSystem) {
        let lep = lep3_point(1.0, gm, case).unwrap();
        let (l5, _) = build_blocks(&lep.params().unwrap(), case).unwrap();
        let sys = jordan_chain(&l5, &lep).unwrap();
        (l5, sys)
    }

    #[test]
    fn initial_state_with_zero_coefficients_is_steady() {
        let (_, sys) = lep_system(CouplingCase::GwOnly, 7.159);
        let rho = initial_state(&InitialCoefficients::default(), &sys);
        assert_eq!(rho, sys.rho_ss);
    }

    #[test]
    fn initial_state_has_unit_trace() {
        let (_, sys) = lep_system(CouplingCase::GcOnly, 5.857);
        let rho = initial_state(&InitialCoefficients::new(0.3, -0.2, 0.5, 0.1), &sys);
        assert!((rho.trace() - r(1.0)).norm() < 1e-14);
    }

    #[test]
    fn coefficient_roundtrip() {
        let mut rng = StdRng::seed_from_u64(41);
        for case in CouplingCase::ALL {
            let (_, sys) = lep_system(case, 6.0);
            for _ in 0..100 {
                let c = InitialCoefficients::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let back = coefficients_from_state(&initial_state(&c, &sys), &sys).unwrap();
                assert!((back.c_ss - 1.0).abs() < 1e-10);
                for k in 1..=4 {
                    assert!((back.coeffs.get(k) - c.get(k)).abs() < 1e-10);
                }
                assert!(back.imag_defect < 1e-10);
            }
            let only = coefficients_from_state(&sys.rho_ep[1], &sys).unwrap();
            assert!((only.coeffs.c3 - 1.0).abs() < 1e-12 && only.c_ss.abs() < 1e-12);
            let ss = coefficients_from_state(&sys.rho_ss, &sys).unwrap();
            assert!((ss.c_ss - 1.0).abs() < 1e-12 && ss.coeffs.to_array().iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn projection_reconstructs_physical_states() {
        let mut rng = StdRng::seed_from_u64(43);
        let (_, sys) = lep_system(CouplingCase::GwOnly, 8.0);
        for _ in 0..20 {
            let rho0 = vectorize(&random_density(&mut rng)).extract(sys.basis);
            let c = coefficients_from_state(&rho0, &sys).unwrap();
            let rebuilt = initial_state(&c.coeffs, &sys);
            assert!(rebuilt.sub(&rho0).unwrap().data().max_abs() < 1e-10);
        }
    }

    #[test]
    fn nonlep_evolution_limits() {
        let p = SystemParams::one_coupling(CouplingCase::GcOnly, 1.0, 0.6, 0.8, 1.9).unwrap();
        let (l5, _) = build_blocks(&p, CouplingCase::GcOnly).unwrap();
        let sys = bi_eigensystem(&l5).unwrap();
        let mut rng = StdRng::seed_from_u64(47);
        let rho0 = vectorize(&random_density(&mut rng)).extract(sys.basis);
        assert_eq!(evolve_nonlep(&sys, &rho0, 0.0).unwrap(), rho0);
        let slowest = sys.eigenvalues[1..]
            .iter()
            .map(|x| x.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let late = evolve_nonlep(&sys, &rho0, 50.0 / slowest.abs()).unwrap();
        assert!(late.sub(&sys.right[0]).unwrap().data().max_abs() < 1e-12);
    }

    #[test]
    fn lep3_evolution_at_zero_and_pure_exponential() {
        let (_, sys) = lep_system(CouplingCase::GwOnly, 7.159);
        let c = InitialCoefficients::new(0.05, 0.125, 0.1, 0.02);
        assert!(
            evolve_lep3(&sys, &c, 0.0)
                .sub(&initial_state(&c, &sys))
                .unwrap()
                .data()
                .max_abs()
                < 1e-15
        );

        let c = InitialCoefficients::new(0.1, 0.2, 0.0, 0.0);
        for t in [0.1, 0.5, 1.0] {
            let mut v = evolve_lep3(&sys, &c, t);
            v.axpy(r(-1.0), &sys.rho_ss).unwrap();
            v.axpy(r(-0.1 * (sys.lambda1 * t).exp()), &sys.rho_1).unwrap();
            let expected = sys.rho_ep[0].scale(r(0.2 * (sys.lambda3 * t).exp()));
            assert!(v.sub(&expected).unwrap().data().max_abs() < 1e-14);
        }
    }

    #[test]
    fn lep3_secular_growth() {
        let (_, sys) = lep_system(CouplingCase::GwOnly, 7.159);
        let c4 = 0.1;
        let exp = lep3_expansion(&sys, &InitialCoefficients::new(0.0, 0.0, 0.0, c4));
        let t = 20.0 / sys.lambda3.abs();
        let (s, v) = exp.residual_scaled(t);
        assert_eq!(s, sys.lambda3);
        let ratio = v.norm1() / (0.5 * t * t * c4 * sys.rho_ep[0].norm1());
        assert!((ratio - 1.0).abs() < 0.15, "ratio {ratio}");
    }

    #[test]
    fn rk4_on_zero_generator_is_constant() {
        let p = SystemParams::one_coupling(CouplingCase::GwOnly, 1.0, 1.0, 1.0, 1.0).unwrap();
        let l = Superoperator::new(DMatrix::zeros(5, 5), BasisTag::Block5Gw, p).unwrap();
        let mut rng = StdRng::seed_from_u64(53);
        let rho0 = vectorize(&random_density(&mut rng)).extract(BasisTag::Block5Gw);
        let traj = evolve_numeric(&l, &rho0, 1.0, 0.1).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.states.iter().all(|s| *s == rho0));
    }

    #[test]
    fn rk4_matches_analytic_and_converges_at_fourth_order() {
        let (l5, sys) = lep_system(CouplingCase::GcOnly, 5.857);
        let c = InitialCoefficients::new(0.127, 0.1, 0.0, 0.0);
        let rho0 = initial_state(&c, &sys);
        let exact = evolve_lep3(&sys, &c, 1.0);
        let err = |dt: f64| {
            let traj = evolve_numeric(&l5, &rho0, 1.0, dt).unwrap();
            traj.last().sub(&exact).unwrap().norm1()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
        let traj = evolve_numeric(&l5, &rho0, 10.0, DEFAULT_DT).unwrap();
        for (k, s) in traj.states.iter().enumerate().step_by(500) {
            let d = s.sub(&evolve_lep3(&sys, &c, traj.time(k))).unwrap().norm1();
            assert!(d < 1e-8, "t={} d={d}", traj.time(k));
            assert!((s.trace() - r(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn full_state_evolution_matches_nine_dimensional_rk4() {
        let case = CouplingCase::GwOnly;
        let p = SystemParams::one_coupling(case, 1.0, 0.9, 1.4, 2.2).unwrap();
        let (l5, _) = build_blocks(&p, case).unwrap();
        let sys = bi_eigensystem(&l5).unwrap();
        let mut rng = StdRng::seed_from_u64(59);
        let rho0 = vectorize(&random_density(&mut rng));
        let t = 2.0;
        let b5 = evolve_nonlep(&sys, &rho0.extract(BasisTag::Block5Gw), t).unwrap();
        let full = evolve_full(&p, case, &rho0, &b5, t).unwrap();
        let l9 = build_liouvillian_9(&p);
        let traj = evolve_numeric(&l9, &rho0, t, 1e-3).unwrap();
        assert!(full.sub(traj.last()).unwrap().norm1() < 1e-9);
        assert!(full.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn invalid_steps_are_rejected() {
        let (l5, sys) = lep_system(CouplingCase::GwOnly, 7.0);
        assert!(evolve_numeric(&l5, &sys.rho_ss, 1.0, 0.0).is_err());
        assert_eq!(
            evolve_numeric(&l5, &sys.rho_ss, -1.0, 0.1).unwrap_err(),
            Error::NegativeTime(-1.0)
        );
    }
}
