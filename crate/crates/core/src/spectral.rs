//! Closed-form spectrum of the 5×5 population block.
//!
//! The characteristic polynomial of the block factorizes as
//! `λ (λ − λ₁) F₃(λ)` with a real cubic `F₃`. Its roots are found with
//! Cardano's formula and classified through the cubic discriminants.

use serde::Serialize;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::model::{CouplingCase, SystemParams, C64};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Default relative tolerance for treating discriminants as zero.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-12;

/// Coefficients of `F₃(λ) = aλ³ + bλ² + cλ + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CubicCoeffs {
    pub fn eval(&self, x: C64) -> C64 {
        ((x * self.a + self.b) * x + self.c) * x + self.d
    }

    fn eval_deriv(&self, x: C64) -> C64 {
        (x * (3.0 * self.a) + 2.0 * self.b) * x + self.c
    }

    /// Characteristic root scale: the largest of `|b/a|`, `√|c/a|`, `∛|d/a|`.
    pub fn root_scale(&self) -> f64 {
        let a = self.a.abs();
        (self.b.abs() / a)
            .max((self.c.abs() / a).sqrt())
            .max((self.d.abs() / a).cbrt())
    }
}

/// `(γ⁺, γ⁻)` of the block as seen by the cubic. The GcOnly coefficient list is
/// the GwOnly one with the two rates exchanged.
fn oriented_rates(params: &SystemParams, case: CouplingCase) -> Result<(f64, f64)> {
    let (gp, gm) = params.reduction_rates(case)?;
    Ok(match case {
        CouplingCase::GwOnly => (gp, gm),
        CouplingCase::GcOnly => (gm, gp),
    })
}

pub fn cubic_coeffs(params: &SystemParams, case: CouplingCase) -> Result<CubicCoeffs> {
    let (p, m) = oriented_rates(params, case)?;
    let g2 = params.active_coupling(case).powi(2);
    let w2 = params.active_omega(case).powi(2);
    Ok(CubicCoeffs {
        a: 4.0,
        b: 8.0 * m + 20.0 * p,
        c: 16.0 * g2 + 5.0 * m * m + 26.0 * m * p + 33.0 * p * p + 4.0 * w2,
        d: 8.0 * g2 * m
            + m.powi(3)
            + 24.0 * g2 * p
            + 8.0 * m * m * p
            + 21.0 * m * p * p
            + 18.0 * p.powi(3)
            + 4.0 * m * w2
            + 8.0 * p * w2,
    })
}

/// The real eigenvalue split off from the cubic, `−(2γ⁻+γ⁺)` for GwOnly and
/// `−(2γ⁺+γ⁻)` for GcOnly.
pub fn lambda1(params: &SystemParams, case: CouplingCase) -> Result<f64> {
    let (p, m) = oriented_rates(params, case)?;
    Ok(-(2.0 * m + p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discriminants {
    pub delta: f64,
    pub delta0: f64,
    pub delta1: f64,
}

/// `Δ` is evaluated as `(4Δ₀³ − Δ₁²)/(27a²)`, which keeps its relative
/// accuracy near a triple root where the expanded form cancels.
pub fn discriminants(co: &CubicCoeffs) -> Discriminants {
    let CubicCoeffs { a, b, c, d } = *co;
    let delta0 = b * b - 3.0 * a * c;
    let delta1 = 2.0 * b.powi(3) - 9.0 * a * b * c + 27.0 * a * a * d;
    Discriminants {
        delta: (4.0 * delta0.powi(3) - delta1 * delta1) / (27.0 * a * a),
        delta0,
        delta1,
    }
}

/// Roots of the cubic, sorted by real part then imaginary part.
///
/// The Cardano cube root uses the sign choice that maximizes `|C|`; when `C`
/// vanishes the three roots coincide at `−b/(3a)`. Each root gets a guarded
/// Newton polish.
pub fn cubic_roots(co: &CubicCoeffs) -> Result<[C64; 3]> {
    if co.a == 0.0 || !co.a.is_finite() {
        return Err(Error::DegenerateCubic);
    }
    let disc = discriminants(co);
    let d0 = C64::new(disc.delta0, 0.0);
    let d1 = C64::new(disc.delta1, 0.0);
    let root = (d1 * d1 - d0 * d0 * d0 * 4.0).sqrt();
    let plus = ((d1 + root) * 0.5).cbrt();
    let minus = ((d1 - root) * 0.5).cbrt();
    let cc = if plus.norm() >= minus.norm() { plus } else { minus };

    let shift = -co.b / (3.0 * co.a);
    let scale = co.root_scale().max(f64::MIN_POSITIVE);
    let mut roots = if cc.norm() <= 1e-14 * co.a.abs() * scale {
        [C64::new(shift, 0.0); 3]
    } else {
        let xi = C64::new(-0.5, -0.5 * SQRT_3);
        let mut out = [C64::new(0.0, 0.0); 3];
        let mut xk = C64::new(1.0, 0.0);
        for r in out.iter_mut() {
            let u = xk * cc;
            *r = -(u + co.b + d0 / u) / (3.0 * co.a);
            xk *= xi;
        }
        out
    };
    for r in roots.iter_mut() {
        *r = polish(co, *r);
    }
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(roots)
}

fn polish(co: &CubicCoeffs, mut x: C64) -> C64 {
    for _ in 0..3 {
        let f = co.eval(x);
        let df = co.eval_deriv(x);
        if df.norm() == 0.0 {
            break;
        }
        let next = x - f / df;
        if co.eval(next).norm() < f.norm() {
            x = next;
        } else {
            break;
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SpectrumClass {
    /// Three distinct real cubic roots, so four distinct real nonzero eigenvalues.
    FourDistinctReal,
    /// One real cubic root and a complex-conjugate pair.
    TwoRealPlusConjugatePair,
    /// A double cubic root.
    SecondOrderLep,
    /// A triple cubic root.
    ThirdOrderLep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub lambda0: f64,
    pub lambda1: f64,
    pub cubic_roots: [C64; 3],
    pub classification: SpectrumClass,
    pub coeffs: CubicCoeffs,
    pub discriminants: Discriminants,
    /// `Δ` divided by `a⁴ r⁶`, `r` the root scale.
    pub delta_normalized: f64,
    /// `Δ₀` divided by `a² r²`.
    pub delta0_normalized: f64,
    /// `Δ₁` divided by `a³ r³`.
    pub delta1_normalized: f64,
}

impl SpectrumReport {
    /// All five block eigenvalues: `0`, `λ₁`, then the cubic roots.
    pub fn eigenvalues(&self) -> [C64; 5] {
        let r = self.cubic_roots;
        [
            C64::new(self.lambda0, 0.0),
            C64::new(self.lambda1, 0.0),
            r[0],
            r[1],
            r[2],
        ]
    }
}

/// Normalized discriminants `(Δ/(a⁴r⁶), Δ₀/(a²r²))`. Both are scale-free, so a
/// single relative tolerance applies at any parameter magnitude.
pub fn normalized_discriminants(co: &CubicCoeffs) -> (f64, f64) {
    let disc = discriminants(co);
    let r = co.root_scale();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let a = co.a.abs();
    (disc.delta / (a.powi(4) * r.powi(6)), disc.delta0 / (a * a * r * r))
}

/// Magnitude scales of `Δ₀` and `Δ₁`: the sums of the absolute values of
/// their terms, which bound their floating-point cancellation error.
fn term_scales(co: &CubicCoeffs) -> (f64, f64) {
    let CubicCoeffs { a, b, c, d } = *co;
    let (a, b, c, d) = (a.abs(), b.abs(), c.abs(), d.abs());
    (
        b * b + 3.0 * a * c,
        2.0 * b.powi(3) + 9.0 * a * b * c + 27.0 * a * a * d,
    )
}

/// Classifies the spectrum from the cubic discriminants.
///
/// `Δ₀` and `Δ₁` count as zero when below `tol` times the sum of the
/// absolute values of their terms; a triple root needs both. A double root
/// needs `Δ₁² − 4Δ₀³ ≈ 0` relative to `Δ₁² + 4|Δ₀|³` plus the error carried
/// in from `Δ₀` and `Δ₁` at the same tolerance. Otherwise the sign of `Δ`
/// decides.
pub fn classify(params: &SystemParams, case: CouplingCase, tol: f64) -> Result<SpectrumReport> {
    let coeffs = cubic_coeffs(params, case)?;
    let l1 = lambda1(params, case)?;
    let disc = discriminants(&coeffs);
    let (dn, d0n) = normalized_discriminants(&coeffs);
    let a = coeffs.a.abs();
    let r = coeffs.root_scale();
    let d1n = if r == 0.0 {
        0.0
    } else {
        disc.delta1 / (a.powi(3) * r.powi(3))
    };
    let (s0, s1) = term_scales(&coeffs);
    let zero = |x: f64, scale: f64| x.abs() <= tol * scale;
    let (d0, d1) = (disc.delta0, disc.delta1);
    let q = d1 * d1 - 4.0 * d0.powi(3);
    let q_scale = d1 * d1 + 4.0 * d0.abs().powi(3) + 2.0 * d1.abs() * s1 + 12.0 * d0 * d0 * s0;
    let classification = if zero(d0, s0) && zero(d1, s1) {
        SpectrumClass::ThirdOrderLep
    } else if zero(q, q_scale) {
        SpectrumClass::SecondOrderLep
    } else if disc.delta > 0.0 {
        SpectrumClass::FourDistinctReal
    } else {
        SpectrumClass::TwoRealPlusConjugatePair
    };
    let mut roots = cubic_roots(&coeffs)?;
    if classification == SpectrumClass::ThirdOrderLep {
        roots = [C64::new(-coeffs.b / (3.0 * coeffs.a), 0.0); 3];
    }
    Ok(SpectrumReport {
        lambda0: 0.0,
        lambda1: l1,
        cubic_roots: roots,
        classification,
        coeffs,
        discriminants: disc,
        delta_normalized: dn,
        delta0_normalized: d0n,
        delta1_normalized: d1n,
    })
}

/// Parameters of a third-order exceptional point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lep3Point {
    pub omega: f64,
    pub gamma_minus: f64,
    pub g3: f64,
    pub gamma_plus3: f64,
    pub lambda3: f64,
    pub case: CouplingCase,
}

impl Lep3Point {
    pub fn params(&self) -> Result<SystemParams> {
        SystemParams::one_coupling(self.case, self.omega, self.g3, self.gamma_plus3, self.gamma_minus)
    }

    pub fn lambda1(&self) -> f64 {
        match self.case {
            CouplingCase::GwOnly => -(2.0 * self.gamma_minus + self.gamma_plus3),
            CouplingCase::GcOnly => -(2.0 * self.gamma_plus3 + self.gamma_minus),
        }
    }
}

/// `g = √2 ω`, `γ⁺ = 6√3 ω − γ⁻`, with triple root `γ⁻ − 10√3 ω` (GwOnly) or
/// `−γ⁻ − 4√3 ω` (GcOnly).
pub fn lep3_point(omega: f64, gamma_minus: f64, case: CouplingCase) -> Result<Lep3Point> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: format!("must be positive, got {omega}"),
        });
    }
    if !gamma_minus.is_finite() || gamma_minus <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma_minus",
            reason: format!("must be positive, got {gamma_minus}"),
        });
    }
    let gamma_plus3 = 6.0 * SQRT_3 * omega - gamma_minus;
    if gamma_plus3 <= 0.0 {
        return Err(Error::GammaPlusNonpositive(gamma_plus3));
    }
    let lambda3 = match case {
        CouplingCase::GwOnly => gamma_minus - 10.0 * SQRT_3 * omega,
        CouplingCase::GcOnly => -gamma_minus - 4.0 * SQRT_3 * omega,
    };
    Ok(Lep3Point {
        omega,
        gamma_minus,
        g3: SQRT_2 * omega,
        gamma_plus3,
        lambda3,
        case,
    })
}

/// Values of `γ⁺` that put the spectrum on a second-order exceptional surface
/// for the given `ω`, `g` and `γ⁻`. All four sign branches are evaluated; only
/// real positive candidates are returned, in ascending order. The formula is
/// the same for both coupling cases.
pub fn lep2_gamma_plus(omega: f64, g: f64, gamma_minus: f64) -> Vec<f64> {
    let g2 = g * g;
    let w2 = omega * omega;
    let base = 2.0 * g2 * g2 + 10.0 * g2 * w2 - w2 * w2;
    let inner = g2 * (g2 - 2.0 * w2).powi(3);
    if inner < 0.0 {
        return Vec::new();
    }
    let inner = 2.0 * inner.sqrt();
    let mut out = Vec::new();
    for s_in in [1.0, -1.0] {
        let arg = (base + s_in * inner) / w2;
        if arg < 0.0 {
            continue;
        }
        for s_out in [1.0, -1.0] {
            let gp = -gamma_minus + s_out * 2.0 * arg.sqrt();
            if gp > 0.0 {
                out.push(gp);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Open interval of `γ⁻` for which `λ₁ < λ⁽³⁾ < 0` at the third-order point.
pub fn critical_damping_window(omega: f64, case: CouplingCase) -> (f64, f64) {
    match case {
        CouplingCase::GwOnly => (2.0 * SQRT_3 * omega, 6.0 * SQRT_3 * omega),
        CouplingCase::GcOnly => (0.0, 4.0 * SQRT_3 * omega),
    }
}
