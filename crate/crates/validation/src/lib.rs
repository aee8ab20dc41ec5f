//! Helpers for the acceptance report: result lines, random samples and the
//! independent numeric spectrum classifier.

use nalgebra::Matrix3;
use qar_core::dynamics::InitialCoefficients;
use qar_core::spectral::SpectrumClass;
use qar_core::{CouplingCase, DensityMatrix3, C64};
use rand::rngs::StdRng;
use rand::Rng;

/// Collects PASS/FAIL lines and counts failures.
#[derive(Debug, Default)]
pub struct Report {
    pub failures: usize,
}

impl Report {
    pub fn line(&mut self, label: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} {label}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

/// Random full-rank density matrix.
pub fn random_density(rng: &mut StdRng) -> DensityMatrix3 {
    let a = Matrix3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let p = a * a.adjoint();
    DensityMatrix3(p / p.trace())
}

pub fn random_case(rng: &mut StdRng) -> CouplingCase {
    if rng.random_bool(0.5) {
        CouplingCase::GwOnly
    } else {
        CouplingCase::GcOnly
    }
}

/// Reported optimum sets: case, `γ⁻`, coefficients and initial cold current.
pub fn reported_sets() -> [(CouplingCase, f64, InitialCoefficients, f64); 2] {
    [
        (
            CouplingCase::GwOnly,
            7.159,
            InitialCoefficients::new(0.0, 0.125, 0.1, 0.0),
            1.330,
        ),
        (
            CouplingCase::GcOnly,
            5.857,
            InitialCoefficients::new(0.127, 0.1, 0.0, 0.0),
            1.93,
        ),
    ]
}

/// First grid time after which `|x − target| ≤ 1% |target|` holds at every
/// remaining point with a defined value.
pub fn settle_time(times: &[f64], xs: &[Option<f64>], target: f64) -> Option<f64> {
    let last_bad = xs
        .iter()
        .rposition(|x| x.is_none_or(|v| (v - target).abs() > 0.01 * target.abs()));
    match last_bad {
        None => times.first().copied(),
        Some(k) => times.get(k + 1).copied(),
    }
}

/// Spectrum class read off numeric eigenvalues of the population block: the
/// eigenvalue nearest zero is dropped and the remaining four are clustered.
pub fn numeric_class(ev: &[C64]) -> SpectrumClass {
    let mut ev = ev.to_vec();
    let z = (0..ev.len())
        .min_by(|&a, &b| ev[a].norm().total_cmp(&ev[b].norm()))
        .unwrap();
    ev.remove(z);
    let scale = ev.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let d = |a: C64, b: C64| (a - b).norm() / scale;
    for i in 0..4 {
        for j in i + 1..4 {
            for k in j + 1..4 {
                let c = (ev[i] + ev[j] + ev[k]) / 3.0;
                if [ev[i], ev[j], ev[k]].iter().all(|&e| d(e, c) < 1e-4) {
                    return SpectrumClass::ThirdOrderLep;
                }
            }
        }
    }
    for i in 0..4 {
        for j in i + 1..4 {
            if d(ev[i], ev[j]) < 1e-6 {
                return SpectrumClass::SecondOrderLep;
            }
        }
    }
    let complex = ev.iter().filter(|e| e.im.abs() > 1e-9 * scale).count();
    if complex == 0 {
        SpectrumClass::FourDistinctReal
    } else {
        SpectrumClass::TwoRealPlusConjugatePair
    }
}
