//! Biorthonormal eigensystems away from exceptional points, Jordan chains at
//! the third-order point, and general Jordan decompositions of a block.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, MaxAbs};
use crate::model::{BasisTag, CouplingCase, HSVector, Superoperator, SystemParams, C64};
use crate::spectral::{classify, Lep3Point, SpectrumClass, DEFAULT_CLASSIFY_TOL};

/// Eigenvalues closer than this are treated as degenerate by [`bi_eigensystem`].
pub const MIN_EIGEN_GAP: f64 = 1e-6;

/// Singular values below `SOLVE_RTOL · σ_max` are dropped in singular solves.
pub const SOLVE_RTOL: f64 = 1e-10;

/// Chain residuals above this (relative to the chain vector) are rejected.
pub const CHAIN_TOL: f64 = 1e-10;

/// Right eigenvectors and dual left covectors of a diagonalizable block.
///
/// Covectors are stored as plain vectors `σ` acting as `σ·ρ = Σ_k σ_k ρ_k`
/// (no conjugation). Index 0 is always the steady state.
#[derive(Debug, Clone)]
pub struct BiorthoEigenSystem {
    pub params: SystemParams,
    pub basis: BasisTag,
    pub eigenvalues: Vec<C64>,
    pub right: Vec<HSVector>,
    pub left: Vec<DVector<C64>>,
    /// 2-norm condition number of the right-eigenvector matrix.
    pub condition_number: f64,
}

impl BiorthoEigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Projections `c_j = σ_j·ρ`.
    pub fn project(&self, rho: &HSVector) -> Result<Vec<C64>> {
        crate::model::same_basis(self.basis, rho.basis())?;
        Ok(self.left.iter().map(|s| s.dot(rho.data())).collect())
    }
}

fn min_gap(values: &[C64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

fn matrix_from_columns(cols: &[&DVector<C64>]) -> DMatrix<C64> {
    let n = cols[0].len();
    DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r])
}

pub fn bi_eigensystem(l: &Superoperator) -> Result<BiorthoEigenSystem> {
    let m = l.matrix();
    let block_case = match l.basis() {
        BasisTag::Block5Gw => Some(CouplingCase::GwOnly),
        BasisTag::Block5Gc => Some(CouplingCase::GcOnly),
        _ => None,
    };
    if let Some(case) = block_case {
        // Numerically split roots of an exceptional point can look well
        // separated, so consult the discriminants first.
        if let Ok(report) = classify(l.params(), case, DEFAULT_CLASSIFY_TOL) {
            if matches!(
                report.classification,
                SpectrumClass::SecondOrderLep | SpectrumClass::ThirdOrderLep
            ) {
                return Err(Error::DegenerateSpectrum {
                    gap: min_gap(&report.eigenvalues()),
                });
            }
        }
    }
    let mut values = linalg::eigenvalues(m)?;
    let gap = min_gap(&values);
    if gap < MIN_EIGEN_GAP {
        return Err(Error::DegenerateSpectrum { gap });
    }
    let ss = (0..values.len())
        .min_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm()))
        .expect("nonempty spectrum");
    let zero = values.remove(ss);
    values.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    values.insert(0, zero);

    let trace = l.basis().trace_functional();
    let mut rights = Vec::with_capacity(values.len());
    for (k, &lambda) in values.iter().enumerate() {
        let mut v = linalg::null_vector(&linalg::shifted(m, lambda));
        let tr = trace.as_ref().map(|t| t.dot(&v));
        match tr {
            Some(tr) if k == 0 && tr.norm() > 1e-12 => v /= tr,
            _ => {
                let big = v
                    .iter()
                    .copied()
                    .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                    .expect("nonempty");
                v /= big;
            }
        }
        rights.push(v);
    }
    let cols: Vec<&DVector<C64>> = rights.iter().collect();
    let r = matrix_from_columns(&cols);
    let s = linalg::inverse(&r)?;
    let left = (0..values.len()).map(|k| s.row(k).transpose()).collect();
    // Rayleigh quotients refine the Schur estimates.
    let eigenvalues = (0..values.len())
        .map(|k| {
            if k == 0 {
                C64::new(0.0, 0.0)
            } else {
                (s.row(k) * m * &rights[k])[(0, 0)]
            }
        })
        .collect();
    let right = rights
        .into_iter()
        .map(|v| HSVector::new(v, l.basis()))
        .collect::<Result<Vec<_>>>()?;
    Ok(BiorthoEigenSystem {
        params: *l.params(),
        basis: l.basis(),
        eigenvalues,
        right,
        left,
        condition_number: linalg::condition_number(&r),
    })
}

/// Dimension of the null space of `L − λ`, counting singular values not above
/// `tol · σ_max(L)`.
pub fn geometric_multiplicity(l: &Superoperator, lambda: C64, tol: f64) -> Result<usize> {
    let scale = linalg::singular_values(l.matrix())[0].max(1.0);
    let s = linalg::singular_values(&linalg::shifted(l.matrix(), lambda));
    let count = s.iter().filter(|&&x| x <= tol * scale).count();
    if count == 0 {
        return Err(Error::NotAnEigenvalue {
            lambda: format!("{lambda}"),
            sigma_min: *s.last().expect("nonempty"),
        });
    }
    Ok(count)
}

/// Rescales a right eigenvector of a five-component block so that it is the
/// vector of a Hermitian matrix, its largest component has modulus one, and
/// its first significant population is positive.
fn hermitian_normalize(v: &HSVector) -> HSVector {
    let jv = v.adjoint();
    let overlap = v.data().dotc(jv.data());
    let phase = if overlap.norm() > 1e-300 {
        C64::from_polar(1.0, 0.5 * overlap.arg())
    } else {
        C64::new(1.0, 0.0)
    };
    let w = v.scale(phase);
    let w = symmetrize(&w);
    let big = w.data().max_abs();
    let w = w.scale(C64::new(1.0 / big, 0.0));
    let sign = (0..3)
        .filter_map(|k| w.basis().position(k, k))
        .map(|p| w.data()[p].re)
        .find(|x| x.abs() > 1e-8)
        .map_or(1.0, f64::signum);
    w.scale(C64::new(sign, 0.0))
}

/// `(v + Jv)/2` with `J` the Hermitian-conjugation map.
fn symmetrize(v: &HSVector) -> HSVector {
    let jv = v.adjoint();
    HSVector::new((v.data() + jv.data()) * C64::new(0.5, 0.0), v.basis()).expect("same basis")
}

/// Jordan-chain eigensystem at a third-order exceptional point.
///
/// Chain vectors satisfy `(L − λ⁽³⁾)ρ⁽¹⁾ = 0` and `(L − λ⁽³⁾)ρ⁽ᵏ⁺¹⁾ = ρ⁽ᵏ⁾`.
/// `ρ⁽²⁾` and `ρ⁽³⁾` are the minimum-norm solutions of their singular systems,
/// which makes them orthogonal to `ρ⁽¹⁾` and keeps every chain vector
/// Hermitian. The left covectors are the rows of the inverse of
/// `[ρ_ss, ρ₁, ρ⁽¹⁾, ρ⁽²⁾, ρ⁽³⁾]`.
#[derive(Debug, Clone)]
pub struct JordanChainSystem {
    pub lep3: Lep3Point,
    pub params: SystemParams,
    pub basis: BasisTag,
    pub lambda1: f64,
    pub lambda3: f64,
    pub rho_ss: HSVector,
    pub sigma_ss: DVector<C64>,
    pub rho_1: HSVector,
    pub sigma_1: DVector<C64>,
    pub rho_ep: [HSVector; 3],
    pub sigma_ep: [DVector<C64>; 3],
    /// Largest chain residual `‖(L−λ)ρ⁽ᵏ⁺¹⁾ − ρ⁽ᵏ⁾‖∞`.
    pub chain_residual: f64,
}

impl JordanChainSystem {
    /// Right vectors in the order `[ρ_ss, ρ₁, ρ⁽¹⁾, ρ⁽²⁾, ρ⁽³⁾]`.
    pub fn right_vectors(&self) -> [&HSVector; 5] {
        [
            &self.rho_ss,
            &self.rho_1,
            &self.rho_ep[0],
            &self.rho_ep[1],
            &self.rho_ep[2],
        ]
    }

    /// Left covectors in the same order as [`Self::right_vectors`].
    pub fn left_vectors(&self) -> [&DVector<C64>; 5] {
        [
            &self.sigma_ss,
            &self.sigma_1,
            &self.sigma_ep[0],
            &self.sigma_ep[1],
            &self.sigma_ep[2],
        ]
    }

    /// Similarity matrix whose columns are the right vectors.
    pub fn similarity(&self) -> DMatrix<C64> {
        let cols: Vec<&DVector<C64>> = self.right_vectors().iter().map(|v| v.data()).collect();
        matrix_from_columns(&cols)
    }

    /// Jordan matrix in the basis of [`Self::right_vectors`].
    pub fn jordan_matrix(&self) -> DMatrix<C64> {
        let mut j = DMatrix::zeros(5, 5);
        j[(1, 1)] = C64::new(self.lambda1, 0.0);
        for k in 2..5 {
            j[(k, k)] = C64::new(self.lambda3, 0.0);
        }
        j[(2, 3)] = C64::new(1.0, 0.0);
        j[(3, 4)] = C64::new(1.0, 0.0);
        j
    }
}

fn lep3_matches(l: &Superoperator, lep3: &Lep3Point) -> bool {
    let p = l.params();
    let case = lep3.case;
    let Ok((gp, gm)) = p.reduction_rates(case) else {
        return false;
    };
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
    l.basis() == BasisTag::block5(case)
        && close(p.active_omega(case), lep3.omega)
        && close(p.active_coupling(case), lep3.g3)
        && close(gp, lep3.gamma_plus3)
        && close(gm, lep3.gamma_minus)
}

/// Solves `a x = b` in the minimum-norm sense and returns `(x, residual)`.
fn chain_step(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<(DVector<C64>, f64)> {
    let x = linalg::min_norm_solve(a, b, SOLVE_RTOL)?;
    let res = (a * &x - b).max_abs() / b.max_abs().max(1e-300);
    Ok((x, res))
}

pub fn jordan_chain(l: &Superoperator, lep3: &Lep3Point) -> Result<JordanChainSystem> {
    if !lep3_matches(l, lep3) {
        return Err(Error::NotAtLep3);
    }
    let report = classify(l.params(), lep3.case, DEFAULT_CLASSIFY_TOL)?;
    if report.classification != SpectrumClass::ThirdOrderLep {
        return Err(Error::NotAtLep3);
    }
    let lambda1 = report.lambda1;
    let lambda3 = lep3.lambda3;
    let gap = (lambda1 - lambda3).abs();
    if gap < MIN_EIGEN_GAP {
        return Err(Error::DegenerateSpectrum { gap });
    }
    let basis = l.basis();
    let m = l.matrix();
    let a = linalg::shifted(m, C64::new(lambda3, 0.0));

    let hs = |v: DVector<C64>| HSVector::new(v, basis);
    let rho1 = hermitian_normalize(&hs(linalg::null_vector(&a))?);
    let (x2, r2) = chain_step(&a, rho1.data())?;
    let rho2 = symmetrize(&hs(x2)?);
    let (x3, r3) = chain_step(&a, rho2.data())?;
    let rho3 = symmetrize(&hs(x3)?);
    let chain_residual = r2.max(r3);
    if chain_residual.is_nan() || chain_residual >= CHAIN_TOL {
        return Err(Error::ChainResidualTooLarge(chain_residual));
    }

    let rho_ss = l.steady_state()?;
    let rho_1 = hermitian_normalize(&hs(linalg::null_vector(&linalg::shifted(m, C64::new(lambda1, 0.0))))?);

    let t = matrix_from_columns(&[rho_ss.data(), rho_1.data(), rho1.data(), rho2.data(), rho3.data()]);
    let s = linalg::inverse(&t)?;
    let row = |k: usize| s.row(k).transpose();

    Ok(JordanChainSystem {
        lep3: *lep3,
        params: *l.params(),
        basis,
        lambda1,
        lambda3,
        rho_ss,
        sigma_ss: row(0),
        rho_1,
        sigma_1: row(1),
        rho_ep: [rho1, rho2, rho3],
        sigma_ep: [row(2), row(3), row(4)],
        chain_residual,
    })
}

/// One Jordan block of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JordanBlock {
    pub lambda: C64,
    pub size: usize,
}

/// `L = T J T⁻¹` with `J` block-diagonal in Jordan form.
#[derive(Debug, Clone)]
pub struct JordanForm {
    pub j: DMatrix<C64>,
    pub t: DMatrix<C64>,
    pub blocks: Vec<JordanBlock>,
}

impl JordanForm {
    pub fn is_diagonal(&self) -> bool {
        self.blocks.iter().all(|b| b.size == 1)
    }

    /// Frobenius norm of `T J T⁻¹ − L`.
    pub fn reconstruction_error(&self, l: &DMatrix<C64>) -> Result<f64> {
        let tinv = linalg::inverse(&self.t)?;
        Ok((&self.t * &self.j * tinv - l).norm())
    }
}

/// Eigenvalue clusters `(value, algebraic multiplicity)`.
fn eigen_clusters(l: &Superoperator) -> Result<Vec<(C64, usize)>> {
    let block_case = match l.basis() {
        BasisTag::Block5Gw => Some(CouplingCase::GwOnly),
        BasisTag::Block5Gc => Some(CouplingCase::GcOnly),
        _ => None,
    };
    if let Some(case) = block_case {
        if let Ok(report) = classify(l.params(), case, DEFAULT_CLASSIFY_TOL) {
            let r = report.cubic_roots;
            let co = report.coeffs;
            let d0 = report.discriminants.delta0;
            let zero = C64::new(0.0, 0.0);
            let l1 = C64::new(report.lambda1, 0.0);
            let mut clusters = vec![(zero, 1), (l1, 1)];
            match report.classification {
                SpectrumClass::ThirdOrderLep => clusters.push((r[0], 3)),
                SpectrumClass::SecondOrderLep => {
                    let double = (9.0 * co.a * co.d - co.b * co.c) / (2.0 * d0);
                    let simple = (4.0 * co.a * co.b * co.c - 9.0 * co.a * co.a * co.d - co.b.powi(3)) / (co.a * d0);
                    clusters.push((C64::new(double, 0.0), 2));
                    clusters.push((C64::new(simple, 0.0), 1));
                }
                _ => clusters.extend(r.iter().map(|&x| (x, 1))),
            }
            return Ok(merge_clusters(clusters));
        }
    }
    let values = linalg::eigenvalues(l.matrix())?;
    Ok(merge_clusters(values.into_iter().map(|v| (v, 1)).collect()))
}

/// Merges clusters closer than the eigen-gap threshold.
fn merge_clusters(input: Vec<(C64, usize)>) -> Vec<(C64, usize)> {
    let mut out: Vec<(C64, usize)> = Vec::new();
    for (v, m) in input {
        if let Some(c) = out.iter_mut().find(|c| (c.0 - v).norm() < MIN_EIGEN_GAP) {
            let total = (c.1 + m) as f64;
            c.0 = (c.0 * c.1 as f64 + v * m as f64) / total;
            c.1 += m;
        } else {
            out.push((v, m));
        }
    }
    out
}

/// Jordan decomposition of a block. Eigenvalues come from the closed-form
/// spectrum when the block is a one-coupling population block, otherwise from
/// the numeric eigensolver; Jordan structure is then read off from singular
/// values of `L − λ` (clusters up to size three).
pub fn jordan_form(l: &Superoperator) -> Result<JordanForm> {
    let m = l.matrix();
    let n = m.nrows();
    let scale = linalg::singular_values(m)[0].max(1.0);
    let tol = 1e-8 * scale;
    let mut columns: Vec<DVector<C64>> = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    for (lambda, alg) in eigen_clusters(l)? {
        let a = linalg::shifted(m, lambda);
        let null = linalg::null_space(&a, tol);
        let geo = null.len().clamp(1, alg);
        if geo == alg {
            let vecs = if null.len() >= alg {
                null
            } else {
                vec![linalg::null_vector(&a)]
            };
            for v in vecs.into_iter().take(alg) {
                columns.push(v);
                blocks.push(JordanBlock { lambda, size: 1 });
            }
        } else if geo == 1 {
            let mut chain = vec![linalg::null_vector(&a)];
            for _ in 1..alg {
                let (x, _) = chain_step(&a, chain.last().expect("nonempty"))?;
                chain.push(x);
            }
            columns.extend(chain);
            blocks.push(JordanBlock { lambda, size: alg });
        } else {
            // alg = 3, geo = 2: one chain of length two plus an eigenvector.
            let a2 = &a * &a;
            let gen_space = linalg::null_space(&a2, tol);
            let top = gen_space
                .iter()
                .map(|v| {
                    let mut w = v.clone();
                    for e in &null {
                        w -= e * e.dotc(v);
                    }
                    w
                })
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .ok_or(Error::Singular)?;
            let top = &top / C64::new(top.norm(), 0.0);
            let bottom = &a * &top;
            let mut other = null
                .iter()
                .map(|e| e - &bottom * (bottom.dotc(e) / bottom.dotc(&bottom)))
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .ok_or(Error::Singular)?;
            other /= C64::new(other.norm(), 0.0);
            columns.push(bottom);
            columns.push(top);
            blocks.push(JordanBlock { lambda, size: 2 });
            columns.push(other);
            blocks.push(JordanBlock { lambda, size: 1 });
        }
    }
    if columns.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: columns.len(),
        });
    }
    let cols: Vec<&DVector<C64>> = columns.iter().collect();
    let t = matrix_from_columns(&cols);
    let mut j = DMatrix::zeros(n, n);
    let mut k = 0;
    for b in &blocks {
        for i in 0..b.size {
            j[(k + i, k + i)] = b.lambda;
            if i + 1 < b.size {
                j[(k + i, k + i + 1)] = C64::new(1.0, 0.0);
            }
        }
        k += b.size;
    }
    Ok(JordanForm { j, t, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_blocks, devectorize, validate_state};
    use crate::spectral::lep3_point;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::SQRT_2;

    const SQRT_3: f64 = 1.732_050_807_568_877_2;

    fn chain_at(case: CouplingCase, omega: f64, gm: f64) -> (Superoperator, JordanChainSystem) {
        let lep = lep3_point(omega, gm, case).unwrap();
        let (l5, _) = build_blocks(&lep.params().unwrap(), case).unwrap();
        let sys = jordan_chain(&l5, &lep).unwrap();
        (l5, sys)
    }

    fn random_lep(rng: &mut StdRng, case: CouplingCase) -> (f64, f64) {
        let w = rng.random_range(0.3..3.0);
        loop {
            let gm = rng.random_range(0.02..0.98) * 6.0 * SQRT_3 * w;
            let lep = lep3_point(w, gm, case).unwrap();
            if (lep.lambda1() - lep.lambda3).abs() > 0.05 * w {
                return (w, gm);
            }
        }
    }

    #[test]
    fn eigen_system_is_biorthonormal_and_resolves_l() {
        let mut rng = StdRng::seed_from_u64(31);
        for case in CouplingCase::ALL {
            for _ in 0..50 {
                let p = SystemParams::one_coupling(
                    case,
                    rng.random_range(0.3..2.0),
                    rng.random_range(0.1..2.0),
                    rng.random_range(0.1..3.0),
                    rng.random_range(0.1..3.0),
                )
                .unwrap();
                let (l5, _) = build_blocks(&p, case).unwrap();
                let sys = bi_eigensystem(&l5).unwrap();
                let mut recon = DMatrix::<C64>::zeros(5, 5);
                for i in 0..5 {
                    for j in 0..5 {
                        let d = sys.left[i].dot(sys.right[j].data());
                        let target = if i == j { 1.0 } else { 0.0 };
                        assert!((d - C64::new(target, 0.0)).norm() < 1e-10);
                    }
                    recon += sys.right[i].data() * sys.left[i].transpose() * sys.eigenvalues[i];
                    let lr = l5.apply(&sys.right[i]).unwrap();
                    let res = lr.data() - sys.right[i].data() * sys.eigenvalues[i];
                    assert!(res.max_abs() < 1e-10);
                    let sl = sys.left[i].transpose() * l5.matrix() - sys.left[i].transpose() * sys.eigenvalues[i];
                    assert!(sl.max_abs() < 1e-10 * sys.condition_number.max(1.0));
                    if i > 0 {
                        assert!(sys.right[i].trace().norm() < 1e-10);
                    }
                }
                assert!((recon - l5.matrix()).norm() < 1e-9);
                assert!((sys.right[0].trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
                assert!(validate_state(&devectorize(&sys.right[0]), 1e-10).is_physical());
            }
        }
    }

    #[test]
    fn decoupled_steady_state_is_diagonal() {
        let (gp, gm) = (1.3, 0.6);
        let p = SystemParams::one_coupling(CouplingCase::GwOnly, 1.0, 0.0, gp, gm).unwrap();
        let (l5, _) = build_blocks(&p, CouplingCase::GwOnly).unwrap();
        let sys = bi_eigensystem(&l5).unwrap();
        let rho = devectorize(&sys.right[0]);
        // Equal-rate detailed balance between every pair of levels.
        // Kirchhoff spanning-tree weights of the classical three-level rate graph.
        let w = [2.0 * gp * gp + gp * gm, 3.0 * gp * gm, 2.0 * gm * gm + gp * gm];
        let z: f64 = w.iter().sum();
        for k in 0..3 {
            assert_abs_diff_eq!(rho.0[(k, k)].re, w[k] / z, epsilon = 1e-12);
        }
        for (i, j) in [(1, 2), (2, 1)] {
            assert!(rho.0[(i, j)].norm() < 1e-12);
        }
    }

    #[test]
    fn conditioning_grows_toward_lep() {
        let lep = lep3_point(1.0, 7.159, CouplingCase::GwOnly).unwrap();
        let cond = |g: f64| {
            let p = SystemParams::one_coupling(CouplingCase::GwOnly, 1.0, g, lep.gamma_plus3, 7.159).unwrap();
            let (l5, _) = build_blocks(&p, CouplingCase::GwOnly).unwrap();
            bi_eigensystem(&l5).unwrap().condition_number
        };
        let gs = [0.414, 1.314, 1.40, 1.41, 1.413];
        let c: Vec<f64> = gs.iter().map(|&g| cond(g)).collect();
        assert!(c.windows(2).all(|w| w[1] > w[0]), "{c:?}");
        assert!(c[1] > 2.0 * c[0]);
        assert!(c[4] > 1e2);
    }

    #[test]
    fn degenerate_spectrum_is_refused() {
        let lep = lep3_point(1.0, 7.159, CouplingCase::GwOnly).unwrap();
        let (l5, _) = build_blocks(&lep.params().unwrap(), CouplingCase::GwOnly).unwrap();
        assert!(matches!(bi_eigensystem(&l5), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn multiplicities() {
        for case in CouplingCase::ALL {
            let (l5, sys) = chain_at(case, 1.0, 5.0);
            assert_eq!(
                geometric_multiplicity(&l5, C64::new(sys.lambda3, 0.0), 1e-8).unwrap(),
                1
            );
            assert_eq!(geometric_multiplicity(&l5, C64::new(0.0, 0.0), 1e-8).unwrap(), 1);
            assert!(matches!(
                geometric_multiplicity(&l5, C64::new(1.0, 0.0), 1e-8),
                Err(Error::NotAnEigenvalue { .. })
            ));
        }
        let p = SystemParams::one_coupling(CouplingCase::GcOnly, 1.0, 0.5, 1.0, 2.0).unwrap();
        let (l5, _) = build_blocks(&p, CouplingCase::GcOnly).unwrap();
        let l1 = crate::spectral::lambda1(&p, CouplingCase::GcOnly).unwrap();
        assert_eq!(geometric_multiplicity(&l5, C64::new(l1, 0.0), 1e-8).unwrap(), 1);
    }

    #[test]
    fn chain_identities_at_random_points() {
        let mut rng = StdRng::seed_from_u64(37);
        for case in CouplingCase::ALL {
            for _ in 0..50 {
                let (w, gm) = random_lep(&mut rng, case);
                let (l5, sys) = chain_at(case, w, gm);
                let a = linalg::shifted(l5.matrix(), C64::new(sys.lambda3, 0.0));
                let [r1, r2, r3] = &sys.rho_ep;
                assert!((&a * r1.data()).max_abs() < 1e-10 * w.max(1.0));
                assert!((&a * r2.data() - r1.data()).max_abs() < 1e-10);
                assert!((&a * r3.data() - r2.data()).max_abs() < 1e-10);
                let left_null = sys.sigma_ep[2].transpose() * &a;
                assert!(left_null.max_abs() < 1e-10 * linalg::condition_number(&sys.similarity()).max(1.0));
                let rights = sys.right_vectors();
                let lefts = sys.left_vectors();
                for i in 0..5 {
                    for j in 0..5 {
                        let target = if i == j { 1.0 } else { 0.0 };
                        assert!((lefts[i].dot(rights[j].data()) - target).norm() < 1e-10);
                    }
                }
                for v in &rights[1..] {
                    assert!(v.trace().norm() < 1e-10);
                    assert!(v.hermiticity_defect() < 1e-12);
                }
                let t = sys.similarity();
                let recon = &t * sys.jordan_matrix() * linalg::inverse(&t).unwrap();
                assert!((recon - l5.matrix()).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn chain_eigenvector_shapes() {
        let (_, sys) = chain_at(CouplingCase::GwOnly, 1.0, 7.159);
        let v = &sys.rho_ep[0];
        let cc = v.component(1, 1);
        assert!(v.component(0, 0).norm() < 1e-12);
        assert!((v.component(2, 2) + cc).norm() < 1e-10);
        let i = C64::new(0.0, 1.0);
        let s3 = C64::new(SQRT_3, 0.0);
        let ch = -i * 2.0 * SQRT_2 * cc / (i + s3);
        let hc = -(s3 - i) * SQRT_2 * cc / (i + s3);
        assert!((v.component(1, 2) - ch).norm() < 1e-10);
        assert!((v.component(2, 1) - hc).norm() < 1e-10);

        let (_, sys) = chain_at(CouplingCase::GcOnly, 1.0, 5.857);
        let v = &sys.rho_ep[0];
        assert!((v.component(1, 1) + v.component(0, 0)).norm() < 1e-10);
        assert!(v.component(2, 2).norm() < 1e-12);
        assert!(v.component(0, 0).re > 0.0);
    }

    #[test]
    fn chain_requires_lep3_parameters() {
        let lep = lep3_point(1.0, 7.159, CouplingCase::GwOnly).unwrap();
        let p = SystemParams::one_coupling(CouplingCase::GwOnly, 1.0, 1.314, lep.gamma_plus3, 7.159).unwrap();
        let (l5, _) = build_blocks(&p, CouplingCase::GwOnly).unwrap();
        assert_eq!(jordan_chain(&l5, &lep).unwrap_err(), Error::NotAtLep3);
        // Coinciding λ₁ and λ⁽³⁾.
        let lep = lep3_point(1.0, 2.0 * SQRT_3, CouplingCase::GwOnly).unwrap();
        let (l5, _) = build_blocks(&lep.params().unwrap(), CouplingCase::GwOnly).unwrap();
        assert!(matches!(jordan_chain(&l5, &lep), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn jordan_form_at_lep3() {
        for case in CouplingCase::ALL {
            let (l5, sys) = chain_at(case, 1.0, 6.0);
            let jf = jordan_form(&l5).unwrap();
            let mut sizes: Vec<usize> = jf.blocks.iter().map(|b| b.size).collect();
            sizes.sort();
            assert_eq!(sizes, vec![1, 1, 3]);
            let big = jf.blocks.iter().find(|b| b.size == 3).unwrap();
            assert_abs_diff_eq!(big.lambda.re, sys.lambda3, epsilon = 1e-10);
            let expected = match case {
                CouplingCase::GwOnly => 6.0 - 10.0 * SQRT_3,
                CouplingCase::GcOnly => -6.0 - 4.0 * SQRT_3,
            };
            assert_abs_diff_eq!(big.lambda.re, expected, epsilon = 1e-10);
            assert!(jf.reconstruction_error(l5.matrix()).unwrap() < 1e-8);
        }
    }

    #[test]
    fn jordan_form_away_from_lep() {
        let p = SystemParams::one_coupling(CouplingCase::GcOnly, 1.0, 0.7, 1.2, 2.5).unwrap();
        let (l5, _) = build_blocks(&p, CouplingCase::GcOnly).unwrap();
        let jf = jordan_form(&l5).unwrap();
        assert!(jf.is_diagonal());
        let report = classify(&p, CouplingCase::GcOnly, DEFAULT_CLASSIFY_TOL).unwrap();
        let diag: Vec<C64> = (0..5).map(|k| jf.j[(k, k)]).collect();
        assert!(linalg::match_spectra(&diag, &report.eigenvalues()) < 1e-12);
        assert!(jf.reconstruction_error(l5.matrix()).unwrap() < 1e-8);
    }

    #[test]
    fn jordan_form_on_second_order_point() {
        let g = 1.6;
        let gm = 1.0;
        let gp = crate::spectral::lep2_gamma_plus(1.0, g, gm)[0];
        let p = SystemParams::one_coupling(CouplingCase::GwOnly, 1.0, g, gp, gm).unwrap();
        let (l5, _) = build_blocks(&p, CouplingCase::GwOnly).unwrap();
        let jf = jordan_form(&l5).unwrap();
        assert!(jf.blocks.iter().any(|b| b.size == 2));
        assert!(jf.reconstruction_error(l5.matrix()).unwrap() < 1e-6);
    }
}
