//! Model definitions for the three-level absorption refrigerator.
//!
//! The internal qutrit lives in the basis (|g⟩, |c⟩, |h⟩). Density matrices are
//! flattened row-major into nine-component Hilbert-Schmidt vectors
//! `[ρ_gg, ρ_gc, ρ_gh, ρ_cg, ρ_cc, ρ_ch, ρ_hg, ρ_hc, ρ_hh]`, and superoperators
//! act on those vectors as dense complex matrices. Units: ħ = k_B = 1.

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::MaxAbs;

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Eigenvalues of a physical state may dip this far below zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

const G: usize = 0;
const C: usize = 1;
const H: usize = 2;

/// One of the three heat baths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bath {
    Hot,
    Cold,
    Work,
}

impl Bath {
    pub const ALL: [Bath; 3] = [Bath::Hot, Bath::Cold, Bath::Work];

    pub fn index(self) -> usize {
        match self {
            Bath::Hot => 0,
            Bath::Cold => 1,
            Bath::Work => 2,
        }
    }

    /// Jump operators `(o⁺, o⁻)` weighted by `γ⁺` and `γ⁻` respectively.
    ///
    /// The hot and cold baths connect |g⟩ to |h⟩ and |c⟩; the work bath connects
    /// |c⟩ to |h⟩. `o⁺` lowers the system energy, `o⁻` raises it.
    pub fn jump_operators(self) -> (Matrix3<C64>, Matrix3<C64>) {
        let (lower, upper) = match self {
            Bath::Hot => (G, H),
            Bath::Cold => (G, C),
            Bath::Work => (C, H),
        };
        (outer(lower, upper), outer(upper, lower))
    }
}

/// Which internal coupling survives in a one-coupling reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingCase {
    /// `g_c = 0`, only the c↔h coupling `g_w` is kept.
    GwOnly,
    /// `g_w = 0`, only the g↔c coupling `g_c` is kept.
    GcOnly,
}

impl CouplingCase {
    pub const ALL: [CouplingCase; 2] = [CouplingCase::GwOnly, CouplingCase::GcOnly];
}

/// Per-bath dissipation rates, indexed by [`Bath::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub plus: [f64; 3],
    pub minus: [f64; 3],
}

impl Rates {
    pub fn uniform(gamma_plus: f64, gamma_minus: f64) -> Self {
        Self {
            plus: [gamma_plus; 3],
            minus: [gamma_minus; 3],
        }
    }
}

/// Physical parameters of the refrigerator.
///
/// `omega_c` is the energy of |c⟩ and `omega_w` the gap between |c⟩ and |h⟩,
/// so the energy of |h⟩ is always `omega_c + omega_w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    omega_c: f64,
    omega_w: f64,
    g_c: f64,
    g_w: f64,
    rates: Rates,
}

fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and nonnegative, got {value}"),
        });
    }
    Ok(())
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and positive, got {value}"),
        });
    }
    Ok(())
}

impl SystemParams {
    pub fn new(omega_c: f64, omega_w: f64, g_c: f64, g_w: f64, rates: Rates) -> Result<Self> {
        check_positive("omega_c", omega_c)?;
        check_positive("omega_w", omega_w)?;
        check_nonneg("g_c", g_c)?;
        check_nonneg("g_w", g_w)?;
        for r in rates.plus {
            check_nonneg("gamma_plus", r)?;
        }
        for r in rates.minus {
            check_nonneg("gamma_minus", r)?;
        }
        Ok(Self {
            omega_c,
            omega_w,
            g_c,
            g_w,
            rates,
        })
    }

    pub fn uniform(omega_c: f64, omega_w: f64, g_c: f64, g_w: f64, gamma_plus: f64, gamma_minus: f64) -> Result<Self> {
        Self::new(omega_c, omega_w, g_c, g_w, Rates::uniform(gamma_plus, gamma_minus))
    }

    /// One-coupling parameters with uniform rates. Both level spacings are set
    /// to `omega`, which is the energy unit used throughout.
    pub fn one_coupling(case: CouplingCase, omega: f64, g: f64, gamma_plus: f64, gamma_minus: f64) -> Result<Self> {
        match case {
            CouplingCase::GwOnly => Self::uniform(omega, omega, 0.0, g, gamma_plus, gamma_minus),
            CouplingCase::GcOnly => Self::uniform(omega, omega, g, 0.0, gamma_plus, gamma_minus),
        }
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn omega_w(&self) -> f64 {
        self.omega_w
    }

    pub fn omega_h(&self) -> f64 {
        self.omega_c + self.omega_w
    }

    pub fn g_c(&self) -> f64 {
        self.g_c
    }

    pub fn g_w(&self) -> f64 {
        self.g_w
    }

    pub fn rates(&self) -> &Rates {
        &self.rates
    }

    pub fn gamma_plus(&self, bath: Bath) -> f64 {
        self.rates.plus[bath.index()]
    }

    pub fn gamma_minus(&self, bath: Bath) -> f64 {
        self.rates.minus[bath.index()]
    }

    /// `(γ⁺, γ⁻)` when every bath shares the same rates.
    pub fn uniform_rates(&self) -> Option<(f64, f64)> {
        let p = self.rates.plus;
        let m = self.rates.minus;
        (p.iter().all(|&x| x == p[0]) && m.iter().all(|&x| x == m[0])).then_some((p[0], m[0]))
    }

    /// Level spacing that enters the 5×5 block for the given case.
    pub fn active_omega(&self, case: CouplingCase) -> f64 {
        match case {
            CouplingCase::GwOnly => self.omega_w,
            CouplingCase::GcOnly => self.omega_c,
        }
    }

    pub fn active_coupling(&self, case: CouplingCase) -> f64 {
        match case {
            CouplingCase::GwOnly => self.g_w,
            CouplingCase::GcOnly => self.g_c,
        }
    }

    /// Checks that the parameters admit the one-coupling block reduction for
    /// `case` and returns the uniform `(γ⁺, γ⁻)`.
    pub fn reduction_rates(&self, case: CouplingCase) -> Result<(f64, f64)> {
        if self.g_c != 0.0 && self.g_w != 0.0 {
            return Err(Error::BothCouplingsNonzero);
        }
        let inactive = match case {
            CouplingCase::GwOnly => ("g_c", self.g_c),
            CouplingCase::GcOnly => ("g_w", self.g_w),
        };
        if inactive.1 != 0.0 {
            return Err(Error::InvalidParameter {
                name: inactive.0,
                reason: format!("must vanish for {case:?}"),
            });
        }
        self.uniform_rates().ok_or(Error::NonUniformRates)
    }

    /// Returns a copy with a different active coupling strength.
    pub fn with_coupling(&self, case: CouplingCase, g: f64) -> Result<Self> {
        let (g_c, g_w) = match case {
            CouplingCase::GwOnly => (self.g_c, g),
            CouplingCase::GcOnly => (g, self.g_w),
        };
        Self::new(self.omega_c, self.omega_w, g_c, g_w, self.rates)
    }

    /// System Hamiltonian in the (|g⟩, |c⟩, |h⟩) basis.
    pub fn hamiltonian(&self) -> Matrix3<C64> {
        let r = |x: f64| C64::new(x, 0.0);
        Matrix3::new(
            ZERO,
            r(self.g_c),
            ZERO,
            r(self.g_c),
            r(self.omega_c),
            r(self.g_w),
            ZERO,
            r(self.g_w),
            r(self.omega_h()),
        )
    }
}

fn outer(row: usize, col: usize) -> Matrix3<C64> {
    let mut m = Matrix3::zeros();
    m[(row, col)] = C64::new(1.0, 0.0);
    m
}

/// A 3×3 density matrix (or traceless eigen-object) in the (|g⟩, |c⟩, |h⟩) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3(pub Matrix3<C64>);

impl DensityMatrix3 {
    pub fn new(m: Matrix3<C64>) -> Self {
        Self(m)
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix3::identity() / C64::new(3.0, 0.0))
    }

    /// The projector |k⟩⟨k| for `k` in 0..3 (g, c, h).
    pub fn projector(k: usize) -> Self {
        Self(outer(k, k))
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }
}

impl std::ops::Sub for DensityMatrix3 {
    type Output = DensityMatrix3;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl std::ops::Add for DensityMatrix3 {
    type Output = DensityMatrix3;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

/// Component ordering of a Hilbert-Schmidt vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisTag {
    /// All nine components, row-major.
    Full9,
    /// `[ρ_gg, ρ_cc, ρ_ch, ρ_hc, ρ_hh]`
    Block5Gw,
    /// `[ρ_gg, ρ_gc, ρ_cg, ρ_cc, ρ_hh]`
    Block5Gc,
    /// `[ρ_gc, ρ_gh]`
    Block2Gw,
    /// `[ρ_cg, ρ_hg]`
    Block2GwConj,
    /// `[ρ_gh, ρ_ch]`
    Block2Gc,
    /// `[ρ_hg, ρ_hc]`
    Block2GcConj,
}

const fn flat(i: usize, j: usize) -> usize {
    3 * i + j
}

impl BasisTag {
    /// Positions of this basis' components inside the nine-component vector.
    pub fn indices(self) -> &'static [usize] {
        const FULL: [usize; 9] = [0, 1, 2, 3, 4, 5, 6, 7, 8];
        const B5GW: [usize; 5] = [flat(G, G), flat(C, C), flat(C, H), flat(H, C), flat(H, H)];
        const B5GC: [usize; 5] = [flat(G, G), flat(G, C), flat(C, G), flat(C, C), flat(H, H)];
        const B2GW: [usize; 2] = [flat(G, C), flat(G, H)];
        const B2GWC: [usize; 2] = [flat(C, G), flat(H, G)];
        const B2GC: [usize; 2] = [flat(G, H), flat(C, H)];
        const B2GCC: [usize; 2] = [flat(H, G), flat(H, C)];
        match self {
            BasisTag::Full9 => &FULL,
            BasisTag::Block5Gw => &B5GW,
            BasisTag::Block5Gc => &B5GC,
            BasisTag::Block2Gw => &B2GW,
            BasisTag::Block2GwConj => &B2GWC,
            BasisTag::Block2Gc => &B2GC,
            BasisTag::Block2GcConj => &B2GCC,
        }
    }

    pub fn len(self) -> usize {
        self.indices().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn block5(case: CouplingCase) -> Self {
        match case {
            CouplingCase::GwOnly => BasisTag::Block5Gw,
            CouplingCase::GcOnly => BasisTag::Block5Gc,
        }
    }

    pub fn block2(case: CouplingCase) -> Self {
        match case {
            CouplingCase::GwOnly => BasisTag::Block2Gw,
            CouplingCase::GcOnly => BasisTag::Block2Gc,
        }
    }

    /// Basis holding the Hermitian conjugates of this basis' components.
    pub fn adjoint(self) -> Self {
        match self {
            BasisTag::Block2Gw => BasisTag::Block2GwConj,
            BasisTag::Block2GwConj => BasisTag::Block2Gw,
            BasisTag::Block2Gc => BasisTag::Block2GcConj,
            BasisTag::Block2GcConj => BasisTag::Block2Gc,
            other => other,
        }
    }

    /// Position of `ρ_ij` inside this basis, if present.
    pub fn position(self, i: usize, j: usize) -> Option<usize> {
        let target = flat(i, j);
        self.indices().iter().position(|&k| k == target)
    }

    /// Row covector `t` with `t·v = tr(ρ)`; `None` when the basis carries no
    /// populations.
    pub fn trace_functional(self) -> Option<DVector<C64>> {
        let mut t = DVector::zeros(self.len());
        let mut any = false;
        for k in 0..3 {
            if let Some(p) = self.position(k, k) {
                t[p] = C64::new(1.0, 0.0);
                any = true;
            }
        }
        any.then_some(t)
    }
}

/// A Hilbert-Schmidt vector with an explicit component ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct HSVector {
    data: DVector<C64>,
    basis: BasisTag,
}

impl HSVector {
    pub fn new(data: DVector<C64>, basis: BasisTag) -> Result<Self> {
        if data.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                actual: data.len(),
            });
        }
        Ok(Self { data, basis })
    }

    pub fn zeros(basis: BasisTag) -> Self {
        Self {
            data: DVector::zeros(basis.len()),
            basis,
        }
    }

    pub fn data(&self) -> &DVector<C64> {
        &self.data
    }

    pub fn into_data(self) -> DVector<C64> {
        self.data
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Component `ρ_ij`, zero when the basis does not carry it.
    pub fn component(&self, i: usize, j: usize) -> C64 {
        self.basis.position(i, j).map_or(ZERO, |p| self.data[p])
    }

    /// Trace of the devectorized matrix.
    pub fn trace(&self) -> C64 {
        (0..3).map(|k| self.component(k, k)).sum()
    }

    /// Embeds this vector into the nine-component basis, zero-filling the rest.
    pub fn embed(&self) -> HSVector {
        let mut full = DVector::zeros(9);
        for (&k, &x) in self.basis.indices().iter().zip(self.data.iter()) {
            full[k] = x;
        }
        HSVector {
            data: full,
            basis: BasisTag::Full9,
        }
    }

    /// Restricts a vector to the components of `basis`.
    pub fn extract(&self, basis: BasisTag) -> HSVector {
        let full = self.embed();
        let data = DVector::from_iterator(basis.len(), basis.indices().iter().map(|&k| full.data[k]));
        HSVector { data, basis }
    }

    /// Vector of the Hermitian-conjugated matrix, expressed in the adjoint basis.
    pub fn adjoint(&self) -> HSVector {
        vectorize(&devectorize(self).adjoint()).extract(self.basis.adjoint())
    }

    /// Largest deviation between this vector and its Hermitian conjugate.
    pub fn hermiticity_defect(&self) -> f64 {
        let a = self.adjoint();
        if a.basis != self.basis {
            return f64::INFINITY;
        }
        (&self.data - &a.data).max_abs()
    }

    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).sum()
    }

    pub fn scale(&self, s: C64) -> HSVector {
        HSVector {
            data: &self.data * s,
            basis: self.basis,
        }
    }

    pub fn axpy(&mut self, a: C64, other: &HSVector) -> Result<()> {
        same_basis(self.basis, other.basis)?;
        self.data.axpy(a, &other.data, C64::new(1.0, 0.0));
        Ok(())
    }

    pub fn sub(&self, other: &HSVector) -> Result<HSVector> {
        same_basis(self.basis, other.basis)?;
        Ok(HSVector {
            data: &self.data - &other.data,
            basis: self.basis,
        })
    }
}

pub(crate) fn same_basis(expected: BasisTag, actual: BasisTag) -> Result<()> {
    if expected != actual {
        return Err(Error::BasisMismatch { expected, actual });
    }
    Ok(())
}

/// Row-major flattening of a density matrix.
pub fn vectorize(rho: &DensityMatrix3) -> HSVector {
    let m = rho.matrix();
    let data = DVector::from_iterator(9, (0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])));
    HSVector {
        data,
        basis: BasisTag::Full9,
    }
}

/// Inverse of [`vectorize`]; block vectors are zero-filled first.
pub fn devectorize(v: &HSVector) -> DensityMatrix3 {
    let full = v.embed();
    DensityMatrix3(Matrix3::from_fn(|i, j| full.data[flat(i, j)]))
}

/// GKSL dissipator `D[o]ρ = oρo† − ½{o†o, ρ}`.
pub fn apply_dissipator(o: &Matrix3<C64>, rho: &DensityMatrix3) -> DensityMatrix3 {
    let od = o.adjoint();
    let odo = od * o;
    let r = rho.matrix();
    DensityMatrix3(o * r * od - (odo * r + r * odo) * C64::new(0.5, 0.0))
}

/// Dissipative part `L_α ρ` contributed by one bath.
pub fn bath_dissipator(params: &SystemParams, bath: Bath, rho: &DensityMatrix3) -> DensityMatrix3 {
    let (lower, raise) = bath.jump_operators();
    let a = apply_dissipator(&lower, rho).0 * C64::new(params.gamma_plus(bath), 0.0);
    let b = apply_dissipator(&raise, rho).0 * C64::new(params.gamma_minus(bath), 0.0);
    DensityMatrix3(a + b)
}

/// Right-hand side of the GKSL equation, `−i[H, ρ] + Σ_α L_α ρ`.
pub fn gksl_rhs(params: &SystemParams, rho: &DensityMatrix3) -> DensityMatrix3 {
    let h = params.hamiltonian();
    let r = rho.matrix();
    let mut out = (h * r - r * h) * (-I);
    for bath in Bath::ALL {
        out += bath_dissipator(params, bath, rho).0;
    }
    DensityMatrix3(out)
}

/// A linear map on Hilbert-Schmidt vectors of a fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: DMatrix<C64>,
    basis: BasisTag,
    params: SystemParams,
}

impl Superoperator {
    pub fn new(matrix: DMatrix<C64>, basis: BasisTag, params: SystemParams) -> Result<Self> {
        let n = basis.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { matrix, basis, params })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &HSVector) -> Result<HSVector> {
        same_basis(self.basis, v.basis)?;
        Ok(HSVector {
            data: &self.matrix * &v.data,
            basis: self.basis,
        })
    }

    /// Restriction of a nine-component superoperator to an invariant block.
    pub fn restrict(&self, basis: BasisTag) -> Result<Superoperator> {
        same_basis(BasisTag::Full9, self.basis)?;
        let idx = basis.indices();
        let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.matrix[(idx[r], idx[c])]);
        Superoperator::new(m, basis, self.params)
    }

    /// Unit-trace null vector of the generator.
    pub fn steady_state(&self) -> Result<HSVector> {
        let trace = self.basis.trace_functional().ok_or(Error::BasisMismatch {
            expected: BasisTag::Full9,
            actual: self.basis,
        })?;
        let v = crate::linalg::null_vector(&self.matrix);
        let tr = trace.dot(&v);
        if tr.norm() < 1e-14 {
            return Err(Error::Singular);
        }
        HSVector::new(v / tr, self.basis)
    }
}

/// Nine-dimensional Liouvillian, written out entry by entry.
pub fn build_liouvillian_9(params: &SystemParams) -> Superoperator {
    let (gc, gw) = (params.g_c, params.g_w);
    let (wc, ww, wh) = (params.omega_c, params.omega_w, params.omega_h());
    let hp = params.gamma_plus(Bath::Hot);
    let hm = params.gamma_minus(Bath::Hot);
    let cp = params.gamma_plus(Bath::Cold);
    let cm = params.gamma_minus(Bath::Cold);
    let wp = params.gamma_plus(Bath::Work);
    let wm = params.gamma_minus(Bath::Work);
    let gamma_c = 0.5 * (hm + wm + cp + cm);
    let gamma_w = 0.5 * (hp + wp + wm + cp);
    let gamma_h = 0.5 * (hm + wp + hp + cm);

    let r = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    let z = ZERO;
    #[rustfmt::skip]
    let rows: [[C64; 9]; 9] = [
        [r(-hm - cm), im(gc), z, im(-gc), r(cp), z, z, z, r(hp)],
        [im(gc), C64::new(-gamma_c, wc), im(gw), z, im(-gc), z, z, z, z],
        [z, im(gw), C64::new(-gamma_h, wh), z, z, im(-gc), z, z, z],
        [im(-gc), z, z, C64::new(-gamma_c, -wc), im(gc), z, im(-gw), z, z],
        [r(cm), im(-gc), z, im(gc), r(-cp - wm), im(gw), z, im(-gw), r(wp)],
        [z, z, im(-gc), z, im(gw), C64::new(-gamma_w, ww), z, z, im(-gw)],
        [z, z, z, im(-gw), z, z, C64::new(-gamma_h, -wh), im(gc), z],
        [z, z, z, z, im(-gw), z, im(gc), C64::new(-gamma_w, -ww), im(gw)],
        [r(hm), z, z, z, r(wm), im(-gw), z, im(gw), r(-wp - hp)],
    ];
    let m = DMatrix::from_fn(9, 9, |i, j| rows[i][j]);
    Superoperator {
        matrix: m,
        basis: BasisTag::Full9,
        params: *params,
    }
}

/// One-coupling, uniform-rate reduction into the 5×5 population block and the
/// 2×2 coherence block (the remaining block is its complex conjugate).
pub fn build_blocks(params: &SystemParams, case: CouplingCase) -> Result<(Superoperator, Superoperator)> {
    let (gp, gm) = params.reduction_rates(case)?;
    let g = params.active_coupling(case);
    let w = params.active_omega(case);
    let r = |x: f64| C64::new(x, 0.0);
    let ig = C64::new(0.0, g);
    let z = ZERO;
    let (five, two): ([[C64; 5]; 5], [[C64; 2]; 2]) = match case {
        CouplingCase::GwOnly => {
            let dec = 0.5 * (3.0 * gp + gm);
            #[rustfmt::skip]
            let five = [
                [r(-2.0 * gm), r(gp), z, z, r(gp)],
                [r(gm), r(-gp - gm), ig, -ig, r(gp)],
                [z, ig, C64::new(-dec, w), z, -ig],
                [z, -ig, z, C64::new(-dec, -w), ig],
                [r(gm), r(gm), -ig, ig, r(-2.0 * gp)],
            ];
            let two = [
                [C64::new(-0.5 * (3.0 * gm + gp), params.omega_c), ig],
                [ig, C64::new(-(gp + gm), params.omega_h())],
            ];
            (five, two)
        }
        CouplingCase::GcOnly => {
            let dec = 0.5 * (3.0 * gm + gp);
            #[rustfmt::skip]
            let five = [
                [r(-2.0 * gm), ig, -ig, r(gp), r(gp)],
                [ig, C64::new(-dec, w), z, -ig, z],
                [-ig, z, C64::new(-dec, -w), ig, z],
                [r(gm), -ig, ig, r(-gp - gm), r(gp)],
                [r(gm), z, z, r(gm), r(-2.0 * gp)],
            ];
            let two = [
                [C64::new(-(gp + gm), params.omega_h()), -ig],
                [-ig, C64::new(-0.5 * (3.0 * gp + gm), params.omega_w)],
            ];
            (five, two)
        }
    };
    let l5 = Superoperator {
        matrix: DMatrix::from_fn(5, 5, |i, j| five[i][j]),
        basis: BasisTag::block5(case),
        params: *params,
    };
    let l2 = Superoperator {
        matrix: DMatrix::from_fn(2, 2, |i, j| two[i][j]),
        basis: BasisTag::block2(case),
        params: *params,
    };
    Ok((l5, l2))
}

/// Physicality flags of a 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateReport {
    pub hermitian: bool,
    pub unit_trace: bool,
    pub psd: bool,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl StateReport {
    pub fn is_physical(&self) -> bool {
        self.hermitian && self.unit_trace && self.psd
    }
}

/// Checks Hermiticity and unit trace to `tol` and positivity to [`PSD_TOLERANCE`].
pub fn validate_state(rho: &DensityMatrix3, tol: f64) -> StateReport {
    let m = rho.matrix();
    let hermitian = (m - m.adjoint()).max_abs() <= tol;
    let unit_trace = (m.trace() - C64::new(1.0, 0.0)).norm() <= tol;
    let herm_part = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let min_eigenvalue = herm_part
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    StateReport {
        hermitian,
        unit_trace,
        psd: hermitian && min_eigenvalue >= -PSD_TOLERANCE,
        min_eigenvalue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng) -> Matrix3<C64> {
        Matrix3::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    pub(crate) fn random_state(rng: &mut StdRng) -> DensityMatrix3 {
        let a = random_matrix(rng);
        let p = a * a.adjoint();
        DensityMatrix3(p / p.trace())
    }

    fn random_params(rng: &mut StdRng) -> SystemParams {
        let mut u = || rng.random_range(0.1..3.0);
        let rates = Rates {
            plus: [u(), u(), u()],
            minus: [u(), u(), u()],
        };
        SystemParams::new(u(), u(), u(), u(), rates).unwrap()
    }

    /// Builds the Liouvillian column by column from the operator form.
    fn assembled(params: &SystemParams) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(9, 9);
        for k in 0..9 {
            let mut e = DVector::zeros(9);
            e[k] = C64::new(1.0, 0.0);
            let rho = devectorize(&HSVector::new(e, BasisTag::Full9).unwrap());
            let out = vectorize(&gksl_rhs(params, &rho));
            m.set_column(k, out.data());
        }
        m
    }

    #[test]
    fn dissipator_on_projectors() {
        let o = outer(G, C);
        let out = apply_dissipator(&o, &DensityMatrix3::projector(C));
        let expected = DensityMatrix3::projector(G) - DensityMatrix3::projector(C);
        assert_abs_diff_eq!((out.0 - expected.0).max_abs(), 0.0, epsilon = 1e-15);

        let out = apply_dissipator(&o, &DensityMatrix3::projector(G));
        assert_eq!(out.0.max_abs(), 0.0);
    }

    #[test]
    fn dissipator_is_traceless_and_linear() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let o = random_matrix(&mut rng);
            let r1 = DensityMatrix3(random_matrix(&mut rng));
            let r2 = DensityMatrix3(random_matrix(&mut rng));
            assert!(apply_dissipator(&o, &r1).trace().norm() < 1e-14);

            let a = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let b = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let lhs = apply_dissipator(&o, &DensityMatrix3(r1.0 * a + r2.0 * b));
            let rhs = apply_dissipator(&o, &r1).0 * a + apply_dissipator(&o, &r2).0 * b;
            assert!((lhs.0 - rhs).max_abs() < 1e-13);
        }
    }

    #[test]
    fn liouvillian_entries_match_known_values() {
        let p = SystemParams::uniform(1.0, 1.5, 0.3, 0.7, 0.4, 0.9).unwrap();
        let l = build_liouvillian_9(&p);
        let m = l.matrix();
        assert_abs_diff_eq!(m[(0, 0)].re, -0.9 - 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 4)].re, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn closed_system_has_only_phases() {
        let p = SystemParams::uniform(1.0, 2.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let m = build_liouvillian_9(&p).matrix().clone();
        for pop in [0, 4, 8] {
            assert!(m.row(pop).iter().all(|x| x.norm() == 0.0));
        }
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    assert_eq!(m[(i, j)], ZERO);
                }
                assert_eq!(m[(i, j)].re, 0.0);
            }
        }
        assert_eq!(m[(1, 1)], C64::new(0.0, 1.0));
        assert_eq!(m[(5, 5)], C64::new(0.0, 2.0));
    }

    #[test]
    fn liouvillian_matches_operator_assembly() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let p = random_params(&mut rng);
            let diff = build_liouvillian_9(&p).matrix() - assembled(&p);
            assert!(diff.max_abs() < 1e-12, "max diff {}", diff.max_abs());
        }
    }

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_params(&mut rng);
            let l = build_liouvillian_9(&p);
            let rho = random_state(&mut rng);
            let out = l.apply(&vectorize(&rho)).unwrap();
            assert!(out.trace().norm() < 1e-12);
            assert!(out.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn blocks_match_restriction_of_full_liouvillian() {
        let mut rng = StdRng::seed_from_u64(5);
        for case in CouplingCase::ALL {
            for _ in 0..20 {
                let p = SystemParams::one_coupling(
                    case,
                    rng.random_range(0.2..3.0),
                    rng.random_range(0.2..3.0),
                    rng.random_range(0.2..3.0),
                    rng.random_range(0.2..3.0),
                )
                .unwrap();
                let l9 = build_liouvillian_9(&p);
                let (l5, l2) = build_blocks(&p, case).unwrap();
                let d5 = l5.matrix() - l9.restrict(BasisTag::block5(case)).unwrap().matrix();
                let d2 = l2.matrix() - l9.restrict(BasisTag::block2(case)).unwrap().matrix();
                assert!(d5.max_abs() < 1e-14 && d2.max_abs() < 1e-14);
                let conj = l9.restrict(BasisTag::block2(case).adjoint()).unwrap();
                assert!((conj.matrix() - l2.matrix().map(|x| x.conj())).max_abs() < 1e-14);

                // Off-block entries vanish.
                let mut owner = [0usize; 9];
                for (b, tag) in [
                    BasisTag::block5(case),
                    BasisTag::block2(case),
                    BasisTag::block2(case).adjoint(),
                ]
                .iter()
                .enumerate()
                {
                    for &k in tag.indices() {
                        owner[k] = b;
                    }
                }
                for i in 0..9 {
                    for j in 0..9 {
                        if owner[i] != owner[j] {
                            assert_eq!(l9.matrix()[(i, j)], ZERO);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn block_entries_for_uniform_rates() {
        let p = SystemParams::one_coupling(CouplingCase::GwOnly, 1.0, 0.5, 0.3, 0.8).unwrap();
        let (l5, _) = build_blocks(&p, CouplingCase::GwOnly).unwrap();
        assert_eq!(l5.matrix()[(0, 0)].re, -1.6);
        assert_eq!(l5.matrix()[(0, 1)].re, 0.3);
        let p = SystemParams::one_coupling(CouplingCase::GcOnly, 1.0, 0.5, 0.3, 0.8).unwrap();
        let (l5, _) = build_blocks(&p, CouplingCase::GcOnly).unwrap();
        assert_eq!(l5.matrix()[(4, 4)].re, -0.6);
    }

    #[test]
    fn block_reduction_rejects_bad_params() {
        let p = SystemParams::uniform(1.0, 1.0, 0.5, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(
            build_blocks(&p, CouplingCase::GwOnly).unwrap_err(),
            Error::BothCouplingsNonzero
        );
        let rates = Rates {
            plus: [1.0, 2.0, 1.0],
            minus: [1.0; 3],
        };
        let p = SystemParams::new(1.0, 1.0, 0.0, 0.5, rates).unwrap();
        assert_eq!(
            build_blocks(&p, CouplingCase::GwOnly).unwrap_err(),
            Error::NonUniformRates
        );
        let p = SystemParams::one_coupling(CouplingCase::GcOnly, 1.0, 0.5, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_blocks(&p, CouplingCase::GwOnly),
            Err(Error::InvalidParameter { name: "g_c", .. })
        ));
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::uniform(0.0, 1.0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::uniform(1.0, 1.0, -0.1, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::uniform(1.0, 1.0, 0.0, 1.0, f64::NAN, 1.0).is_err());
        let p = SystemParams::uniform(0.7, 1.1, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.omega_h(), 0.7 + 1.1);
    }

    #[test]
    fn vectorization_layout() {
        let v = vectorize(&DensityMatrix3::maximally_mixed());
        for (k, x) in v.data().iter().enumerate() {
            let expected = if [0, 4, 8].contains(&k) { 1.0 / 3.0 } else { 0.0 };
            assert_eq!(*x, C64::new(expected, 0.0));
        }

        let mut rng = StdRng::seed_from_u64(1);
        let rho = DensityMatrix3(random_matrix(&mut rng));
        assert_eq!(devectorize(&vectorize(&rho)), rho);

        let five = HSVector::new(DVector::from_element(5, C64::new(1.0, 1.0)), BasisTag::Block5Gw).unwrap();
        let m = devectorize(&five);
        for (i, j) in [(G, C), (G, H), (C, G), (H, G)] {
            assert_eq!(m.0[(i, j)], ZERO);
        }
        assert_eq!(m.0[(C, H)], C64::new(1.0, 1.0));
        assert!(HSVector::new(DVector::zeros(4), BasisTag::Block5Gc).is_err());
    }

    #[test]
    fn state_validation() {
        let r = validate_state(&DensityMatrix3::maximally_mixed(), 1e-12);
        assert!(r.hermitian && r.unit_trace && r.psd);
        assert_abs_diff_eq!(r.min_eigenvalue, 1.0 / 3.0, epsilon = 1e-14);

        let diff = DensityMatrix3::projector(G) - DensityMatrix3::projector(C);
        let r = validate_state(&diff, 1e-12);
        assert!(r.hermitian && !r.unit_trace && !r.psd);
    }

    #[test]
    fn steady_state_is_physical() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..30 {
            let p = random_params(&mut rng);
            let ss = build_liouvillian_9(&p).steady_state().unwrap();
            assert!(validate_state(&devectorize(&ss), 1e-10).is_physical());
        }
    }

    #[test]
    fn short_evolution_keeps_state_hermitian() {
        let mut rng = StdRng::seed_from_u64(21);
        let p = random_params(&mut rng);
        let l = build_liouvillian_9(&p);
        let mut v = vectorize(&random_state(&mut rng));
        let dt = C64::new(1e-3, 0.0);
        for _ in 0..500 {
            let dv = l.apply(&v).unwrap();
            v.axpy(dt, &dv).unwrap();
        }
        assert!(v.hermiticity_defect() < 1e-12);
        assert!((v.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
