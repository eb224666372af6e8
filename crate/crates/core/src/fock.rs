//! Truncated Fock-space states of a single bosonic mode.
//!
//! Throughout, `n_trunc` is the highest retained Fock level, so operators and
//! states have dimension `n_trunc + 1`.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{CovMatrix, ModeCov};
use crate::linalg;
use crate::{CMatrix, CVector};

/// Default highest Fock level for the mechanical mode.
pub const DEFAULT_N_TRUNC: usize = 100;
/// Extra levels exponentiated and then discarded when building `S(ξ)`.
pub const DEFAULT_GUARD: usize = 50;
/// Largest truncation leakage accepted without an explicit override.
pub const DEFAULT_LEAKAGE_BUDGET: f64 = 1e-6;
/// Largest `|<b>|` accepted by [`cm_from_density`].
pub const DISPLACEMENT_TOLERANCE: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Truncation settings for state construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub n_trunc: usize,
    pub guard: usize,
    pub leakage_budget: f64,
    /// Keep going when leakage exceeds the budget.
    pub allow_leakage: bool,
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            n_trunc: DEFAULT_N_TRUNC,
            guard: DEFAULT_GUARD,
            leakage_budget: DEFAULT_LEAKAGE_BUDGET,
            allow_leakage: false,
        }
    }
}

impl Truncation {
    pub fn with_n_trunc(n_trunc: usize) -> Self {
        Self {
            n_trunc,
            ..Self::default()
        }
    }

    pub fn levels(&self) -> usize {
        self.n_trunc + 1
    }

    /// Highest Fock level needed to keep the truncation leakage of a
    /// zero-mean Gaussian state with covariance `cov` near `budget`. The
    /// number distribution decays geometrically with ratio
    /// `(V_max - 1/2) / (V_max + 1/2)` along the anti-squeezed axis.
    pub fn suggest_n_trunc(cov: &ModeCov, budget: f64) -> usize {
        let v_max = cov.0.symmetric_eigenvalues().max();
        let q = (v_max - 0.5) / (v_max + 0.5);
        if !(q > 1e-3) {
            return 10;
        }
        let n = libm::ceil(libm::log(budget) / libm::log(q));
        (n as usize).max(10)
    }

    fn check(&self, leakage: f64) -> Result<()> {
        if leakage > self.leakage_budget && !self.allow_leakage {
            return Err(Error::LeakageExceeded {
                leakage,
                budget: self.leakage_budget,
            });
        }
        Ok(())
    }
}

/// Pure state in the Fock basis with the weight lost to truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: CVector,
    pub leakage: f64,
}

impl StateVector {
    pub fn new(amplitudes: CVector) -> Self {
        Self {
            amplitudes,
            leakage: 0.0,
        }
    }

    pub fn fock(n: usize, n_trunc: usize) -> Self {
        let mut v = CVector::zeros(n_trunc + 1);
        v[n] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn n_trunc(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.amplitudes.norm();
        self.amplitudes /= Complex64::new(n, 0.0);
        self
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            entries: &self.amplitudes * self.amplitudes.adjoint(),
            leakage: self.leakage,
        }
    }
}

/// Density operator in a truncated Fock basis (one mode or a product space).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub entries: CMatrix,
    pub leakage: f64,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Self {
        Self {
            entries,
            leakage: 0.0,
        }
    }

    pub fn vacuum(n_trunc: usize) -> Self {
        StateVector::fock(0, n_trunc).to_density()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_trunc(&self) -> usize {
        self.dim() - 1
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.entries)[0]
    }

    /// Diagonal of `ρ` in the Fock basis.
    pub fn populations(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn mean_number(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Divides by the trace; the removed weight is added to `leakage`.
    pub fn normalize(&mut self) -> Result<f64> {
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(Error::Unphysical(format!("trace {tr}")));
        }
        self.entries /= Complex64::new(tr, 0.0);
        Ok(tr)
    }

    /// `<ψ|ρ|ψ>`.
    pub fn overlap(&self, psi: &StateVector) -> Result<f64> {
        if psi.amplitudes.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.amplitudes.len(),
            });
        }
        Ok(psi.amplitudes.dotc(&(&self.entries * &psi.amplitudes)).re)
    }

    /// Checks Hermiticity, positivity and trace against the recorded leakage.
    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermiticity_error(&self.entries);
        if herm > HERMITIAN_TOL * linalg::max_abs(&self.entries).max(1.0) {
            return Err(Error::Unphysical(format!("hermiticity error {herm:e}")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        let tr = self.trace();
        if tr > 1.0 + 1e-10 || tr < 1.0 - self.leakage - 1e-10 {
            return Err(Error::Unphysical(format!("trace {tr} with leakage {}", self.leakage)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedThermalParams {
    pub r: f64,
    pub phi: f64,
    pub n_bar: f64,
}

impl SqueezedThermalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::invalid("r", "must be finite and >= 0"));
        }
        if !(self.n_bar >= 0.0 && self.n_bar.is_finite()) {
            return Err(Error::invalid("n_bar", "must be finite and >= 0"));
        }
        if !self.phi.is_finite() {
            return Err(Error::invalid("phi", "must be finite"));
        }
        Ok(())
    }

    /// Covariance matrix of `S(ξ) ρ_th(n̄) S(ξ)†`.
    pub fn covariance(&self) -> ModeCov {
        let (c, s) = (libm::cosh(2.0 * self.r), libm::sinh(2.0 * self.r));
        let scale = 0.5 * (2.0 * self.n_bar + 1.0);
        CovMatrix(Matrix2::new(
            scale * (c - s * libm::cos(self.phi)),
            -scale * s * libm::sin(self.phi),
            -scale * s * libm::sin(self.phi),
            scale * (c + s * libm::cos(self.phi)),
        ))
    }
}

/// `b` on `n_trunc + 1` levels.
pub fn annihilation(n_trunc: usize) -> CMatrix {
    linalg::annihilation(n_trunc + 1)
}

/// `exp(r/2 (b² − b†²))` restricted to the even (`parity = 0`) or odd Fock
/// levels below `levels`. Block index `i` is Fock level `2i + parity`.
fn squeeze_block(r: f64, levels: usize, parity: usize) -> DMatrix<f64> {
    let count = (levels + 1 - parity) / 2;
    let mut g = DMatrix::<f64>::zeros(count, count);
    for i in 0..count.saturating_sub(1) {
        let k = (2 * i + parity) as f64;
        let w = 0.5 * r * libm::sqrt((k + 1.0) * (k + 2.0));
        g[(i, i + 1)] = w;
        g[(i + 1, i)] = -w;
    }
    linalg::expm(&g)
}

/// `S(ξ)` on `levels` levels without trimming. The generator only couples
/// levels of equal parity and its phase is a rotation, so
/// `<m|S(ξ)|n> = e^{iφ(m−n)/2} <m|S(r)|n>` with a real `S(r)`.
fn squeeze_full(r: f64, phi: f64, levels: usize) -> CMatrix {
    let mut s = CMatrix::zeros(levels, levels);
    for parity in 0..2 {
        let block = squeeze_block(r, levels, parity);
        for (i, j) in (0..block.nrows()).flat_map(|i| (0..block.nrows()).map(move |j| (i, j))) {
            let (m, n) = (2 * i + parity, 2 * j + parity);
            s[(m, n)] = Complex64::from_polar(block[(i, j)], 0.5 * phi * (m as f64 - n as f64));
        }
    }
    s
}

/// Squeeze operator `S(ξ) = exp(½(ξ* b² − ξ b†²))`, `ξ = r e^{iφ}`.
///
/// At `φ = 0` the `X` quadrature is squeezed. The exponential is taken on
/// `n_trunc + 1 + guard` levels and trimmed. Fails when `S(ξ)|0>` loses more
/// than the leakage budget to the trimmed levels.
pub fn squeeze_operator(r: f64, phi: f64, trunc: &Truncation) -> Result<CMatrix> {
    let full = squeeze_full(r, phi, trunc.levels() + trunc.guard);
    let s = full.view((0, 0), (trunc.levels(), trunc.levels())).into_owned();
    trunc.check(1.0 - s.column(0).norm_squared())?;
    Ok(s)
}

/// Amplitude of `|2n>` in the squeezed vacuum, written as
/// `(1 - tanh²r)^{1/4} C_n tanh^n r` with `C_n = (-e^{iφ}/2)^n √((2n)!)/n!`.
pub fn squeezed_vacuum_coefficient(n: usize, r: f64, phi: f64) -> Complex64 {
    let t = libm::tanh(r);
    if n == 0 {
        return Complex64::new(libm::pow(1.0 - t * t, 0.25), 0.0);
    }
    if t == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let nf = n as f64;
    let log_mag = 0.25 * libm::log1p(-t * t) + nf * libm::log(0.5 * t) + 0.5 * libm::lgamma(2.0 * nf + 1.0)
        - libm::lgamma(nf + 1.0);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Complex64::from_polar(sign * libm::exp(log_mag), nf * phi)
}

/// Closed-form squeezed vacuum `S(ξ)|0>` on `n_trunc + 1` levels.
pub fn squeezed_vacuum(r: f64, phi: f64, n_trunc: usize) -> Result<StateVector> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", "must be finite and >= 0"));
    }
    let mut v = CVector::zeros(n_trunc + 1);
    for n in 0..=n_trunc / 2 {
        v[2 * n] = squeezed_vacuum_coefficient(n, r, phi);
    }
    let leakage = (1.0 - v.norm_squared()).max(0.0);
    Ok(StateVector {
        amplitudes: v,
        leakage,
    })
}

fn thermal_populations(n_bar: f64, levels: usize) -> Vec<f64> {
    let q = n_bar / (1.0 + n_bar);
    let mut p = Vec::with_capacity(levels);
    let mut w = 1.0 / (1.0 + n_bar);
    for _ in 0..levels {
        p.push(w);
        w *= q;
    }
    p
}

/// Thermal state with weights `n̄^n / (1 + n̄)^{n+1}`, renormalized over the
/// retained levels.
pub fn thermal_state(n_bar: f64, n_trunc: usize) -> Result<DensityMatrix> {
    if !(n_bar >= 0.0 && n_bar.is_finite()) {
        return Err(Error::invalid("n_bar", "must be finite and >= 0"));
    }
    let p = thermal_populations(n_bar, n_trunc + 1);
    let kept: f64 = p.iter().sum();
    let entries = CMatrix::from_diagonal(&CVector::from_iterator(
        p.len(),
        p.iter().map(|w| Complex64::new(w / kept, 0.0)),
    ));
    Ok(DensityMatrix {
        entries,
        leakage: (1.0 - kept).max(0.0),
    })
}

/// `S(ξ) ρ_th(n̄) S(ξ)†`, computed on the guarded space, trimmed and
/// renormalized. The trimmed weight is recorded as leakage.
pub fn squeezed_thermal(params: &SqueezedThermalParams, trunc: &Truncation) -> Result<DensityMatrix> {
    params.validate()?;
    let levels = trunc.levels() + trunc.guard;
    let kept = trunc.levels();
    let p = thermal_populations(params.n_bar, levels);
    let mut entries = CMatrix::zeros(kept, kept);
    for parity in 0..2 {
        let block = squeeze_block(params.r, levels, parity);
        let rows = (kept + 1 - parity) / 2;
        let top = block.rows(0, rows);
        let mut weighted = top.clone_owned();
        for j in 0..weighted.ncols() {
            weighted.column_mut(j).scale_mut(p[2 * j + parity]);
        }
        let sub = &weighted * top.transpose();
        for i in 0..rows {
            for j in 0..rows {
                let (m, n) = (2 * i + parity, 2 * j + parity);
                entries[(m, n)] = Complex64::from_polar(sub[(i, j)], 0.5 * params.phi * (m as f64 - n as f64));
            }
        }
    }
    entries = (&entries + entries.adjoint()) * Complex64::new(0.5, 0.0);
    let mut rho = DensityMatrix { entries, leakage: 0.0 };
    let kept = rho.trace();
    let leakage = (1.0 - kept).max(0.0);
    trunc.check(leakage)?;
    rho.normalize()?;
    rho.leakage = leakage;
    Ok(rho)
}

/// Extracts `(r, φ, n̄)` from a single-mode covariance matrix using the
/// vacuum-normalized `Ṽ = 2 V_b`.
pub fn cm_to_squeezed_thermal(vb: &ModeCov) -> Result<SqueezedThermalParams> {
    let v = vb.0 * 2.0;
    let det = v.determinant();
    if !(det > 0.0) {
        return Err(Error::Unphysical(format!("det(2V) = {det}")));
    }
    let root = libm::sqrt(det);
    let n_bar = 0.5 * (root - 1.0);
    if n_bar < -1e-9 {
        return Err(Error::Unphysical(format!("n_bar = {n_bar:e}")));
    }
    let ratio = (v[(0, 0)] + v[(1, 1)]) / (2.0 * root);
    let r = 0.5 * libm::acosh(ratio.max(1.0));
    let phi = if r > 1e-12 {
        libm::atan2(-2.0 * v[(0, 1)], v[(1, 1)] - v[(0, 0)])
    } else {
        0.0
    };
    Ok(SqueezedThermalParams {
        r,
        phi,
        n_bar: n_bar.max(0.0),
    })
}

/// `<b>` and `<b²>` from the matrix elements, using exact ladder
/// coefficients rather than truncated operator products.
fn ladder_moments(rho: &CMatrix) -> (Complex64, Complex64) {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for m in 1..rho.nrows() {
        b1 += rho[(m, m - 1)] * libm::sqrt(m as f64);
        if m >= 2 {
            b2 += rho[(m, m - 2)] * libm::sqrt((m * (m - 1)) as f64);
        }
    }
    (b1, b2)
}

/// Quadrature covariance matrix of a single-mode state with zero mean.
pub fn cm_from_density(rho: &DensityMatrix) -> Result<ModeCov> {
    let (b1, b2) = ladder_moments(&rho.entries);
    if b1.norm() > DISPLACEMENT_TOLERANCE {
        return Err(Error::Displaced(b1.norm()));
    }
    let n = rho.mean_number() / rho.trace();
    let b2 = b2 / rho.trace();
    Ok(ModeCov::new(n + 0.5 + b2.re, b2.im, n + 0.5 - b2.re))
}
