//! Phase-space and cat-state diagnostics of single-mode Fock states.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{cm_from_density, DensityMatrix, StateVector};
use crate::grid::{GridSpec, PhaseSpaceFunction, WignerGrid};
use crate::optimize;
use crate::CVector;

const FRAC_1_PI: f64 = core::f64::consts::FRAC_1_PI;

/// Wigner function of a density matrix, `W(α) = Tr[ρ D(α) Π D(α)†] / π`
/// with `α = (x + iy)/√2`.
///
/// Uses the Laguerre form of the displaced-parity matrix elements. Each
/// diagonal `d` of `ρ` contributes through
/// `g_n^d(u) = √(n!/(n+d)!) u^{d/2} e^{-u/2} L_n^d(u)`, `u = 4|α|²`, which is
/// generated by an upward recurrence in `n` that never forms factorials.
#[derive(Debug, Clone)]
pub struct FockWigner {
    dim: usize,
    /// `diagonals[d][n] = (-1)^n ρ_{n+d, n}`.
    diagonals: Vec<Vec<Complex64>>,
}

impl FockWigner {
    pub fn new(rho: &DensityMatrix) -> Self {
        let dim = rho.dim();
        let diagonals = (0..dim)
            .map(|d| {
                (0..dim - d)
                    .map(|n| {
                        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                        rho.entries[(n + d, n)] * sign
                    })
                    .collect()
            })
            .collect();
        Self { dim, diagonals }
    }
}

/// `Σ_n c_n g_n^d(u)` for `n = 0..c.len()`.
fn laguerre_sum(coeffs: &[Complex64], d: usize, u: f64) -> Complex64 {
    let df = d as f64;
    let mut g_prev = 0.0;
    let mut g = if d == 0 {
        libm::exp(-0.5 * u)
    } else if u == 0.0 {
        0.0
    } else {
        libm::exp(0.5 * df * libm::log(u) - 0.5 * u - 0.5 * libm::lgamma(df + 1.0))
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, c) in coeffs.iter().enumerate() {
        acc += c * g;
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + df - u) * g - libm::sqrt(nf * (nf + df)) * g_prev)
            / libm::sqrt((nf + 1.0) * (nf + 1.0 + df));
        g_prev = g;
        g = next;
    }
    acc
}

impl PhaseSpaceFunction for FockWigner {
    fn value(&self, x: f64, y: f64) -> f64 {
        let u = 2.0 * (x * x + y * y);
        let arg = libm::atan2(y, x);
        let mut w = laguerre_sum(&self.diagonals[0], 0, u).re;
        for d in 1..self.dim {
            let phase = Complex64::from_polar(1.0, -(d as f64) * arg);
            w += 2.0 * (phase * laguerre_sum(&self.diagonals[d], d, u)).re;
        }
        FRAC_1_PI * w
    }
}

pub fn wigner_fock(rho: &DensityMatrix, grid: GridSpec) -> Result<WignerGrid> {
    WignerGrid::sample(grid, &FockWigner::new(rho))
}

/// `<(-1)^{b†b}>`.
pub fn parity(rho: &DensityMatrix) -> f64 {
    rho.populations()
        .iter()
        .enumerate()
        .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
        .sum()
}

/// `∬|W| - ∬W`, twice the negative volume of the sampled field.
pub fn negativity_volume(w: &WignerGrid) -> f64 {
    (w.abs_integral() - w.integral()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CatParity {
    Even,
    Odd,
}

impl CatParity {
    pub fn sign(self) -> f64 {
        match self {
            Self::Even => 1.0,
            Self::Odd => -1.0,
        }
    }

    fn keeps(self, n: usize) -> bool {
        (n % 2 == 0) == (self == Self::Even)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatParams {
    pub alpha: Complex64,
    pub parity: CatParity,
}

/// Largest leakage tolerated by [`cat_state`].
pub const CAT_LEAKAGE_LIMIT: f64 = 1e-8;

fn cat_amplitudes(params: &CatParams, n_trunc: usize) -> CVector {
    let a2 = params.alpha.norm_sqr();
    let mut v = CVector::zeros(n_trunc + 1);
    if a2 == 0.0 {
        // Even limit is |0>, odd limit is |1>.
        let n = if params.parity == CatParity::Even { 0 } else { 1 };
        if n <= n_trunc {
            v[n] = Complex64::new(1.0, 0.0);
        }
        return v;
    }
    // 2 c_n / √N on the kept parity, with c_n = e^{-|α|²/2} α^n / √n! and
    // N = 2(1 ± e^{-2|α|²}).
    let norm = match params.parity {
        CatParity::Even => 2.0 * (1.0 + libm::exp(-2.0 * a2)),
        CatParity::Odd => -2.0 * libm::expm1(-2.0 * a2),
    };
    let log_prefactor = libm::log(2.0) - 0.5 * libm::log(norm) - 0.5 * a2;
    let (log_abs, arg) = (0.5 * libm::log(a2), params.alpha.arg());
    for n in (0..=n_trunc).filter(|&n| params.parity.keeps(n)) {
        let nf = n as f64;
        let mag = libm::exp(log_prefactor + nf * log_abs - 0.5 * libm::lgamma(nf + 1.0));
        v[n] = Complex64::from_polar(mag, nf * arg);
    }
    v
}

/// `(|α> ± |-α>) / √N` on `n_trunc + 1` Fock levels.
pub fn cat_state(params: &CatParams, n_trunc: usize) -> Result<StateVector> {
    let amplitudes = cat_amplitudes(params, n_trunc);
    let leakage = (1.0 - amplitudes.norm_squared()).max(0.0);
    if leakage > CAT_LEAKAGE_LIMIT {
        return Err(Error::LeakageExceeded {
            leakage,
            budget: CAT_LEAKAGE_LIMIT,
        });
    }
    Ok(StateVector { amplitudes, leakage })
}

/// `<cat|ρ|cat>`, with the cat expanded on the same levels as `ρ`.
pub fn cat_fidelity(rho: &DensityMatrix, params: &CatParams) -> Result<f64> {
    let cat = StateVector::new(cat_amplitudes(params, rho.n_trunc()));
    Ok(rho.overlap(&cat)?.clamp(0.0, 1.0))
}

/// Direction of the searched cat amplitude `α = |α| e^{iψ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatAxis {
    /// Along the major axis of the state's quadrature covariance.
    Principal,
    /// `ψ = 0`.
    Real,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSearch {
    pub alpha_max: f64,
    pub axis: CatAxis,
    /// Also optimize `ψ` within ±π/2 of the chosen axis.
    pub phase_search: bool,
}

impl Default for CatSearch {
    fn default() -> Self {
        Self {
            alpha_max: 5.0,
            axis: CatAxis::Principal,
            phase_search: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatFit {
    pub alpha: Complex64,
    pub fidelity: f64,
    pub parity: CatParity,
}

const AMPLITUDE_SCAN: usize = 64;
const AMPLITUDE_TOL: f64 = 1e-7;
const PHASE_SCAN: usize = 36;
const PHASE_TOL: f64 = 1e-6;

fn search_axis(rho: &DensityMatrix, axis: CatAxis) -> f64 {
    match axis {
        CatAxis::Real => 0.0,
        CatAxis::Fixed(psi) => psi,
        // x and y map onto Re α and Im α with the same scale, so the
        // quadrature-plane angle is the phase of α.
        CatAxis::Principal => cm_from_density(rho).map(|v| v.major_axis_angle()).unwrap_or(0.0),
    }
}

fn best_amplitude(rho: &DensityMatrix, parity: CatParity, psi: f64, alpha_max: f64) -> Result<optimize::Maximum> {
    let f = |a: f64| {
        cat_fidelity(
            rho,
            &CatParams {
                alpha: Complex64::from_polar(a, psi),
                parity,
            },
        )
        .unwrap_or(f64::NAN)
    };
    optimize::scan_then_refine(f, 0.0, alpha_max, AMPLITUDE_SCAN, AMPLITUDE_TOL)
        .ok_or_else(|| Error::Unphysical(alloc::string::String::from("cat fidelity undefined on the search window")))
}

/// Maximizes `cat_fidelity` over `|α| ∈ [0, alpha_max]` along the chosen
/// axis, ties going to the smaller amplitude.
pub fn best_cat_fidelity(rho: &DensityMatrix, parity: CatParity, search: &CatSearch) -> Result<CatFit> {
    if !(search.alpha_max > 0.0 && search.alpha_max.is_finite()) {
        return Err(Error::invalid("alpha_max", "must be finite and > 0"));
    }
    let base = search_axis(rho, search.axis);
    let (psi, best) = if search.phase_search {
        let half_pi = 0.5 * core::f64::consts::PI;
        let outer = optimize::scan_then_refine(
            |dpsi| best_amplitude(rho, parity, base + dpsi, search.alpha_max).map(|m| m.value).unwrap_or(f64::NAN),
            -half_pi,
            half_pi,
            PHASE_SCAN,
            PHASE_TOL,
        )
        .ok_or_else(|| Error::Unphysical(alloc::string::String::from("cat fidelity undefined over phases")))?;
        let psi = base + outer.argmax;
        (psi, best_amplitude(rho, parity, psi, search.alpha_max)?)
    } else {
        (base, best_amplitude(rho, parity, base, search.alpha_max)?)
    };
    Ok(CatFit {
        alpha: Complex64::from_polar(best.argmax, psi),
        fidelity: best.value,
        parity,
    })
}
