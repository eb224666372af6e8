//! Pulsed phonon subtraction: a red-detuned pulse mixes the mechanical mode
//! `b` with the cavity output mode `C` like a beamsplitter of angle `θ`, and
//! detecting `k` photons in `C` heralds `k` subtracted phonons.
//!
//! Product-space basis index is `n_b * levels_c + n_c`.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, StateVector};
use crate::linalg;
use crate::params::InteractionAngle;
use crate::{CMatrix, CVector};

/// Default highest retained cavity photon number.
pub const DEFAULT_N_TRUNC_C: usize = 6;
/// Extra cavity levels propagated and then traced out as leakage.
pub const DEFAULT_GUARD_C: usize = 2;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointDims {
    pub levels_b: usize,
    pub levels_c: usize,
}

impl JointDims {
    pub fn new(n_trunc_b: usize, n_trunc_c: usize) -> Self {
        Self {
            levels_b: n_trunc_b + 1,
            levels_c: n_trunc_c + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.levels_b * self.levels_c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, n_b: usize, n_c: usize) -> usize {
        n_b * self.levels_c + n_c
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.levels_c, index % self.levels_c)
    }

    /// Basis indices with `n_b + n_c <= n_max`. Both the propagator and its
    /// generator conserve `n_b + n_c`, so this block is free of truncation
    /// effects whenever each mode keeps more than `n_max` levels.
    pub fn interior(&self, n_max: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                let (b, c) = self.split(i);
                b + c <= n_max
            })
            .collect()
    }
}

/// `C† b` applied to `v`.
fn raise_c_lower_b(dims: &JointDims, v: &CVector) -> CVector {
    let mut out = CVector::zeros(dims.len());
    for nb in 1..dims.levels_b {
        for nc in 0..dims.levels_c - 1 {
            let x = v[dims.index(nb, nc)];
            if x != ZERO {
                out[dims.index(nb - 1, nc + 1)] += x * libm::sqrt((nb * (nc + 1)) as f64);
            }
        }
    }
    out
}

/// `C b†` applied to `v`.
fn lower_c_raise_b(dims: &JointDims, v: &CVector) -> CVector {
    let mut out = CVector::zeros(dims.len());
    for nb in 0..dims.levels_b - 1 {
        for nc in 1..dims.levels_c {
            let x = v[dims.index(nb, nc)];
            if x != ZERO {
                out[dims.index(nb + 1, nc - 1)] += x * libm::sqrt(((nb + 1) * nc) as f64);
            }
        }
    }
    out
}

/// `exp(z O) v` for a nilpotent ladder operator `O`; the series ends exactly.
fn exp_nilpotent_apply(dims: &JointDims, op: fn(&JointDims, &CVector) -> CVector, z: Complex64, v: &CVector) -> CVector {
    let mut result = v.clone();
    let mut term = v.clone();
    for k in 1..=dims.levels_b.max(dims.levels_c) {
        term = op(dims, &term) * (z / k as f64);
        if term.iter().all(|x| *x == ZERO) {
            break;
        }
        result += &term;
    }
    result
}

/// Pulse propagator in normal-ordered form,
///
/// ```text
/// U = exp(i tanθ C†b) · cosθ^{-(C†C - b†b)} · exp(i tanθ C b†),
/// ```
///
/// equal to the beamsplitter `exp(iθ(C†b + C b†))`. The middle factor is
/// evaluated entrywise as `exp((n_b - n_c) ln cosθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactoredPropagator {
    pub theta: InteractionAngle,
    pub dims: JointDims,
}

impl FactoredPropagator {
    pub fn new(theta: InteractionAngle, dims: JointDims) -> Self {
        Self { theta, dims }
    }

    fn middle_apply(&self, v: &mut CVector) {
        let ln_cos = libm::log(self.theta.cos());
        for i in 0..self.dims.len() {
            let (nb, nc) = self.dims.split(i);
            v[i] *= libm::exp((nb as f64 - nc as f64) * ln_cos);
        }
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(v.len(), self.dims.len(), "state length does not match propagator");
        let z = I * self.theta.tan();
        let mut w = exp_nilpotent_apply(&self.dims, lower_c_raise_b, z, v);
        self.middle_apply(&mut w);
        exp_nilpotent_apply(&self.dims, raise_c_lower_b, z, &w)
    }

    /// The three factors as dense matrices, left to right.
    pub fn factors(&self) -> [CMatrix; 3] {
        let n = self.dims.len();
        let z = I * self.theta.tan();
        let mut left = CMatrix::zeros(n, n);
        let mut middle = CMatrix::zeros(n, n);
        let mut right = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = CVector::zeros(n);
            e[j] = Complex64::new(1.0, 0.0);
            left.set_column(j, &exp_nilpotent_apply(&self.dims, raise_c_lower_b, z, &e));
            right.set_column(j, &exp_nilpotent_apply(&self.dims, lower_c_raise_b, z, &e));
            self.middle_apply(&mut e);
            middle.set_column(j, &e);
        }
        [left, middle, right]
    }

    pub fn to_dense(&self) -> CMatrix {
        let [l, m, r] = self.factors();
        l * m * r
    }

    /// `U (I ⊗ |0>_c)`: maps a mechanical state to the joint state.
    pub fn on_cavity_vacuum(&self) -> CMatrix {
        let mut w = CMatrix::zeros(self.dims.len(), self.dims.levels_b);
        for nb in 0..self.dims.levels_b {
            let mut e = CVector::zeros(self.dims.len());
            e[self.dims.index(nb, 0)] = Complex64::new(1.0, 0.0);
            w.set_column(nb, &self.apply(&e));
        }
        w
    }
}

/// Dense `exp(iθ(C†b + C b†))` of the truncated generator.
pub fn beamsplitter_oracle(theta: InteractionAngle, dims: JointDims) -> CMatrix {
    let n = dims.len();
    let mut gen = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = CVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        gen.set_column(j, &(raise_c_lower_b(&dims, &e) + lower_c_raise_b(&dims, &e)));
    }
    linalg::expm(&(gen * (I * theta.radians())))
}

/// Largest entry difference of two operators on the interior block.
pub fn interior_max_diff(a: &CMatrix, b: &CMatrix, dims: &JointDims, n_max: usize) -> f64 {
    let idx = dims.interior(n_max);
    let mut worst: f64 = 0.0;
    for &i in &idx {
        for &j in &idx {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// `cosθ^{n}` applied to the amplitudes of a single-mode vector.
fn damp(v: &CVector, theta: InteractionAngle) -> CVector {
    let ln_cos = libm::log(theta.cos());
    CVector::from_iterator(v.len(), v.iter().enumerate().map(|(n, x)| x * libm::exp(n as f64 * ln_cos)))
}

/// `b^k v` with exact ladder coefficients.
fn lower(v: &CVector, k: usize) -> CVector {
    let mut out = CVector::zeros(v.len());
    for n in k..v.len() {
        let coeff: f64 = (n - k + 1..=n).map(|m| libm::sqrt(m as f64)).product();
        out[n - k] = v[n] * coeff;
    }
    out
}

/// Result of pulsing a pure mechanical state with the cavity in vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct PureEvolution {
    pub dims: JointDims,
    /// `U |ψ>_b |0>_c`, with amplitude lost beyond the cavity truncation
    /// recorded in `leakage`.
    pub full: CVector,
    pub leakage: f64,
    /// Normalized `|0>|ξ'> + i tanθ |1> b|ξ'> - tan²θ/√2 |2> b²|ξ'>`.
    pub expansion: CVector,
    /// Normalized `cosθ^{b†b} |ξ>`.
    pub xi_prime: StateVector,
    /// `tanh r` of `|ξ'>`, read off its `|2>/|0>` amplitude ratio.
    pub tanh_r_eff: f64,
}

impl PureEvolution {
    /// `|<full|expansion>|²` with `full` normalized.
    pub fn expansion_overlap(&self) -> f64 {
        self.full.dotc(&self.expansion).norm_sqr() / self.full.norm_squared()
    }
}

/// Evolves a squeezed vacuum (even support only) under the pulse.
pub fn evolve_pure(xi: &StateVector, theta: InteractionAngle, n_trunc_c: usize) -> Result<PureEvolution> {
    let a = &xi.amplitudes;
    let scale = a.norm();
    if a.iter().skip(1).step_by(2).any(|x| x.norm() > 1e-14 * scale) {
        return Err(Error::invalid("xi_state", "odd Fock amplitudes must vanish"));
    }
    if !(a[0].norm() > 0.0) {
        return Err(Error::invalid("xi_state", "vacuum amplitude must be nonzero"));
    }
    let dims = JointDims::new(xi.n_trunc(), n_trunc_c);
    let mut input = CVector::zeros(dims.len());
    for nb in 0..dims.levels_b {
        input[dims.index(nb, 0)] = a[nb];
    }
    let full = FactoredPropagator::new(theta, dims).apply(&input);
    let leakage = (input.norm_squared() - full.norm_squared()).max(0.0);

    let damped = damp(a, theta);
    let mut expansion = CVector::zeros(dims.len());
    let t = theta.tan();
    let coeffs = [Complex64::new(1.0, 0.0), I * t, Complex64::new(-t * t / libm::sqrt(2.0), 0.0)];
    for (m, c) in coeffs.iter().enumerate().take(dims.levels_c) {
        let part = lower(&damped, m);
        for nb in 0..dims.levels_b {
            expansion[dims.index(nb, m)] = part[nb] * c;
        }
    }
    let norm = expansion.norm();
    expansion /= Complex64::new(norm, 0.0);

    let xi_prime = StateVector::new(damped).normalized();
    let tanh_r_eff = if xi_prime.amplitudes.len() > 2 {
        (xi_prime.amplitudes[2] / xi_prime.amplitudes[0]).norm() * libm::sqrt(2.0)
    } else {
        0.0
    };
    Ok(PureEvolution {
        dims,
        full,
        leakage,
        expansion,
        xi_prime,
        tanh_r_eff,
    })
}

/// Joint mechanical-cavity state after the pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub rho: DensityMatrix,
    pub dims: JointDims,
    pub theta: InteractionAngle,
}

impl JointState {
    pub fn n_trunc_b(&self) -> usize {
        self.dims.levels_b - 1
    }

    pub fn n_trunc_c(&self) -> usize {
        self.dims.levels_c - 1
    }

    /// Unnormalized `<k|ρ|k>_c`.
    pub fn cavity_block(&self, k: usize) -> CMatrix {
        let nb = self.dims.levels_b;
        CMatrix::from_fn(nb, nb, |i, j| self.rho.entries[(self.dims.index(i, k), self.dims.index(j, k))])
    }
}

/// Numerical settings for the subtraction step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubtractionOptions {
    pub n_trunc_c: usize,
    pub guard_c: usize,
    pub leakage_budget: f64,
    pub allow_leakage: bool,
    /// Detector efficiency `η`, applied as a factor on `p_k` only.
    pub efficiency: f64,
}

impl Default for SubtractionOptions {
    fn default() -> Self {
        Self {
            n_trunc_c: DEFAULT_N_TRUNC_C,
            guard_c: DEFAULT_GUARD_C,
            leakage_budget: crate::fock::DEFAULT_LEAKAGE_BUDGET,
            allow_leakage: false,
            efficiency: 1.0,
        }
    }
}

impl SubtractionOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid("efficiency", "must lie in (0, 1]"));
        }
        if !(self.leakage_budget >= 0.0) {
            return Err(Error::invalid("leakage_budget", "must be >= 0"));
        }
        Ok(())
    }
}

/// `U (ρ_in ⊗ |0><0|_c) U†`, propagated with `n_trunc_c + guard_c` cavity
/// levels. The guard levels are then discarded and their weight becomes
/// leakage.
pub fn evolve_mixed(rho_in: &DensityMatrix, theta: InteractionAngle, opts: &SubtractionOptions) -> Result<JointState> {
    opts.validate()?;
    let work = JointDims::new(rho_in.n_trunc(), opts.n_trunc_c + opts.guard_c);
    let w = FactoredPropagator::new(theta, work).on_cavity_vacuum();
    let full = &w * &rho_in.entries * w.adjoint();

    let dims = JointDims::new(rho_in.n_trunc(), opts.n_trunc_c);
    let keep: Vec<usize> = (0..dims.len())
        .map(|i| {
            let (b, c) = dims.split(i);
            work.index(b, c)
        })
        .collect();
    let entries = CMatrix::from_fn(dims.len(), dims.len(), |i, j| full[(keep[i], keep[j])]);
    let mut rho = DensityMatrix::new(entries);
    let cavity_leakage = (rho_in.trace() - rho.trace()).max(0.0);
    if cavity_leakage > opts.leakage_budget && !opts.allow_leakage {
        return Err(Error::LeakageExceeded {
            leakage: cavity_leakage,
            budget: opts.leakage_budget,
        });
    }
    rho.leakage = rho_in.leakage + cavity_leakage;
    Ok(JointState { rho, dims, theta })
}

/// Operator `b^m K ρ K b†^n` with `K = cosθ^{b†b}`.
fn sandwich(rho: &CMatrix, theta: InteractionAngle, m: usize, n: usize) -> CMatrix {
    let d = rho.nrows();
    let ln_cos = libm::log(theta.cos());
    let damped = CMatrix::from_fn(d, d, |i, j| rho[(i, j)] * libm::exp((i + j) as f64 * ln_cos));
    let mut left = CMatrix::zeros(d, d);
    for j in 0..d {
        left.set_column(j, &lower(&damped.column(j).into_owned(), m));
    }
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        let row = left.row(i).transpose().map(|z| z.conj());
        let lowered = lower(&row, n);
        for j in 0..d {
            out[(i, j)] = lowered[j].conj();
        }
    }
    out
}

/// Joint state from the closed-form double sum with blocks
/// `i^{m-n} tan^{m+n}θ / √(m! n!) · b^m K ρ K b†^n` for `m, n <= max_order`.
pub fn evolve_mixed_analytic(rho_in: &DensityMatrix, theta: InteractionAngle, max_order: usize) -> JointState {
    let dims = JointDims::new(rho_in.n_trunc(), max_order);
    let t = theta.tan();
    let mut entries = CMatrix::zeros(dims.len(), dims.len());
    let fact = |k: usize| libm::exp(libm::lgamma(k as f64 + 1.0));
    for m in 0..=max_order {
        for n in 0..=max_order {
            let phase = I.powi(m as i32 - n as i32);
            let coeff = phase * (libm::pow(t, (m + n) as f64) / libm::sqrt(fact(m) * fact(n)));
            let block = sandwich(&rho_in.entries, theta, m, n) * coeff;
            for i in 0..dims.levels_b {
                for j in 0..dims.levels_b {
                    entries[(dims.index(i, m), dims.index(j, n))] = block[(i, j)];
                }
            }
        }
    }
    let mut rho = DensityMatrix::new(entries);
    rho.leakage = rho_in.leakage + (rho_in.trace() - rho.trace()).max(0.0);
    JointState { rho, dims, theta }
}

/// Mechanical state heralded by `k` detected photons.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedState {
    pub rho_b: DensityMatrix,
    pub k: usize,
    pub probability: f64,
    pub theta: InteractionAngle,
}

fn conditioned(block: CMatrix, k: usize, theta: InteractionAngle, leakage: f64) -> Result<ConditionedState> {
    let mut rho_b = DensityMatrix::new((&block + block.adjoint()) * Complex64::new(0.5, 0.0));
    let probability = rho_b.trace();
    if !(probability > 0.0) {
        return Err(Error::ZeroProbability { k });
    }
    rho_b.normalize()?;
    rho_b.leakage = leakage;
    Ok(ConditionedState {
        rho_b,
        k,
        probability,
        theta,
    })
}

/// Projects the cavity onto `|k>` and renormalizes the mechanical part.
pub fn condition_on_photons(joint: &JointState, k: usize) -> Result<ConditionedState> {
    if k > joint.n_trunc_c() {
        return Err(Error::PhotonCountOutOfRange {
            k,
            n_trunc: joint.n_trunc_c(),
        });
    }
    conditioned(joint.cavity_block(k), k, joint.theta, joint.rho.leakage)
}

/// `tan^{2k}θ / k! · b^k K ρ K b†^k`, normalized, with its trace as `p_k`.
pub fn conditioned_analytic(rho_in: &DensityMatrix, theta: InteractionAngle, k: usize) -> Result<ConditionedState> {
    let coeff = libm::exp(2.0 * k as f64 * libm::log(theta.tan()) - libm::lgamma(k as f64 + 1.0));
    let block = if k == 0 {
        sandwich(&rho_in.entries, theta, 0, 0)
    } else if theta.tan() == 0.0 {
        CMatrix::zeros(rho_in.dim(), rho_in.dim())
    } else {
        sandwich(&rho_in.entries, theta, k, k) * Complex64::new(coeff, 0.0)
    };
    conditioned(block, k, theta, rho_in.leakage)
}

/// `evolve_mixed` followed by `condition_on_photons`, with the detector
/// efficiency applied to the reported probability.
pub fn subtract_phonons(
    rho_in: &DensityMatrix,
    theta: InteractionAngle,
    k: usize,
    opts: &SubtractionOptions,
) -> Result<ConditionedState> {
    if k > opts.n_trunc_c {
        return Err(Error::PhotonCountOutOfRange {
            k,
            n_trunc: opts.n_trunc_c,
        });
    }
    let joint = evolve_mixed(rho_in, theta, opts)?;
    let mut state = condition_on_photons(&joint, k)?;
    state.probability *= opts.efficiency;
    Ok(state)
}

/// Heralding probabilities `p_0 ..= p_{n_trunc_c}` of one joint state.
pub fn photon_distribution(joint: &JointState) -> Vec<f64> {
    (0..joint.dims.levels_c)
        .map(|k| linalg::trace(&joint.cavity_block(k)).re)
        .collect()
}

/// `p_k / tan^{2k}θ`, the factor by which the heralding probability
/// departs from the naive `tan^{2k}θ` estimate.
pub fn probability_enhancement(state: &ConditionedState) -> Result<f64> {
    let t2k = libm::pow(state.theta.tan2(), state.k as f64);
    if !(t2k > 0.0) {
        return Err(Error::Unphysical(format!("tan^(2k) theta = {t2k}")));
    }
    Ok(state.probability / t2k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{squeezed_thermal, squeezed_vacuum, SqueezedThermalParams, Truncation};
    use crate::linalg::{max_abs, trace_distance};

    fn theta(tan: f64) -> InteractionAngle {
        InteractionAngle::from_tan(tan).unwrap()
    }

    #[test]
    fn identity_at_zero_angle() {
        let dims = JointDims::new(5, 3);
        let u = FactoredPropagator::new(InteractionAngle::ZERO, dims).to_dense();
        assert!(max_abs(&(u - CMatrix::identity(dims.len(), dims.len()))) < 1e-15);
    }

    #[test]
    fn factored_matches_oracle_small() {
        let n = 6;
        let dims = JointDims::new(n + 2, n + 2);
        for &th in &[0.05, 0.11, 0.3] {
            let angle = InteractionAngle::new(th).unwrap();
            let u = FactoredPropagator::new(angle, dims).to_dense();
            let oracle = beamsplitter_oracle(angle, dims);
            assert!(interior_max_diff(&u, &oracle, &dims, n) < 1e-12);
        }
    }

    #[test]
    fn heisenberg_picture_is_a_beamsplitter() {
        // U† C U = cosθ C + i sinθ b on the interior block.
        let n = 5;
        let dims = JointDims::new(n + 2, n + 2);
        let angle = InteractionAngle::new(0.4).unwrap();
        let u = FactoredPropagator::new(angle, dims).to_dense();
        let b = linalg::kron(&linalg::annihilation(dims.levels_b), &CMatrix::identity(dims.levels_c, dims.levels_c));
        let c = linalg::kron(&CMatrix::identity(dims.levels_b, dims.levels_b), &linalg::annihilation(dims.levels_c));
        let lhs = u.adjoint() * &c * &u;
        let rhs = &c * Complex64::new(angle.cos(), 0.0) + &b * (I * libm::sin(angle.radians()));
        assert!(interior_max_diff(&lhs, &rhs, &dims, n - 1) < 1e-12);
    }

    #[test]
    fn pure_evolution_at_zero_angle() {
        let xi = squeezed_vacuum(0.8, 0.0, 40).unwrap();
        let out = evolve_pure(&xi, InteractionAngle::ZERO, 4).unwrap();
        for nb in 0..out.dims.levels_b {
            assert_eq!(out.full[out.dims.index(nb, 0)], xi.amplitudes[nb]);
            for nc in 1..out.dims.levels_c {
                assert_eq!(out.full[out.dims.index(nb, nc)], ZERO);
            }
        }
        assert!((out.xi_prime.amplitudes.clone() - xi.clone().normalized().amplitudes).camax() < 1e-15);
    }

    #[test]
    fn pure_evolution_expansion() {
        let xi = squeezed_vacuum(1.25, 0.0, 120).unwrap();
        let angle = theta(0.11);
        let out = evolve_pure(&xi, angle, 6).unwrap();
        let t4 = libm::pow(0.11, 4.0);
        assert!(out.expansion_overlap() >= 1.0 - 5.0 * t4, "{}", 1.0 - out.expansion_overlap());
        let expect = libm::tanh(1.25) * angle.cos() * angle.cos();
        assert!((out.tanh_r_eff - expect).abs() < 1e-12);
        assert!(out.leakage < 1e-8);
    }

    #[test]
    fn pure_evolution_rejects_odd_support() {
        let odd = StateVector::fock(1, 5);
        assert!(evolve_pure(&odd, theta(0.1), 3).is_err());
    }

    #[test]
    fn mixed_zero_angle_is_product() {
        let rho = squeezed_thermal(&SqueezedThermalParams { r: 0.5, phi: 0.3, n_bar: 0.2 }, &Truncation::with_n_trunc(30)).unwrap();
        let joint = evolve_mixed(&rho, InteractionAngle::ZERO, &SubtractionOptions::default()).unwrap();
        let mut vac = CMatrix::zeros(7, 7);
        vac[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(max_abs(&(joint.rho.entries - linalg::kron(&rho.entries, &vac))) < 1e-15);
    }

    #[test]
    fn mixed_matches_analytic_double_sum() {
        let rho = squeezed_thermal(&SqueezedThermalParams { r: 0.7, phi: -0.2, n_bar: 0.1 }, &Truncation::with_n_trunc(50)).unwrap();
        let angle = theta(0.2);
        let opts = SubtractionOptions {
            n_trunc_c: 2,
            allow_leakage: true,
            ..SubtractionOptions::default()
        };
        let numeric = evolve_mixed(&rho, angle, &opts).unwrap();
        let analytic = evolve_mixed_analytic(&rho, angle, 2);
        assert!(max_abs(&(numeric.rho.entries - analytic.rho.entries)) < 1e-13);
    }

    #[test]
    fn conditioning_paths_agree() {
        let rho = squeezed_thermal(&SqueezedThermalParams { r: 0.9, phi: 0.1, n_bar: 0.05 }, &Truncation::with_n_trunc(60)).unwrap();
        let angle = theta(0.11);
        let joint = evolve_mixed(&rho, angle, &SubtractionOptions::default()).unwrap();
        for k in 0..=3 {
            let a = condition_on_photons(&joint, k).unwrap();
            let b = conditioned_analytic(&rho, angle, k).unwrap();
            assert!(trace_distance(&a.rho_b.entries, &b.rho_b.entries) < 1e-10);
            assert!((a.probability - b.probability).abs() < 1e-13);
        }
        assert!(matches!(condition_on_photons(&joint, 7), Err(Error::PhotonCountOutOfRange { .. })));
    }

    #[test]
    fn zero_angle_heralds_nothing() {
        let rho = squeezed_thermal(&SqueezedThermalParams { r: 0.9, phi: 0.1, n_bar: 0.05 }, &Truncation::with_n_trunc(40)).unwrap();
        let out = subtract_phonons(&rho, InteractionAngle::ZERO, 0, &SubtractionOptions::default()).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-14);
        assert!(max_abs(&(out.rho_b.entries - rho.entries.clone())) < 1e-14);
        let err = subtract_phonons(&rho, InteractionAngle::ZERO, 1, &SubtractionOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ZeroProbability { k: 1 }));
    }

    #[test]
    fn efficiency_scales_probability_only() {
        let rho = squeezed_vacuum(0.6, 0.0, 40).unwrap().to_density();
        let ideal = subtract_phonons(&rho, theta(0.1), 1, &SubtractionOptions::default()).unwrap();
        let lossy = subtract_phonons(&rho, theta(0.1), 1, &SubtractionOptions { efficiency: 0.5, ..Default::default() }).unwrap();
        assert!((lossy.probability - 0.5 * ideal.probability).abs() < 1e-16);
        assert_eq!(lossy.rho_b, ideal.rho_b);
        assert!(subtract_phonons(&rho, theta(0.1), 1, &SubtractionOptions { efficiency: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn probabilities_sum_to_one() {
        let rho = squeezed_thermal(&SqueezedThermalParams { r: 1.25, phi: -0.04, n_bar: 0.013 }, &Truncation::default()).unwrap();
        let joint = evolve_mixed(&rho, theta(0.15), &SubtractionOptions::default()).unwrap();
        let total: f64 = photon_distribution(&joint).iter().sum();
        let deficit = 1.0 - total;
        assert!(deficit >= -1e-12 && deficit < 1e-6, "{deficit:e}");
        assert!((deficit - (joint.rho.leakage - rho.leakage)).abs() < 1e-12);
    }

    #[test]
    fn lower_matches_operator() {
        let v = CVector::from_fn(8, |n, _| Complex64::new(n as f64 * 0.3 - 1.0, 0.1 * n as f64));
        let b = linalg::annihilation(8);
        assert!((lower(&v, 2) - &b * &b * &v).camax() < 1e-13);
    }
}
