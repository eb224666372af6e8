//! Dense linear-algebra helpers shared by the Fock-space modules.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::CMatrix;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Truncated annihilation operator on `levels` Fock states.
pub fn annihilation(levels: usize) -> CMatrix {
    let mut a = CMatrix::zeros(levels, levels);
    for n in 1..levels {
        a[(n - 1, n)] = Complex64::new(libm::sqrt(n as f64), 0.0);
    }
    a
}

/// Number operator on `levels` Fock states.
pub fn number(levels: usize) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_fn(levels, |n, _| {
        Complex64::new(n as f64, 0.0)
    }))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().copied().sum()
}

/// Max-norm distance of `a` from its adjoint.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> alloc::vec::Vec<f64> {
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: alloc::vec::Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Trace distance `||a - b||_1 / 2` for Hermitian `a`, `b`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|v| v.abs()).sum::<f64>()
}

fn one_norm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Degree-13 Padé coefficients.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        libm::ceil(libm::log2(norm / THETA13)) as i32
    } else {
        0
    };
    let a = a * T::from_real(libm::pow(2.0, -(squarings as f64)));
    let c = |k: usize| T::from_real(PADE13[k]);
    let id = DMatrix::<T>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9));
    let u = &a * (u_inner + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &id * c(1));
    let v_inner = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8));
    let v = v_inner + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);

    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is nonsingular for scaled input");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// `exp(z * op)` for nilpotent `op`, summed term by term until the series
/// terminates exactly.
pub fn expm_nilpotent(op: &CMatrix, z: Complex64) -> CMatrix {
    let n = op.nrows();
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=n {
        term = (&term * op) * (z / Complex64::new(k as f64, 0.0));
        if term.iter().all(|v| *v == ZERO) {
            break;
        }
        result += &term;
    }
    result
}

/// Embeds a real matrix into the complex field.
pub fn complexify(a: &DMatrix<f64>) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

    #[test]
    fn ladder_basics() {
        let a = annihilation(2);
        assert_eq!(a[(0, 1)], ONE);
        assert_eq!(a[(0, 0)], ZERO);
        assert_eq!(a[(1, 0)], ZERO);
        assert_eq!(a[(1, 1)], ZERO);

        let levels = 8;
        let a = annihilation(levels);
        let ad = dagger(&a);
        let comm = &a * &ad - &ad * &a;
        for i in 0..levels - 1 {
            assert!((comm[(i, i)] - ONE).norm() < 1e-14);
        }
        // Truncation defect sits on the last level only.
        assert!((comm[(levels - 1, levels - 1)].re + (levels - 1) as f64).abs() < 1e-12);
        let n = &ad * &a;
        for i in 0..levels {
            assert!((n[(i, i)].re - i as f64).abs() < 1e-14);
        }
        assert!(max_abs(&(n - number(levels))) < 1e-14);
    }

    #[test]
    fn expm_of_diagonal() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![
            Complex64::new(-30.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(1.5, -0.5),
        ]));
        let e = expm(&d);
        for i in 0..3 {
            assert!((e[(i, i)] - d[(i, i)].exp()).norm() < 1e-13 * e[(i, i)].norm().max(1e-13));
        }
    }

    #[test]
    fn expm_rotation() {
        // exp([[0, -t], [t, 0]]) = rotation by t
        let t = 7.3;
        let mut g = CMatrix::zeros(2, 2);
        g[(0, 1)] = Complex64::new(-t, 0.0);
        g[(1, 0)] = Complex64::new(t, 0.0);
        let e = expm(&g);
        assert!((e[(0, 0)].re - libm::cos(t)).abs() < 1e-12);
        assert!((e[(1, 0)].re - libm::sin(t)).abs() < 1e-12);
    }

    #[test]
    fn real_expm_matches_complex() {
        let g = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let real = expm(&g);
        let cplx = expm(&complexify(&g));
        assert!(max_abs(&(complexify(&real) - cplx)) < 1e-10 * max_abs(&complexify(&real)));
    }

    #[test]
    fn nilpotent_matches_pade() {
        let a = annihilation(12);
        let z = Complex64::new(0.3, -0.8);
        let lhs = expm_nilpotent(&a, z);
        let rhs = expm(&(&a * z));
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn trace_distance_of_orthogonal_projectors() {
        let mut p = CMatrix::zeros(3, 3);
        let mut q = CMatrix::zeros(3, 3);
        p[(0, 0)] = ONE;
        q[(2, 2)] = ONE;
        assert!((trace_distance(&p, &q) - 1.0).abs() < 1e-14);
        assert!(trace_distance(&p, &p) < 1e-14);
    }
}
