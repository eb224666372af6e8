//! Linearized magnon-phonon dynamics under a two-tone drive.
//!
//! Quadrature ordering is `(X_m, Y_m, X_b, Y_b)` with `X = (O + O†)/√2`,
//! `Y = i(O† - O)/√2`, so the vacuum has variance 1/2 per quadrature.

use alloc::format;
use nalgebra::{Matrix2, Matrix4, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhaseSpaceFunction, WignerGrid};
use crate::optimize;
use crate::params::{DriveParams, SystemParams};

/// Variance of a vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;
/// Relative eigenvalue margin for calling a drift matrix stable.
pub const STABILITY_MARGIN: f64 = 1e-12;
/// Relative Lyapunov residual accepted by [`solve_lyapunov`].
pub const LYAPUNOV_TOLERANCE: f64 = 1e-10;
/// Coarse-scan resolution of [`optimize_ratio`].
pub const RATIO_SCAN_POINTS: usize = 64;
/// Golden-section tolerance of [`optimize_ratio`].
pub const RATIO_TOLERANCE: f64 = 1e-4;

/// Drift matrix `A` of `du/dt = A u + n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub Matrix4<f64>);

/// Diagonal diffusion matrix `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix(pub Matrix4<f64>);

/// Symmetric quadrature covariance matrix of `N / 2` modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovMatrix<const N: usize>(pub SMatrix<f64, N, N>);

/// Full magnon + phonon covariance matrix.
pub type SystemCov = CovMatrix<4>;
/// Single-mode covariance matrix.
pub type ModeCov = CovMatrix<2>;

impl<const N: usize> CovMatrix<N> {
    pub fn entries(&self) -> &SMatrix<f64, N, N> {
        &self.0
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.0.amax().max(f64::MIN_POSITIVE);
        (self.0 - self.0.transpose()).amax() <= rel_tol * scale
    }

    /// Smallest eigenvalue of `V + (i/2) Ω`, which is non-negative exactly
    /// when `V` satisfies the uncertainty principle.
    pub fn uncertainty_margin(&self) -> f64 {
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(N, N);
        for i in 0..N {
            for j in 0..N {
                m[(i, j)] = Complex64::new(self.0[(i, j)], 0.0);
            }
        }
        for k in (0..N).step_by(2) {
            m[(k, k + 1)] += Complex64::new(0.0, 0.5);
            m[(k + 1, k)] -= Complex64::new(0.0, 0.5);
        }
        crate::linalg::hermitian_eigenvalues(&m)[0]
    }
}

impl ModeCov {
    pub fn new(v11: f64, v12: f64, v22: f64) -> Self {
        Self(Matrix2::new(v11, v12, v12, v22))
    }

    pub fn vacuum() -> Self {
        Self::new(VACUUM_VARIANCE, 0.0, VACUUM_VARIANCE)
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    /// `det(2V) >= 1 - tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        4.0 * self.det() >= 1.0 - tol && self.0[(0, 0)] > 0.0
    }

    /// Unit vector along the largest-variance quadrature direction, as an
    /// angle in the `(x, y)` plane.
    pub fn major_axis_angle(&self) -> f64 {
        let (a, b, d) = (self.0[(0, 0)], self.0[(0, 1)], self.0[(1, 1)]);
        0.5 * libm::atan2(2.0 * b, a - d)
    }
}

impl SystemCov {
    /// `diag((N_m + 1/2) I, (N_b + 1/2) I)`.
    pub fn thermal(n_m: f64, n_b: f64) -> Self {
        Self(Matrix4::from_diagonal(&SVector::<f64, 4>::new(
            n_m + 0.5,
            n_m + 0.5,
            n_b + 0.5,
            n_b + 0.5,
        )))
    }
}

/// Drift matrix of the rotating-wave fluctuation equations
///
/// ```text
/// d(db)/dt = -kappa_b/2 db - i (G- dm + G+ dm†) + noise
/// d(dm)/dt = -kappa_m/2 dm - i (G- db + G+ db†) + noise
/// ```
///
/// written for the quadrature vector `(X_m, Y_m, X_b, Y_b)`.
pub fn build_drift(drive: &DriveParams, system: &SystemParams) -> DriftMatrix {
    let (gp, gm) = (drive.g_plus, drive.g_minus);
    let (hm, hb) = (-0.5 * system.kappa_m, -0.5 * system.kappa_b);
    let diff = gm - gp;
    let sum = gp + gm;
    #[rustfmt::skip]
    let a = Matrix4::new(
        hm,   0.0,  0.0,  diff,
        0.0,  hm,   -sum, 0.0,
        0.0,  diff, hb,   0.0,
        -sum, 0.0,  0.0,  hb,
    );
    DriftMatrix(a)
}

/// `diag(kappa_m (N_m + 1/2) x2, kappa_b (N_b + 1/2) x2)`.
pub fn build_diffusion(system: &SystemParams) -> DiffusionMatrix {
    let dm = system.kappa_m * (system.magnon_occupation() + 0.5);
    let db = system.kappa_b * (system.phonon_occupation() + 0.5);
    DiffusionMatrix(Matrix4::from_diagonal(&SVector::<f64, 4>::new(dm, dm, db, db)))
}

impl DriftMatrix {
    pub fn max_real_eigenvalue(&self) -> f64 {
        self.0
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn stability_threshold(&self) -> f64 {
        -STABILITY_MARGIN * self.0.amax()
    }

    fn is_diagonal(&self) -> bool {
        (0..4).all(|i| (0..4).all(|j| i == j || self.0[(i, j)] == 0.0))
    }
}

/// All drift eigenvalues have real part below `-1e-12 ||A||_max`.
pub fn stable(a: &DriftMatrix) -> bool {
    a.max_real_eigenvalue() < a.stability_threshold()
}

/// Steady-state covariance matrix from `A V + V A^T = -D`.
///
/// Solved as the 16-dimensional Kronecker system
/// `(I ⊗ A + A ⊗ I) vec(V) = -vec(D)` followed by symmetrisation. A purely
/// diagonal `A` (no drive) takes the closed form `V_ii = -D_ii / (2 A_ii)`.
pub fn solve_lyapunov(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<SystemCov> {
    let max_re = a.max_real_eigenvalue();
    if !(max_re < a.stability_threshold()) {
        return Err(Error::UnstableSystem {
            max_real_eigenvalue: max_re,
            threshold: a.stability_threshold(),
        });
    }

    let v = if a.is_diagonal() && d.0 == Matrix4::from_diagonal(&d.0.diagonal()) {
        Matrix4::from_fn(|i, j| if i == j { -d.0[(i, i)] / (2.0 * a.0[(i, i)]) } else { 0.0 })
    } else {
        let id = Matrix4::<f64>::identity();
        let k: SMatrix<f64, 16, 16> = id.kronecker(&a.0) + a.0.kronecker(&id);
        let rhs = SVector::<f64, 16>::from_iterator(d.0.iter().map(|x| -x));
        let sol = k.lu().solve(&rhs).ok_or(Error::Singular)?;
        let v = Matrix4::from_iterator(sol.iter().copied());
        (v + v.transpose()) * 0.5
    };

    let residual = (a.0 * v + v * a.0.transpose() + d.0).amax();
    let tolerance = LYAPUNOV_TOLERANCE * d.0.amax();
    if !(residual <= tolerance) {
        return Err(Error::SolverFailure {
            residual,
            tolerance,
        });
    }
    Ok(CovMatrix(v))
}

/// Integrates `dV/dt = A V + V A^T + D` from `v0` with classical RK4 until
/// the estimated distance to the fixed point, `|dV/dt|_max / |λ_slow|`, falls
/// below `tol`. The step is a quarter of the inverse spectral radius of the
/// map `V -> A V + V A^T`.
pub fn relax_covariance(a: &DriftMatrix, d: &DiffusionMatrix, v0: &SystemCov, tol: f64) -> Result<SystemCov> {
    if !stable(a) {
        return Err(Error::UnstableSystem {
            max_real_eigenvalue: a.max_real_eigenvalue(),
            threshold: a.stability_threshold(),
        });
    }
    let eig = a.0.complex_eigenvalues();
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let slowest = eig.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
    let h = 0.25 / (2.0 * radius);
    let rate = |v: &Matrix4<f64>| a.0 * v + v * a.0.transpose() + d.0;
    let mut v = v0.0;
    let max_steps = 1usize << 26;
    for _ in 0..max_steps {
        let k1 = rate(&v);
        if k1.amax() / (2.0 * slowest) < tol {
            return Ok(CovMatrix((v + v.transpose()) * 0.5));
        }
        let k2 = rate(&(v + k1 * (0.5 * h)));
        let k3 = rate(&(v + k2 * (0.5 * h)));
        let k4 = rate(&(v + k3 * h));
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Err(Error::SolverFailure {
        residual: rate(&v).amax(),
        tolerance: tol,
    })
}

/// Lower-right 2x2 block (mechanical quadratures).
pub fn mechanical_block(v: &SystemCov) -> ModeCov {
    CovMatrix(v.0.fixed_view::<2, 2>(2, 2).into_owned())
}

/// Upper-left 2x2 block (magnon quadratures).
pub fn magnon_block(v: &SystemCov) -> ModeCov {
    CovMatrix(v.0.fixed_view::<2, 2>(0, 0).into_owned())
}

/// Squeezing below vacuum in dB, `-10 log10(V_min / V_vac)`. Negative when
/// no quadrature is squeezed.
pub fn squeezing_db(vb: &ModeCov) -> Result<f64> {
    let eig = vb.0.symmetric_eigenvalues();
    let v_min = eig[0].min(eig[1]);
    if !(v_min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: v_min,
        });
    }
    Ok(-10.0 * libm::log10(v_min / VACUUM_VARIANCE))
}

/// Zero-mean Gaussian Wigner function of a single-mode covariance matrix.
#[derive(Debug, Clone, Copy)]
pub struct GaussianWigner {
    inv: Matrix2<f64>,
    prefactor: f64,
}

impl GaussianWigner {
    pub fn new(vb: &ModeCov) -> Result<Self> {
        let det = vb.det();
        if !(det > 0.0) || !(vb.0[(0, 0)] > 0.0) {
            return Err(Error::Singular);
        }
        let inv = vb.0.try_inverse().ok_or(Error::Singular)?;
        Ok(Self {
            inv,
            prefactor: 1.0 / (2.0 * core::f64::consts::PI * libm::sqrt(det)),
        })
    }
}

impl PhaseSpaceFunction for GaussianWigner {
    fn value(&self, x: f64, y: f64) -> f64 {
        let q = self.inv[(0, 0)] * x * x + 2.0 * self.inv[(0, 1)] * x * y + self.inv[(1, 1)] * y * y;
        self.prefactor * libm::exp(-0.5 * q)
    }
}

pub fn gaussian_wigner(vb: &ModeCov, grid: GridSpec) -> Result<WignerGrid> {
    WignerGrid::sample(grid, &GaussianWigner::new(vb)?)
}

/// Outcome of the steady-state computation at one drive point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub cov: SystemCov,
    pub mechanics: ModeCov,
    pub squeezing_db: f64,
}

pub fn steady_state(drive: &DriveParams, system: &SystemParams) -> Result<SteadyState> {
    let a = build_drift(drive, system);
    let d = build_diffusion(system);
    let cov = solve_lyapunov(&a, &d)?;
    let mechanics = mechanical_block(&cov);
    let squeezing_db = squeezing_db(&mechanics)?;
    Ok(SteadyState {
        cov,
        mechanics,
        squeezing_db,
    })
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub temperature: f64,
    pub g_minus: f64,
    pub ratio: f64,
    /// `None` when the configuration is unstable.
    pub squeezing_db: Option<f64>,
}

impl SweepPoint {
    pub fn stable(&self) -> bool {
        self.squeezing_db.is_some()
    }
}

/// Evaluates squeezing at `(T, G-, G+/G-)`, flagging unstable points
/// instead of failing.
pub fn sweep_point(system: &SystemParams, g_minus: f64, ratio: f64) -> SweepPoint {
    let drive = DriveParams::from_ratio(g_minus, ratio);
    SweepPoint {
        temperature: system.temperature,
        g_minus,
        ratio,
        squeezing_db: steady_state(&drive, system).ok().map(|s| s.squeezing_db),
    }
}

/// Search window for the drive ratio `G+/G-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for RatioWindow {
    fn default() -> Self {
        Self { lo: 0.0, hi: 0.999 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioOptimum {
    pub ratio: f64,
    pub squeezing_db: f64,
}

/// Maximises the mechanical squeezing over `G+/G-` at fixed `G-`: a
/// 64-point scan followed by golden section to `1e-4` in the ratio.
pub fn optimize_ratio(system: &SystemParams, g_minus: f64, window: RatioWindow) -> Result<RatioOptimum> {
    if !(g_minus > 0.0 && g_minus.is_finite()) {
        return Err(Error::invalid("G_minus", "must be > 0"));
    }
    if !(window.lo >= 0.0 && window.hi > window.lo && window.hi.is_finite()) {
        return Err(Error::invalid("ratio window", format!("invalid [{}, {}]", window.lo, window.hi)));
    }
    let objective = |ratio: f64| {
        sweep_point(system, g_minus, ratio)
            .squeezing_db
            .unwrap_or(f64::NEG_INFINITY)
    };
    optimize::scan_then_refine(objective, window.lo, window.hi, RATIO_SCAN_POINTS, RATIO_TOLERANCE)
        .map(|m| RatioOptimum {
            ratio: m.argmax,
            squeezing_db: m.value,
        })
        .ok_or(Error::NoStablePoint {
            lo: window.lo,
            hi: window.hi,
        })
}
