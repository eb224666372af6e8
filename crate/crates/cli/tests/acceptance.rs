//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use omcat::formats::sha256_hex;
use omcat_core::analysis::{best_cat_fidelity, negativity_volume, parity, wigner_fock, CatParity, CatSearch, FockWigner};
use omcat_core::consts::TWO_PI;
use omcat_core::fock::{cm_to_squeezed_thermal, squeezed_thermal, DensityMatrix, SqueezedThermalParams, Truncation};
use omcat_core::gaussian::{
    build_diffusion, build_drift, gaussian_wigner, optimize_ratio, relax_covariance, solve_lyapunov, squeezing_db,
    stable, steady_state, sweep_point, ModeCov, RatioWindow, SystemCov,
};
use omcat_core::grid::{GridSpec, PhaseSpaceFunction};
use omcat_core::linalg::trace_distance;
use omcat_core::params::{DriveParams, InteractionAngle, SystemParams};
use omcat_core::subtraction::{
    beamsplitter_oracle, condition_on_photons, conditioned_analytic, evolve_mixed, interior_max_diff,
    photon_distribution, subtract_phonons, FactoredPropagator, JointDims, SubtractionOptions,
};

const PRINTED_VB: [f64; 3] = [0.045, 0.14, 6.28];
const CM_TOL: f64 = 0.01;
const CM_RUNTIME_S: f64 = 1.0;

const R_TARGET: f64 = 1.25;
const R_TOL: f64 = 0.01;
const PHI_TARGET: f64 = -0.04;
const PHI_TOL: f64 = 0.01;
const NBAR_TARGET: f64 = 0.013;
const NBAR_TOL: f64 = 0.002;

const S_TARGET_DB: f64 = 10.8;
const S_TOL_DB: f64 = 0.2;
const PURE_R: f64 = 1.25;
const PURE_REL_TOL: f64 = 1e-6;

const RATIO_TARGET: f64 = 0.885;
const RATIO_TOL: f64 = 0.02;
const TEMPERATURES_MK: [f64; 4] = [10.0, 20.0, 50.0, 100.0];
const G_MINUS_MHZ: [f64; 3] = [0.05, 0.1, 0.15];

const PROPAGATOR_THETAS: [f64; 3] = [0.05, 0.11, 0.3];
const PROPAGATOR_INTERIOR: usize = 20;
const PROPAGATOR_GUARD: usize = 2;
const PROPAGATOR_TOL: f64 = 1e-8;

const TAN_THETA: f64 = 0.11;
const P1_RANGE: (f64, f64) = (0.002, 0.05);
const P2_RANGE: (f64, f64) = (0.000_02, 0.001);
/// Computed at the default truncation; regression anchors.
const PINNED_P: [f64; 3] = [0.969_785_012_5, 0.028_686_668_8, 0.001_445_540_6];
const PINNED_REL_TOL: f64 = 1e-6;
const PATH_TRACE_DISTANCE: f64 = 1e-8;

const PARITY_TOL: f64 = 1e-6;

const WIGNER_HALF_WIDTH: f64 = 5.0;
const WIGNER_POINTS: usize = 201;
const WIGNER_TOL: f64 = 1e-3;

const ODE_TOL: f64 = 1e-6;
const RANDOM_CONFIGS: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome, String> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "MISS"
    }
}

fn reference_drive() -> DriveParams {
    DriveParams::from_ratio(TWO_PI * 0.1e6, RATIO_TARGET)
}

fn printed_block() -> ModeCov {
    ModeCov::new(PRINTED_VB[0], PRINTED_VB[1], PRINTED_VB[2])
}

fn reference_state() -> Result<DensityMatrix, String> {
    let params = cm_to_squeezed_thermal(&printed_block()).map_err(|e| e.to_string())?;
    squeezed_thermal(&params, &Truncation::default()).map_err(|e| e.to_string())
}

fn theta() -> InteractionAngle {
    InteractionAngle::from_tan(TAN_THETA).expect("valid angle")
}

fn steady_state_cm() -> Result<Outcome, String> {
    let start = Instant::now();
    let ss = steady_state(&reference_drive(), &SystemParams::reference_device()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let v = ss.mechanics.0;
    let got = [v[(0, 0)], v[(0, 1)], v[(1, 1)]];
    let worst = got
        .iter()
        .zip(PRINTED_VB)
        .map(|(g, p)| (g - p).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= CM_TOL && elapsed < CM_RUNTIME_S,
        format!(
            "V_b = ({:.6}, {:.6}, {:.6}) vs ({}, {}, {}), max |diff| = {worst:.4} (tol {CM_TOL}), {elapsed:.3} s",
            got[0], got[1], got[2], PRINTED_VB[0], PRINTED_VB[1], PRINTED_VB[2]
        ),
    )
}

fn parameter_extraction() -> Result<Outcome, String> {
    let p = cm_to_squeezed_thermal(&printed_block()).map_err(|e| e.to_string())?;
    let ok_r = (p.r - R_TARGET).abs() <= R_TOL;
    let ok_phi = (p.phi - PHI_TARGET).abs() <= PHI_TOL;
    let ok_n = (p.n_bar - NBAR_TARGET).abs() <= NBAR_TOL;
    outcome(
        ok_r && ok_phi && ok_n,
        format!(
            "r = {:.6} [{}], phi = {:.6} [{}], n_bar = {:.6} [{}]",
            p.r,
            mark(ok_r),
            p.phi,
            mark(ok_phi),
            p.n_bar,
            mark(ok_n)
        ),
    )
}

fn squeezing_metric() -> Result<Outcome, String> {
    let s = squeezing_db(&printed_block()).map_err(|e| e.to_string())?;
    let pure = SqueezedThermalParams {
        r: PURE_R,
        phi: 0.0,
        n_bar: 0.0,
    };
    let s_pure = squeezing_db(&pure.covariance()).map_err(|e| e.to_string())?;
    let closed = 20.0 / std::f64::consts::LN_10 * PURE_R;
    let rel = ((s_pure - closed) / closed).abs();
    let ok_s = (s - S_TARGET_DB).abs() <= S_TOL_DB;
    let ok_pure = rel <= PURE_REL_TOL;
    outcome(
        ok_s && ok_pure,
        format!(
            "S(printed block) = {s:.4} dB [{}], S(r = {PURE_R}) = {s_pure:.6} dB vs {closed:.6} (rel {rel:.1e}) [{}]",
            mark(ok_s),
            mark(ok_pure)
        ),
    )
}

fn strictly(values: &[f64], decreasing: bool) -> bool {
    values.windows(2).all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] })
}

fn optimization() -> Result<Outcome, String> {
    let system = SystemParams::reference_device();
    let g_minus = TWO_PI * 0.1e6;
    // Dense ratio sweep, then golden-section refinement of the peak.
    let sweep_peak = (0..=490)
        .map(|i| 0.5 + 0.49 * i as f64 / 490.0)
        .filter_map(|r| sweep_point(&system, g_minus, r).squeezing_db.map(|s| (r, s)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or("no stable point in the ratio sweep")?;
    let refined = optimize_ratio(&system, g_minus, RatioWindow::default()).map_err(|e| e.to_string())?;
    let ok_peak = (refined.ratio - RATIO_TARGET).abs() <= RATIO_TOL;

    let mut ratios = Vec::new();
    let mut s_t = Vec::new();
    for t in TEMPERATURES_MK {
        let o = optimize_ratio(&system.with_temperature(t * 1e-3), g_minus, RatioWindow::default())
            .map_err(|e| e.to_string())?;
        ratios.push(o.ratio);
        s_t.push(o.squeezing_db);
    }
    let mut s_g = Vec::new();
    for g in G_MINUS_MHZ {
        let o = optimize_ratio(&system, TWO_PI * g * 1e6, RatioWindow::default()).map_err(|e| e.to_string())?;
        s_g.push(o.squeezing_db);
    }
    let ok_ratio_t = strictly(&ratios, true);
    let ok_s_t = strictly(&s_t, true);
    let ok_s_g = strictly(&s_g, false);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    outcome(
        ok_peak && ok_ratio_t && ok_s_t && ok_s_g,
        format!(
            "peak ratio {:.4} (sweep {:.4}, S* = {:.3} dB) vs {RATIO_TARGET} ± {RATIO_TOL} [{}]; \
             ratio*(T) = [{}] [{}]; S*(T) = [{}] [{}]; S*(G-) = [{}] [{}]",
            refined.ratio,
            sweep_peak.0,
            refined.squeezing_db,
            mark(ok_peak),
            fmt(&ratios),
            mark(ok_ratio_t),
            fmt(&s_t),
            mark(ok_s_t),
            fmt(&s_g),
            mark(ok_s_g)
        ),
    )
}

fn propagator() -> Result<Outcome, String> {
    let n = PROPAGATOR_INTERIOR + PROPAGATOR_GUARD;
    let dims = JointDims::new(n, n);
    let mut worst: f64 = 0.0;
    for t in PROPAGATOR_THETAS {
        let theta = InteractionAngle::new(t).map_err(|e| e.to_string())?;
        let factored = FactoredPropagator::new(theta, dims).to_dense();
        let oracle = beamsplitter_oracle(theta, dims);
        worst = worst.max(interior_max_diff(&factored, &oracle, &dims, PROPAGATOR_INTERIOR));
    }
    outcome(
        worst < PROPAGATOR_TOL,
        format!("max interior |U_factored - U_oracle| = {worst:.2e} over theta {PROPAGATOR_THETAS:?}"),
    )
}

fn probabilities() -> Result<Outcome, String> {
    let rho = reference_state()?;
    let joint = evolve_mixed(&rho, theta(), &SubtractionOptions::default()).map_err(|e| e.to_string())?;
    let p = photon_distribution(&joint);
    let ok_p1 = (P1_RANGE.0..=P1_RANGE.1).contains(&p[1]);
    let ok_p2 = (P2_RANGE.0..=P2_RANGE.1).contains(&p[2]);
    let pinned = PINNED_P
        .iter()
        .zip(&p)
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    let ok_pinned = pinned <= PINNED_REL_TOL;
    let mut distance: f64 = 0.0;
    for k in 0..=2 {
        let projected = condition_on_photons(&joint, k).map_err(|e| e.to_string())?;
        let analytic = conditioned_analytic(&rho, theta(), k).map_err(|e| e.to_string())?;
        distance = distance.max(trace_distance(&projected.rho_b.entries, &analytic.rho_b.entries));
    }
    let ok_paths = distance < PATH_TRACE_DISTANCE;
    outcome(
        ok_p1 && ok_p2 && ok_pinned && ok_paths,
        format!(
            "p1 = {:.4}% [{}], p2 = {:.5}% (window {}%..{}%) [{}], pinned rel dev {pinned:.1e} [{}], \
             projection vs analytic trace distance {distance:.1e} [{}]",
            100.0 * p[1],
            mark(ok_p1),
            100.0 * p[2],
            100.0 * P2_RANGE.0,
            100.0 * P2_RANGE.1,
            mark(ok_p2),
            mark(ok_pinned),
            mark(ok_paths)
        ),
    )
}

fn cat_likeness() -> Result<Outcome, String> {
    let rho = reference_state()?;
    let grid = GridSpec::square(16.0, 241);
    let opts = SubtractionOptions::default();
    let one = subtract_phonons(&rho, theta(), 1, &opts).map_err(|e| e.to_string())?;
    let two = subtract_phonons(&rho, theta(), 2, &opts).map_err(|e| e.to_string())?;
    let par1 = parity(&one.rho_b);
    let par2 = parity(&two.rho_b);
    let w0 = FockWigner::new(&one.rho_b).value(0.0, 0.0);
    let neg1 = negativity_volume(&wigner_fock(&one.rho_b, grid).map_err(|e| e.to_string())?);
    let neg2 = negativity_volume(&wigner_fock(&two.rho_b, grid).map_err(|e| e.to_string())?);
    let search = CatSearch::default();
    let f1 = best_cat_fidelity(&one.rho_b, CatParity::Odd, &search).map_err(|e| e.to_string())?;
    let f2 = best_cat_fidelity(&two.rho_b, CatParity::Even, &search).map_err(|e| e.to_string())?;

    let ok_par1 = (par1 + 1.0).abs() <= PARITY_TOL;
    let ok_w0 = w0 < 0.0;
    let ok_par2 = (par2 - 1.0).abs() <= PARITY_TOL;
    let ok_neg = neg1 > 0.0 && neg2 > 0.0;
    let ok_order = f2.fidelity > f1.fidelity;
    outcome(
        ok_par1 && ok_w0 && ok_par2 && ok_neg && ok_order,
        format!(
            "parity(k=1) = {par1:.6} [{}], W(0,0) = {w0:.5} [{}], parity(k=2) = {par2:.6} [{}], \
             negativity {neg1:.4}/{neg2:.4} [{}], F*(k=1) = {:.4} at |alpha| {:.3}, F*(k=2) = {:.4} at |alpha| {:.3} [{}]",
            mark(ok_par1),
            mark(ok_w0),
            mark(ok_par2),
            mark(ok_neg),
            f1.fidelity,
            f1.alpha.norm(),
            f2.fidelity,
            f2.alpha.norm(),
            mark(ok_order)
        ),
    )
}

fn wigner_cross() -> Result<Outcome, String> {
    let rho = reference_state()?;
    let grid = GridSpec::square(WIGNER_HALF_WIDTH, WIGNER_POINTS);
    let fock = wigner_fock(&rho, grid).map_err(|e| e.to_string())?;
    let gauss = gaussian_wigner(&printed_block(), grid).map_err(|e| e.to_string())?;
    let diff = fock.max_abs_diff(&gauss).map_err(|e| e.to_string())?;
    outcome(
        diff < WIGNER_TOL,
        format!("max |W_fock - W_gauss| = {diff:.2e} on ±{WIGNER_HALF_WIDTH}, {WIGNER_POINTS}^2"),
    )
}

/// xorshift64*, fixed seed.
struct Rng(u64);

impl Rng {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        let u = (self.0.wrapping_mul(0x2545_f491_4f6c_dd1d) >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

fn ode_gap(drive: &DriveParams, system: &SystemParams) -> Result<f64, String> {
    let a = build_drift(drive, system);
    let d = build_diffusion(system);
    let exact = solve_lyapunov(&a, &d).map_err(|e| e.to_string())?;
    let relaxed = relax_covariance(&a, &d, &SystemCov::thermal(0.0, 0.0), 1e-9).map_err(|e| e.to_string())?;
    Ok((exact.0 - relaxed.0).amax())
}

fn lyapunov_oracle() -> Result<Outcome, String> {
    let reference = ode_gap(&reference_drive(), &SystemParams::reference_device())?;
    let mut rng = Rng(0x9e37_79b9_7f4a_7c15);
    let mut worst: f64 = 0.0;
    for _ in 0..RANDOM_CONFIGS {
        let system = SystemParams {
            kappa_m: TWO_PI * rng.uniform(0.5e6, 2e6),
            kappa_b: TWO_PI * rng.uniform(50.0, 500.0),
            temperature: rng.uniform(0.0, 0.1),
            ..SystemParams::reference_device()
        };
        let drive = DriveParams::from_ratio(TWO_PI * rng.uniform(0.05e6, 0.2e6), rng.uniform(0.3, 0.9));
        if !stable(&build_drift(&drive, &system)) {
            return Err(format!("random draw unstable: {drive:?}"));
        }
        worst = worst.max(ode_gap(&drive, &system)?);
    }
    outcome(
        reference < ODE_TOL && worst < ODE_TOL,
        format!("reference gap {reference:.1e}, worst of {RANDOM_CONFIGS} random configs {worst:.1e}"),
    )
}

fn hashes(dir: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == "manifest.json" {
            continue;
        }
        let bytes = std::fs::read(entry.path()).map_err(|e| e.to_string())?;
        out.insert(name, sha256_hex(&bytes));
    }
    Ok(out)
}

fn determinism() -> Result<Outcome, String> {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let first = tmp.path().join("first");
    let replay = tmp.path().join("replay");
    let run = |args: &[&std::ffi::OsStr]| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_omcat"))
            .args(args)
            .env_remove(omcat::OUT_DIR_ENV)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        Ok(())
    };
    run(&["--out".as_ref(), first.as_os_str(), "pipeline".as_ref()])?;
    let manifest = first.join("manifest.json");
    run(&[
        "--config".as_ref(),
        manifest.as_os_str(),
        "--out".as_ref(),
        replay.as_os_str(),
        "pipeline".as_ref(),
    ])?;
    let a = hashes(&first)?;
    let b = hashes(&replay)?;
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    outcome(
        a.len() > 1 && a.keys().eq(b.keys()) && differing.is_empty(),
        format!("{} data files compared, {} differ {differing:?}", a.len(), differing.len()),
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome, String>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("steady-state covariance reproduction", steady_state_cm),
        ("squeezed-thermal parameter extraction", parameter_extraction),
        ("squeezing metric", squeezing_metric),
        ("drive-ratio optimization and trends", optimization),
        ("factored propagator vs matrix exponential", propagator),
        ("heralding probabilities", probabilities),
        ("cat-likeness of the heralded states", cat_likeness),
        ("Fock vs Gaussian Wigner function", wigner_cross),
        ("Lyapunov solver vs ODE relaxation", lyapunov_oracle),
        ("pipeline replay determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} ({secs:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
