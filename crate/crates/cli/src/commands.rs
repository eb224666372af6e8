use std::fmt::Write as _;
use std::path::Path;

use omcat_core::analysis::{best_cat_fidelity, negativity_volume, parity, CatAxis, CatParity, CatSearch, FockWigner};
use omcat_core::consts::TWO_PI;
use omcat_core::fock::{cm_to_squeezed_thermal, squeezed_thermal, DensityMatrix};
use omcat_core::gaussian::{
    build_drift, optimize_ratio, steady_state, sweep_point, GaussianWigner, ModeCov, RatioWindow,
};
use omcat_core::grid::{GridSpec, PhaseSpaceFunction, WignerGrid};
use omcat_core::params::{
    pulse_interaction, DriveParams, InteractionAngle, PulseInteraction, SystemParams, WEAK_PULSE_LIMIT_TAN2,
};
use omcat_core::subtraction::{
    condition_on_photons, evolve_mixed, photon_distribution, probability_enhancement, subtract_phonons,
    ConditionedState,
};
use rayon::prelude::*;

use crate::config::{ParityChoice, RunConfig, SweepAxis};
use crate::error::CliError;
use crate::formats::{
    csv_float, read_input, read_state, sha256_hex, to_json, wigner_csv, CmFile, FidelityReport, Input, OutputDir,
    StateFile, WignerSidecar,
};
use crate::manifest::{InputRecord, RunManifest, Stopwatch, FAILED_MARKER, FILE_NAME};

/// Photon counts heralded by `pipeline`.
pub const PIPELINE_KS: [usize; 2] = [1, 2];

/// State shared by the stages of one invocation.
pub struct Context {
    pub cfg: RunConfig,
    pub strict: bool,
    pub dry_run: bool,
    pub out: OutputDir,
    pub manifest: RunManifest,
}

struct Base {
    system: SystemParams,
    drive: DriveParams,
    pulse: PulseInteraction,
}

impl Context {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let watch = Stopwatch::start();
        let result = f(self);
        self.manifest.stages.push(watch.stop(name, result.is_ok()));
        result
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.manifest.warnings.push(msg);
    }

    fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        self.manifest.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn write_manifest(&mut self) -> Result<(), CliError> {
        self.manifest.outputs = self.out.written.clone();
        let bytes = to_json(&self.manifest)?;
        std::fs::write(self.out.path(FILE_NAME), bytes)?;
        Ok(())
    }

    fn base(&mut self) -> Result<Base, CliError> {
        let system = self.cfg.system_params();
        let mut warnings = system.validate()?;
        let drive = self.cfg.drive_params()?;
        warnings.extend(drive.validate(&system)?);
        let pulse = pulse_interaction(&system, &self.cfg.pulse_params()?)?;
        warnings.extend(pulse.theta.validate()?);
        let drift = build_drift(&drive, &system);

        let m = &mut self.manifest;
        m.derive("N_m", system.magnon_occupation());
        m.derive("N_b", system.phonon_occupation());
        m.derive("G_plus_over_2pi", drive.g_plus / TWO_PI);
        m.derive("G_minus_over_2pi", drive.g_minus / TWO_PI);
        m.derive("ratio", drive.ratio());
        m.derive("max_real_eigenvalue", drift.max_real_eigenvalue());
        m.derive("stable", omcat_core::gaussian::stable(&drift));
        m.derive("pulse_drive_amplitude", pulse.drive_amplitude);
        m.derive("G_c_over_2pi", pulse.coupling / TWO_PI);
        m.derive("G_over_2pi", pulse.readout_rate / TWO_PI);
        m.derive("theta_from_power", pulse.theta_from_power.radians());
        m.derive("tan_theta_from_power", pulse.theta_from_power.tan());
        m.derive("theta", pulse.theta.radians());
        m.derive("tan_theta", pulse.theta.tan());

        for w in &warnings {
            self.warn(w.to_string());
        }
        if self.strict && !warnings.is_empty() {
            return Err(CliError::Validity(format!(
                "--strict: {} validity warning(s), first: {}",
                warnings.len(),
                warnings[0]
            )));
        }
        Ok(Base { system, drive, pulse })
    }
}

fn weak_pulse(theta: InteractionAngle) -> Result<InteractionAngle, CliError> {
    if theta.tan2() > WEAK_PULSE_LIMIT_TAN2 {
        return Err(CliError::Validity(format!(
            "weak-pulse treatment invalid: tan^2(theta) = {:.6} exceeds {WEAK_PULSE_LIMIT_TAN2}",
            theta.tan2()
        )));
    }
    Ok(theta)
}

/// Samples `f` on `grid` with the current rayon pool. Each point is
/// independent, so the result does not depend on the thread count.
fn sample<F: PhaseSpaceFunction + Sync>(grid: GridSpec, f: &F) -> Result<WignerGrid, CliError> {
    let nx = grid.nx;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| f.value(grid.x(k % nx), grid.y(k / nx)))
        .collect();
    Ok(WignerGrid::from_values(grid, values)?)
}

fn write_wigner(ctx: &mut Context, stem: &str, w: &WignerGrid, det_vb: Option<f64>) -> Result<(), CliError> {
    ctx.out.write(&format!("{stem}.csv"), wigner_csv(w).as_bytes())?;
    ctx.out.write(&format!("{stem}.json"), &to_json(&WignerSidecar::new(w, det_vb))?)?;
    Ok(())
}

fn squeeze_stage(ctx: &mut Context, base: &Base) -> Result<ModeCov, CliError> {
    let ss = steady_state(&base.drive, &base.system)?;
    let vb = ss.mechanics;
    let params = cm_to_squeezed_thermal(&vb)?;
    let m = &mut ctx.manifest;
    m.derive("squeezing_db", ss.squeezing_db);
    m.derive("mechanics", [vb.0[(0, 0)], vb.0[(0, 1)], vb.0[(1, 1)]]);
    m.derive("r", params.r);
    m.derive("phi", params.phi);
    m.derive("n_bar", params.n_bar);
    ctx.out.write("cm.json", &to_json(&CmFile::new(&ss.cov, &vb))?)?;
    let w = sample(ctx.cfg.grid()?, &GaussianWigner::new(&vb)?)?;
    write_wigner(ctx, "wigner_gaussian", &w, Some(vb.det()))?;
    Ok(vb)
}

fn fock_state(ctx: &mut Context, vb: &ModeCov) -> Result<DensityMatrix, CliError> {
    let params = cm_to_squeezed_thermal(vb)?;
    let rho = squeezed_thermal(&params, &ctx.cfg.truncation())?;
    ctx.manifest.derive("input_leakage", rho.leakage);
    ctx.manifest.derive("n_trunc_b", rho.n_trunc());
    Ok(rho)
}

fn record_conditioned(ctx: &mut Context, state: &ConditionedState) -> Result<(), CliError> {
    let k = state.k;
    let m = &mut ctx.manifest;
    m.derive(&format!("p_{k}"), state.probability);
    m.derive(&format!("parity_{k}"), parity(&state.rho_b));
    m.derive(&format!("leakage_{k}"), state.rho_b.leakage);
    if state.theta.tan() > 0.0 {
        m.derive(&format!("p_{k}_over_tan2k"), probability_enhancement(state)?);
    }
    ctx.out.write(&format!("state_{k}.json"), &to_json(&StateFile::from_conditioned(state))?)?;
    Ok(())
}

fn cat_parity_of(k: usize) -> CatParity {
    if k % 2 == 0 {
        CatParity::Even
    } else {
        CatParity::Odd
    }
}

fn parity_name(p: CatParity) -> &'static str {
    match p {
        CatParity::Even => "even",
        CatParity::Odd => "odd",
    }
}

fn fidelity_report(
    ctx: &mut Context,
    rho: &DensityMatrix,
    k: Option<usize>,
    w: &WignerGrid,
) -> Result<FidelityReport, CliError> {
    let measured = parity(rho);
    let by_sign = if measured < 0.0 { CatParity::Odd } else { CatParity::Even };
    let chosen = match ctx.cfg.fidelity.parity {
        ParityChoice::Auto => k.map(cat_parity_of).unwrap_or(by_sign),
        ParityChoice::Even => CatParity::Even,
        ParityChoice::Odd => CatParity::Odd,
    };
    if chosen.sign() * measured < 0.0 {
        let msg = format!(
            "requested {} cat but the state has parity {measured:.6}",
            parity_name(chosen)
        );
        if ctx.strict {
            return Err(CliError::Usage(format!("--strict: {msg}")));
        }
        ctx.warn(msg);
    }
    let search = CatSearch {
        alpha_max: ctx.cfg.fidelity.alpha_max,
        axis: CatAxis::Principal,
        phase_search: ctx.cfg.fidelity.phase_search,
    };
    let fit = best_cat_fidelity(rho, chosen, &search)?;
    Ok(FidelityReport {
        alpha_re: fit.alpha.re,
        alpha_im: fit.alpha.im,
        alpha_abs: fit.alpha.norm(),
        fidelity: fit.fidelity,
        parity: parity_name(fit.parity).into(),
        measured_parity: measured,
        wigner_origin: FockWigner::new(rho).value(0.0, 0.0),
        min_value: w.min_value(),
        negativity_volume: negativity_volume(w),
        k,
    })
}

pub fn squeeze(ctx: &mut Context) -> Result<(), CliError> {
    let base = ctx.stage("setup", Context::base)?;
    if ctx.dry_run {
        return Ok(());
    }
    ctx.stage("squeeze", |ctx| squeeze_stage(ctx, &base))?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct SweepRow {
    temperature: f64,
    g_minus: f64,
    ratio: Option<f64>,
    squeezing_db: Option<f64>,
}

fn sweep_row(system: &SystemParams, drive: &DriveParams, axis: SweepAxis, v: f64, optimize: bool) -> SweepRow {
    let (system, g_minus) = match axis {
        SweepAxis::Ratio => (*system, drive.g_minus),
        SweepAxis::Temperature => (system.with_temperature(v), drive.g_minus),
        SweepAxis::GMinus => (*system, TWO_PI * v),
    };
    let row = |ratio, squeezing_db| SweepRow {
        temperature: system.temperature,
        g_minus,
        ratio,
        squeezing_db,
    };
    if optimize {
        return match optimize_ratio(&system, g_minus, RatioWindow::default()) {
            Ok(opt) => row(Some(opt.ratio), Some(opt.squeezing_db)),
            Err(_) => row(None, None),
        };
    }
    let ratio = if axis == SweepAxis::Ratio { v } else { drive.ratio() };
    row(Some(ratio), sweep_point(&system, g_minus, ratio).squeezing_db)
}

pub fn sweep(ctx: &mut Context) -> Result<(), CliError> {
    let base = ctx.stage("setup", Context::base)?;
    let spec = ctx.cfg.sweep.clone();
    let values = spec.values()?;
    if spec.optimize && spec.axis == SweepAxis::Ratio {
        return Err(CliError::Usage("sweep: --optimize needs axis T or G_minus".into()));
    }
    match spec.axis {
        SweepAxis::Temperature if values.iter().any(|&t| t < 0.0) => {
            return Err(CliError::Usage("sweep: temperatures must be >= 0".into()))
        }
        SweepAxis::GMinus if values.iter().any(|&g| g <= 0.0) => {
            return Err(CliError::Usage("sweep: G_minus values must be > 0".into()))
        }
        SweepAxis::Ratio if values.iter().any(|&r| r < 0.0) => {
            return Err(CliError::Usage("sweep: ratios must be >= 0".into()))
        }
        _ => {}
    }
    if ctx.dry_run {
        return Ok(());
    }
    ctx.stage("sweep", |ctx| {
        let rows: Vec<SweepRow> = values
            .par_iter()
            .map(|&v| sweep_row(&base.system, &base.drive, spec.axis, v, spec.optimize))
            .collect();
        let mut csv = String::from("T,G_minus_over_2pi,ratio,S_db,stable\n");
        let opt = |v: Option<f64>| v.map(csv_float).unwrap_or_default();
        for r in &rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                csv_float(r.temperature),
                csv_float(r.g_minus / TWO_PI),
                opt(r.ratio),
                opt(r.squeezing_db),
                r.squeezing_db.is_some()
            );
        }
        ctx.out.write("sweep.csv", csv.as_bytes())?;
        let unstable = rows.iter().filter(|r| r.squeezing_db.is_none()).count();
        ctx.manifest.derive("sweep_unstable_points", unstable);
        if let Some(best) = rows
            .iter()
            .filter_map(|r| r.squeezing_db.map(|s| (s, r)))
            .max_by(|a, b| a.0.total_cmp(&b.0))
        {
            ctx.manifest.derive("sweep_best_squeezing_db", best.0);
            ctx.manifest.derive("sweep_best_ratio", best.1.ratio);
        }
        if unstable > 0 {
            ctx.warn(format!("sweep: {unstable} unstable point(s) flagged"));
        }
        Ok(())
    })
}

pub fn subtract(ctx: &mut Context, input: Option<&Path>) -> Result<(), CliError> {
    let base = ctx.stage("setup", Context::base)?;
    let theta = weak_pulse(base.pulse.theta)?;
    let k = ctx.cfg.subtract.k;
    let opts = ctx.cfg.subtraction_options();
    opts.validate()?;
    if k > opts.n_trunc_c {
        return Err(CliError::Usage(format!(
            "subtract: k = {k} is out of range for n_trunc_c = {}",
            opts.n_trunc_c
        )));
    }
    if let Some(path) = input {
        ctx.record_input(path)?;
    }
    if ctx.dry_run {
        return Ok(());
    }
    let rho = ctx.stage("prepare", |ctx| match input {
        None => {
            let vb = steady_state(&base.drive, &base.system)?.mechanics;
            fock_state(ctx, &vb)
        }
        Some(path) => match read_input(path)? {
            Input::Cm(cm) => fock_state(ctx, &cm.mode_cov()?),
            Input::State(file) => file.to_density(),
        },
    })?;
    ctx.stage("subtract", |ctx| {
        let state = subtract_phonons(&rho, theta, k, &opts)?;
        record_conditioned(ctx, &state)
    })
}

pub fn wigner(ctx: &mut Context, input: &Path) -> Result<(), CliError> {
    ctx.stage("setup", Context::base)?;
    let grid = ctx.cfg.grid()?;
    ctx.record_input(input)?;
    let (_, rho) = read_state(input)?;
    if ctx.dry_run {
        return Ok(());
    }
    ctx.stage("wigner", |ctx| {
        let f = FockWigner::new(&rho);
        let w = sample(grid, &f)?;
        ctx.manifest.derive("wigner_origin", f.value(0.0, 0.0));
        ctx.manifest.derive("parity", parity(&rho));
        write_wigner(ctx, "wigner", &w, None)
    })
}

pub fn fidelity(ctx: &mut Context, input: &Path) -> Result<(), CliError> {
    ctx.stage("setup", Context::base)?;
    let grid = ctx.cfg.grid()?;
    ctx.record_input(input)?;
    let (file, rho) = read_state(input)?;
    if ctx.dry_run {
        return Ok(());
    }
    ctx.stage("fidelity", |ctx| {
        let w = sample(grid, &FockWigner::new(&rho))?;
        let report = fidelity_report(ctx, &rho, file.k, &w)?;
        ctx.manifest.derive("fidelity", report.fidelity);
        ctx.manifest.derive("alpha_abs", report.alpha_abs);
        ctx.out.write("report.json", &to_json(&report)?)?;
        Ok(())
    })
}

/// Runs every stage; on failure leaves the partial artifacts plus a
/// `FAILED` marker naming the stage.
pub fn pipeline(ctx: &mut Context) -> Result<(), CliError> {
    let marker = ctx.out.path(FAILED_MARKER);
    if marker.exists() {
        std::fs::remove_file(&marker)?;
    }
    let result = pipeline_stages(ctx);
    if let Err(e) = &result {
        let stage = ctx
            .manifest
            .stages
            .iter()
            .rev()
            .find(|s| !s.ok)
            .map(|s| s.name.as_str())
            .unwrap_or("setup");
        std::fs::write(&marker, format!("stage: {stage}\nexit code: {}\nerror: {e}\n", e.exit_code()))?;
    }
    result
}

fn pipeline_stages(ctx: &mut Context) -> Result<(), CliError> {
    let base = ctx.stage("setup", Context::base)?;
    let theta = weak_pulse(base.pulse.theta)?;
    let opts = ctx.cfg.subtraction_options();
    opts.validate()?;
    let k_max = PIPELINE_KS[PIPELINE_KS.len() - 1];
    if k_max > opts.n_trunc_c {
        return Err(CliError::Usage(format!(
            "pipeline: heralding k = {k_max} needs n_trunc_c >= {k_max}, got {}",
            opts.n_trunc_c
        )));
    }
    let grid = ctx.cfg.grid()?;
    if ctx.dry_run {
        return Ok(());
    }

    let vb = ctx.stage("squeeze", |ctx| squeeze_stage(ctx, &base))?;
    let rho = ctx.stage("prepare", |ctx| {
        let rho = fock_state(ctx, &vb)?;
        ctx.out.write("state_squeezed.json", &to_json(&StateFile::from_density(&rho))?)?;
        Ok(rho)
    })?;
    let states = ctx.stage("subtract", |ctx| {
        let joint = evolve_mixed(&rho, theta, &opts)?;
        ctx.manifest.derive("photon_distribution", photon_distribution(&joint));
        ctx.manifest.derive("joint_leakage", joint.rho.leakage);
        PIPELINE_KS
            .iter()
            .map(|&k| {
                let mut state = condition_on_photons(&joint, k)?;
                state.probability *= opts.efficiency;
                record_conditioned(ctx, &state)?;
                Ok(state)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    let grids = ctx.stage("wigner", |ctx| {
        states
            .iter()
            .map(|s| {
                let w = sample(grid, &FockWigner::new(&s.rho_b))?;
                write_wigner(ctx, &format!("wigner_{}", s.k), &w, None)?;
                Ok(w)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    ctx.stage("fidelity", |ctx| {
        for (s, w) in states.iter().zip(&grids) {
            let report = fidelity_report(ctx, &s.rho_b, Some(s.k), w)?;
            ctx.manifest.derive(&format!("fidelity_{}", s.k), report.fidelity);
            ctx.manifest.derive(&format!("alpha_abs_{}", s.k), report.alpha_abs);
            ctx.manifest.derive(&format!("negativity_volume_{}", s.k), report.negativity_volume);
            ctx.out.write(&format!("report_{}.json", s.k), &to_json(&report)?)?;
        }
        Ok(())
    })
}
