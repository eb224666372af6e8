//! On-disk formats. JSON floats use the shortest representation that
//! round-trips; CSV floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use omcat_core::analysis::negativity_volume;
use omcat_core::fock::{DensityMatrix, StateVector};
use omcat_core::gaussian::{ModeCov, SystemCov};
use omcat_core::grid::{WignerGrid, WIGNER_CONVENTION};
use omcat_core::subtraction::ConditionedState;
use omcat_core::{CMatrix, CVector, Complex64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const ROW_MAJOR: &str = "row-major";

/// 17 significant digits.
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Fock-basis state. `re`/`im` hold `(n_trunc+1)^2` entries for a density
/// matrix or `n_trunc+1` amplitudes for a pure state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n_trunc: usize,
    pub layout: String,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub leakage: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl StateFile {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let n = rho.dim();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = rho.entries[(i, j)];
                re.push(z.re);
                im.push(z.im);
            }
        }
        Self {
            n_trunc: rho.n_trunc(),
            layout: ROW_MAJOR.into(),
            re,
            im,
            leakage: rho.leakage,
            k: None,
            probability: None,
            theta: None,
        }
    }

    pub fn from_vector(psi: &StateVector) -> Self {
        Self {
            n_trunc: psi.n_trunc(),
            layout: ROW_MAJOR.into(),
            re: psi.amplitudes.iter().map(|z| z.re).collect(),
            im: psi.amplitudes.iter().map(|z| z.im).collect(),
            leakage: psi.leakage,
            k: None,
            probability: None,
            theta: None,
        }
    }

    pub fn from_conditioned(state: &ConditionedState) -> Self {
        Self {
            k: Some(state.k),
            probability: Some(state.probability),
            theta: Some(state.theta.radians()),
            ..Self::from_density(&state.rho_b)
        }
    }

    /// Rebuilds the density matrix, promoting pure states.
    pub fn to_density(&self) -> Result<DensityMatrix, CliError> {
        if self.layout != ROW_MAJOR {
            return Err(CliError::Usage(format!("state: unsupported layout `{}`", self.layout)));
        }
        if self.re.len() != self.im.len() {
            return Err(CliError::Usage("state: `re` and `im` differ in length".into()));
        }
        if !(self.leakage.is_finite() && self.leakage >= 0.0) {
            return Err(CliError::Usage("state: leakage must be finite and >= 0".into()));
        }
        if self.re.iter().chain(&self.im).any(|v| !v.is_finite()) {
            return Err(CliError::Usage("state: non-finite entry".into()));
        }
        let dim = self.n_trunc + 1;
        let z = |i: usize| Complex64::new(self.re[i], self.im[i]);
        let rho = if self.re.len() == dim * dim {
            let mut rho = DensityMatrix::new(CMatrix::from_fn(dim, dim, |i, j| z(i * dim + j)));
            rho.leakage = self.leakage;
            rho
        } else if self.re.len() == dim {
            let mut psi = StateVector::new(CVector::from_fn(dim, |i, _| z(i)));
            psi.leakage = self.leakage;
            psi.to_density()
        } else {
            return Err(CliError::Usage(format!(
                "state: {} entries fit neither a {dim}x{dim} matrix nor a {dim}-vector",
                self.re.len()
            )));
        };
        rho.validate()
            .map_err(|e| CliError::Usage(format!("state: {e}")))?;
        Ok(rho)
    }
}

/// Steady-state covariance, quadrature ordering `(X_m, Y_m, X_b, Y_b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmFile {
    pub layout: String,
    pub ordering: Vec<String>,
    pub convention: String,
    /// 4x4, present for steady-state output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<Vec<f64>>,
    /// 2x2 mechanical block.
    pub mechanics: Vec<f64>,
}

impl CmFile {
    pub fn new(system: &SystemCov, mechanics: &ModeCov) -> Self {
        Self {
            layout: ROW_MAJOR.into(),
            ordering: ["X_m", "Y_m", "X_b", "Y_b"].map(String::from).to_vec(),
            convention: "vacuum variance 1/2".into(),
            // Column-major storage of the transpose is row-major order.
            system: Some(system.entries().transpose().iter().copied().collect()),
            mechanics: mechanics.entries().transpose().iter().copied().collect(),
        }
    }

    pub fn mode_cov(&self) -> Result<ModeCov, CliError> {
        let m = &self.mechanics;
        if m.len() != 4 {
            return Err(CliError::Usage(format!("cm: mechanics needs 4 entries, got {}", m.len())));
        }
        if (m[1] - m[2]).abs() > 1e-12 * (m[0].abs() + m[3].abs()) {
            return Err(CliError::Usage("cm: mechanics block is not symmetric".into()));
        }
        Ok(ModeCov::new(m[0], m[1], m[3]))
    }
}

/// Either input accepted by `subtract`.
pub enum Input {
    Cm(CmFile),
    State(StateFile),
}

pub fn read_input(path: &Path) -> Result<Input, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let parsed = if value.get("mechanics").is_some() {
        serde_json::from_value(value).map(Input::Cm)
    } else {
        serde_json::from_value(value).map(Input::State)
    };
    parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn read_state(path: &Path) -> Result<(StateFile, DensityMatrix), CliError> {
    match read_input(path)? {
        Input::State(file) => {
            let rho = file.to_density()?;
            Ok((file, rho))
        }
        Input::Cm(_) => Err(CliError::Usage(format!("{}: expected a state file, found a covariance matrix", path.display()))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerSidecar {
    /// `[x_min, x_max, y_min, y_max]`.
    pub window: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub convention: String,
    pub integral: f64,
    pub min_value: f64,
    pub negativity_volume: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det_vb: Option<f64>,
}

impl WignerSidecar {
    pub fn new(w: &WignerGrid, det_vb: Option<f64>) -> Self {
        let s = w.spec();
        Self {
            window: [s.x_min, s.x_max, s.y_min, s.y_max],
            nx: s.nx,
            ny: s.ny,
            convention: WIGNER_CONVENTION.into(),
            integral: w.integral(),
            min_value: w.min_value(),
            negativity_volume: negativity_volume(w),
            det_vb,
        }
    }
}

/// `x,y,W` rows in storage order (x fastest).
pub fn wigner_csv(w: &WignerGrid) -> String {
    let mut out = String::with_capacity(w.values().len() * 72);
    out.push_str("x,y,W\n");
    for (x, y, v) in w.points() {
        let _ = writeln!(out, "{},{},{}", csv_float(x), csv_float(y), csv_float(v));
    }
    out
}

/// Best-cat report written by `fidelity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub alpha_abs: f64,
    pub fidelity: f64,
    pub parity: String,
    pub measured_parity: f64,
    pub wigner_origin: f64,
    pub min_value: f64,
    pub negativity_volume: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Record of one written file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes files into the output directory and keeps their hashes.
#[derive(Debug)]
pub struct OutputDir {
    pub root: PathBuf,
    pub written: Vec<OutputRecord>,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&root)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        std::fs::write(&path, bytes)?;
        self.written.retain(|r| r.file != name);
        self.written.push(OutputRecord {
            file: name.to_owned(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(path)
    }
}
