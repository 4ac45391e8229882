//! Experiment configuration: a TOML document with sections `grid`, `probe`,
//! `hamiltonian`, `light`, `run`, `output`, plus optional per-command
//! sections `linearity` and `omega_g`. All quantities are in natural units
//! (`ħ = 1`); see [`crate::units`] for converting laboratory values.
//!
//! Loading re-validates every library invariant (grid shape, wavepacket
//! resolution and boundary clearance, light normalization, the step-size
//! resolution guard) so a bad file fails before any propagation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use snlab_core::dynamics::{HamiltonianSpec, MeanUpdate, StepControl};
use snlab_core::hilbert::Grid;
use snlab_core::meanfield::{omega_g, MassDensityProfile};
use snlab_core::optomeasure::LightSpec;
use snlab_core::statistics::ProbeSpec;

use crate::{HarnessError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default = "default_mass")]
    pub mass: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
}

fn default_mass() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    pub omega0: f64,
    /// Self-attraction frequency; mutually exclusive with
    /// `density_profile_path`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_g: Option<f64>,
    /// Two-column `radius density` file; when given, the frequency is
    /// computed from the profile and echoed into the run metadata.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_profile_path: Option<String>,
    /// Gravitational coupling used with the profile.
    #[serde(default = "default_gravity")]
    pub gravity_g: f64,
}

fn default_gravity() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Real basis amplitudes; uniform `1/√dim` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_dim() -> usize {
    2
}

fn default_lambda() -> f64 {
    1.0
}

impl Default for LightSection {
    fn default() -> Self {
        Self {
            dim: default_dim(),
            amplitudes: None,
            lambda: default_lambda(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dt: f64,
    #[serde(default = "default_mean_update")]
    pub mean_update: String,
    #[serde(default = "default_fp_tol")]
    pub fixed_point_tol: f64,
    #[serde(default = "default_fp_max_iter")]
    pub fixed_point_max_iter: usize,
    pub t_final: f64,
    pub snapshot_interval: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_mean_update() -> String {
    "midpoint".into()
}

fn default_fp_tol() -> f64 {
    1e-12
}

fn default_fp_max_iter() -> usize {
    50
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearitySection {
    /// Randomized input pairs checked against the linear propagator.
    #[serde(default = "default_trials")]
    pub random_trials: usize,
    /// The pinned nonlinear case mixes Gaussians at ±center.
    #[serde(default = "default_center")]
    pub center: f64,
    #[serde(default = "default_w1")]
    pub w1: f64,
    /// Map duration; half a trap period when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

fn default_trials() -> usize {
    100
}

fn default_center() -> f64 {
    1.0
}

fn default_w1() -> f64 {
    0.5
}

impl Default for LinearitySection {
    fn default() -> Self {
        Self {
            random_trials: default_trials(),
            center: default_center(),
            w1: default_w1(),
            duration: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaGSection {
    /// Displacement range; 0.05 × support radius when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<f64>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// When given, the run checks ω_G²/(G·ϱ_peak) against this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_factor: Option<f64>,
}

fn default_n_samples() -> usize {
    21
}

impl Default for OmegaGSection {
    fn default() -> Self {
        Self {
            d_max: None,
            n_samples: default_n_samples(),
            expected_factor: None,
        }
    }
}

/// Direct image of the config file; serialized back out as the canonical
/// echo with defaults filled in.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub grid: GridSection,
    pub probe: ProbeSection,
    pub hamiltonian: HamiltonianSection,
    #[serde(default)]
    pub light: LightSection,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub linearity: LinearitySection,
    #[serde(default)]
    pub omega_g: OmegaGSection,
}

/// Fully validated configuration with library types resolved.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub grid: Grid,
    pub probe: ProbeSpec,
    pub h: HamiltonianSpec,
    pub light: LightSpec,
    pub control: StepControl,
    pub t_final: f64,
    pub snapshot_interval: f64,
    pub seed: u64,
    /// Set when the self-attraction frequency came from a density profile.
    pub omega_g_from_profile: Option<f64>,
    pub profile: Option<MassDensityProfile>,
    pub gravity_g: f64,
    pub out_dir: PathBuf,
    pub formats: Vec<String>,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(HarnessError::Config(msg.into()))
}

/// Parses and validates a config file. Relative profile paths resolve
/// against the config file's directory; `out_override` replaces the
/// configured output directory.
pub fn load_config(path: &Path, out_override: Option<&Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    resolve(raw, path.parent().unwrap_or(Path::new(".")), out_override)
}

/// Validates an in-memory config (used by tests and to re-check echoes).
pub fn resolve(
    raw: RawConfig,
    base_dir: &Path,
    out_override: Option<&Path>,
) -> Result<ExperimentConfig> {
    let grid = Grid::new(raw.grid.n_points, raw.grid.x_min, raw.grid.x_max)
        .map_err(|e| HarnessError::Config(format!("grid: {e}")))?;

    if !(raw.probe.sigma > 0.0) {
        return config_err(format!(
            "probe.sigma: must be positive, got {}",
            raw.probe.sigma
        ));
    }

    // Exclusivity rule: exactly one source for the self-attraction strength.
    let (omega_g_value, omega_g_from_profile, profile) = match (
        raw.hamiltonian.omega_g,
        raw.hamiltonian.density_profile_path.as_deref(),
    ) {
        (Some(_), Some(_)) => {
            return config_err(
                "hamiltonian: omega_g and density_profile_path are mutually exclusive",
            );
        }
        (Some(w), None) => (w, None, None),
        (None, Some(rel)) => {
            let full = base_dir.join(rel);
            let profile = MassDensityProfile::from_file(&full).map_err(|e| {
                HarnessError::Config(format!("hamiltonian.density_profile_path: {e}"))
            })?;
            let w = omega_g(&profile, raw.hamiltonian.gravity_g).map_err(|e| {
                HarnessError::Config(format!("hamiltonian.density_profile_path: {e}"))
            })?;
            (w, Some(w), Some(profile))
        }
        (None, None) => {
            return config_err("hamiltonian: one of omega_g or density_profile_path is required");
        }
    };

    let h = HamiltonianSpec::new(raw.probe.mass, raw.hamiltonian.omega0, omega_g_value)
        .map_err(|e| HarnessError::Config(format!("hamiltonian: {e}")))?;

    let mean_update = match raw.run.mean_update.as_str() {
        "frozen" => MeanUpdate::Frozen,
        "midpoint" => MeanUpdate::Midpoint,
        "fixed_point" => MeanUpdate::FixedPoint {
            tol: raw.run.fixed_point_tol,
            max_iter: raw.run.fixed_point_max_iter,
        },
        other => {
            return config_err(format!(
                "run.mean_update: expected frozen | midpoint | fixed_point, got '{other}'"
            ));
        }
    };
    let control = StepControl {
        dt: raw.run.dt,
        mean_update,
    };
    control
        .validate(&h)
        .map_err(|e| HarnessError::Config(format!("run.dt: {e}")))?;
    if !(raw.run.t_final >= 0.0) {
        return config_err(format!(
            "run.t_final: must be non-negative, got {}",
            raw.run.t_final
        ));
    }
    if !(raw.run.snapshot_interval > 0.0) {
        return config_err(format!(
            "run.snapshot_interval: must be positive, got {}",
            raw.run.snapshot_interval
        ));
    }

    let light = match &raw.light.amplitudes {
        Some(amps) => {
            if amps.len() != raw.light.dim {
                return config_err(format!(
                    "light.amplitudes: expected {} entries to match light.dim, got {}",
                    raw.light.dim,
                    amps.len()
                ));
            }
            let complex = amps
                .iter()
                .map(|&a| num_complex::Complex64::new(a, 0.0))
                .collect();
            LightSpec::new(complex, raw.light.lambda)
                .map_err(|e| HarnessError::Config(format!("light.amplitudes: {e}")))?
        }
        None => LightSpec::uniform(raw.light.dim, raw.light.lambda)
            .map_err(|e| HarnessError::Config(format!("light.dim: {e}")))?,
    };

    let probe = ProbeSpec {
        mass: raw.probe.mass,
        x0: raw.probe.x0,
        p0: raw.probe.p0,
        sigma: raw.probe.sigma,
    };
    // Probe feasibility on this grid (resolution and boundary clearance).
    snlab_core::hilbert::GridState::make_gaussian(
        grid,
        probe.x0,
        probe.p0,
        probe.sigma,
        probe.mass,
    )
    .map_err(|e| HarnessError::Config(format!("probe: {e}")))?;

    if raw.linearity.random_trials == 0 {
        return config_err("linearity.random_trials: must be at least 1");
    }
    if !(raw.linearity.w1 >= 0.0 && raw.linearity.w1 <= 1.0) {
        return config_err(format!(
            "linearity.w1: must lie in [0, 1], got {}",
            raw.linearity.w1
        ));
    }

    // Profile paths resolve against the config file (they ship together);
    // the output directory resolves against the working directory.
    let out_dir = match out_override {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(raw.output.directory.clone().unwrap_or_else(|| "out".into())),
    };
    let formats = raw.output.formats.clone();
    for f in &formats {
        if f != "csv" && f != "json" {
            return config_err(format!("output.formats: unknown format '{f}'"));
        }
    }

    Ok(ExperimentConfig {
        grid,
        probe,
        h,
        light,
        control,
        t_final: raw.run.t_final,
        snapshot_interval: raw.run.snapshot_interval,
        seed: raw.run.seed,
        omega_g_from_profile,
        profile,
        gravity_g: raw.hamiltonian.gravity_g,
        out_dir,
        formats,
        raw,
    })
}

/// Canonical TOML echo with all defaults filled in.
pub fn config_echo(raw: &RawConfig) -> String {
    toml::to_string_pretty(raw).expect("config serializes")
}
