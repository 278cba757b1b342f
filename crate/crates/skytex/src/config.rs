//! Experiment configuration.
//!
//! A config is a JSON document with a `schema` version and one section per
//! stage. Every field has a default, unknown keys are rejected, and fields
//! left `null` are derived from the others when the experiment is built.
//! Frequencies are given in Hz and converted to rad/s here.
//!
//! Layers are applied in order: built-in defaults, the `reproduce` preset,
//! the config file, `--set key=value` overrides, then `--seed`, `--out` and
//! `--format`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use skytex_core::dynamics::{DriveParams, DriveSpec};
use skytex_core::geometry::generate_crystal_jittered;
use skytex_core::measurement::BinGrid;
use skytex_core::noise::{calibrate_amplitude_for_retention, NoiseParams, DEFAULT_GAMMA};
use skytex_core::protocols::{BeamParams, RepumpMode, TextureKind, TextureSpec};
use skytex_core::{IonCrystal, PulseOp};

use crate::error::{CliError, InSection, Result};

/// Current `schema` value.
pub const SCHEMA_VERSION: u32 = 1;

/// Full experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema: u32,
    /// Master seed; section seeds default to it.
    pub seed: u64,
    /// Crystal geometry.
    pub crystal: CrystalConfig,
    /// Optical drive.
    pub drive: DriveConfig,
    /// Texture to prepare.
    pub texture: TextureConfig,
    /// Readout and binning.
    pub measurement: MeasurementConfig,
    /// Repump beam for the domain wall.
    pub beam: BeamConfig,
    /// Field noise and echo sequence.
    pub noise: NoiseConfig,
    /// Output location and artifact kinds.
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            seed: 1,
            crystal: CrystalConfig::default(),
            drive: DriveConfig::default(),
            texture: TextureConfig::default(),
            measurement: MeasurementConfig::default(),
            beam: BeamConfig::default(),
            noise: NoiseConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// `crystal` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrystalConfig {
    /// Lattice spacing (µm).
    pub spacing_um: f64,
    /// Clipping radius (µm).
    pub radius_um: f64,
    /// Uniform positional jitter radius (µm).
    pub jitter_um: f64,
    /// Jitter seed.
    pub seed: Option<u64>,
}

impl Default for CrystalConfig {
    fn default() -> Self {
        CrystalConfig { spacing_um: 24.0, radius_um: 150.0, jitter_um: 0.0, seed: None }
    }
}

/// `drive` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    /// Edge Rabi frequency `Ω_R/2π` (Hz).
    pub rabi_hz: f64,
    /// Lamb–Dicke parameter `η_x`.
    pub eta_x: f64,
    /// Microwave Rabi frequency `Ω/2π` (Hz).
    pub microwave_rabi_hz: f64,
    /// Crystal rotation frequency `ω_r/2π` (Hz).
    pub rotation_hz: f64,
    /// Optical phase `ψ` (rad).
    pub psi_rad: f64,
    /// Wavefront tilt (deg).
    pub tilt_deg: f64,
    /// Beam opening angle (deg).
    pub opening_deg: f64,
    /// Radius referenced by `η_x` (µm); the crystal radius when null.
    pub radius_um: Option<f64>,
    /// Magnus steps of the full-drive integrator.
    pub substeps: usize,
    /// End of the drive-time scan (µs).
    pub scan_stop_us: f64,
    /// Number of scan points including `t = 0`.
    pub scan_points: usize,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig {
            rabi_hz: 1560.0,
            eta_x: 0.66,
            microwave_rabi_hz: 26e3,
            rotation_hz: 78e3,
            psi_rad: FRAC_PI_2,
            tilt_deg: 0.04,
            opening_deg: 18.0,
            radius_um: None,
            substeps: skytex_core::dynamics::FULL_DRIVE_DEFAULT_SUBSTEPS,
            scan_stop_us: 600.0,
            scan_points: 31,
        }
    }
}

/// `texture` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureConfig {
    /// Texture family.
    pub kind: TextureKind,
    /// Edge drive angle `Ω_R t` (rad); the family default when null.
    pub drive_angle_rad: Option<f64>,
    /// Bloch-skyrmion helicity (rad); `π/2` when null.
    pub helicity_rad: Option<f64>,
    /// Post pulses; the family default when null.
    pub post_pulses: Option<Vec<PulseOp>>,
}

impl Default for TextureConfig {
    fn default() -> Self {
        TextureConfig { kind: TextureKind::NeelSkyrmion, drive_angle_rad: None, helicity_rad: None, post_pulses: None }
    }
}

/// How shot records are stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotFormat {
    /// `shot,ion,bit` rows.
    Csv,
    /// JSON header line followed by packed bits.
    Binary,
}

/// `measurement` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Shots per basis.
    pub n_shots: usize,
    /// Symmetric misclassification rate.
    pub epsilon: f64,
    /// Radial bins.
    pub n_radial: usize,
    /// Azimuthal bins.
    pub n_azimuthal: usize,
    /// Shot seed.
    pub seed: Option<u64>,
    /// Rotate the crystal by a random angle every shot before binning.
    pub orientation_jitter: bool,
    /// Align the reconstruction to the target before computing fidelities.
    pub fit_phase: bool,
    /// Shot file encoding.
    pub shot_format: ShotFormat,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            n_shots: 200,
            epsilon: 0.02,
            n_radial: 10,
            n_azimuthal: 22,
            seed: None,
            orientation_jitter: false,
            fit_phase: true,
            shot_format: ShotFormat::Csv,
        }
    }
}

/// How the repump sweep acts on each ion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepumpModeConfig {
    /// Mix each vector with the reset state by its reset probability.
    Expectation,
    /// Reset each ion at random.
    Stochastic,
}

/// `beam` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    /// 1/e² intensity radius (µm).
    pub waist_um: f64,
    /// First beam position (µm).
    pub sweep_start_um: f64,
    /// Last beam position (µm).
    pub sweep_end_um: f64,
    /// Step between positions (µm).
    pub step_um: f64,
    /// Dwell per position in rotation periods.
    pub dwell_periods: f64,
    /// Peak repump rate (1/s); calibrated when null.
    pub peak_repump_rate_per_s: Option<f64>,
    /// Power multiplier per position (empty means all 1).
    pub power: Vec<f64>,
    /// Replace the beam by the ideal step reset at half radius.
    pub ideal: bool,
    /// Reset model.
    pub mode: RepumpModeConfig,
    /// Seed of the stochastic mode.
    pub seed: Option<u64>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            waist_um: 18.0,
            sweep_start_um: 220.0,
            sweep_end_um: 110.0,
            step_um: 10.0,
            dwell_periods: 4.0,
            peak_repump_rate_per_s: None,
            power: Vec::new(),
            ideal: false,
            mode: RepumpModeConfig::Expectation,
            seed: None,
        }
    }
}

/// Line-phase model of the echo simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T0ModeConfig {
    /// The configured `t0_s` every shot.
    Fixed,
    /// Uniform over one period.
    Random,
}

/// `noise` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Field amplitude (nT); calibrated to `retention_target` when null.
    pub b_nt: Option<f64>,
    /// Field frequency (Hz).
    pub f_hz: f64,
    /// Line phase time (s).
    pub t0_s: f64,
    /// Zeeman slope (rad/s per nT).
    pub gamma: f64,
    /// First echo time (s).
    pub t_start_s: f64,
    /// Last echo time (s).
    pub t_stop_s: f64,
    /// Number of echo times.
    pub t_points: usize,
    /// Line-phase model.
    pub t0_mode: T0ModeConfig,
    /// Line-phase samples in random mode.
    pub n_samples: usize,
    /// Retention used to calibrate `b_nt`.
    pub retention_target: f64,
    /// Echo time of the calibration (s).
    pub retention_time_s: f64,
    /// Gaussian phase noise added to the fitted echo phases (rad).
    pub phase_noise_rad: f64,
    /// Noise seed.
    pub seed: Option<u64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            b_nt: None,
            f_hz: 100.0,
            t0_s: 1e-3,
            gamma: DEFAULT_GAMMA,
            t_start_s: 0.0,
            t_stop_s: 0.02,
            t_points: 41,
            t0_mode: T0ModeConfig::Random,
            n_samples: 10_000,
            retention_target: 0.73,
            retention_time_s: 0.012,
            phase_noise_rad: 0.05,
            seed: None,
        }
    }
}

/// Artifact kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Tables.
    Csv,
    /// Documents.
    Json,
    /// Renders.
    Svg,
}

/// `output` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory.
    pub directory: PathBuf,
    /// Artifact kinds to write. The resolved config is always written.
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json, Format::Svg] }
    }
}

/// Command-line layers applied on top of the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    /// `key=value` pairs with dotted keys.
    pub sets: Vec<String>,
    /// Master seed.
    pub seed: Option<u64>,
    /// Output directory.
    pub out: Option<PathBuf>,
    /// Artifact kinds.
    pub formats: Vec<Format>,
}

/// Builds a config from the layers described in the module docs.
pub fn load(path: Option<&Path>, preset: Option<&Value>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut doc = serde_json::to_value(ExperimentConfig::default()).expect("defaults serialize");
    if let Some(p) = preset {
        merge(&mut doc, p.clone());
    }
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file: Value = serde_json::from_str(&text).map_err(|e| {
            CliError::config(
                path.display().to_string(),
                format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()),
            )
        })?;
        if !file.is_object() {
            return Err(CliError::config("", "config must be a JSON object"));
        }
        if file.get("schema").is_none() {
            return Err(CliError::config("schema", "missing schema version"));
        }
        merge(&mut doc, file);
    }
    for s in &overrides.sets {
        let (key, raw) =
            s.split_once('=').ok_or_else(|| CliError::config(s.clone(), "override must look like key=value"))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(&mut doc, key, value)?;
    }
    if let Some(seed) = overrides.seed {
        doc["seed"] = Value::from(seed);
    }
    if let Some(out) = &overrides.out {
        doc["output"]["directory"] = Value::String(out.display().to_string());
    }
    if !overrides.formats.is_empty() {
        doc["output"]["formats"] = serde_json::to_value(&overrides.formats).expect("formats serialize");
    }
    from_value(doc)
}

/// Deserializes a config document, reporting the key path of any error.
pub fn from_value(doc: Value) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let key = e.path().to_string();
        CliError::config(key, e.into_inner().to_string())
    })?;
    if cfg.schema != SCHEMA_VERSION {
        return Err(CliError::config(
            "schema",
            format!("unsupported schema {}; expected {SCHEMA_VERSION}", cfg.schema),
        ));
    }
    Ok(cfg)
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(key, "empty key segment"));
    }
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| CliError::config(parts[..i].join("."), "not a section"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// A validated config together with the objects it describes.
#[derive(Clone, Debug)]
pub struct Experiment {
    /// The config with every derived value filled in.
    pub config: ExperimentConfig,
    /// The crystal.
    pub crystal: IonCrystal,
    /// Drive referenced to the crystal.
    pub drive: DriveParams,
    /// Texture.
    pub texture: TextureSpec,
    /// Readout grid.
    pub grid: BinGrid,
    /// Repump beam.
    pub beam: BeamParams,
    /// Field noise.
    pub noise: NoiseParams,
}

impl Experiment {
    /// Validates `config`, fills its derived values and builds the objects.
    pub fn build(mut config: ExperimentConfig) -> Result<Experiment> {
        let master = config.seed;
        let c = &mut config.crystal;
        let crystal_seed = *c.seed.get_or_insert(master);
        let crystal =
            generate_crystal_jittered(c.spacing_um, c.radius_um, c.jitter_um, crystal_seed).in_section("crystal")?;

        let d = &mut config.drive;
        let radius = *d.radius_um.get_or_insert(crystal.radius());
        if d.scan_points < 2 {
            return Err(CliError::config("drive.scan_points", "need at least 2 points"));
        }
        if !(d.scan_stop_us > 0.0 && d.scan_stop_us.is_finite()) {
            return Err(CliError::config("drive.scan_stop_us", "must be positive"));
        }
        if d.substeps == 0 {
            return Err(CliError::config("drive.substeps", "must be at least 1"));
        }
        let drive = DriveParams::resonant(DriveSpec {
            rabi_rate: TAU * d.rabi_hz,
            eta_x: d.eta_x,
            radius,
            microwave_rabi: TAU * d.microwave_rabi_hz,
            rotation: TAU * d.rotation_hz,
            psi: d.psi_rad,
            tilt_deg: d.tilt_deg,
            opening_deg: d.opening_deg,
        })
        .in_section("drive")?;

        let t = &mut config.texture;
        let helicity = *t.helicity_rad.get_or_insert(FRAC_PI_2);
        let mut texture = match t.kind {
            TextureKind::BlochSkyrmion => TextureSpec::bloch(helicity),
            k => TextureSpec { helicity, ..TextureSpec::new(k) },
        };
        texture.drive_angle = *t.drive_angle_rad.get_or_insert(texture.drive_angle);
        texture.post_pulses = t.post_pulses.get_or_insert_with(|| texture.post_pulses.clone()).clone();
        texture.validate().in_section("texture")?;

        let m = &mut config.measurement;
        m.seed.get_or_insert(master);
        if m.n_shots == 0 {
            return Err(CliError::config("measurement.n_shots", "must be at least 1"));
        }
        if !(0.0..0.5).contains(&m.epsilon) {
            return Err(CliError::config("measurement.epsilon", "must lie in [0, 0.5)"));
        }
        if m.n_radial == 0 || m.n_azimuthal == 0 {
            return Err(CliError::config("measurement.n_radial", "bin counts must be positive"));
        }
        let grid = BinGrid { n_radial: m.n_radial, n_azimuthal: m.n_azimuthal };

        let b = &mut config.beam;
        b.seed.get_or_insert(master);
        if !(config.drive.rotation_hz > 0.0) {
            return Err(CliError::config("drive.rotation_hz", "must be positive for the beam sweep"));
        }
        let rotation_period = 1.0 / config.drive.rotation_hz;
        let mut beam = BeamParams {
            waist: b.waist_um,
            sweep_start: b.sweep_start_um,
            sweep_end: b.sweep_end_um,
            step: b.step_um,
            dwell: b.dwell_periods * rotation_period,
            peak_repump_rate: 0.0,
            rotation_period,
            power: b.power.clone(),
        };
        beam.validate().in_section("beam")?;
        beam.peak_repump_rate = *b.peak_repump_rate_per_s.get_or_insert_with(|| beam.calibrated_rate());
        beam.validate().in_section("beam")?;

        let n = &mut config.noise;
        n.seed.get_or_insert(master);
        if n.t_points == 0 {
            return Err(CliError::config("noise.t_points", "must be at least 1"));
        }
        if !(n.t_start_s >= 0.0 && n.t_stop_s >= n.t_start_s && n.t_stop_s.is_finite()) {
            return Err(CliError::config("noise.t_stop_s", "need 0 <= t_start_s <= t_stop_s"));
        }
        if !(n.phase_noise_rad >= 0.0 && n.phase_noise_rad.is_finite()) {
            return Err(CliError::config("noise.phase_noise_rad", "must be non-negative"));
        }
        let b_nt = match n.b_nt {
            Some(b) => b,
            None => calibrate_amplitude_for_retention(n.f_hz, n.gamma, n.retention_time_s, n.retention_target)
                .in_section("noise")?,
        };
        n.b_nt = Some(b_nt);
        let noise = NoiseParams { b: b_nt, f: n.f_hz, t0: n.t0_s, gamma: n.gamma };
        noise.validate().in_section("noise")?;

        Ok(Experiment { config, crystal, drive, texture, grid, beam, noise })
    }

    /// Seed of the shot sampler.
    pub fn measurement_seed(&self) -> u64 {
        self.config.measurement.seed.unwrap_or(self.config.seed)
    }

    /// Seed of the echo sampler.
    pub fn noise_seed(&self) -> u64 {
        self.config.noise.seed.unwrap_or(self.config.seed)
    }

    /// Reset model of the repump sweep.
    pub fn repump_mode(&self) -> RepumpMode {
        match self.config.beam.mode {
            RepumpModeConfig::Expectation => RepumpMode::Expectation,
            RepumpModeConfig::Stochastic => {
                RepumpMode::Stochastic { seed: self.config.beam.seed.unwrap_or(self.config.seed) }
            }
        }
    }

    /// Drive-time scan `t_k = k·stop/(n−1)` in seconds.
    pub fn scan_times(&self) -> Vec<f64> {
        let d = &self.config.drive;
        let n = d.scan_points;
        (0..n).map(|k| d.scan_stop_us * 1e-6 * k as f64 / (n - 1) as f64).collect()
    }

    /// Echo times in seconds.
    pub fn echo_times(&self) -> Vec<f64> {
        let n = &self.config.noise;
        if n.t_points == 1 {
            return vec![n.t_start_s];
        }
        (0..n.t_points).map(|k| n.t_start_s + (n.t_stop_s - n.t_start_s) * k as f64 / (n.t_points - 1) as f64).collect()
    }

    /// Whether artifacts of kind `f` are written.
    pub fn wants(&self, f: Format) -> bool {
        self.config.output.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str, sets: &[&str]) -> Result<ExperimentConfig> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, text).unwrap();
        let o = Overrides { sets: sets.iter().map(|s| s.to_string()).collect(), ..Default::default() };
        load(Some(&p), None, &o)
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let v = serde_json::to_value(&cfg).unwrap();
        assert_eq!(from_value(v).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_reports_path() {
        let e = load_str(r#"{"schema": 1, "crystal": {"spacng_um": 3}}"#, &[]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("crystal"), "{e}");
        assert!(e.to_string().contains("spacng_um"), "{e}");
    }

    #[test]
    fn wrong_type_reports_path() {
        let e = load_str(r#"{"schema": 1, "measurement": {"n_shots": "many"}}"#, &[]).unwrap_err();
        assert!(e.to_string().contains("measurement.n_shots"), "{e}");
    }

    #[test]
    fn schema_is_required_and_checked() {
        assert!(load_str(r#"{"seed": 3}"#, &[]).unwrap_err().to_string().contains("schema"));
        assert!(load_str(r#"{"schema": 9}"#, &[]).unwrap_err().to_string().contains("schema"));
    }

    #[test]
    fn overrides_apply_in_order() {
        let cfg = load_str(
            r#"{"schema": 1, "drive": {"eta_x": 0.5}}"#,
            &["drive.eta_x=0.33", "texture.kind=meron", "output.formats=[\"csv\"]"],
        )
        .unwrap();
        assert_eq!(cfg.drive.eta_x, 0.33);
        assert_eq!(cfg.texture.kind, TextureKind::Meron);
        assert_eq!(cfg.output.formats, vec![Format::Csv]);
        let e = load_str(r#"{"schema": 1}"#, &["drive.bogus=1"]).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn build_materializes_defaults() {
        let exp = Experiment::build(ExperimentConfig::default()).unwrap();
        let c = &exp.config;
        assert_eq!(exp.crystal.len(), 151);
        assert_eq!(c.drive.radius_um, Some(exp.crystal.radius()));
        assert_eq!(c.texture.drive_angle_rad, Some(std::f64::consts::PI));
        assert!(c.beam.peak_repump_rate_per_s.unwrap() > 0.0);
        assert!(c.noise.b_nt.unwrap() > 0.0);
        assert_eq!(c.measurement.seed, Some(1));
        assert!((exp.drive.rabi_rate - TAU * 1560.0).abs() < 1e-9);
        // Building again from the materialized config changes nothing.
        let again = Experiment::build(c.clone()).unwrap();
        assert_eq!(&again.config, c);
    }

    #[test]
    fn invalid_values_name_the_key() {
        let mut cfg = ExperimentConfig::default();
        cfg.drive.eta_x = -1.0;
        let e = Experiment::build(cfg).unwrap_err();
        assert!(e.to_string().contains("drive.eta_x"), "{e}");
        let mut cfg = ExperimentConfig::default();
        cfg.crystal.spacing_um = 0.0;
        assert!(Experiment::build(cfg).unwrap_err().to_string().contains("crystal.spacing"));
    }
}
