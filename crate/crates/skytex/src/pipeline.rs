//! Experiment pipelines built from an [`Experiment`].

use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use skytex_core::diagnostics::{
    fit_edge_width, fit_omega_r_binned, fit_omega_r_fields, fit_omega_r_winding, mean_fidelity, order_parameter,
    winding_continuum, winding_number, DiagnosticsReport, EdgeFit, FitEstimate,
};
use skytex_core::dynamics::{check_rwa, evolve_closed_form, evolve_full_drive, RwaReport};
use skytex_core::measurement::{
    bin_polar_with, fit_phase_offset, reconstruct_bloch, simulate_shots, BinOptions, BinnedField, MeasurementBasis,
    ShotRecord,
};
use skytex_core::noise::{
    echo_decay_closed_form, echo_signal, extract_phase, fit_noise_model, simulate_echo_decay, NoiseFit, NoiseParams,
    T0Mode,
};
use skytex_core::protocols::{
    prepare_domain_wall, prepare_texture, target_texture, AnalyticTarget, Beam, TextureKind, TextureSpec,
};
use skytex_core::{rng, BlochField, Error, IonCrystal, Vec3};

use crate::config::{Experiment, T0ModeConfig};
use crate::error::{CliError, InSection, Result};

/// Stream domain of the per-point measurement seeds of a scan.
pub const DOMAIN_SCAN: u64 = 16;
/// Stream domain of the phase noise added before the noise fit.
pub const DOMAIN_PHASE_NOISE: u64 = 17;

/// Prepares `spec` on the experiment crystal. The domain wall runs the
/// configured repump sweep (or the ideal step when `beam.ideal` is set).
pub fn prepare(exp: &Experiment, spec: &TextureSpec) -> Result<BlochField> {
    if spec.kind == TextureKind::DomainWall {
        let beam = if exp.config.beam.ideal { Beam::Ideal } else { Beam::Gaussian(exp.beam.clone()) };
        return prepare_domain_wall(&exp.crystal, &exp.drive, &beam, exp.repump_mode()).in_section("beam");
    }
    prepare_texture(&exp.crystal, &exp.drive, spec).in_section("texture")
}

/// Noise-free target of `spec`.
pub fn target(exp: &Experiment, spec: &TextureSpec) -> BlochField {
    target_texture(&exp.crystal, spec, exp.drive.psi)
}

/// One shot record per basis.
pub fn measure(exp: &Experiment, field: &BlochField, seed: u64) -> Result<Vec<ShotRecord>> {
    let m = &exp.config.measurement;
    MeasurementBasis::ALL
        .into_iter()
        .map(|b| simulate_shots(field, b, m.n_shots, m.epsilon, seed).in_section("measurement"))
        .collect()
}

/// Seed of point `k` of a scan.
pub fn scan_seed(seed: u64, k: usize) -> u64 {
    rng::stream(seed, DOMAIN_SCAN, k as u64).next_u64()
}

/// A binned reconstruction with its per-bin targets.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// Reconstructed field.
    pub binned: BinnedField,
    /// Target per bin at the fitted phase offset.
    pub targets: Vec<Option<Vec3>>,
    /// Fitted azimuthal offset, if the texture has one.
    pub phase_offset: Option<f64>,
}

/// Bins the records and reconstructs without alignment.
pub fn reconstruct_raw(exp: &Experiment, crystal: &IonCrystal, records: &[ShotRecord]) -> Result<BinnedField> {
    let m = &exp.config.measurement;
    let opts = BinOptions { orientation_seed: m.orientation_jitter.then(|| exp.measurement_seed()) };
    let raw = bin_polar_with(crystal, records, exp.grid, opts).in_section("measurement")?;
    Ok(reconstruct_bloch(&raw, 0.0)?)
}

/// Bins the records, reconstructs, and aligns the result with `spec`.
pub fn reconstruct(
    exp: &Experiment,
    crystal: &IonCrystal,
    records: &[ShotRecord],
    spec: &TextureSpec,
) -> Result<Reconstruction> {
    let m = &exp.config.measurement;
    let opts = BinOptions { orientation_seed: m.orientation_jitter.then(|| exp.measurement_seed()) };
    let raw = bin_polar_with(crystal, records, exp.grid, opts).in_section("measurement")?;
    let target = AnalyticTarget { spec: spec.clone(), psi: exp.drive.psi };
    let phase_offset = if m.fit_phase {
        let first = reconstruct_bloch(&raw, 0.0)?;
        match fit_phase_offset(crystal, &first, &target) {
            Ok(a) => Some(a),
            Err(Error::NoUniquePhase) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let binned = reconstruct_bloch(&raw, phase_offset.unwrap_or(0.0))?;
    let targets = binned.target_vectors(crystal, &target);
    Ok(Reconstruction { binned, targets, phase_offset })
}

/// Diagnostics of a field and of its measured reconstruction.
#[derive(Clone, Debug, Serialize)]
pub struct TextureReport {
    /// Texture.
    pub texture: TextureSpec,
    /// Per-ion field against its target.
    pub field: DiagnosticsReport,
    /// Binned reconstruction against the binned target.
    pub measured: DiagnosticsReport,
    /// Fitted azimuthal offset (rad).
    pub phase_offset: Option<f64>,
}

/// Everything produced by one prepare → measure → reconstruct run.
#[derive(Clone, Debug)]
pub struct TextureRun {
    /// Prepared field.
    pub field: BlochField,
    /// Shot records.
    pub records: Vec<ShotRecord>,
    /// Reconstruction.
    pub reconstruction: Reconstruction,
    /// Diagnostics.
    pub report: TextureReport,
}

/// Prepares, measures and diagnoses `spec`.
pub fn texture_run(exp: &Experiment, spec: &TextureSpec, seed: u64) -> Result<TextureRun> {
    let field = prepare(exp, spec)?;
    let records = measure(exp, &field, seed)?;
    let reconstruction = reconstruct(exp, &exp.crystal, &records, spec)?;
    let report = TextureReport {
        texture: spec.clone(),
        field: DiagnosticsReport::for_field(&exp.crystal, &field, Some(&target(exp, spec)))?,
        measured: DiagnosticsReport::for_binned(&reconstruction.binned, Some(&reconstruction.targets))?,
        phase_offset: reconstruction.phase_offset,
    };
    Ok(TextureRun { field, records, reconstruction, report })
}

/// Drive-time scan of the skyrmion formation.
#[derive(Clone, Debug)]
pub struct FormationScan {
    /// Rows `t_s, q, q_continuum, order_parameter, q_measured, order_parameter_measured`.
    pub rows: Vec<Vec<f64>>,
    /// Summary document.
    pub summary: FormationSummary,
}

/// Fitted rates of a [`FormationScan`].
#[derive(Clone, Debug, Serialize)]
pub struct FormationSummary {
    /// Input `Ω_R` (rad/s).
    pub omega_r_input: f64,
    /// Fit of the per-ion spin trajectories to the closed form.
    pub omega_r_fit: FitEstimate,
    /// Relative error of that fit.
    pub relative_error: f64,
    /// Fit of the per-ion winding number to the continuum curve.
    pub omega_r_winding: FitEstimate,
    /// Fit to the measured binned fields, when it converged.
    pub omega_r_measured: Option<FitEstimate>,
    /// Why the measured fit failed, if it did.
    pub measured_fit_error: Option<String>,
}

/// Column names of [`FormationScan::rows`].
pub const FORMATION_HEADER: [&str; 6] =
    ["t_s", "q", "q_continuum", "order_parameter", "q_measured", "order_parameter_measured"];

/// Evolves the closed form over the drive-time scan, measuring each point.
pub fn formation_scan(exp: &Experiment) -> Result<FormationScan> {
    let mut rows = Vec::new();
    let mut q_series = Vec::new();
    let mut binned_series = Vec::new();
    let mut field_series = Vec::new();
    for (k, t) in exp.scan_times().into_iter().enumerate() {
        let field = evolve_closed_form(&exp.crystal, &exp.drive, t).in_section("drive")?;
        let q = winding_number(&exp.crystal, &field)?.q;
        let psi = order_parameter(&exp.crystal, &field)?.magnitude();
        let records = measure(exp, &field, scan_seed(exp.measurement_seed(), k))?;
        let binned = reconstruct_raw(exp, &exp.crystal, &records)?;
        let measured = DiagnosticsReport::for_binned(&binned, None)?;
        rows.push(vec![
            t,
            q,
            winding_continuum(exp.drive.rabi_rate * t),
            psi,
            measured.q.unwrap_or(f64::NAN),
            measured.order_parameter,
        ]);
        q_series.push((t, q));
        binned_series.push((t, binned));
        field_series.push((t, field));
    }
    let fit = fit_omega_r_fields(&exp.crystal, &field_series, exp.drive.psi)?;
    let winding = fit_omega_r_winding(&q_series)?;
    let (omega_r_measured, measured_fit_error) = match fit_omega_r_binned(&binned_series, exp.drive.psi) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let input = exp.drive.rabi_rate;
    Ok(FormationScan {
        rows,
        summary: FormationSummary {
            omega_r_input: input,
            relative_error: (fit.value - input).abs() / input,
            omega_r_fit: fit,
            omega_r_winding: winding,
            omega_r_measured,
            measured_fit_error,
        },
    })
}

/// Domain-wall run.
#[derive(Clone, Debug)]
pub struct DomainWallRun {
    /// Prepared field.
    pub field: BlochField,
    /// Measurement.
    pub run: TextureRun,
    /// `(r_um, 𝒵, n_ions)` per annulus of the reconstruction.
    pub profile: Vec<(f64, f64, usize)>,
    /// `(r_um, 𝒵)` per ion of the prepared field.
    pub ion_profile: Vec<(f64, f64)>,
    /// Summary document.
    pub summary: DomainWallSummary,
}

/// Scalar results of a [`DomainWallRun`].
#[derive(Clone, Debug, Serialize)]
pub struct DomainWallSummary {
    /// Edge fit of the measured radial profile.
    pub edge: EdgeFit,
    /// Edge fit of the per-ion profile of the prepared field.
    pub edge_per_ion: Option<EdgeFit>,
    /// `|Ψ|` of the prepared field.
    pub order_parameter: f64,
    /// `|Ψ|` of the measured reconstruction.
    pub order_parameter_measured: f64,
    /// Mean fidelity of the prepared field against the ideal wall.
    pub fidelity_vs_ideal: f64,
    /// Ions in the crystal.
    pub n_ions: usize,
}

/// Radial profile of the rotated `𝒵` component: the ion-weighted mean over
/// the reconstructed bins of each annulus.
pub fn radial_profile(binned: &BinnedField) -> Vec<(f64, f64, usize)> {
    let na = binned.grid().n_azimuthal;
    binned
        .bins()
        .chunks(na)
        .filter_map(|ring| {
            let (mut s, mut n) = (0.0, 0usize);
            for b in ring {
                if let Some(u) = b.u {
                    s += -u.x * b.n_ions() as f64;
                    n += b.n_ions();
                }
            }
            (n > 0).then(|| (ring[0].r_center, s / n as f64, n))
        })
        .collect()
}

/// Prepares the domain wall, measures it and fits the edge.
pub fn domain_wall(exp: &Experiment) -> Result<DomainWallRun> {
    let spec = TextureSpec::new(TextureKind::DomainWall);
    let run = texture_run(exp, &spec, exp.measurement_seed())?;
    let field = run.field.clone();
    let profile = radial_profile(&run.reconstruction.binned);
    let points: Vec<(f64, f64)> = profile.iter().map(|p| (p.0, p.1)).collect();
    let edge = fit_edge_width(&points)?;
    let lab = field.lab_vectors();
    let ion_profile: Vec<(f64, f64)> = exp.crystal.ions().iter().zip(&lab).map(|(i, u)| (i.r, -u.x)).collect();
    let summary = DomainWallSummary {
        edge,
        edge_per_ion: fit_edge_width(&ion_profile).ok(),
        order_parameter: order_parameter(&exp.crystal, &field)?.magnitude(),
        order_parameter_measured: run.report.measured.order_parameter,
        fidelity_vs_ideal: mean_fidelity(&field, &target(exp, &spec))?.mean,
        n_ions: exp.crystal.len(),
    };
    Ok(DomainWallRun { field, run, profile, ion_profile, summary })
}

/// One row of the texture family.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyRow {
    /// Texture.
    pub kind: TextureKind,
    /// Diagnostics.
    pub report: TextureReport,
}

/// Runs every texture family member with the configured helicity.
pub fn family(exp: &Experiment) -> Result<Vec<(FamilyRow, TextureRun)>> {
    TextureKind::ALL
        .into_iter()
        .map(|kind| {
            let spec = match kind {
                TextureKind::BlochSkyrmion => TextureSpec::bloch(exp.texture.helicity),
                k => TextureSpec::new(k),
            };
            let run = texture_run(exp, &spec, exp.measurement_seed())?;
            Ok((FamilyRow { kind, report: run.report.clone() }, run))
        })
        .collect()
}

/// Echo experiment output.
#[derive(Clone, Debug)]
pub struct EchoRun {
    /// Rows of [`ECHO_HEADER`].
    pub rows: Vec<Vec<f64>>,
    /// Summary document.
    pub summary: EchoSummary,
}

/// Column names of [`EchoRun::rows`].
pub const ECHO_HEADER: [&str; 8] =
    ["t_s", "sx", "sy", "phi_se", "phi_measured", "retention_fixed", "retention_random", "retention_closed_form"];

/// Scalar results of an [`EchoRun`].
#[derive(Clone, Debug, Serialize)]
pub struct EchoSummary {
    /// Noise used.
    pub noise: NoiseParams,
    /// Echo time of the calibration point (s).
    pub retention_time_s: f64,
    /// Retention the amplitude was calibrated for.
    pub retention_target: f64,
    /// Retention reported by the configured line-phase model at that time.
    pub retention: f64,
    /// Closed-form retention at that time.
    pub retention_closed_form: f64,
    /// Fit of the noisy fixed-`t0` phases.
    pub fit: Option<NoiseFit>,
    /// Why the fit failed, if it did.
    pub fit_error: Option<String>,
}

/// Runs the echo sequence on the configured texture.
pub fn echo(exp: &Experiment) -> Result<EchoRun> {
    let field = prepare(exp, &exp.texture)?;
    let n = &exp.config.noise;
    let times = exp.echo_times();
    let seed = exp.noise_seed();
    let fixed =
        simulate_echo_decay(&exp.crystal, &field, &exp.noise, &times, T0Mode::Fixed, 1, seed).in_section("noise")?;
    let random =
        simulate_echo_decay(&exp.crystal, &field, &exp.noise, &times, T0Mode::RandomUniform, n.n_samples, seed)
            .in_section("noise")?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (k, (&t, (f, r))) in times.iter().zip(fixed.iter().zip(&random)).enumerate() {
        let (sx, sy) = echo_signal(&exp.noise, t);
        let phi = extract_phase(sx, sy)?;
        let z: f64 = StandardNormal.sample(&mut rng::stream(seed, DOMAIN_PHASE_NOISE, k as u64));
        let measured = skytex_core::geometry::wrap_signed(phi + n.phase_noise_rad * z);
        if t > 0.0 {
            series.push((t, measured));
        }
        rows.push(vec![t, sx, sy, phi, measured, f.retention, r.retention, echo_decay_closed_form(&exp.noise, t)]);
    }
    let mode = match n.t0_mode {
        T0ModeConfig::Fixed => T0Mode::Fixed,
        T0ModeConfig::Random => T0Mode::RandomUniform,
    };
    let at = simulate_echo_decay(&exp.crystal, &field, &exp.noise, &[n.retention_time_s], mode, n.n_samples, seed)
        .in_section("noise")?;
    let (fit, fit_error) = match fit_noise_model(&series, exp.noise.gamma) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(EchoRun {
        rows,
        summary: EchoSummary {
            noise: exp.noise,
            retention_time_s: n.retention_time_s,
            retention_target: n.retention_target,
            retention: at[0].retention,
            retention_closed_form: echo_decay_closed_form(&exp.noise, n.retention_time_s),
            fit,
            fit_error,
        },
    })
}

/// Rotating-wave check, optionally against the full drive.
#[derive(Clone, Debug, Serialize)]
pub struct RwaCheck {
    /// Frequency-ratio test.
    pub report: RwaReport,
    /// `1 − F̄` of the full drive against the closed form at `Ω_R t = π`.
    pub full_drive_infidelity: Option<f64>,
}

/// Runs the rotating-wave check.
pub fn rwa_check(exp: &Experiment, full: bool) -> Result<RwaCheck> {
    let report = check_rwa(&exp.drive);
    let full_drive_infidelity = if full {
        if !(exp.drive.rabi_rate > 0.0) {
            return Err(CliError::config("drive.rabi_hz", "full-drive check needs a positive rate"));
        }
        let t = PI / exp.drive.rabi_rate;
        let full = evolve_full_drive(&exp.crystal, &exp.drive, t, exp.config.drive.substeps)?;
        let ideal = evolve_closed_form(&exp.crystal, &exp.drive, t)?;
        Some(1.0 - mean_fidelity(&full, &ideal)?.mean)
    } else {
        None
    };
    Ok(RwaCheck { report, full_drive_infidelity })
}
