//! Named texture preparations, analytic targets and the repump-beam sweep.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::dynamics::{closed_form_at_angle, closed_form_vector, DriveParams};
use crate::error::{check_len, invalid, Result};
use crate::geometry::IonCrystal;
use crate::measurement::TargetTexture;
use crate::rng;
use crate::spin::{apply_pulses, rotate_global, Basis, BlochField, PulseOp};
use crate::vector::Vec3;

/// Texture families reachable from the radial drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TextureKind {
    /// Radially winding skyrmion.
    NeelSkyrmion,
    /// Tangentially winding skyrmion.
    BlochSkyrmion,
    /// Skyrmion with reversed vorticity and core.
    AntiSkyrmion,
    /// In-plane skyrmion.
    Bimeron,
    /// Half-wrapped texture.
    Meron,
    /// Doubly-wrapped, topologically trivial texture.
    Skyrmionium,
    /// Two opposite domains separated at half radius.
    DomainWall,
}

impl TextureKind {
    /// All kinds.
    pub const ALL: [TextureKind; 7] = [
        TextureKind::NeelSkyrmion,
        TextureKind::BlochSkyrmion,
        TextureKind::AntiSkyrmion,
        TextureKind::Bimeron,
        TextureKind::Meron,
        TextureKind::Skyrmionium,
        TextureKind::DomainWall,
    ];

    /// Snake-case name.
    pub fn name(self) -> &'static str {
        match self {
            TextureKind::NeelSkyrmion => "neel_skyrmion",
            TextureKind::BlochSkyrmion => "bloch_skyrmion",
            TextureKind::AntiSkyrmion => "anti_skyrmion",
            TextureKind::Bimeron => "bimeron",
            TextureKind::Meron => "meron",
            TextureKind::Skyrmionium => "skyrmionium",
            TextureKind::DomainWall => "domain_wall",
        }
    }

    /// Default edge drive angle `Ω_R t`.
    pub fn default_drive_angle(self) -> f64 {
        match self {
            TextureKind::Meron => FRAC_PI_2,
            TextureKind::Skyrmionium => TAU,
            TextureKind::DomainWall => PI / 10.0,
            _ => PI,
        }
    }
}

impl core::fmt::Display for TextureKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for TextureKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        TextureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid("kind", alloc::format!("unknown texture `{s}`")))
    }
}

/// Drive angle and pulse sequence of one texture.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TextureSpec {
    /// Family.
    pub kind: TextureKind,
    /// Edge drive angle `Ω_R t` (rad).
    pub drive_angle: f64,
    /// Global pulses applied after the drive. For the domain wall these
    /// bracket the reset: the first is applied before it, the inverse of
    /// the first after it.
    pub post_pulses: Vec<PulseOp>,
    /// Helicity of the Bloch skyrmion (rad).
    pub helicity: f64,
}

impl TextureSpec {
    /// Defaults for `kind`; helicity `π/2`.
    pub fn new(kind: TextureKind) -> Self {
        let helicity = FRAC_PI_2;
        TextureSpec {
            kind,
            drive_angle: kind.default_drive_angle(),
            post_pulses: default_pulses(kind, helicity),
            helicity,
        }
    }

    /// A Bloch skyrmion of helicity `gamma`. Helicity is measured for the
    /// texture driven at `ψ = π/2`, where the unpulsed skyrmion has `γ = π`.
    pub fn bloch(gamma: f64) -> Self {
        TextureSpec {
            kind: TextureKind::BlochSkyrmion,
            drive_angle: PI,
            post_pulses: default_pulses(TextureKind::BlochSkyrmion, gamma),
            helicity: gamma,
        }
    }

    /// Checks the drive angle and helicity.
    pub fn validate(&self) -> Result<()> {
        if !(self.drive_angle >= 0.0 && self.drive_angle.is_finite()) {
            return Err(invalid("drive_angle", "must be finite and non-negative"));
        }
        if !self.helicity.is_finite() {
            return Err(invalid("helicity", "must be finite"));
        }
        if self.kind == TextureKind::DomainWall && self.post_pulses.len() != 1 {
            return Err(invalid("post_pulses", "domain wall takes exactly one bracketing pulse"));
        }
        Ok(())
    }
}

fn default_pulses(kind: TextureKind, helicity: f64) -> Vec<PulseOp> {
    match kind {
        TextureKind::BlochSkyrmion => alloc::vec![PulseOp::x(PI - helicity)],
        TextureKind::AntiSkyrmion => alloc::vec![PulseOp::y(PI)],
        TextureKind::Bimeron | TextureKind::DomainWall => alloc::vec![PulseOp::y(FRAC_PI_2)],
        _ => Vec::new(),
    }
}

/// Lab-frame orientation of a reset ion after the domain-wall sequence.
pub fn reset_orientation(spec: &TextureSpec) -> Vec3 {
    spec.post_pulses.first().map_or(Vec3::Z, |p| p.inverse().apply(Vec3::Z))
}

/// Normalized radius from which the ideal domain wall is reset.
pub const DOMAIN_WALL_THRESHOLD: f64 = 0.5;

/// Prepares `spec` on `crystal`: closed-form drive from +X to the edge
/// angle, then the post pulses. The domain wall uses the ideal beam
/// (certain reset for `r̃ ≥ 1/2`, none inside).
pub fn prepare_texture(crystal: &IonCrystal, params: &DriveParams, spec: &TextureSpec) -> Result<BlochField> {
    spec.validate()?;
    params.validate()?;
    if spec.kind == TextureKind::DomainWall {
        return Ok(target_texture(crystal, spec, params.psi));
    }
    Ok(apply_pulses(&closed_form_at_angle(crystal, params.psi, spec.drive_angle), &spec.post_pulses))
}

/// The noise-free target field of `spec` at optical phase `psi` (lab basis).
pub fn target_texture(crystal: &IonCrystal, spec: &TextureSpec, psi: f64) -> BlochField {
    let t = AnalyticTarget { spec: spec.clone(), psi };
    let v =
        crystal.ions().iter().enumerate().map(|(j, ion)| t.evaluate(crystal.normalized_radius(j), ion.phi)).collect();
    BlochField::from_unchecked(v, Basis::Lab)
}

/// `spec` at phase `psi` as a function on the unit disk.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticTarget {
    /// Texture.
    pub spec: TextureSpec,
    /// Optical phase `ψ`.
    pub psi: f64,
}

impl TargetTexture for AnalyticTarget {
    fn evaluate(&self, r_norm: f64, phi: f64) -> Vec3 {
        if self.spec.kind == TextureKind::DomainWall && r_norm >= DOMAIN_WALL_THRESHOLD {
            return reset_orientation(&self.spec);
        }
        let mut v = closed_form_vector(r_norm, phi, self.psi, self.spec.drive_angle);
        if self.spec.kind == TextureKind::DomainWall {
            return v;
        }
        for p in &self.spec.post_pulses {
            v = p.apply(v);
        }
        v
    }
}

/// Focused repump beam swept radially inward while the crystal rotates.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeamParams {
    /// 1/e² intensity radius (µm).
    pub waist: f64,
    /// First beam position (µm).
    pub sweep_start: f64,
    /// Last beam position (µm).
    pub sweep_end: f64,
    /// Radial step between positions (µm).
    pub step: f64,
    /// Time at each position (s).
    pub dwell: f64,
    /// Repump rate at beam centre (1/s).
    pub peak_repump_rate: f64,
    /// Crystal rotation period (s).
    pub rotation_period: f64,
    /// Optional power multiplier per position (empty means all 1).
    pub power: Vec<f64>,
}

/// Target reset probability of the rate calibration.
pub const SATURATION: f64 = 0.999;

impl BeamParams {
    /// 18 µm waist swept 220 → 110 µm in 10 µm steps, dwelling four rotation
    /// periods of a 78 kHz crystal, with the calibrated peak rate.
    pub fn experiment() -> Self {
        let rotation_period = 1.0 / 78e3;
        let mut b = BeamParams {
            waist: 18.0,
            sweep_start: 220.0,
            sweep_end: 110.0,
            step: 10.0,
            dwell: 4.0 * rotation_period,
            peak_repump_rate: 0.0,
            rotation_period,
            power: Vec::new(),
        };
        b.peak_repump_rate = b.calibrated_rate();
        b
    }

    /// Peak rate at which an ion orbiting through the beam centre at the
    /// outermost position is reset with probability [`SATURATION`] within
    /// one dwell. Inner positions, with shorter orbits, saturate harder.
    pub fn calibrated_rate(&self) -> f64 {
        let unit = BeamParams { peak_repump_rate: 1.0, power: Vec::new(), ..self.clone() };
        -(1.0 - SATURATION).ln() / unit.exposure(self.sweep_start, self.sweep_start)
    }

    /// Checks the invariants.
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.waist) {
            return Err(invalid("waist", "must be positive"));
        }
        if !(self.sweep_start > self.sweep_end && self.sweep_end >= 0.0 && self.sweep_start.is_finite()) {
            return Err(invalid("sweep", "need sweep_start > sweep_end >= 0"));
        }
        if !ok(self.step) {
            return Err(invalid("step", "must be positive"));
        }
        if !ok(self.dwell) {
            return Err(invalid("dwell", "must be positive"));
        }
        if !ok(self.rotation_period) {
            return Err(invalid("rotation_period", "must be positive"));
        }
        if !(self.peak_repump_rate >= 0.0 && self.peak_repump_rate.is_finite()) {
            return Err(invalid("peak_repump_rate", "must be finite and non-negative"));
        }
        let n = self.positions().len();
        if !self.power.is_empty() && self.power.len() != n {
            return Err(invalid("power", alloc::format!("expected {n} multipliers")));
        }
        if self.power.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(invalid("power", "multipliers must be finite and non-negative"));
        }
        Ok(())
    }

    /// Beam positions from `sweep_start` down to `sweep_end`.
    pub fn positions(&self) -> Vec<f64> {
        let n = ((self.sweep_start - self.sweep_end) / self.step + 1e-9).floor() as usize;
        let mut p: Vec<f64> = (0..=n).map(|k| self.sweep_start - k as f64 * self.step).collect();
        if p.last().map_or(true, |&l| l - self.sweep_end > 1e-9 * self.step) {
            p.push(self.sweep_end);
        }
        p
    }

    /// The sweep as `(position, dwell, power)` rows.
    pub fn schedule(&self) -> Vec<SweepStep> {
        self.positions()
            .into_iter()
            .enumerate()
            .map(|(k, position)| SweepStep {
                position,
                dwell: self.dwell,
                power: self.power.get(k).copied().unwrap_or(1.0),
            })
            .collect()
    }

    /// Exposure `rate · ∫ exp(−2d²/w²) dt` over one dwell of an ion orbiting
    /// at radius `r` with the beam at radial position `x` (power 1).
    ///
    /// Whole rotation periods use the periodic trapezoid rule, which is
    /// spectrally accurate; a remaining fraction uses Simpson's rule. The
    /// ion's starting azimuth only matters for that fraction and is taken
    /// as 0.
    pub fn exposure(&self, r: f64, x: f64) -> f64 {
        let k = 4.0 / (self.waist * self.waist);
        let g = |theta: f64| (-0.5 * k * (r * r + x * x - 2.0 * r * x * theta.cos())).exp();
        let far = (r - x).abs();
        if 0.5 * k * far * far > 745.0 {
            return 0.0;
        }
        let periods = self.dwell / self.rotation_period;
        let whole = (periods + 1e-12).floor();
        let n = 4096;
        let mean: f64 = (0..n).map(|i| g(TAU * i as f64 / n as f64)).sum::<f64>() / n as f64;
        let mut integral = whole * self.rotation_period * mean;
        let rest = (periods - whole).max(0.0);
        if rest > 1e-12 {
            let span = TAU * rest;
            let m = 2 * n;
            let h = span / m as f64;
            let mut s = g(0.0) + g(span);
            for i in 1..m {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            integral += s * h / 3.0 * self.rotation_period / TAU;
        }
        self.peak_repump_rate * integral
    }
}

/// One row of the sweep schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepStep {
    /// Beam position (µm).
    pub position: f64,
    /// Dwell (s).
    pub dwell: f64,
    /// Power multiplier.
    pub power: f64,
}

/// Reset probability `1 − exp(−ΣE)` of every ion over the whole sweep.
pub fn repump_probabilities(crystal: &IonCrystal, beam: &BeamParams) -> Result<Vec<f64>> {
    beam.validate()?;
    let steps = beam.schedule();
    Ok(crystal
        .ions()
        .iter()
        .map(|ion| {
            let e: f64 = steps.iter().map(|s| s.power * beam.exposure(ion.r, s.position)).sum();
            -(-e).exp_m1()
        })
        .collect())
}

/// How reset probabilities act on a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepumpMode {
    /// `u ← p·(0,0,1) + (1 − p)·u`.
    Expectation,
    /// Each ion is reset with probability `p`, drawing from its own stream.
    Stochastic {
        /// Master seed.
        seed: u64,
    },
}

/// Resets ion `j` of a lab-basis field to `(0,0,1)` with probability `p[j]`.
pub fn apply_reset(field: &BlochField, p: &[f64], mode: RepumpMode) -> Result<BlochField> {
    check_len(field.len(), p.len())?;
    let lab = field.lab_vectors();
    let v = lab
        .iter()
        .zip(p)
        .enumerate()
        .map(|(j, (&u, &p))| match mode {
            RepumpMode::Expectation => Vec3::Z * p + u * (1.0 - p),
            RepumpMode::Stochastic { seed } => {
                if p >= 1.0 || rng::stream(seed, rng::DOMAIN_REPUMP, j as u64).gen::<f64>() < p {
                    Vec3::Z
                } else {
                    u
                }
            }
        })
        .collect();
    Ok(BlochField::from_unchecked(v, Basis::Lab).in_basis(field.basis()))
}

/// Applies the full repump sweep to `field`.
pub fn apply_repump_sweep(
    crystal: &IonCrystal,
    field: &BlochField,
    beam: &BeamParams,
    mode: RepumpMode,
) -> Result<BlochField> {
    check_len(crystal.len(), field.len())?;
    apply_reset(field, &repump_probabilities(crystal, beam)?, mode)
}

/// The beam used for the domain wall: a physical sweep or the ideal step.
#[derive(Clone, Debug, PartialEq)]
pub enum Beam {
    /// Focused Gaussian beam.
    Gaussian(BeamParams),
    /// Certain reset for `r̃ ≥ 1/2`, none inside.
    Ideal,
}

/// Drive to `Ω_R t = π/10`, `π/2|_y`, repump, `−π/2|_y`.
pub fn prepare_domain_wall(
    crystal: &IonCrystal,
    params: &DriveParams,
    beam: &Beam,
    mode: RepumpMode,
) -> Result<BlochField> {
    params.validate()?;
    let spec = TextureSpec::new(TextureKind::DomainWall);
    let pulse = spec.post_pulses[0];
    let driven = closed_form_at_angle(crystal, params.psi, spec.drive_angle);
    let tilted = rotate_global(&driven, &pulse);
    let p = match beam {
        Beam::Gaussian(b) => repump_probabilities(crystal, b)?,
        Beam::Ideal => (0..crystal.len())
            .map(|j| if crystal.normalized_radius(j) >= DOMAIN_WALL_THRESHOLD { 1.0 } else { 0.0 })
            .collect(),
    };
    let reset = apply_reset(&tilted, &p, mode)?;
    Ok(rotate_global(&reset, &pulse.inverse()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{mean_fidelity, winding_number};
    use crate::geometry::generate_crystal;
    use proptest::prelude::*;

    fn crystal() -> IonCrystal {
        generate_crystal(24.0, 150.0).unwrap()
    }

    fn params() -> DriveParams {
        DriveParams::experiment()
    }

    fn q(kind: TextureKind) -> f64 {
        let c = crystal();
        winding_number(&c, &prepare_texture(&c, &params(), &TextureSpec::new(kind)).unwrap()).unwrap().q
    }

    #[test]
    fn family_windings() {
        assert!((q(TextureKind::NeelSkyrmion) + 1.0).abs() < 0.03);
        assert!((q(TextureKind::Meron) + 0.5).abs() < 0.03);
        assert!((q(TextureKind::AntiSkyrmion) - 1.0).abs() < 0.03);
        assert!(q(TextureKind::Skyrmionium).abs() < 0.03);
    }

    #[test]
    fn anti_is_exact_negation() {
        assert!((q(TextureKind::AntiSkyrmion) + q(TextureKind::NeelSkyrmion)).abs() < 1e-9);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in TextureKind::ALL {
            assert_eq!(k.name().parse::<TextureKind>().unwrap(), k);
        }
        assert!("vortex".parse::<TextureKind>().is_err());
    }

    #[test]
    fn target_matches_preparation() {
        let c = crystal();
        for k in TextureKind::ALL {
            let spec = TextureSpec::new(k);
            let f = prepare_texture(&c, &params(), &spec).unwrap();
            let t = target_texture(&c, &spec, params().psi);
            assert!((mean_fidelity(&f, &t).unwrap().mean - 1.0).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn centre_ion_points_along_x() {
        let c = crystal();
        let centre = c.central_ion().unwrap();
        for k in [TextureKind::NeelSkyrmion, TextureKind::Meron, TextureKind::Skyrmionium] {
            let t = target_texture(&c, &TextureSpec::new(k), 0.3);
            assert!(t.vectors()[centre].max_abs_diff(Vec3::X) < 1e-15);
        }
    }

    #[test]
    fn domain_wall_target_resets_outer_half() {
        let c = generate_crystal(30.0, 220.0).unwrap();
        let spec = TextureSpec::new(TextureKind::DomainWall);
        let t = target_texture(&c, &spec, FRAC_PI_2);
        let drive = closed_form_at_angle(&c, FRAC_PI_2, PI / 10.0);
        for j in 0..c.len() {
            let want = if c.normalized_radius(j) >= 0.5 { -Vec3::X } else { drive.vectors()[j] };
            assert!(t.vectors()[j].max_abs_diff(want) < 1e-12);
        }
    }

    #[test]
    fn ideal_beam_reproduces_target() {
        let c = generate_crystal(30.0, 220.0).unwrap();
        let f = prepare_domain_wall(&c, &params(), &Beam::Ideal, RepumpMode::Expectation).unwrap();
        let t = target_texture(&c, &TextureSpec::new(TextureKind::DomainWall), params().psi);
        for (a, b) in f.vectors().iter().zip(t.vectors()) {
            assert!(a.max_abs_diff(*b) < 1e-12);
        }
    }

    fn rotated_in_plane_angle(v: Vec3) -> f64 {
        let r = crate::spin::lab_to_rotated(v);
        r.y.atan2(r.x)
    }

    #[test]
    fn helicity_radial_versus_tangential() {
        let c = crystal();
        let neel = prepare_texture(&c, &params(), &TextureSpec::new(TextureKind::NeelSkyrmion)).unwrap();
        let bloch = prepare_texture(&c, &params(), &TextureSpec::new(TextureKind::BlochSkyrmion)).unwrap();
        for (j, ion) in c.ions().iter().enumerate() {
            let r = c.normalized_radius(j);
            if r < 0.05 || r > 0.95 {
                continue;
            }
            let dn = crate::geometry::wrap_signed(rotated_in_plane_angle(neel.vectors()[j]) - ion.phi);
            let db = crate::geometry::wrap_signed(rotated_in_plane_angle(bloch.vectors()[j]) - ion.phi);
            assert!(dn.sin().abs() < 1e-6, "neel {dn}");
            assert!(db.cos().abs() < 1e-6, "bloch {db}");
        }
    }

    #[test]
    fn bimeron_is_tilted_skyrmion() {
        let c = crystal();
        let sk = prepare_texture(&c, &params(), &TextureSpec::new(TextureKind::NeelSkyrmion)).unwrap();
        let bi = prepare_texture(&c, &params(), &TextureSpec::new(TextureKind::Bimeron)).unwrap();
        let img = rotate_global(&sk, &PulseOp::y(FRAC_PI_2));
        assert!((mean_fidelity(&bi, &img).unwrap().mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn experiment_beam_schedule() {
        let b = BeamParams::experiment();
        let pos = b.positions();
        assert_eq!(pos.len(), 12);
        assert_eq!((pos[0], pos[11]), (220.0, 110.0));
        assert!((b.dwell - 51.28e-6).abs() < 0.1e-6);
        b.validate().unwrap();
    }

    #[test]
    fn exposure_matches_direct_time_integral() {
        // Oracle: midpoint rule on the time axis of the rotating ion.
        let b = BeamParams { dwell: 2.3 * 12.82e-6, ..BeamParams::experiment() };
        let (r, x) = (150.0, 160.0);
        let n = 400_000;
        let dt = b.dwell / n as f64;
        let w = TAU / b.rotation_period;
        let mut s = 0.0;
        for i in 0..n {
            let th = w * (i as f64 + 0.5) * dt;
            let d2 = r * r + x * x - 2.0 * r * x * th.cos();
            s += (-2.0 * d2 / (b.waist * b.waist)).exp() * dt;
        }
        let got = b.exposure(r, x) / b.peak_repump_rate;
        assert!((got / s - 1.0).abs() < 1e-6, "{got} {s}");
    }

    #[test]
    fn centre_ion_untouched_and_mid_sweep_saturated() {
        let b = BeamParams::experiment();
        let c = IonCrystal::new(
            alloc::vec![crate::Ion { r: 0.0, phi: 0.0 }, crate::Ion { r: 165.0, phi: 1.0 }],
            220.0,
            30.0,
        )
        .unwrap();
        let p = repump_probabilities(&c, &b).unwrap();
        assert!(p[0] < 1e-6);
        assert!(p[1] > 0.99, "{}", p[1]);
        let f = BlochField::new(alloc::vec![Vec3::X, Vec3::X], Basis::Lab).unwrap();
        let out = apply_repump_sweep(&c, &f, &b, RepumpMode::Expectation).unwrap();
        assert!(out.vectors()[0].max_abs_diff(Vec3::X) < 1e-6);
    }

    #[test]
    fn reset_is_idempotent() {
        let f = BlochField::new(alloc::vec![Vec3::Z, Vec3::X], Basis::Lab).unwrap();
        let once = apply_reset(&f, &[1.0, 1.0], RepumpMode::Stochastic { seed: 1 }).unwrap();
        let twice = apply_reset(&once, &[1.0, 1.0], RepumpMode::Stochastic { seed: 2 }).unwrap();
        assert_eq!(once, twice);
        assert!(once.vectors().iter().all(|v| *v == Vec3::Z));
    }

    #[test]
    fn stochastic_reset_is_reproducible() {
        let c = generate_crystal(30.0, 220.0).unwrap();
        let f = closed_form_at_angle(&c, 0.0, PI / 10.0);
        let b = BeamParams::experiment();
        let a = apply_repump_sweep(&c, &f, &b, RepumpMode::Stochastic { seed: 5 }).unwrap();
        let again = apply_repump_sweep(&c, &f, &b, RepumpMode::Stochastic { seed: 5 }).unwrap();
        assert_eq!(a, again);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn more_power_never_lowers_uz(scale in 1.0f64..5.0) {
            let c = generate_crystal(40.0, 220.0).unwrap();
            let f = rotate_global(&closed_form_at_angle(&c, 0.0, PI / 10.0), &PulseOp::y(FRAC_PI_2));
            let b = BeamParams::experiment();
            let stronger = BeamParams { peak_repump_rate: b.peak_repump_rate * scale, ..b.clone() };
            let lo = apply_repump_sweep(&c, &f, &b, RepumpMode::Expectation).unwrap();
            let hi = apply_repump_sweep(&c, &f, &stronger, RepumpMode::Expectation).unwrap();
            for (a, h) in lo.vectors().iter().zip(hi.vectors()) {
                prop_assert!(h.z >= a.z - 1e-12);
            }
        }
    }
}
