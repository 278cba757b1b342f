//! Spin evolution under the optical-dipole-force drive.
//!
//! Three paths share one parameter set:
//!
//! * [`evolve_closed_form`]: the resonant effective drive solved exactly for
//!   spins starting along +X;
//! * [`evolve_bloch_ode`]: the same effective drive integrated numerically
//!   from any initial field;
//! * [`evolve_full_drive`]: the un-approximated drive in the microwave-dressed
//!   frame, with classical ion orbits, integrated per ion as an SU(2) product.
//!
//! In the effective drive ion `j` precesses about
//! `Ω_R r̃_j (0, sin χ_j, cos χ_j)` with `χ_j = φ_j + ψ`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::IonCrystal;
use crate::ode::{dopri5, OdeOptions};
use crate::spin::{Basis, BlochField};
use crate::vector::{Quaternion, Vec3};

/// Drive parameters. Angular frequencies in rad/s, lengths in µm, angles of
/// the beam geometry in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriveParams {
    /// Edge Rabi rate `Ω_R = δ_ac η_x / 2`.
    pub rabi_rate: f64,
    /// Light shift `δ_ac`.
    pub light_shift: f64,
    /// In-plane Lamb–Dicke parameter `η_x = δk_x R`.
    pub eta_x: f64,
    /// Relative optical phase `ψ` (rad).
    pub psi: f64,
    /// Microwave Rabi rate `Ω`.
    pub microwave_rabi: f64,
    /// Crystal rotation frequency `ω_r`.
    pub rotation: f64,
    /// Beat-note frequency `μ_r`.
    pub beat_note: f64,
    /// In-plane wavevector difference `δk_x` (1/µm).
    pub dk_x: f64,
    /// Axial wavevector difference `δk_z` (1/µm).
    pub dk_z: f64,
    /// Wavefront tilt `δθ` (deg).
    pub tilt_deg: f64,
    /// Beam opening angle `θ_ODF` (deg).
    pub opening_deg: f64,
    /// Crystal radius `R` (µm).
    pub radius: f64,
}

/// Inputs for [`DriveParams::resonant`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSpec {
    /// Edge Rabi rate `Ω_R` (rad/s).
    pub rabi_rate: f64,
    /// `η_x`.
    pub eta_x: f64,
    /// Crystal radius (µm).
    pub radius: f64,
    /// Microwave Rabi rate `Ω` (rad/s).
    pub microwave_rabi: f64,
    /// Rotation frequency `ω_r` (rad/s).
    pub rotation: f64,
    /// `ψ` (rad).
    pub psi: f64,
    /// Wavefront tilt (deg).
    pub tilt_deg: f64,
    /// Opening angle (deg).
    pub opening_deg: f64,
}

impl DriveParams {
    /// Resonant protocol: `μ_r = Ω + ω_r`, `δ_ac = 2Ω_R/η_x`, `δk_x = η_x/R`,
    /// and `δk_z` from the tilt (`δk = δk_x / sin δθ`, `δk_z = δk cos δθ`;
    /// zero when the tilt is zero).
    pub fn resonant(s: DriveSpec) -> Result<Self> {
        if !(s.eta_x > 0.0) {
            return Err(invalid("eta_x", "must be positive to derive the light shift"));
        }
        if !(s.radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        let dk_x = s.eta_x / s.radius;
        let tilt = s.tilt_deg.to_radians();
        let dk_z = if tilt.sin() != 0.0 { dk_x / tilt.sin() * tilt.cos() } else { 0.0 };
        let p = DriveParams {
            rabi_rate: s.rabi_rate,
            light_shift: 2.0 * s.rabi_rate / s.eta_x,
            eta_x: s.eta_x,
            psi: s.psi,
            microwave_rabi: s.microwave_rabi,
            rotation: s.rotation,
            beat_note: s.microwave_rabi + s.rotation,
            dk_x,
            dk_z,
            tilt_deg: s.tilt_deg,
            opening_deg: s.opening_deg,
            radius: s.radius,
        };
        p.validate()?;
        Ok(p)
    }

    /// Experimental operating point: `Ω_R/2π = 1.56 kHz`, `η_x = 0.66`,
    /// `R = 150 µm`, `Ω/2π = 26 kHz`, `ω_r/2π = 78 kHz`, `ψ = π/2`,
    /// `δθ = 0.04°`, `θ_ODF = 18°`.
    pub fn experiment() -> Self {
        DriveParams::resonant(DriveSpec {
            rabi_rate: TAU * 1.56e3,
            eta_x: 0.66,
            radius: 150.0,
            microwave_rabi: TAU * 26e3,
            rotation: TAU * 78e3,
            psi: FRAC_PI_2,
            tilt_deg: 0.04,
            opening_deg: 18.0,
        })
        .expect("built-in parameters are valid")
    }

    /// Same drive at a different `η_x`, keeping `Ω_R` (the light shift is
    /// rescaled).
    pub fn with_eta_at_fixed_rabi(&self, eta_x: f64) -> Result<Self> {
        DriveParams::resonant(DriveSpec { eta_x, ..self.spec() })
    }

    /// Same drive with a new microwave Rabi rate, re-tuned to resonance.
    pub fn with_microwave_rabi(&self, microwave_rabi: f64) -> Result<Self> {
        DriveParams::resonant(DriveSpec { microwave_rabi, ..self.spec() })
    }

    /// Same drive referenced to a crystal of radius `radius` (same `η_x`).
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        let mut p = *self;
        if !(radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        p.radius = radius;
        p.dk_x = p.eta_x / radius;
        let tilt = p.tilt_deg.to_radians();
        p.dk_z = if tilt.sin() != 0.0 { p.dk_x / tilt.sin() * tilt.cos() } else { 0.0 };
        Ok(p)
    }

    fn spec(&self) -> DriveSpec {
        DriveSpec {
            rabi_rate: self.rabi_rate,
            eta_x: self.eta_x,
            radius: self.radius,
            microwave_rabi: self.microwave_rabi,
            rotation: self.rotation,
            psi: self.psi,
            tilt_deg: self.tilt_deg,
            opening_deg: self.opening_deg,
        }
    }

    /// Checks `Ω_R = δ_ac η_x / 2` and `η_x = δk_x R` to 1e-9 relative, and
    /// that every value is finite.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.rabi_rate,
            self.light_shift,
            self.eta_x,
            self.psi,
            self.microwave_rabi,
            self.rotation,
            self.beat_note,
            self.dk_x,
            self.dk_z,
            self.tilt_deg,
            self.opening_deg,
            self.radius,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("drive", "all parameters must be finite"));
        }
        if self.rabi_rate < 0.0 {
            return Err(invalid("rabi_rate", "must be non-negative"));
        }
        if !(self.radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if !rel(self.rabi_rate, 0.5 * self.light_shift * self.eta_x) {
            return Err(invalid("rabi_rate", "must equal light_shift * eta_x / 2"));
        }
        if !rel(self.eta_x, self.dk_x * self.radius) {
            return Err(invalid("eta_x", "must equal dk_x * radius"));
        }
        Ok(())
    }
}

/// Bloch vector of the effective drive at precession angle `theta` (edge
/// angle times `r̃`), started along +X.
pub fn closed_form_vector(r_norm: f64, phi: f64, psi: f64, edge_angle: f64) -> Vec3 {
    let (s, c) = (r_norm * edge_angle).sin_cos();
    let (sc, cc) = (phi + psi).sin_cos();
    Vec3::new(c, s * cc, -s * sc)
}

/// Effective-drive field at time `t` for spins starting along +X.
pub fn evolve_closed_form(crystal: &IonCrystal, params: &DriveParams, t: f64) -> Result<BlochField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", "must be finite and non-negative"));
    }
    Ok(closed_form_at_angle(crystal, params.psi, params.rabi_rate * t))
}

/// Effective-drive field at edge precession angle `Ω_R t`.
pub fn closed_form_at_angle(crystal: &IonCrystal, psi: f64, edge_angle: f64) -> BlochField {
    let v = crystal
        .ions()
        .iter()
        .enumerate()
        .map(|(j, ion)| closed_form_vector(crystal.normalized_radius(j), ion.phi, psi, edge_angle))
        .collect();
    BlochField::from_unchecked(v, Basis::Lab)
}

/// Tolerances of the Bloch-equation integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeTolerance {
    /// Relative tolerance.
    pub rtol: f64,
    /// Absolute tolerance.
    pub atol: f64,
    /// Step budget per ion.
    pub max_steps: usize,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        OdeTolerance { rtol: 1e-12, atol: 1e-13, max_steps: 200_000 }
    }
}

/// Integrates `dv/dt = ω_j × v` with `ω_j = Ω_R r̃_j (0, sin χ_j, cos χ_j)`.
pub fn evolve_bloch_ode(
    crystal: &IonCrystal,
    params: &DriveParams,
    initial: &BlochField,
    t: f64,
) -> Result<BlochField> {
    evolve_bloch_ode_with(crystal, params, initial, t, OdeTolerance::default())
}

/// [`evolve_bloch_ode`] with explicit tolerances.
pub fn evolve_bloch_ode_with(
    crystal: &IonCrystal,
    params: &DriveParams,
    initial: &BlochField,
    t: f64,
    tol: OdeTolerance,
) -> Result<BlochField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", "must be finite and non-negative"));
    }
    check_len(crystal.len(), initial.len())?;
    let start = initial.lab_vectors();
    let opts = OdeOptions { rtol: tol.rtol, atol: tol.atol, max_steps: tol.max_steps };
    let mut out = Vec::with_capacity(start.len());
    for (j, (ion, v0)) in crystal.ions().iter().zip(&start).enumerate() {
        let rate = params.rabi_rate * crystal.normalized_radius(j);
        let (s, c) = (ion.phi + params.psi).sin_cos();
        let w = Vec3::new(0.0, rate * s, rate * c);
        if t == 0.0 || rate == 0.0 {
            out.push(*v0);
            continue;
        }
        let rhs = |_: f64, y: &[f64; 3]| w.cross(Vec3::from_array(*y)).to_array();
        match dopri5(rhs, 0.0, v0.to_array(), t, opts) {
            Ok(y) => out.push(Vec3::from_array(y)),
            Err(e) => {
                return Err(Error::NumericalFailure {
                    ion: j,
                    detail: format!(
                        "step budget exhausted at t = {:.3e} s after {} steps (h = {:.3e} s)",
                        e.t, e.steps, e.last_h
                    ),
                })
            }
        }
    }
    Ok(BlochField::from_unchecked(out, Basis::Lab).in_basis(initial.basis()))
}

/// Largest allowed change of any component when the step count is doubled.
pub const FULL_DRIVE_CONVERGENCE: f64 = 1e-6;

/// Default number of Magnus steps for one `π/Ω_R` evolution.
pub const FULL_DRIVE_DEFAULT_SUBSTEPS: usize = 4096;

/// Dressed-frame drive for spins starting along +X.
///
/// Ion `j` follows `x_j(t) = r_j cos(ω_r t + φ_j)` and feels
/// `H = δ_ac sin(δk_x x_j − μ_r t + ψ)(σ_z cos Ωt + σ_y sin Ωt)`,
/// i.e. a precession vector `2δ_ac sin(η_x r̃_j cos(ω_r t + φ_j) − μ_r t + ψ)·
/// (0, sin Ωt, cos Ωt)`. Each ion is integrated with `substeps` fourth-order
/// Magnus steps and again with `2·substeps`; the finer result is returned
/// and the two must agree to [`FULL_DRIVE_CONVERGENCE`].
pub fn evolve_full_drive(crystal: &IonCrystal, params: &DriveParams, t: f64, substeps: usize) -> Result<BlochField> {
    let start = BlochField::from_unchecked(alloc::vec![Vec3::X; crystal.len()], Basis::Lab);
    evolve_full_drive_from(crystal, params, &start, t, substeps)
}

/// [`evolve_full_drive`] from an arbitrary initial field.
pub fn evolve_full_drive_from(
    crystal: &IonCrystal,
    params: &DriveParams,
    initial: &BlochField,
    t: f64,
    substeps: usize,
) -> Result<BlochField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", "must be finite and non-negative"));
    }
    if substeps == 0 {
        return Err(invalid("substeps", "must be at least 1"));
    }
    check_len(crystal.len(), initial.len())?;
    let start = initial.lab_vectors();
    let mut out = Vec::with_capacity(start.len());
    let mut worst = (0usize, 0.0f64);
    for (j, (ion, v0)) in crystal.ions().iter().zip(&start).enumerate() {
        let drive = IonDrive::new(params, crystal.normalized_radius(j), ion.phi);
        let coarse = drive.propagate(t, substeps).rotate(*v0);
        let fine = drive.propagate(t, 2 * substeps).rotate(*v0);
        let d = coarse.max_abs_diff(fine);
        if d > worst.1 || !d.is_finite() {
            worst = (j, d);
        }
        out.push(fine);
    }
    if !(worst.1 <= FULL_DRIVE_CONVERGENCE) {
        return Err(Error::NumericalFailure {
            ion: worst.0,
            detail: format!(
                "step doubling changed a component by {:.3e} (> {:.0e}); increase substeps beyond {}",
                worst.1, FULL_DRIVE_CONVERGENCE, substeps
            ),
        });
    }
    Ok(BlochField::from_unchecked(out, Basis::Lab).in_basis(initial.basis()))
}

struct IonDrive {
    amp: f64,
    phase_depth: f64,
    phi: f64,
    rotation: f64,
    beat: f64,
    psi: f64,
    mw: f64,
}

impl IonDrive {
    fn new(p: &DriveParams, r_norm: f64, phi: f64) -> Self {
        IonDrive {
            amp: 2.0 * p.light_shift,
            phase_depth: p.eta_x * r_norm,
            phi,
            rotation: p.rotation,
            beat: p.beat_note,
            psi: p.psi,
            mw: p.microwave_rabi,
        }
    }

    fn omega(&self, t: f64) -> Vec3 {
        let s = self.amp * (self.phase_depth * (self.rotation * t + self.phi).cos() - self.beat * t + self.psi).sin();
        let (sw, cw) = (self.mw * t).sin_cos();
        Vec3::new(0.0, s * sw, s * cw)
    }

    fn propagate(&self, t: f64, steps: usize) -> Quaternion {
        let h = t / steps as f64;
        let g = 3.0f64.sqrt() / 6.0;
        let comm = 3.0f64.sqrt() * h * h / 12.0;
        let mut q = Quaternion::IDENTITY;
        for k in 0..steps {
            let t0 = k as f64 * h;
            let w1 = self.omega(t0 + (0.5 - g) * h);
            let w2 = self.omega(t0 + (0.5 + g) * h);
            let theta = (w1 + w2) * (0.5 * h) - w1.cross(w2) * comm;
            q = Quaternion::from_rotation_vector(theta).mul(q);
        }
        q.normalized()
    }
}

/// Outcome of [`check_rwa`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RwaReport {
    /// `Ω_R / min(|2ω_r|, |2Ω|, |2(ω_r+Ω)|)`.
    pub ratio: f64,
    /// The smallest neglected frequency (rad/s).
    pub min_bound: f64,
    /// `Ω_R` divided by each of `|2ω_r|`, `|2Ω|`, `|2(ω_r+Ω)|`.
    pub margins: [f64; 3],
    /// Pass threshold on `ratio`.
    pub threshold: f64,
    /// `ratio < threshold`.
    pub pass: bool,
}

/// Default [`check_rwa`] threshold.
pub const RWA_THRESHOLD: f64 = 0.1;

/// Rotating-wave validity check at the default threshold.
pub fn check_rwa(params: &DriveParams) -> RwaReport {
    check_rwa_with_threshold(params, RWA_THRESHOLD)
}

/// Rotating-wave validity check: the drive must be slow compared with every
/// dropped counter-rotating term.
pub fn check_rwa_with_threshold(params: &DriveParams, threshold: f64) -> RwaReport {
    let bounds = [
        (2.0 * params.rotation).abs(),
        (2.0 * params.microwave_rabi).abs(),
        (2.0 * (params.rotation + params.microwave_rabi)).abs(),
    ];
    let ratio_to = |b: f64| {
        if params.rabi_rate == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            params.rabi_rate.abs() / b
        }
    };
    let min_bound = bounds.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = ratio_to(min_bound);
    RwaReport {
        ratio,
        min_bound,
        margins: [ratio_to(bounds[0]), ratio_to(bounds[1]), ratio_to(bounds[2])],
        threshold,
        pass: ratio < threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::mean_fidelity;
    use crate::geometry::{generate_crystal, Ion};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn params() -> DriveParams {
        DriveParams::experiment()
    }

    #[test]
    fn resonant_construction_satisfies_invariants() {
        let p = params();
        p.validate().unwrap();
        assert!((p.beat_note - (p.microwave_rabi + p.rotation)).abs() < 1e-6);
        assert!((p.light_shift - 2.0 * p.rabi_rate / 0.66).abs() < 1e-9);
        let mut bad = p;
        bad.light_shift *= 1.01;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn closed_form_examples() {
        let ions = alloc::vec![Ion { r: 0.0, phi: 0.0 }, Ion { r: 100.0, phi: 1.3 }, Ion { r: 50.0, phi: 0.0 },];
        let c = IonCrystal::new(ions, 100.0, 10.0).unwrap();
        let mut p = params();
        p.psi = 0.0;
        let f = evolve_closed_form(&c, &p, PI / p.rabi_rate).unwrap();
        let v = f.vectors();
        assert_eq!(v[0], Vec3::X);
        assert!(v[1].max_abs_diff(-Vec3::X) < 1e-15);
        assert!(v[2].max_abs_diff(Vec3::Y) < 1e-15);
        assert!(evolve_closed_form(&c, &p, -1.0).is_err());
    }

    #[test]
    fn ode_matches_closed_form() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let p = params();
        let start = BlochField::uniform(c.len(), Vec3::X, Basis::Lab).unwrap();
        for &frac in &[0.3, 1.0, 1.7] {
            let t = frac * PI / p.rabi_rate;
            let a = evolve_bloch_ode(&c, &p, &start, t).unwrap();
            let b = evolve_closed_form(&c, &p, t).unwrap();
            for (x, y) in a.vectors().iter().zip(b.vectors()) {
                assert!(x.max_abs_diff(*y) < 1e-8);
                assert!((x.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ode_at_zero_time_is_identity() {
        let c = generate_crystal(30.0, 90.0).unwrap();
        let start = BlochField::uniform(c.len(), Vec3::new(0.0, 0.6, 0.8), Basis::Lab).unwrap();
        assert_eq!(evolve_bloch_ode(&c, &params(), &start, 0.0).unwrap(), start);
    }

    #[test]
    fn ode_leaves_centre_ion_alone() {
        let c = generate_crystal(30.0, 90.0).unwrap();
        let start = BlochField::uniform(c.len(), Vec3::Z, Basis::Lab).unwrap();
        let out = evolve_bloch_ode(&c, &params(), &start, 1e-3).unwrap();
        let centre = c.central_ion().unwrap();
        assert_eq!(out.vectors()[centre], Vec3::Z);
    }

    #[test]
    fn full_drive_preserves_norm_and_is_close() {
        let c = generate_crystal(30.0, 150.0).unwrap();
        let p = params();
        let t = PI / p.rabi_rate;
        let f = evolve_full_drive(&c, &p, t, FULL_DRIVE_DEFAULT_SUBSTEPS).unwrap();
        for v in f.vectors() {
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
        let target = evolve_closed_form(&c, &p, t).unwrap();
        let fid = mean_fidelity(&f, &target).unwrap();
        assert!(fid.mean > 0.95, "{}", fid.mean);
    }

    #[test]
    fn full_drive_without_gradient_is_carrier_only() {
        // With δk_x = 0 only the off-resonant carrier remains. The spin
        // cones around +X with half-angle at most
        // 2δ_ac/|μ_r − Ω| + 2δ_ac/|μ_r + Ω| and never drifts away.
        let c = generate_crystal(30.0, 150.0).unwrap();
        let p0 = params();
        let mut p = p0;
        p.eta_x = 0.0;
        p.dk_x = 0.0;
        let t_end = PI / p0.rabi_rate;
        let cone = 2.0 * p.light_shift / (p.beat_note - p.microwave_rabi).abs()
            + 2.0 * p.light_shift / (p.beat_note + p.microwave_rabi);
        let mut worst: f64 = 0.0;
        for k in 1..=32 {
            let t = t_end * k as f64 / 32.0;
            let f = evolve_full_drive(&c, &p, t, FULL_DRIVE_DEFAULT_SUBSTEPS).unwrap();
            for v in f.vectors() {
                worst = worst.max((*v - Vec3::X).norm());
            }
        }
        assert!(worst < cone, "{worst} vs {cone}");
    }

    #[test]
    fn full_drive_reports_unconverged_steps() {
        let c = generate_crystal(30.0, 150.0).unwrap();
        let p = params();
        let err = evolve_full_drive(&c, &p, PI / p.rabi_rate, 8).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { .. }));
    }

    #[test]
    fn rwa_examples() {
        let mut p = params().with_microwave_rabi(TAU * 25e3).unwrap();
        let r = check_rwa(&p);
        assert!(r.pass);
        assert!((r.min_bound - TAU * 50e3).abs() < 1e-6);
        assert!((r.ratio - 1.56 / 50.0).abs() < 1e-12);
        p.rabi_rate = 0.0;
        assert_eq!(check_rwa(&p).ratio, 0.0);
        p.rabi_rate = TAU * 50e3;
        let r = check_rwa(&p);
        assert!((r.ratio - 1.0).abs() < 1e-12 && !r.pass);
    }

    proptest! {
        #[test]
        fn azimuthal_equivariance(delta in -3.0f64..3.0, frac in 0.0f64..2.0) {
            let c = generate_crystal(30.0, 120.0).unwrap();
            let p = params();
            let mut q = p;
            q.psi -= delta;
            let t = frac * PI / p.rabi_rate;
            let a = evolve_closed_form(&c, &p, t).unwrap();
            let b = evolve_closed_form(&c.rotated(delta), &q, t).unwrap();
            for (x, y) in a.vectors().iter().zip(b.vectors()) {
                prop_assert!(x.max_abs_diff(*y) < 1e-12);
            }
        }

        #[test]
        fn closed_form_is_unit(r in 0.0f64..1.0, phi in 0.0f64..TAU, psi in -4.0f64..4.0, a in 0.0f64..20.0) {
            prop_assert!((closed_form_vector(r, phi, psi, a).norm() - 1.0).abs() < 1e-15);
        }
    }
}
