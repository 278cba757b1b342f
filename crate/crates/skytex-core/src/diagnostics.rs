//! Winding number, order parameter, fidelities and curve fits.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::closed_form_vector;
use crate::error::{check_len, fit_failure, Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::geometry::IonCrystal;
use crate::measurement::BinnedField;
use crate::spin::{lab_to_rotated, Basis, BlochField};
use crate::triangulation::delaunay_with_salt;
use crate::vector::Vec3;

/// Signed solid angle of the spherical triangle `(a, b, c)` of unit vectors.
pub fn solid_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    2.0 * a.dot(b.cross(c)).atan2(1.0 + a.dot(b) + b.dot(c) + c.dot(a))
}

/// `−(1 − cos θ_edge)/2`: winding of the radial ansatz whose polar angle
/// grows linearly from a down-pointing core to `θ_edge` at the rim.
pub fn winding_continuum(theta_edge: f64) -> f64 {
    -0.5 * (1.0 - theta_edge.cos())
}

/// Vectors shorter than this are left out of binned winding numbers.
pub const MIN_BIN_NORM: f64 = 0.05;

/// Options for [`winding_analysis`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindingOptions {
    /// Polarity axis in the rotated basis. The reported `Q` carries the sign
    /// of the core spin along it.
    pub polarity_axis: Vec3,
    /// Tie-breaking salt for the triangulation.
    pub salt: u64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions { polarity_axis: Vec3::Z, salt: 0 }
    }
}

/// A discrete winding number with its bookkeeping.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindingNumber {
    /// Winding number, signed by core polarity.
    pub q: f64,
    /// `Σ Ω_ABC / 4π` with counterclockwise triangles.
    pub raw: f64,
    /// Sign of the core spin along the polarity axis, `None` when the core
    /// lies in the perpendicular plane (then `q = raw`).
    pub core_sign: Option<f64>,
    /// Number of triangles.
    pub triangle_count: usize,
    /// Number of hull points.
    pub hull_count: usize,
    /// Sites left out for being too short (binned input only).
    pub excluded: usize,
}

/// One triangle and its solid angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleAngle {
    /// Counterclockwise vertex indices into the site list.
    pub vertices: [usize; 3],
    /// Signed solid angle in sr.
    pub omega: f64,
}

fn unit_vectors(vectors: &[Vec3]) -> Result<Vec<Vec3>> {
    vectors.iter().enumerate().map(|(index, v)| v.normalized().ok_or(Error::DegenerateSpin { index })).collect()
}

fn triangle_angles(points: &[(f64, f64)], units: &[Vec3], salt: u64) -> Result<(Vec<TriangleAngle>, usize)> {
    let tri = delaunay_with_salt(points, salt)?;
    let angles = tri
        .triangles
        .iter()
        .map(|&[a, b, c]| TriangleAngle { vertices: [a, b, c], omega: solid_angle(units[a], units[b], units[c]) })
        .collect();
    Ok((angles, tri.hull_count))
}

fn winding_from(points: &[(f64, f64)], vectors: &[Vec3], opts: WindingOptions) -> Result<WindingNumber> {
    let units = unit_vectors(vectors)?;
    let (angles, hull_count) = triangle_angles(points, &units, opts.salt)?;
    let raw = angles.iter().map(|t| t.omega).sum::<f64>() / (4.0 * PI);
    let core = (0..points.len())
        .min_by(|&a, &b| {
            let ra = points[a].0.hypot(points[a].1);
            ra.total_cmp(&points[b].0.hypot(points[b].1))
        })
        .map(|k| units[k]);
    let axis = opts.polarity_axis.normalized().unwrap_or(Vec3::Z);
    let core_sign = core.map(|c| c.dot(axis)).filter(|p| p.abs() >= 1e-6).map(f64::signum);
    let q = core_sign.map_or(raw, |s| s * raw.abs());
    Ok(WindingNumber { q, raw, core_sign, triangle_count: angles.len(), hull_count, excluded: 0 })
}

/// Discrete winding number of `field` over the Delaunay triangulation of the
/// crystal. Lab-basis fields are converted to the rotated basis first.
pub fn winding_number(crystal: &IonCrystal, field: &BlochField) -> Result<WindingNumber> {
    winding_analysis(crystal, field, WindingOptions::default())
}

/// [`winding_number`] with an explicit polarity axis and tie-breaking salt.
pub fn winding_analysis(crystal: &IonCrystal, field: &BlochField, opts: WindingOptions) -> Result<WindingNumber> {
    check_len(crystal.len(), field.len())?;
    let f = field.in_basis(Basis::Rotated);
    winding_from(&crystal.positions(), f.vectors(), opts)
}

/// Per-triangle solid angles (rotated basis), for inspection.
pub fn solid_angles(crystal: &IonCrystal, field: &BlochField, salt: u64) -> Result<Vec<TriangleAngle>> {
    check_len(crystal.len(), field.len())?;
    let f = field.in_basis(Basis::Rotated);
    Ok(triangle_angles(&crystal.positions(), &unit_vectors(f.vectors())?, salt)?.0)
}

/// Winding number of a reconstructed binned field, triangulating bin
/// centres (shifted by the phase offset). Bins with `|u| < 0.05` are left
/// out and counted in `excluded`.
pub fn winding_number_binned(binned: &BinnedField) -> Result<WindingNumber> {
    let mut points = Vec::new();
    let mut vectors = Vec::new();
    let mut excluded = 0;
    for b in binned.bins().iter().filter(|b| !b.is_empty()) {
        match b.u {
            Some(u) if u.norm() >= MIN_BIN_NORM => {
                let phi = b.phi_center + binned.phase_offset();
                points.push((b.r_center * phi.cos(), b.r_center * phi.sin()));
                vectors.push(lab_to_rotated(u));
            }
            _ => excluded += 1,
        }
    }
    let mut w = winding_from(&points, &vectors, WindingOptions::default())?;
    w.excluded = excluded;
    Ok(w)
}

/// Complex order parameter `Ψ = (1/N) Σ r̃_j e^{iφ_j} (u_z − i u_y)_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderParameter {
    /// `Ψ`.
    pub value: Complex64,
}

impl OrderParameter {
    /// `|Ψ|`.
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }

    /// `arg Ψ`.
    pub fn phase(&self) -> f64 {
        self.value.arg()
    }
}

fn psi_term(r_norm: f64, phi: f64, u: Vec3) -> Complex64 {
    Complex64::from_polar(r_norm, phi) * Complex64::new(u.z, -u.y)
}

/// Order parameter of a field (evaluated on lab-frame components).
pub fn order_parameter(crystal: &IonCrystal, field: &BlochField) -> Result<OrderParameter> {
    check_len(crystal.len(), field.len())?;
    if crystal.is_empty() {
        return Ok(OrderParameter { value: Complex64::new(0.0, 0.0) });
    }
    let sum: Complex64 = field
        .lab_vectors()
        .iter()
        .enumerate()
        .map(|(j, &u)| psi_term(crystal.normalized_radius(j), crystal.ions()[j].phi, u))
        .sum();
    Ok(OrderParameter { value: sum / crystal.len() as f64 })
}

/// Order parameter of a reconstructed binned field: bins weighted by their
/// ion counts at their centres; empty or unreconstructed bins are skipped.
pub fn order_parameter_binned(binned: &BinnedField) -> OrderParameter {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 0usize;
    for b in binned.bins() {
        if let Some(u) = b.u {
            let w = b.n_ions() as f64;
            sum += psi_term(b.r_center / binned.radius(), b.phi_center + binned.phase_offset(), u) * w;
            n += b.n_ions();
        }
    }
    OrderParameter { value: if n == 0 { sum } else { sum / n as f64 } }
}

/// Single-site fidelities `(1 + u·v)/2` and their mean.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FidelityReport {
    /// Per-site fidelity, `None` where data or target is missing.
    pub per_site: Vec<Option<f64>>,
    /// Mean over present sites (NaN when none are present).
    pub mean: f64,
    /// Number of missing sites.
    pub skipped: usize,
}

fn report(per_site: Vec<Option<f64>>) -> FidelityReport {
    let present: Vec<f64> = per_site.iter().flatten().copied().collect();
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    FidelityReport { skipped: per_site.len() - present.len(), per_site, mean }
}

/// Mean fidelity of `field` against `target`, compared in the lab basis.
/// Sub-unit vectors in `field` enter unnormalized.
pub fn mean_fidelity(field: &BlochField, target: &BlochField) -> Result<FidelityReport> {
    check_len(target.len(), field.len())?;
    let per_site =
        field.lab_vectors().iter().zip(target.lab_vectors()).map(|(u, v)| Some(0.5 * (1.0 + u.dot(v)))).collect();
    Ok(report(per_site))
}

/// Mean fidelity of reconstructed bins against per-bin lab-frame targets.
pub fn binned_fidelity(binned: &BinnedField, targets: &[Option<Vec3>]) -> Result<FidelityReport> {
    check_len(binned.bins().len(), targets.len())?;
    let per_site = binned
        .bins()
        .iter()
        .zip(targets)
        .map(|(b, t)| match (b.u, t) {
            (Some(u), Some(v)) => Some(0.5 * (1.0 + u.dot(*v))),
            _ => None,
        })
        .collect();
    Ok(report(per_site))
}

/// A fitted scalar with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitEstimate {
    /// Best-fit value.
    pub value: f64,
    /// One-sigma standard error from the fit covariance.
    pub std_error: f64,
    /// `√SSR` at the optimum.
    pub residual_norm: f64,
}

/// Number of starting points kept from the coarse scan of each fit.
pub const FIT_STARTS: usize = 8;

/// Local minima of `costs` (ascending by cost), at most `k`.
fn best_starts(costs: &[f64], k: usize) -> Vec<usize> {
    let n = costs.len();
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || costs[i] <= costs[i - 1];
            let right = i + 1 == n || costs[i] <= costs[i + 1];
            left && right
        })
        .collect();
    idx.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    idx.truncate(k);
    idx
}

/// Scalar fit over a frequency: scan a grid, refine the best local minima by
/// Levenberg–Marquardt, keep the lowest residual.
fn fit_frequency<F>(grid: &[f64], m: usize, mut model: F) -> Result<FitEstimate>
where
    F: FnMut(f64, &mut [f64], Option<&mut [f64]>),
{
    let mut r = alloc::vec![0.0; m];
    let costs: Vec<f64> = grid
        .iter()
        .map(|&w| {
            model(w, &mut r, None);
            r.iter().map(|x| x * x).sum()
        })
        .collect();
    let mut best: Option<(f64, f64, f64)> = None;
    for i in best_starts(&costs, FIT_STARTS) {
        let fit = levenberg_marquardt(|p, r, jac| model(p[0], r, jac), &[grid[i]], m, LmOptions::default());
        if !fit.ssr.is_finite() || !fit.params[0].is_finite() {
            continue;
        }
        if best.map_or(true, |b| fit.ssr < b.1) {
            best = Some((fit.params[0], fit.ssr, fit.std_error(0)));
        }
    }
    let (value, ssr, se) = best.ok_or_else(|| fit_failure("no start converged", f64::NAN))?;
    if !se.is_finite() {
        return Err(fit_failure("frequency not identifiable", ssr.sqrt()));
    }
    Ok(FitEstimate { value: value.abs(), std_error: se, residual_norm: ssr.sqrt() })
}

fn frequency_grid(times: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut ts: Vec<f64> = times.to_vec();
    ts.sort_by(f64::total_cmp);
    let span = ts[ts.len() - 1] - ts[0];
    let dt = ts.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    if !(span > 0.0) || !dt.is_finite() {
        return Err(fit_failure("time points do not span an interval", f64::NAN));
    }
    let w_max = PI / dt;
    let n = 4000;
    Ok(((1..=n).map(|k| w_max * k as f64 / n as f64).collect(), span))
}

fn check_half_period(est: FitEstimate, span: f64) -> Result<FitEstimate> {
    if est.value * span < PI * (1.0 - 1e-6) {
        return Err(fit_failure("series spans less than half an oscillation", est.residual_norm));
    }
    Ok(est)
}

/// Fits `Q(t) = −(1 − cos Ω_R t)/2` to a winding-number time series.
pub fn fit_omega_r_winding(series: &[(f64, f64)]) -> Result<FitEstimate> {
    if series.len() < 4 {
        return Err(fit_failure("need at least 4 time points", f64::NAN));
    }
    let lo = series.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = series.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 1e-9) {
        return Err(fit_failure("constant series", 0.0));
    }
    let times: Vec<f64> = series.iter().map(|s| s.0).collect();
    let (grid, span) = frequency_grid(&times)?;
    let est = fit_frequency(&grid, series.len(), |w, r, jac| {
        for (k, &(t, q)) in series.iter().enumerate() {
            r[k] = winding_continuum(w * t) - q;
        }
        if let Some(j) = jac {
            for (k, &(t, _)) in series.iter().enumerate() {
                j[k] = -0.5 * t * (w * t).sin();
            }
        }
    })?;
    check_half_period(est, span)
}

/// Fits `Ω_R` of the closed-form texture with phase `psi` to a series of
/// samples `(t, r̃, φ, u_lab)`.
fn fit_omega_r_samples(samples: &[(f64, f64, f64, Vec3)], psi: f64) -> Result<FitEstimate> {
    let mut times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    times.dedup();
    if times.len() < 4 {
        return Err(fit_failure("need at least 4 time points", f64::NAN));
    }
    let (grid, span) = frequency_grid(&times)?;
    let first = samples[0].3;
    if samples.iter().all(|s| s.3.max_abs_diff(first) < 1e-12) {
        return Err(fit_failure("constant series", 0.0));
    }
    let est = fit_frequency(&grid, 3 * samples.len(), |w, r, jac| {
        for (k, &(t, rn, phi, u)) in samples.iter().enumerate() {
            let v = closed_form_vector(rn, phi, psi, w * t) - u;
            r[3 * k..3 * k + 3].copy_from_slice(&v.to_array());
        }
        if let Some(j) = jac {
            for (k, &(t, rn, phi, _)) in samples.iter().enumerate() {
                let (s, c) = (rn * w * t).sin_cos();
                let (sp, cp) = (phi + psi).sin_cos();
                let d = rn * t;
                j[3 * k] = -d * s;
                j[3 * k + 1] = d * c * cp;
                j[3 * k + 2] = -d * c * sp;
            }
        }
    })?;
    check_half_period(est, span)
}

/// Fits `Ω_R` to per-ion field snapshots `(t, field)`.
pub fn fit_omega_r_fields(crystal: &IonCrystal, series: &[(f64, BlochField)], psi: f64) -> Result<FitEstimate> {
    let mut samples = Vec::new();
    for (t, f) in series {
        check_len(crystal.len(), f.len())?;
        for (j, u) in f.lab_vectors().into_iter().enumerate() {
            samples.push((*t, crystal.normalized_radius(j), crystal.ions()[j].phi, u));
        }
    }
    fit_omega_r_samples(&samples, psi)
}

/// Fits `Ω_R` to reconstructed binned snapshots `(t, binned)`, evaluating
/// the model at bin centres.
pub fn fit_omega_r_binned(series: &[(f64, BinnedField)], psi: f64) -> Result<FitEstimate> {
    let mut samples = Vec::new();
    for (t, b) in series {
        for bin in b.bins() {
            if let Some(u) = bin.u {
                samples.push((*t, bin.r_center / b.radius(), bin.phi_center + b.phase_offset(), u));
            }
        }
    }
    if samples.is_empty() {
        return Err(fit_failure("no reconstructed bins", f64::NAN));
    }
    fit_omega_r_samples(&samples, psi)
}

/// `2√2·erf⁻¹(0.8)`: 10–90 % width of an error-function edge per unit σ.
pub const EDGE_WIDTH_FACTOR: f64 = 2.563_103_131_089_201;

/// Fitted error-function edge.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeFit {
    /// 10–90 % width in µm.
    pub width: f64,
    /// Standard error of `width`.
    pub width_std_error: f64,
    /// Edge position in µm.
    pub r0: f64,
    /// Gaussian σ in µm.
    pub sigma: f64,
    /// Level well inside the edge.
    pub p_inner: f64,
    /// Level well outside the edge.
    pub p_outer: f64,
    /// `√SSR` at the optimum.
    pub residual_norm: f64,
}

/// Fits `p(r) = p₀ + (p₁ − p₀)(1 + erf((r − r₀)/(√2σ)))/2` to a radial
/// profile `(r, p)`.
pub fn fit_edge_width(profile: &[(f64, f64)]) -> Result<EdgeFit> {
    if profile.len() < 5 {
        return Err(fit_failure("need at least 5 radial points", f64::NAN));
    }
    let mut pts = profile.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (r_lo, r_hi) = (pts[0].0, pts[pts.len() - 1].0);
    let (p_lo, p_hi) = (pts[0].1, pts[pts.len() - 1].1);
    if !(r_hi > r_lo) || (p_hi - p_lo).abs() < 1e-9 {
        return Err(fit_failure("profile has no transition", 0.0));
    }
    let model = |p: &[f64], r: &mut [f64], jac: Option<&mut [f64]>| {
        let (p0, p1, r0, s) = (p[0], p[1], p[2], p[3]);
        let mut jac = jac;
        for (k, &(x, y)) in pts.iter().enumerate() {
            let z = (x - r0) / (SQRT_2 * s);
            let g = 0.5 * (1.0 + libm::erf(z));
            r[k] = p0 + (p1 - p0) * g - y;
            if let Some(j) = jac.as_deref_mut() {
                let dgz = (-z * z).exp() / PI.sqrt();
                j[4 * k] = 1.0 - g;
                j[4 * k + 1] = g;
                j[4 * k + 2] = -(p1 - p0) * dgz / (SQRT_2 * s);
                j[4 * k + 3] = -(p1 - p0) * dgz * z / s;
            }
        }
    };
    let sigma0 = (r_hi - r_lo) / 10.0;
    let mut best: Option<crate::fit::LmFit> = None;
    for i in 0..FIT_STARTS {
        let r0 = r_lo + (r_hi - r_lo) * (i as f64 + 0.5) / FIT_STARTS as f64;
        let fit = levenberg_marquardt(model, &[p_lo, p_hi, r0, sigma0], pts.len(), LmOptions::default());
        if fit.ssr.is_finite()
            && fit.params.iter().all(|v| v.is_finite())
            && best.as_ref().map_or(true, |b| fit.ssr < b.ssr)
        {
            best = Some(fit);
        }
    }
    let fit = best.ok_or_else(|| fit_failure("no start converged", f64::NAN))?;
    let sigma = fit.params[3].abs();
    Ok(EdgeFit {
        width: EDGE_WIDTH_FACTOR * sigma,
        width_std_error: EDGE_WIDTH_FACTOR * fit.std_error(3),
        r0: fit.params[2],
        sigma,
        p_inner: fit.params[0],
        p_outer: fit.params[1],
        residual_norm: fit.residual_norm(),
    })
}

/// Summary of the scalar characterisations of one field.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsReport {
    /// Winding number.
    pub q: Option<f64>,
    /// Uncorrected triangle sum.
    pub q_raw: Option<f64>,
    /// Triangles used for `q`.
    pub triangle_count: Option<usize>,
    /// Hull points of the triangulation.
    pub hull_count: Option<usize>,
    /// Sites excluded from `q`.
    pub excluded_sites: usize,
    /// `|Ψ|`.
    pub order_parameter: f64,
    /// `arg Ψ`.
    pub order_parameter_phase: f64,
    /// Mean fidelity against the supplied target.
    pub mean_fidelity: Option<f64>,
    /// Sites skipped by the fidelity.
    pub skipped_sites: usize,
    /// Fitted `Ω_R` in rad/s.
    pub omega_r: Option<FitEstimate>,
    /// Fitted edge.
    pub edge: Option<EdgeFit>,
}

impl DiagnosticsReport {
    /// Winding number, order parameter and (optionally) fidelity of a
    /// per-ion field.
    pub fn for_field(crystal: &IonCrystal, field: &BlochField, target: Option<&BlochField>) -> Result<Self> {
        let w = winding_number(crystal, field)?;
        let psi = order_parameter(crystal, field)?;
        let fid = target.map(|t| mean_fidelity(field, t)).transpose()?;
        Ok(DiagnosticsReport {
            q: Some(w.q),
            q_raw: Some(w.raw),
            triangle_count: Some(w.triangle_count),
            hull_count: Some(w.hull_count),
            excluded_sites: 0,
            order_parameter: psi.magnitude(),
            order_parameter_phase: psi.phase(),
            mean_fidelity: fid.as_ref().map(|f| f.mean),
            skipped_sites: fid.map_or(0, |f| f.skipped),
            omega_r: None,
            edge: None,
        })
    }

    /// The same quantities for a reconstructed binned field, with optional
    /// per-bin targets.
    pub fn for_binned(binned: &BinnedField, targets: Option<&[Option<Vec3>]>) -> Result<Self> {
        let w = winding_number_binned(binned);
        let psi = order_parameter_binned(binned);
        let fid = targets.map(|t| binned_fidelity(binned, t)).transpose()?;
        let (q, q_raw, tc, hc, ex) = match &w {
            Ok(w) => (Some(w.q), Some(w.raw), Some(w.triangle_count), Some(w.hull_count), w.excluded),
            Err(Error::Triangulation(_)) => (None, None, None, None, binned.bins().len()),
            Err(e) => return Err(e.clone()),
        };
        Ok(DiagnosticsReport {
            q,
            q_raw,
            triangle_count: tc,
            hull_count: hc,
            excluded_sites: ex,
            order_parameter: psi.magnitude(),
            order_parameter_phase: psi.phase(),
            mean_fidelity: fid.as_ref().map(|f| f.mean),
            skipped_sites: fid.map_or(0, |f| f.skipped),
            omega_r: None,
            edge: None,
        })
    }
}

impl core::fmt::Display for FitEstimate {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} ± {}", self.value, self.std_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::closed_form_at_angle;
    use crate::geometry::generate_crystal;
    use crate::spin::{rotate_global, PulseOp};
    use core::f64::consts::{FRAC_PI_2, TAU};
    use proptest::prelude::*;

    fn crystal() -> IonCrystal {
        generate_crystal(24.0, 150.0).unwrap()
    }

    #[test]
    fn solid_angle_of_octant() {
        assert!((solid_angle(Vec3::X, Vec3::Y, Vec3::Z) - FRAC_PI_2).abs() < 1e-15);
        assert!((solid_angle(Vec3::X, Vec3::Z, Vec3::Y) + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn continuum_examples() {
        assert_eq!(winding_continuum(PI), -1.0);
        assert!((winding_continuum(FRAC_PI_2) + 0.5).abs() < 1e-15);
        assert!(winding_continuum(TAU).abs() < 1e-15);
    }

    #[test]
    fn uniform_field_has_zero_winding() {
        let c = crystal();
        let f = BlochField::uniform(c.len(), Vec3::new(0.3, -0.2, 0.9).normalized().unwrap(), Basis::Rotated).unwrap();
        let w = winding_number(&c, &f).unwrap();
        assert_eq!(w.raw, 0.0);
        assert_eq!(w.q, 0.0);
    }

    #[test]
    fn skyrmion_winds_once_negatively() {
        let c = crystal();
        let w = winding_number(&c, &closed_form_at_angle(&c, FRAC_PI_2, PI)).unwrap();
        assert!((w.q + 1.0).abs() < 0.03, "{}", w.q);
        assert_eq!(w.triangle_count, crate::triangulation::Triangulation::euler_triangle_count(c.len(), w.hull_count));
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let c = generate_crystal(30.0, 60.0).unwrap();
        let mut v = alloc::vec![Vec3::Z; c.len()];
        v[2] = Vec3::ZERO;
        let f = BlochField::new(v, Basis::Rotated).unwrap();
        assert_eq!(winding_number(&c, &f).unwrap_err(), Error::DegenerateSpin { index: 2 });
    }

    #[test]
    fn pi_y_flip_negates_winding() {
        let c = crystal();
        let f = closed_form_at_angle(&c, FRAC_PI_2, PI);
        let a = winding_number(&c, &f).unwrap().q;
        let b = winding_number(&c, &rotate_global(&f, &PulseOp::y(PI))).unwrap().q;
        assert!((a + b).abs() < 1e-9);
    }

    #[test]
    fn refinement_changes_winding_little() {
        let coarse = crystal();
        let fine = generate_crystal(12.0, 150.0).unwrap();
        let a = winding_number(&coarse, &closed_form_at_angle(&coarse, FRAC_PI_2, PI)).unwrap().q;
        let b = winding_number(&fine, &closed_form_at_angle(&fine, FRAC_PI_2, PI)).unwrap().q;
        assert!((a - b).abs() < 0.01, "{a} {b}");
    }

    #[test]
    fn salts_agree() {
        let c = crystal();
        let f = closed_form_at_angle(&c, 0.4, 0.8 * PI);
        let base = winding_number(&c, &f).unwrap().q;
        for salt in 1..6 {
            let q = winding_analysis(&c, &f, WindingOptions { salt, ..Default::default() }).unwrap().q;
            assert!((q - base).abs() < 1e-6);
        }
    }

    #[test]
    fn skyrmion_order_parameter_reduces_to_radial_sum() {
        let c = crystal();
        let psi = order_parameter(&c, &closed_form_at_angle(&c, FRAC_PI_2, PI)).unwrap();
        let n = c.len() as f64;
        let expect: f64 =
            (0..c.len()).map(|j| c.normalized_radius(j) * (PI * c.normalized_radius(j)).sin()).sum::<f64>() / n;
        assert!((psi.magnitude() - expect).abs() < 1e-12);
    }

    #[test]
    fn uniform_up_has_vanishing_order_parameter() {
        let c = crystal();
        let f = BlochField::uniform(c.len(), Vec3::Z, Basis::Lab).unwrap();
        assert!(order_parameter(&c, &f).unwrap().magnitude() < 1e-9);
    }

    #[test]
    fn fidelity_examples() {
        let t = BlochField::uniform(3, Vec3::X, Basis::Lab).unwrap();
        let same = mean_fidelity(&t, &t).unwrap().mean;
        let opp = mean_fidelity(&BlochField::uniform(3, -Vec3::X, Basis::Lab).unwrap(), &t).unwrap().mean;
        let perp = mean_fidelity(&BlochField::uniform(3, Vec3::Y, Basis::Lab).unwrap(), &t).unwrap().mean;
        assert_eq!((same, opp, perp), (1.0, 0.0, 0.5));
        let short = BlochField::uniform(2, Vec3::X, Basis::Lab).unwrap();
        assert!(matches!(mean_fidelity(&short, &t), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn omega_fit_from_winding_series() {
        let w = TAU * 1560.0;
        let series: Vec<_> = (0..=32)
            .map(|k| {
                let t = k as f64 / 32.0 * TAU / w;
                (t, winding_continuum(w * t))
            })
            .collect();
        let est = fit_omega_r_winding(&series).unwrap();
        assert!((est.value / w - 1.0).abs() < 1e-6, "{}", est.value);
        let flat: Vec<_> = series.iter().map(|&(t, _)| (t, -0.3)).collect();
        assert!(matches!(fit_omega_r_winding(&flat), Err(Error::FitFailure { .. })));
    }

    #[test]
    fn omega_fit_from_fields() {
        let c = generate_crystal(30.0, 150.0).unwrap();
        let w = TAU * 1560.0;
        let series: Vec<_> = (0..8)
            .map(|k| {
                let t = k as f64 * 50e-6;
                (t, closed_form_at_angle(&c, 0.7, w * t))
            })
            .collect();
        let est = fit_omega_r_fields(&c, &series, 0.7).unwrap();
        assert!((est.value / w - 1.0).abs() < 1e-8);
    }

    fn erf_profile(sigma: f64, r0: f64) -> Vec<(f64, f64)> {
        (0..40)
            .map(|k| {
                let r = 60.0 + 5.0 * k as f64;
                (r, 0.1 + 0.8 * 0.5 * (1.0 + libm::erf((r - r0) / (SQRT_2 * sigma))))
            })
            .collect()
    }

    #[test]
    fn edge_fit_recovers_sigma() {
        let fit = fit_edge_width(&erf_profile(11.0, 150.0)).unwrap();
        assert!((fit.width - 28.194).abs() < 0.02 * 28.2, "{}", fit.width);
        assert!((fit.sigma - 11.0).abs() < 1e-6);
        assert!((fit.r0 - 150.0).abs() < 1e-6);
    }

    #[test]
    fn width_factor_is_ten_ninety_span() {
        // Oracle: bisect erf(z) = 0.8 for z = erf⁻¹(0.8).
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if libm::erf(mid) < 0.8 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((2.0 * SQRT_2 * lo - EDGE_WIDTH_FACTOR).abs() < 1e-12);
    }

    #[test]
    fn step_profile_has_narrow_edge() {
        let prof: Vec<_> = (0..30)
            .map(|k| {
                let r = 10.0 * k as f64;
                (r, if r < 147.0 { 0.0 } else { 1.0 })
            })
            .collect();
        let fit = fit_edge_width(&prof).unwrap();
        assert!(fit.width < 10.0, "{}", fit.width);
    }

    #[test]
    fn flat_profile_fails() {
        let prof: Vec<_> = (0..10).map(|k| (k as f64, 0.5)).collect();
        assert!(matches!(fit_edge_width(&prof), Err(Error::FitFailure { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn winding_invariant_under_rotation_with_axis(ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0, angle in 0.0f64..TAU) {
            let axis = Vec3::new(ax, ay, az);
            prop_assume!(axis.norm() > 0.1);
            let axis = axis.normalized().unwrap();
            let c = generate_crystal(30.0, 150.0).unwrap();
            let f = closed_form_at_angle(&c, 0.3, PI);
            let base = winding_number(&c, &f).unwrap().q;
            let rot = f.in_basis(Basis::Rotated);
            let moved: Vec<Vec3> = rot.vectors().iter().map(|v| v.rotated(axis, angle)).collect();
            let moved = BlochField::new(moved, Basis::Rotated).unwrap();
            let opts = WindingOptions { polarity_axis: Vec3::Z.rotated(axis, angle), salt: 0 };
            let q = winding_analysis(&c, &moved, opts).unwrap().q;
            prop_assert!((q - base).abs() < 1e-9);
        }

        #[test]
        fn psi_magnitude_invariant_under_crystal_rotation(delta in -PI..PI) {
            let c = generate_crystal(30.0, 150.0).unwrap();
            let a = order_parameter(&c, &closed_form_at_angle(&c, 0.5, PI)).unwrap();
            let r = c.rotated(delta);
            let b = order_parameter(&r, &closed_form_at_angle(&r, 0.5 - delta, PI)).unwrap();
            prop_assert!((a.magnitude() - b.magnitude()).abs() < 1e-12);
        }

        #[test]
        fn fidelity_of_shrunk_self_target(lambda in 0.0f64..1.0) {
            let c = generate_crystal(30.0, 150.0).unwrap();
            let t = closed_form_at_angle(&c, 0.5, PI);
            let shrunk: Vec<Vec3> = t.vectors().iter().map(|v| *v * lambda).collect();
            let f = BlochField::new(shrunk, t.basis()).unwrap();
            prop_assert!((mean_fidelity(&f, &t).unwrap().mean - 0.5 * (1.0 + lambda)).abs() < 1e-12);
        }
    }
}
