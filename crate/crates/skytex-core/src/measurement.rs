//! Projective readout, polar binning and binned Bloch-vector reconstruction.

use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{check_len, invalid, Error, Result};
use crate::geometry::{wrap_angle, wrap_signed, IonCrystal};
use crate::rng;
use crate::spin::BlochField;
use crate::vector::Vec3;

/// Lab-frame measurement axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MeasurementBasis {
    /// σ_x.
    X,
    /// σ_y.
    Y,
    /// σ_z.
    Z,
}

impl MeasurementBasis {
    /// All three axes.
    pub const ALL: [MeasurementBasis; 3] = [MeasurementBasis::X, MeasurementBasis::Y, MeasurementBasis::Z];

    /// Position in `(x, y, z)`.
    pub fn index(self) -> usize {
        self as usize
    }

    /// The component of `v` along this axis.
    pub fn component(self, v: Vec3) -> f64 {
        v.to_array()[self.index()]
    }

    fn domain(self) -> u64 {
        match self {
            MeasurementBasis::X => rng::DOMAIN_SHOTS_X,
            MeasurementBasis::Y => rng::DOMAIN_SHOTS_Y,
            MeasurementBasis::Z => rng::DOMAIN_SHOTS_Z,
        }
    }
}

impl core::fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            MeasurementBasis::X => "x",
            MeasurementBasis::Y => "y",
            MeasurementBasis::Z => "z",
        })
    }
}

/// Single-shot outcomes of one basis: `1` = bright (`|↑⟩`).
#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord {
    basis: MeasurementBasis,
    n_shots: usize,
    n_ions: usize,
    outcomes: Vec<u8>,
    seed: u64,
    epsilon: f64,
}

impl ShotRecord {
    /// Wraps a shot-major `n_shots × n_ions` matrix of 0/1 outcomes.
    pub fn new(
        basis: MeasurementBasis,
        n_shots: usize,
        n_ions: usize,
        outcomes: Vec<u8>,
        seed: u64,
        epsilon: f64,
    ) -> Result<Self> {
        check_len(n_shots * n_ions, outcomes.len())?;
        check_epsilon(epsilon)?;
        if let Some(k) = outcomes.iter().position(|&b| b > 1) {
            return Err(invalid("outcomes", alloc::format!("entry {k} is not 0 or 1")));
        }
        Ok(ShotRecord { basis, n_shots, n_ions, outcomes, seed, epsilon })
    }

    /// Measured axis.
    pub fn basis(&self) -> MeasurementBasis {
        self.basis
    }

    /// Number of shots.
    pub fn n_shots(&self) -> usize {
        self.n_shots
    }

    /// Number of ions.
    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    /// Seed the record was sampled with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Misclassification rate used when sampling.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Outcome of `ion` in `shot`.
    pub fn bit(&self, shot: usize, ion: usize) -> bool {
        self.outcomes[shot * self.n_ions + ion] == 1
    }

    /// The shot-major outcome matrix.
    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    /// Bright counts per ion.
    pub fn ion_counts(&self) -> Vec<u64> {
        let mut c = alloc::vec![0u64; self.n_ions];
        for row in self.outcomes.chunks_exact(self.n_ions.max(1)) {
            for (k, &b) in row.iter().enumerate() {
                c[k] += b as u64;
            }
        }
        c
    }

    /// Mean outcome over all shots and ions.
    pub fn mean(&self) -> f64 {
        let s: u64 = self.outcomes.iter().map(|&b| b as u64).sum();
        s as f64 / self.outcomes.len() as f64
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..0.5).contains(&epsilon) {
        Ok(())
    } else {
        Err(invalid("epsilon", "must lie in [0, 0.5)"))
    }
}

/// Bright probability with symmetric misclassification:
/// `p' = p(1−ε) + (1−p)ε`, `p = (1 + u_b)/2`.
pub fn bright_probability(u: Vec3, basis: MeasurementBasis, epsilon: f64) -> f64 {
    let p = (0.5 * (1.0 + basis.component(u))).clamp(0.0, 1.0);
    p * (1.0 - epsilon) + (1.0 - p) * epsilon
}

/// Samples `n_shots` projective measurements of every ion along `basis`.
///
/// Ion `j` draws from stream `j` of the basis domain, so the record does not
/// depend on the order in which ions or shots are generated.
pub fn simulate_shots(
    field: &BlochField,
    basis: MeasurementBasis,
    n_shots: usize,
    epsilon: f64,
    seed: u64,
) -> Result<ShotRecord> {
    if n_shots == 0 {
        return Err(invalid("n_shots", "must be at least 1"));
    }
    check_epsilon(epsilon)?;
    let lab = field.lab_vectors();
    let n = lab.len();
    let mut outcomes = alloc::vec![0u8; n_shots * n];
    for (j, u) in lab.iter().enumerate() {
        let p = bright_probability(*u, basis, epsilon);
        let mut g = rng::stream(seed, basis.domain(), j as u64);
        for s in 0..n_shots {
            outcomes[s * n + j] = (g.gen::<f64>() < p) as u8;
        }
    }
    Ok(ShotRecord { basis, n_shots, n_ions: n, outcomes, seed, epsilon })
}

/// Equal-width annuli in `r̃` times equal-width sectors in `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinGrid {
    /// Number of annuli.
    pub n_radial: usize,
    /// Number of sectors.
    pub n_azimuthal: usize,
}

impl Default for BinGrid {
    /// 10 annuli × 22 sectors = 220 bins.
    fn default() -> Self {
        BinGrid { n_radial: 10, n_azimuthal: 22 }
    }
}

impl BinGrid {
    fn validate(&self) -> Result<()> {
        if self.n_radial == 0 || self.n_azimuthal == 0 {
            return Err(invalid("bins", "grid needs at least one row and one column"));
        }
        Ok(())
    }

    /// Total number of bins.
    pub fn len(&self) -> usize {
        self.n_radial * self.n_azimuthal
    }

    /// `true` for a grid without bins.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bin of a point at normalized radius `r_norm` and azimuth `phi`
    /// (annulus-major). `r̃ = 1` falls in the outer annulus.
    pub fn index(&self, r_norm: f64, phi: f64) -> usize {
        let k = ((r_norm * self.n_radial as f64).floor() as usize).min(self.n_radial - 1);
        let m = ((wrap_angle(phi) / TAU * self.n_azimuthal as f64).floor() as usize).min(self.n_azimuthal - 1);
        k * self.n_azimuthal + m
    }

    /// `(r̃, φ)` of the centre of bin `b`.
    pub fn center(&self, b: usize) -> (f64, f64) {
        let (k, m) = (b / self.n_azimuthal, b % self.n_azimuthal);
        ((k as f64 + 0.5) / self.n_radial as f64, (m as f64 + 0.5) * TAU / self.n_azimuthal as f64)
    }
}

/// One polar bin.
#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    /// Centre radius in µm.
    pub r_center: f64,
    /// Centre azimuth in rad (before any phase offset).
    pub phi_center: f64,
    /// Ions assigned to the bin.
    pub members: Vec<usize>,
    /// Bright probability per basis (`None` when not measured or empty).
    pub p_up: [Option<f64>; 3],
    /// Lab-frame Bloch vector, once reconstructed.
    pub u: Option<Vec3>,
}

impl Bin {
    /// Number of ions in the bin.
    pub fn n_ions(&self) -> usize {
        self.members.len()
    }

    /// `true` when no ion falls in the bin.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A field aggregated on a [`BinGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedField {
    bins: Vec<Bin>,
    grid: BinGrid,
    radius: f64,
    phase_offset: f64,
}

impl BinnedField {
    /// Assembles a binned field; `bins` must match the grid size.
    pub fn new(bins: Vec<Bin>, grid: BinGrid, radius: f64, phase_offset: f64) -> Result<Self> {
        grid.validate()?;
        check_len(grid.len(), bins.len())?;
        Ok(BinnedField { bins, grid, radius, phase_offset })
    }

    /// The bins, annulus-major.
    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    /// The grid.
    pub fn grid(&self) -> BinGrid {
        self.grid
    }

    /// Crystal radius used for `r̃`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Azimuthal shift applied when comparing with targets.
    pub fn phase_offset(&self) -> f64 {
        self.phase_offset
    }

    /// Number of bins without ions.
    pub fn empty_count(&self) -> usize {
        self.bins.iter().filter(|b| b.is_empty()).count()
    }

    /// Ion-average of `field` (lab frame) in each non-empty bin.
    pub fn average_of(&self, field: &BlochField) -> Vec<Option<Vec3>> {
        let lab = field.lab_vectors();
        self.bins
            .iter()
            .map(|b| {
                if b.is_empty() {
                    return None;
                }
                let s = b.members.iter().fold(Vec3::ZERO, |acc, &j| acc + lab[j]);
                Some(s * (1.0 / b.n_ions() as f64))
            })
            .collect()
    }

    /// Pure-state target per non-empty bin: the normalized ion-average of
    /// `target` evaluated at each member's `(r̃_j, φ_j + phase_offset)`.
    pub fn target_vectors(&self, crystal: &IonCrystal, target: &dyn TargetTexture) -> Vec<Option<Vec3>> {
        self.target_vectors_at(crystal, target, self.phase_offset)
    }

    fn target_vectors_at(&self, crystal: &IonCrystal, target: &dyn TargetTexture, offset: f64) -> Vec<Option<Vec3>> {
        self.bins
            .iter()
            .map(|b| {
                if b.is_empty() {
                    return None;
                }
                let s = b.members.iter().fold(Vec3::ZERO, |acc, &j| {
                    acc + target.evaluate(crystal.normalized_radius(j), crystal.ions()[j].phi + offset)
                });
                s.normalized().or_else(|| {
                    let (r, phi) = (b.r_center / self.radius, b.phi_center + offset);
                    target.evaluate(r, phi).normalized()
                })
            })
            .collect()
    }
}

/// An analytic texture that can be evaluated anywhere on the disk.
pub trait TargetTexture {
    /// Lab-frame unit Bloch vector at normalized radius `r_norm`, azimuth `phi`.
    fn evaluate(&self, r_norm: f64, phi: f64) -> Vec3;
}

impl<F: Fn(f64, f64) -> Vec3> TargetTexture for F {
    fn evaluate(&self, r_norm: f64, phi: f64) -> Vec3 {
        self(r_norm, phi)
    }
}

fn empty_bins(crystal: &IonCrystal, grid: BinGrid) -> Vec<Bin> {
    let mut bins: Vec<Bin> = (0..grid.len())
        .map(|b| {
            let (r, phi) = grid.center(b);
            Bin { r_center: r * crystal.radius(), phi_center: phi, members: Vec::new(), p_up: [None; 3], u: None }
        })
        .collect();
    for (j, ion) in crystal.ions().iter().enumerate() {
        bins[grid.index(crystal.normalized_radius(j), ion.phi)].members.push(j);
    }
    bins
}

/// Options for [`bin_polar_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BinOptions {
    /// When set, every shot sees the crystal rigidly rotated by a uniform
    /// random angle drawn from this seed before binning.
    pub orientation_seed: Option<u64>,
}

/// Aggregates shot records (at most one per basis) onto polar bins.
pub fn bin_polar(crystal: &IonCrystal, records: &[ShotRecord], grid: BinGrid) -> Result<BinnedField> {
    bin_polar_with(crystal, records, grid, BinOptions::default())
}

/// [`bin_polar`] with options.
pub fn bin_polar_with(
    crystal: &IonCrystal,
    records: &[ShotRecord],
    grid: BinGrid,
    opts: BinOptions,
) -> Result<BinnedField> {
    grid.validate()?;
    let mut seen = [false; 3];
    for r in records {
        check_len(crystal.len(), r.n_ions())?;
        if core::mem::replace(&mut seen[r.basis().index()], true) {
            return Err(invalid("records", alloc::format!("two records for basis {}", r.basis())));
        }
    }
    let mut bins = empty_bins(crystal, grid);
    for rec in records {
        let bi = rec.basis().index();
        let mut ups = alloc::vec![0u64; grid.len()];
        let mut tot = alloc::vec![0u64; grid.len()];
        match opts.orientation_seed {
            None => {
                let counts = rec.ion_counts();
                for (b, bin) in bins.iter().enumerate() {
                    for &j in &bin.members {
                        ups[b] += counts[j];
                        tot[b] += rec.n_shots() as u64;
                    }
                }
            }
            Some(seed) => {
                for s in 0..rec.n_shots() {
                    let stream = ((bi as u64) << 40) | s as u64;
                    let theta = TAU * rng::stream(seed, rng::DOMAIN_ORIENTATION, stream).gen::<f64>();
                    for (j, ion) in crystal.ions().iter().enumerate() {
                        let b = grid.index(crystal.normalized_radius(j), ion.phi + theta);
                        ups[b] += rec.bit(s, j) as u64;
                        tot[b] += 1;
                    }
                }
            }
        }
        for (b, bin) in bins.iter_mut().enumerate() {
            if tot[b] > 0 && !bin.is_empty() {
                bin.p_up[bi] = Some(ups[b] as f64 / tot[b] as f64);
            }
        }
    }
    BinnedField::new(bins, grid, crystal.radius(), 0.0)
}

/// Exact bin averages of a field (infinite-shot, ε = 0 limit).
pub fn bin_field(crystal: &IonCrystal, field: &BlochField, grid: BinGrid) -> Result<BinnedField> {
    grid.validate()?;
    check_len(crystal.len(), field.len())?;
    let bins = empty_bins(crystal, grid);
    let mut out = BinnedField { bins, grid, radius: crystal.radius(), phase_offset: 0.0 };
    let avg = out.average_of(field);
    for (bin, u) in out.bins.iter_mut().zip(avg) {
        if let Some(u) = u {
            bin.u = Some(u);
            for basis in MeasurementBasis::ALL {
                bin.p_up[basis.index()] = Some(0.5 * (1.0 + basis.component(u)));
            }
        }
    }
    Ok(out)
}

/// `u = 2p − 1` per basis in every non-empty bin, and records the azimuthal
/// `phase_offset` used for later target comparisons.
pub fn reconstruct_bloch(binned: &BinnedField, phase_offset: f64) -> Result<BinnedField> {
    let mut out = binned.clone();
    out.phase_offset = phase_offset;
    for bin in out.bins.iter_mut().filter(|b| !b.is_empty()) {
        let mut u = [0.0; 3];
        for basis in MeasurementBasis::ALL {
            let p = bin.p_up[basis.index()].ok_or(Error::IncompleteData { basis })?;
            u[basis.index()] = 2.0 * p - 1.0;
        }
        bin.u = Some(Vec3::from_array(u));
    }
    Ok(out)
}

/// Azimuthal grid step of [`fit_phase_offset`] (0.5°).
pub const PHASE_GRID_STEP: f64 = TAU / 720.0;

/// Azimuthal shift `α` maximizing the mean fidelity between the binned
/// reconstruction and `target` evaluated at `φ + α`.
///
/// A 0.5° grid search is refined by golden-section search on the best
/// bracket. Returns a value in `(−π, π]`.
pub fn fit_phase_offset(crystal: &IonCrystal, binned: &BinnedField, target: &dyn TargetTexture) -> Result<f64> {
    let mut data = Vec::new();
    for (b, bin) in binned.bins.iter().enumerate() {
        if bin.is_empty() {
            continue;
        }
        match bin.u {
            Some(u) => data.push((b, u)),
            None => {
                let basis = MeasurementBasis::ALL
                    .into_iter()
                    .find(|x| bin.p_up[x.index()].is_none())
                    .unwrap_or(MeasurementBasis::X);
                return Err(Error::IncompleteData { basis });
            }
        }
    }
    if data.is_empty() || azimuthally_uniform(binned) {
        return Err(Error::NoUniquePhase);
    }
    let score = |alpha: f64| {
        let t = binned.target_vectors_at(crystal, target, alpha);
        let s: f64 = data.iter().map(|&(b, u)| 0.5 * (1.0 + u.dot(t[b].unwrap_or(Vec3::ZERO)))).sum();
        s / data.len() as f64
    };
    let n = (TAU / PHASE_GRID_STEP).round() as usize;
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut worst = f64::INFINITY;
    for k in 0..n {
        let a = k as f64 * PHASE_GRID_STEP;
        let s = score(a);
        worst = worst.min(s);
        if s > best.1 {
            best = (a, s);
        }
    }
    if best.1 - worst <= 1e-12 {
        return Err(Error::NoUniquePhase);
    }
    let (mut lo, mut hi) = (best.0 - PHASE_GRID_STEP, best.0 + PHASE_GRID_STEP);
    let g = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (score(x1), score(x2));
    for _ in 0..40 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = score(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = score(x2);
        }
    }
    let refined = if f1.max(f2) >= best.1 { 0.5 * (lo + hi) } else { best.0 };
    Ok(wrap_signed(refined))
}

/// Every annulus shows the same vector in all of its non-empty sectors.
fn azimuthally_uniform(binned: &BinnedField) -> bool {
    let na = binned.grid.n_azimuthal;
    binned.bins.chunks(na).all(|ring| {
        let mut it = ring.iter().filter_map(|b| b.u);
        match it.next() {
            None => true,
            Some(first) => it.all(|u| u.max_abs_diff(first) <= 1e-9),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::closed_form_vector;
    use crate::geometry::generate_crystal;
    use crate::spin::Basis;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn skyrmion(crystal: &IonCrystal, psi: f64) -> BlochField {
        let v = crystal
            .ions()
            .iter()
            .enumerate()
            .map(|(j, i)| closed_form_vector(crystal.normalized_radius(j), i.phi, psi, PI))
            .collect();
        BlochField::new(v, Basis::Lab).unwrap()
    }

    fn all_bases(field: &BlochField, shots: usize, eps: f64, seed: u64) -> Vec<ShotRecord> {
        MeasurementBasis::ALL.iter().map(|&b| simulate_shots(field, b, shots, eps, seed).unwrap()).collect()
    }

    #[test]
    fn up_state_always_bright() {
        let f = BlochField::uniform(5, Vec3::Z, Basis::Lab).unwrap();
        let r = simulate_shots(&f, MeasurementBasis::Z, 100, 0.0, 1).unwrap();
        assert!(r.outcomes().iter().all(|&b| b == 1));
    }

    #[test]
    fn equatorial_state_is_fair_coin() {
        let f = BlochField::uniform(10, Vec3::X, Basis::Lab).unwrap();
        let r = simulate_shots(&f, MeasurementBasis::Z, 20_000, 0.0, 2).unwrap();
        let sigma = (0.25 / 200_000.0f64).sqrt();
        assert!((r.mean() - 0.5).abs() < 4.0 * sigma);
    }

    #[test]
    fn flip_rate_shrinks_bright_fraction() {
        let f = BlochField::uniform(1, Vec3::Z, Basis::Lab).unwrap();
        let r = simulate_shots(&f, MeasurementBasis::Z, 100_000, 0.02, 3).unwrap();
        let sigma = (0.98 * 0.02 / 100_000.0f64).sqrt();
        assert!((r.mean() - 0.98).abs() < 3.0 * sigma);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = BlochField::uniform(1, Vec3::Z, Basis::Lab).unwrap();
        assert!(simulate_shots(&f, MeasurementBasis::Z, 0, 0.0, 1).is_err());
        assert!(simulate_shots(&f, MeasurementBasis::Z, 1, 0.5, 1).is_err());
        let c = generate_crystal(30.0, 60.0).unwrap();
        assert!(bin_polar(&c, &[], BinGrid { n_radial: 0, n_azimuthal: 3 }).is_err());
    }

    #[test]
    fn single_bin_is_global_mean() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = skyrmion(&c, FRAC_PI_2);
        let recs = all_bases(&f, 50, 0.0, 4);
        let b = bin_polar(&c, &recs, BinGrid { n_radial: 1, n_azimuthal: 1 }).unwrap();
        for r in &recs {
            assert!((b.bins()[0].p_up[r.basis().index()].unwrap() - r.mean()).abs() < 1e-15);
        }
    }

    #[test]
    fn binning_preserves_global_mean() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = skyrmion(&c, FRAC_PI_2);
        let recs = all_bases(&f, 40, 0.02, 5);
        let b = bin_polar(&c, &recs, BinGrid::default()).unwrap();
        for r in &recs {
            let s: f64 =
                b.bins().iter().filter_map(|bin| bin.p_up[r.basis().index()].map(|p| p * bin.n_ions() as f64)).sum();
            assert!((s / c.len() as f64 - r.mean()).abs() < 1e-12);
        }
        assert_eq!(b.bins().iter().map(Bin::n_ions).sum::<usize>(), c.len());
        assert_eq!(b.bins().len(), 220);
    }

    #[test]
    fn uniform_up_field_bins_to_unit_probability() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = BlochField::uniform(c.len(), Vec3::Z, Basis::Lab).unwrap();
        let recs = all_bases(&f, 30, 0.0, 6);
        let b = bin_polar(&c, &recs, BinGrid { n_radial: 4, n_azimuthal: 7 }).unwrap();
        for bin in b.bins().iter().filter(|b| !b.is_empty()) {
            assert_eq!(bin.p_up[2], Some(1.0));
        }
    }

    #[test]
    fn reconstruction_examples_and_missing_basis() {
        let mk = |p: [f64; 3]| {
            let bin = Bin { r_center: 1.0, phi_center: 0.0, members: alloc::vec![0], p_up: p.map(Some), u: None };
            BinnedField::new(alloc::vec![bin], BinGrid { n_radial: 1, n_azimuthal: 1 }, 1.0, 0.0).unwrap()
        };
        let r = reconstruct_bloch(&mk([0.5, 0.5, 1.0]), 0.0).unwrap();
        assert_eq!(r.bins()[0].u, Some(Vec3::Z));
        let r = reconstruct_bloch(&mk([1.0, 0.5, 0.5]), 0.0).unwrap();
        assert_eq!(r.bins()[0].u, Some(Vec3::X));
        let c = generate_crystal(30.0, 60.0).unwrap();
        let f = BlochField::uniform(c.len(), Vec3::Z, Basis::Lab).unwrap();
        let recs: Vec<_> = [MeasurementBasis::X, MeasurementBasis::Z]
            .iter()
            .map(|&b| simulate_shots(&f, b, 5, 0.0, 1).unwrap())
            .collect();
        let b = bin_polar(&c, &recs, BinGrid::default()).unwrap();
        assert_eq!(reconstruct_bloch(&b, 0.0).unwrap_err(), Error::IncompleteData { basis: MeasurementBasis::Y });
    }

    #[test]
    fn orientation_jitter_keeps_global_mean() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = skyrmion(&c, FRAC_PI_2);
        let recs = all_bases(&f, 20, 0.0, 8);
        let opts = BinOptions { orientation_seed: Some(3) };
        let b = bin_polar_with(&c, &recs, BinGrid { n_radial: 1, n_azimuthal: 1 }, opts).unwrap();
        assert!((b.bins()[0].p_up[0].unwrap() - recs[0].mean()).abs() < 1e-15);
    }

    fn target(psi: f64) -> impl Fn(f64, f64) -> Vec3 {
        move |r, phi| closed_form_vector(r, phi, psi, PI)
    }

    #[test]
    fn phase_offset_recovers_shift() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        for &delta in &[0.0, 0.3, -1.2, 2.9] {
            let data = bin_field(&c, &skyrmion(&c, FRAC_PI_2 + delta), BinGrid::default()).unwrap();
            let a = fit_phase_offset(&c, &data, &target(FRAC_PI_2)).unwrap();
            assert!(wrap_signed(a - delta).abs() < 1e-3, "{delta}: {a}");
        }
    }

    #[test]
    fn uniform_texture_has_no_phase() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = BlochField::uniform(c.len(), Vec3::Z, Basis::Lab).unwrap();
        let data = bin_field(&c, &f, BinGrid::default()).unwrap();
        let up = |_: f64, _: f64| Vec3::Z;
        assert_eq!(fit_phase_offset(&c, &data, &up), Err(Error::NoUniquePhase));
        assert_eq!(fit_phase_offset(&c, &data, &target(FRAC_PI_2)), Err(Error::NoUniquePhase));
    }

    #[test]
    fn records_are_reproducible() {
        let c = generate_crystal(24.0, 150.0).unwrap();
        let f = skyrmion(&c, FRAC_PI_2);
        assert_eq!(all_bases(&f, 30, 0.02, 11), all_bases(&f, 30, 0.02, 11));
        assert_ne!(all_bases(&f, 30, 0.02, 11), all_bases(&f, 30, 0.02, 12));
    }
}
