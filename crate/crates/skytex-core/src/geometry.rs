//! Crystal lattice in the co-rotating frame.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::rng;

/// One ion, in rotating-frame polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ion {
    /// Radius in µm.
    pub r: f64,
    /// Azimuth in rad, in `[0, 2π)`.
    pub phi: f64,
}

impl Ion {
    /// Builds an ion from Cartesian coordinates.
    pub fn from_xy(x: f64, y: f64) -> Ion {
        Ion { r: x.hypot(y), phi: wrap_angle(y.atan2(x)) }
    }

    /// Cartesian coordinates `(x, y)` in µm.
    pub fn xy(&self) -> (f64, f64) {
        let (s, c) = self.phi.sin_cos();
        (self.r * c, self.r * s)
    }
}

/// Maps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % TAU;
    if w < 0.0 {
        w += TAU;
    }
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_signed(a: f64) -> f64 {
    let w = wrap_angle(a);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// A planar ion crystal with radius `R` and nominal lattice spacing `a`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IonCrystal {
    ions: Vec<Ion>,
    radius: f64,
    spacing: f64,
}

impl IonCrystal {
    /// Wraps explicit ion positions.
    ///
    /// Fails unless `radius > 0`, `spacing > 0`, and every ion has a finite
    /// `0 ≤ r ≤ radius`. Azimuths are wrapped into `[0, 2π)`.
    pub fn new(ions: Vec<Ion>, radius: f64, spacing: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "must be positive and finite"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing", "must be positive and finite"));
        }
        let mut ions = ions;
        for (j, ion) in ions.iter_mut().enumerate() {
            if !(ion.r >= 0.0 && ion.r <= radius * (1.0 + 1e-12)) || !ion.phi.is_finite() {
                return Err(invalid("ions", alloc::format!("ion {j} at r = {} outside [0, R = {radius}]", ion.r)));
            }
            ion.phi = wrap_angle(ion.phi);
        }
        Ok(IonCrystal { ions, radius, spacing })
    }

    /// The ions, in construction order.
    pub fn ions(&self) -> &[Ion] {
        &self.ions
    }

    /// Number of ions.
    pub fn len(&self) -> usize {
        self.ions.len()
    }

    /// `true` when the crystal has no ions.
    pub fn is_empty(&self) -> bool {
        self.ions.is_empty()
    }

    /// Crystal radius `R` in µm.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Nominal lattice spacing in µm.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Normalized radius `r_j / R` of ion `j`.
    pub fn normalized_radius(&self, j: usize) -> f64 {
        (self.ions[j].r / self.radius).min(1.0)
    }

    /// Cartesian positions in µm.
    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.ions.iter().map(Ion::xy).collect()
    }

    /// The crystal rigidly rotated by `delta` about the origin.
    pub fn rotated(&self, delta: f64) -> IonCrystal {
        let ions = self.ions.iter().map(|i| Ion { r: i.r, phi: wrap_angle(i.phi + delta) }).collect();
        IonCrystal { ions, radius: self.radius, spacing: self.spacing }
    }

    /// Smallest distance between two ions (infinite for fewer than two).
    pub fn min_pairwise_distance(&self) -> f64 {
        let p = self.positions();
        let mut best = f64::INFINITY;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                best = best.min((p[i].0 - p[j].0).hypot(p[i].1 - p[j].1));
            }
        }
        best
    }

    /// Index of the ion closest to the origin.
    pub fn central_ion(&self) -> Option<usize> {
        (0..self.ions.len()).min_by(|&a, &b| self.ions[a].r.total_cmp(&self.ions[b].r))
    }
}

/// Triangular lattice with spacing `spacing` clipped to a disk of `radius`.
///
/// Sites sit at `a·(i + j/2, j·√3/2)`; one is at the origin. Ions are sorted
/// by radius then azimuth. `R` is the largest ion radius, or `radius` when
/// the origin is the only site.
pub fn generate_crystal(spacing: f64, radius: f64) -> Result<IonCrystal> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid("spacing", "must be positive and finite"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("radius", "must be positive and finite"));
    }
    let limit = radius * (1.0 + 1e-12);
    let h = 3.0f64.sqrt() / 2.0;
    let jmax = (radius / (spacing * h)).floor() as i64 + 1;
    let mut ions = Vec::new();
    for j in -jmax..=jmax {
        let y = spacing * h * j as f64;
        let imax = (radius / spacing).ceil() as i64 + jmax.abs() + 1;
        for i in -imax..=imax {
            let x = spacing * (i as f64 + 0.5 * j as f64);
            let ion = Ion::from_xy(x, y);
            if ion.r <= limit {
                ions.push(ion);
            }
        }
    }
    sort_ions(&mut ions);
    let rmax = ions.iter().fold(0.0f64, |m, i| m.max(i.r));
    let r = if rmax > 0.0 { rmax } else { radius };
    IonCrystal::new(ions, r, spacing)
}

/// Like [`generate_crystal`], then displaces every site uniformly within a
/// disk of radius `jitter` (seeded, one stream per site). `R` is recomputed
/// from the displaced positions.
pub fn generate_crystal_jittered(spacing: f64, radius: f64, jitter: f64, seed: u64) -> Result<IonCrystal> {
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(invalid("jitter", "must be non-negative and finite"));
    }
    let base = generate_crystal(spacing, radius)?;
    if jitter == 0.0 {
        return Ok(base);
    }
    let ions: Vec<Ion> = base
        .ions
        .iter()
        .enumerate()
        .map(|(j, ion)| {
            let mut g = rng::stream(seed, rng::DOMAIN_JITTER, j as u64);
            let rho = jitter * g.gen::<f64>().sqrt();
            let ang = TAU * g.gen::<f64>();
            let (x, y) = ion.xy();
            Ion::from_xy(x + rho * ang.cos(), y + rho * ang.sin())
        })
        .collect();
    let rmax = ions.iter().fold(0.0f64, |m, i| m.max(i.r));
    let r = if rmax > 0.0 { rmax } else { base.radius };
    IonCrystal::new(ions, r, spacing)
}

fn sort_ions(ions: &mut [Ion]) {
    let key = |i: &Ion| ((i.r * 1e9).round(), (i.phi * 1e12).round());
    ions.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
}
