//! Per-ion Bloch vectors, global pulses and the rotated display basis.
//!
//! The rotated basis is `(𝒳, 𝒴, 𝒵) = (Z, Y, −X)`: the lab frame turned by
//! π/2 about Y so the texture's topological axis is vertical. It is a proper
//! rotation, so cross products and solid angles keep their sign.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::vector::Vec3;

/// Which frame a field's components are expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Basis {
    /// Lab frame `(X, Y, Z)`.
    Lab,
    /// Rotated frame `(𝒳, 𝒴, 𝒵) = (Z, Y, −X)`.
    Rotated,
}

impl core::fmt::Display for Basis {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Basis::Lab => "lab",
            Basis::Rotated => "rotated",
        })
    }
}

/// Lab components to rotated components.
pub fn lab_to_rotated(u: Vec3) -> Vec3 {
    Vec3::new(u.z, u.y, -u.x)
}

/// Rotated components to lab components.
pub fn rotated_to_lab(u: Vec3) -> Vec3 {
    Vec3::new(-u.z, u.y, u.x)
}

/// One Bloch vector per ion, tagged with its basis.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlochField {
    vectors: Vec<Vec3>,
    basis: Basis,
}

/// Norm slack allowed on Bloch vectors.
pub const NORM_TOLERANCE: f64 = 1e-9;

impl BlochField {
    /// Validates `|u| ≤ 1 + 1e-9` and finite components.
    pub fn new(vectors: Vec<Vec3>, basis: Basis) -> Result<Self> {
        for (j, v) in vectors.iter().enumerate() {
            let n = v.norm();
            if !n.is_finite() || n > 1.0 + NORM_TOLERANCE {
                return Err(invalid("field", alloc::format!("Bloch vector {j} has norm {n}, exceeding 1")));
            }
        }
        Ok(BlochField { vectors, basis })
    }

    pub(crate) fn from_unchecked(vectors: Vec<Vec3>, basis: Basis) -> Self {
        BlochField { vectors, basis }
    }

    /// `n` copies of `v`.
    pub fn uniform(n: usize, v: Vec3, basis: Basis) -> Result<Self> {
        BlochField::new(alloc::vec![v; n], basis)
    }

    /// The vectors in this field's basis.
    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    /// The field's basis.
    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    /// `true` for an empty field.
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The same field expressed in `basis`. Component permutations and sign
    /// flips only, so conversions round-trip exactly.
    pub fn in_basis(&self, basis: Basis) -> BlochField {
        let map: fn(Vec3) -> Vec3 = match (self.basis, basis) {
            (Basis::Lab, Basis::Rotated) => lab_to_rotated,
            (Basis::Rotated, Basis::Lab) => rotated_to_lab,
            _ => return self.clone(),
        };
        BlochField { vectors: self.vectors.iter().map(|&v| map(v)).collect(), basis }
    }

    /// Lab-frame copy of the vectors.
    pub fn lab_vectors(&self) -> Vec<Vec3> {
        self.in_basis(Basis::Lab).vectors
    }
}

/// Rotated-basis copy of `field`.
pub fn to_rotated_basis(field: &BlochField) -> BlochField {
    field.in_basis(Basis::Rotated)
}

/// Lab-basis copy of `field`.
pub fn to_lab_basis(field: &BlochField) -> BlochField {
    field.in_basis(Basis::Lab)
}

/// A global rotation pulse: right-handed rotation of every Bloch vector by
/// `angle` about a lab-frame unit `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawPulse", into = "RawPulse"))]
pub struct PulseOp {
    axis: Vec3,
    angle: f64,
}

impl PulseOp {
    /// Normalizes `axis`; a zero or non-finite axis is rejected.
    pub fn new(axis: Vec3, angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(invalid("pulse.angle", "must be finite"));
        }
        let axis = axis.normalized().ok_or_else(|| invalid("pulse.axis", "axis has zero length"))?;
        Ok(PulseOp { axis, angle })
    }

    /// Rotation about lab X.
    pub fn x(angle: f64) -> Self {
        PulseOp { axis: Vec3::X, angle }
    }

    /// Rotation about lab Y.
    pub fn y(angle: f64) -> Self {
        PulseOp { axis: Vec3::Y, angle }
    }

    /// Rotation about lab Z.
    pub fn z(angle: f64) -> Self {
        PulseOp { axis: Vec3::Z, angle }
    }

    /// Unit rotation axis (lab frame).
    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    /// Rotation angle in rad.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// The pulse undoing this one.
    pub fn inverse(&self) -> Self {
        PulseOp { axis: self.axis, angle: -self.angle }
    }

    /// Applies the pulse to a lab-frame vector.
    pub fn apply(&self, v: Vec3) -> Vec3 {
        if self.angle == 0.0 {
            return v;
        }
        v.rotated(self.axis, self.angle)
    }
}

/// Serialized form of [`PulseOp`].
#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    axis: [f64; 3],
    angle: f64,
}

#[cfg(feature = "serde")]
impl TryFrom<RawPulse> for PulseOp {
    type Error = crate::Error;
    fn try_from(r: RawPulse) -> Result<Self> {
        PulseOp::new(Vec3::from_array(r.axis), r.angle)
    }
}

#[cfg(feature = "serde")]
impl From<PulseOp> for RawPulse {
    fn from(p: PulseOp) -> Self {
        RawPulse { axis: p.axis.to_array(), angle: p.angle }
    }
}

/// Applies `pulse` to every vector. Fields in the rotated basis are rotated
/// about the pulse axis expressed in that basis, so the physical rotation is
/// the same either way.
pub fn rotate_global(field: &BlochField, pulse: &PulseOp) -> BlochField {
    if pulse.angle == 0.0 {
        return field.clone();
    }
    let axis = match field.basis {
        Basis::Lab => pulse.axis,
        Basis::Rotated => lab_to_rotated(pulse.axis),
    };
    let vectors = field.vectors.iter().map(|v| v.rotated(axis, pulse.angle)).collect();
    BlochField { vectors, basis: field.basis }
}

/// Applies a sequence of pulses in order.
pub fn apply_pulses(field: &BlochField, pulses: &[PulseOp]) -> BlochField {
    pulses.iter().fold(field.clone(), |f, p| rotate_global(&f, p))
}
