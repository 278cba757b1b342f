use core::ops::{Add, AddAssign, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;

/// A real 3-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec3 {
    /// x component.
    pub x: f64,
    /// y component.
    pub y: f64,
    /// z component.
    pub z: f64,
}

impl Vec3 {
    /// Unit vector along +x.
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    /// Unit vector along +y.
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    /// Unit vector along +z.
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);
    /// The zero vector.
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    /// Builds a vector from components.
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// Components as an array.
    pub const fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Builds a vector from an array.
    pub const fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    /// Dot product.
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Cross product.
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    /// Euclidean norm.
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(self, o: Vec3) -> f64 {
        (self.x - o.x).abs().max((self.y - o.y).abs()).max((self.z - o.z).abs())
    }

    /// Right-handed rotation about a unit `axis` by `angle` (Rodrigues).
    pub fn rotated(self, axis: Vec3, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (1.0 - c))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Unit quaternion, used as the SU(2) representation of a spin rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    /// Scalar part.
    pub w: f64,
    /// Vector part.
    pub v: Vec3,
}

impl Quaternion {
    /// The identity rotation.
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, v: Vec3::ZERO };

    /// Rotation by `|theta|` about `theta / |theta|`.
    pub fn from_rotation_vector(theta: Vec3) -> Quaternion {
        let angle = theta.norm();
        if angle == 0.0 {
            return Quaternion::IDENTITY;
        }
        let half = 0.5 * angle;
        Quaternion { w: half.cos(), v: theta * (half.sin() / angle) }
    }

    /// Rotation about a unit axis.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Quaternion {
        let (s, c) = (0.5 * angle).sin_cos();
        Quaternion { w: c, v: axis * s }
    }

    /// Hamilton product `self * o` (apply `o` first, then `self`).
    pub fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion { w: self.w * o.w - self.v.dot(o.v), v: o.v * self.w + self.v * o.w + self.v.cross(o.v) }
    }

    /// Rescales to unit norm.
    pub fn normalized(self) -> Quaternion {
        let n = (self.w * self.w + self.v.dot(self.v)).sqrt();
        Quaternion { w: self.w / n, v: self.v * (1.0 / n) }
    }

    /// Rotates a vector.
    pub fn rotate(self, p: Vec3) -> Vec3 {
        let t = self.v.cross(p) * 2.0;
        p + t * self.w + self.v.cross(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn rodrigues_matches_right_hand_rule() {
        let v = Vec3::Z.rotated(Vec3::Y, FRAC_PI_2);
        assert!(v.max_abs_diff(Vec3::X) < 1e-15);
        let v = Vec3::X.rotated(Vec3::Z, FRAC_PI_2);
        assert!(v.max_abs_diff(Vec3::Y) < 1e-15);
    }

    #[test]
    fn quaternion_agrees_with_rodrigues() {
        let axis = Vec3::new(0.3, -0.4, 0.5).normalized().unwrap();
        let p = Vec3::new(0.1, 0.7, -0.2);
        let q = Quaternion::from_axis_angle(axis, 1.234);
        assert!(q.rotate(p).max_abs_diff(p.rotated(axis, 1.234)) < 1e-14);
        let r = Quaternion::from_rotation_vector(axis * 1.234);
        assert!(r.rotate(p).max_abs_diff(q.rotate(p)) < 1e-14);
    }

    #[test]
    fn quaternion_product_composes_in_order() {
        let a = Quaternion::from_axis_angle(Vec3::Y, FRAC_PI_2);
        let b = Quaternion::from_axis_angle(Vec3::X, FRAC_PI_2);
        // b after a: Z -> X -> X
        assert!(b.mul(a).rotate(Vec3::Z).max_abs_diff(Vec3::X) < 1e-15);
        // a after b: Z -> -Y -> -Y
        assert!(a.mul(b).rotate(Vec3::Z).max_abs_diff(-Vec3::Y) < 1e-15);
    }
}
