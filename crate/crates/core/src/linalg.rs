//! Minimal 3-vector / 3x3-matrix arithmetic used by the propagators.
//!
//! The dynamics only ever needs cross products, dot products and a few
//! rotation matrices, so a hand-rolled `Copy` type keeps the inner loops
//! allocation-free.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const E_Z: Vec3 = Vec3 {
    x: 0.0,
    y: 0.0,
    z: 1.0,
};

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, rhs: Vec3) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * rhs.z - self.z * rhs.y,
            y: self.z * rhs.x - self.x * rhs.z,
            z: self.x * rhs.y - self.y * rhs.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    /// Norm of the projection onto the xy plane.
    pub fn norm_xy(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scaled(self, s: f64) -> Vec3 {
        Vec3 {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    pub fn from_slice(s: &[f64]) -> Vec3 {
        Vec3 {
            x: s[0],
            y: s[1],
            z: s[2],
        }
    }

    pub fn write_to(self, s: &mut [f64]) {
        s[0] = self.x;
        s[1] = self.y;
        s[2] = self.z;
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scaled(s)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        self.x += rhs.x;
        self.y += rhs.y;
        self.z += rhs.z;
    }
}

/// Row-major 3x3 real matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);

    pub fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn set_col(&mut self, j: usize, v: Vec3) {
        self.0[0][j] = v.x;
        self.0[1][j] = v.y;
        self.0[2][j] = v.z;
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, rhs: &Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Mat3) -> Mat3 {
        let mut out = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        out
    }

    pub fn frobenius_norm2(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm2().sqrt()
    }

    /// Rotation by angle `angle` about the unit axis `axis` (Rodrigues).
    pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let (x, y, z) = (axis.x, axis.y, axis.z);
        Mat3([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    pub fn from_slice(s: &[f64]) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = s[3 * i + j];
            }
        }
        m
    }

    pub fn write_to(&self, s: &mut [f64]) {
        for i in 0..3 {
            for j in 0..3 {
                s[3 * i + j] = self.0[i][j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cross_product_is_right_handed() {
        let ex = Vec3::new(1.0, 0.0, 0.0);
        let ey = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(ex.cross(ey), E_Z);
        assert_eq!(ey.cross(ex), -E_Z);
    }

    #[test]
    fn rotation_preserves_norm_and_axis() {
        let axis = Vec3::new(0.6, 0.0, 0.8);
        let r = Mat3::rotation(axis, 1.2345);
        assert_relative_eq!(r.mul_vec(axis).x, axis.x, epsilon = 1e-14);
        let v = Vec3::new(0.3, -0.4, 0.5);
        assert_relative_eq!(r.mul_vec(v).norm(), v.norm(), epsilon = 1e-14);
        let rtr = r.transpose().mul_mat(&r);
        assert!(rtr.sub(&Mat3::IDENTITY).frobenius_norm() < 1e-14);
    }
}
