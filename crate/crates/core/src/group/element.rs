use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

const ORTHO_TOL: f64 = 1e-10;

/// An element of E(3): `x ↦ R·x + t` with `R` orthogonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    rotation: Mat3,
    translation: Vec3,
}

impl Default for GroupElement {
    fn default() -> Self {
        Self::identity()
    }
}

impl GroupElement {
    pub fn identity() -> Self {
        Self {
            rotation: IDENTITY,
            translation: [0.0; 3],
        }
    }

    /// Fails when `rotation` is not orthogonal to within `1e-10`.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let rtr = matmul(&transpose(&rotation), &rotation);
        let err = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (rtr[i][j] - IDENTITY[i][j]).abs())
            .fold(0.0, f64::max);
        if !err.is_finite() || err > ORTHO_TOL || translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "not an E(3) element (orthogonality error {err:e})"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn translation_only(t: Vec3) -> Self {
        Self {
            rotation: IDENTITY,
            translation: t,
        }
    }

    /// `Rz(gamma)·Ry(beta)·Rx(alpha)`.
    pub fn rotation_from_euler(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidArgument("euler angles must be finite".into()));
        }
        let r = matmul(&matmul(&rot_z(gamma), &rot_y(beta)), &rot_x(alpha));
        Ok(Self {
            rotation: r,
            translation: [0.0; 3],
        })
    }

    /// Counter-clockwise rotation about the z axis.
    pub fn rotation_z(angle: f64) -> Self {
        Self {
            rotation: rot_z(angle),
            translation: [0.0; 3],
        }
    }

    /// Mirror through the xy plane, `diag(1, 1, -1)`.
    pub fn reflection_xy() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn with_translation(mut self, t: Vec3) -> Self {
        self.translation = t;
        self
    }

    /// Uniformly random proper rotation (unit quaternion) composed with the
    /// xy-reflection with probability 1/2, plus a translation with components
    /// uniform in `[-max_shift, max_shift]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_shift: f64) -> Self {
        let mut g = Self::random_rotation(rng);
        if rng.random_bool(0.5) {
            g = g.compose(&Self::reflection_xy());
        }
        let t = if max_shift > 0.0 {
            [
                rng.random_range(-max_shift..=max_shift),
                rng.random_range(-max_shift..=max_shift),
                rng.random_range(-max_shift..=max_shift),
            ]
        } else {
            [0.0; 3]
        };
        g.with_translation(t)
    }

    pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Self {
        // Shoemake's subgroup algorithm.
        let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let (s1, s2) = ((1.0 - u1).sqrt(), u1.sqrt());
        let (t1, t2) = (2.0 * PI * u2, 2.0 * PI * u3);
        let (w, x, y, z) = (s2 * t2.cos(), s1 * t1.sin(), s1 * t1.cos(), s2 * t2.sin());
        let r = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ];
        Self {
            rotation: r,
            translation: [0.0; 3],
        }
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// The rotation/reflection part with the translation dropped.
    pub fn linear_part(&self) -> Self {
        Self {
            rotation: self.rotation,
            translation: [0.0; 3],
        }
    }

    pub fn det(&self) -> f64 {
        det(&self.rotation)
    }

    pub fn is_proper(&self) -> bool {
        self.det() > 0.0
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let rotation = matmul(&self.rotation, &other.rotation);
        let rt = mat_vec(&self.rotation, &other.translation);
        Self {
            rotation,
            translation: add(&rt, &self.translation),
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = transpose(&self.rotation);
        let t = mat_vec(&rt, &self.translation);
        Self {
            rotation: rt,
            translation: [-t[0], -t[1], -t[2]],
        }
    }

    /// Points transform with the full affine map.
    pub fn apply_point(&self, x: &Vec3) -> Vec3 {
        add(&mat_vec(&self.rotation, x), &self.translation)
    }

    /// Free vectors (velocities, actions, displacements) ignore translation.
    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        mat_vec(&self.rotation, v)
    }

    /// Largest entrywise difference of rotations and translations.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.rotation[i][j] - other.rotation[i][j]).abs());
            }
            m = m.max((self.translation[i] - other.translation[i]).abs());
        }
        m
    }
}

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn mat_vec(a: &Mat3, v: &Vec3) -> Vec3 {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: &Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Rescales `v` onto the ball of radius `max` when it lies outside.
pub fn clip_norm(v: &Vec3, max: f64) -> Vec3 {
    let n = norm(v);
    if n > max {
        scale(v, max / n)
    } else {
        *v
    }
}
