//! Hyperspherical coordinates on the unit sphere: the embedding into
//! Euclidean space with its first and second angle-derivatives, the inverse
//! map, and round-sphere volumes.
//!
//! Conventions: angles `t[0..d-1]` parametrize the unit sphere in `R^d` via
//! `x[i] = sin(t[0])...sin(t[i-1]) cos(t[i])` for `i < d-1` and
//! `x[d-1] = sin(t[0])...sin(t[d-2])`, with `t[0..d-2]` in `(0, pi)` and the
//! last angle in `[0, 2*pi)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::fmath;

#[derive(Clone, Copy)]
enum Factor {
    Sin,
    Cos,
    One,
}

impl Factor {
    #[inline]
    fn value(self, t: f64) -> f64 {
        match self {
            Factor::Sin => fmath::sin(t),
            Factor::Cos => fmath::cos(t),
            Factor::One => 1.0,
        }
    }
    #[inline]
    fn d1(self, t: f64) -> f64 {
        match self {
            Factor::Sin => fmath::cos(t),
            Factor::Cos => -fmath::sin(t),
            Factor::One => 0.0,
        }
    }
    #[inline]
    fn d2(self, t: f64) -> f64 {
        match self {
            Factor::Sin => -fmath::sin(t),
            Factor::Cos => -fmath::cos(t),
            Factor::One => 0.0,
        }
    }
}

/// The factor pattern of component `i` of the embedding in dimension `d`.
fn factors(d: usize, i: usize) -> Vec<Factor> {
    let m = d - 1;
    let mut f = vec![Factor::One; m];
    if i < m {
        for k in 0..i {
            f[k] = Factor::Sin;
        }
        f[i] = Factor::Cos;
    } else {
        for k in 0..m {
            f[k] = Factor::Sin;
        }
    }
    f
}

/// Unit vector `x(t)` in `R^d` where `d = angles.len() + 1`.
pub fn unit_vector(angles: &[f64]) -> DVector<f64> {
    let d = angles.len() + 1;
    DVector::from_fn(d, |i, _| {
        factors(d, i)
            .iter()
            .zip(angles)
            .map(|(f, &t)| f.value(t))
            .product()
    })
}

/// Jacobian `dx[i]/dt[a]` as a `d x (d-1)` matrix.
pub fn unit_vector_jacobian(angles: &[f64]) -> DMatrix<f64> {
    let d = angles.len() + 1;
    let m = d - 1;
    DMatrix::from_fn(d, m, |i, a| {
        let fac = factors(d, i);
        let mut p = 1.0;
        for (k, f) in fac.iter().enumerate() {
            p *= if k == a { f.d1(angles[k]) } else { f.value(angles[k]) };
        }
        p
    })
}

/// Second derivatives `d^2 x[i] / dt[a] dt[b]`, one `(d-1) x (d-1)` matrix
/// per component `i`.
pub fn unit_vector_hessian(angles: &[f64]) -> Vec<DMatrix<f64>> {
    let d = angles.len() + 1;
    let m = d - 1;
    (0..d)
        .map(|i| {
            let fac = factors(d, i);
            DMatrix::from_fn(m, m, |a, b| {
                let mut p = 1.0;
                for (k, f) in fac.iter().enumerate() {
                    p *= if a == b && k == a {
                        f.d2(angles[k])
                    } else if k == a || k == b {
                        f.d1(angles[k])
                    } else {
                        f.value(angles[k])
                    };
                }
                p
            })
        })
        .collect()
}

/// Angles of a unit vector; inverse of [`unit_vector`] away from the poles.
pub fn angles_from_unit(x: &DVector<f64>) -> Vec<f64> {
    let d = x.len();
    let mut angles = Vec::with_capacity(d - 1);
    let mut tail = x.norm();
    for i in 0..d - 2 {
        let c = if tail > 0.0 { (x[i] / tail).clamp(-1.0, 1.0) } else { 1.0 };
        angles.push(fmath::acos(c));
        let t2 = (tail * tail - x[i] * x[i]).max(0.0);
        tail = fmath::sqrt(t2);
    }
    let mut phi = fmath::atan2(x[d - 1], x[d - 2]);
    if phi < 0.0 {
        phi += 2.0 * core::f64::consts::PI;
    }
    angles.push(phi);
    angles
}

/// Volume of the round unit sphere `S^d`.
pub fn sphere_volume(d: usize) -> f64 {
    // surf(0) = 2, surf(1) = 2*pi, surf(d) = 2*pi/(d-1) * surf(d-2)
    match d {
        0 => 2.0,
        1 => 2.0 * core::f64::consts::PI,
        _ => 2.0 * core::f64::consts::PI / ((d - 1) as f64) * sphere_volume(d - 2),
    }
}

/// Diagonal entries `h_a` of the round metric in hyperspherical coordinates:
/// `h_a = prod_{c<a} sin^2(t_c)`.
pub fn round_metric_diag(angles: &[f64]) -> DVector<f64> {
    let m = angles.len();
    let mut h = DVector::zeros(m);
    let mut acc = 1.0;
    for a in 0..m {
        h[a] = acc;
        let s = fmath::sin(angles[a]);
        acc *= s * s;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn embedding_is_unit_and_invertible() {
        for d in 3..=6 {
            let angles: Vec<f64> = (0..d - 1)
                .map(|k| 0.3 + 0.37 * (k as f64) + 0.1 * (d as f64))
                .collect();
            let x = unit_vector(&angles);
            assert!(close(x.norm(), 1.0, 1e-14));
            let back = angles_from_unit(&x);
            let x2 = unit_vector(&back);
            assert!((x - x2).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let angles = [0.7, 1.1, 2.0];
        let jac = unit_vector_jacobian(&angles);
        let h = 1e-6;
        for a in 0..3 {
            let mut ap = angles;
            let mut am = angles;
            ap[a] += h;
            am[a] -= h;
            let diff = (unit_vector(&ap) - unit_vector(&am)) / (2.0 * h);
            for i in 0..4 {
                assert!(close(jac[(i, a)], diff[i], 1e-9));
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let angles = [0.9, 1.3];
        let hess = unit_vector_hessian(&angles);
        let h = 1e-4;
        for a in 0..2 {
            for b in 0..2 {
                let mut app = angles;
                let mut apm = angles;
                let mut amp = angles;
                let mut amm = angles;
                app[a] += h;
                app[b] += h;
                apm[a] += h;
                apm[b] -= h;
                amp[a] -= h;
                amp[b] += h;
                amm[a] -= h;
                amm[b] -= h;
                let diff = (unit_vector(&app) - unit_vector(&apm) - unit_vector(&amp)
                    + unit_vector(&amm))
                    / (4.0 * h * h);
                for i in 0..3 {
                    assert!(close(hess[i][(a, b)], diff[i], 1e-6));
                }
            }
        }
    }

    #[test]
    fn unit_sphere_volumes() {
        assert!(close(sphere_volume(2), 4.0 * core::f64::consts::PI, 1e-12));
        let pi = core::f64::consts::PI;
        assert!(close(sphere_volume(3), 2.0 * pi * pi, 1e-12));
    }
}
