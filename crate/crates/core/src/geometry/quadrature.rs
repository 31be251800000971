//! Quadrature on the round sphere: tensor-product Gauss-Jacobi rules in
//! hyperspherical angles with an equispaced periodic rule in the last angle.
//!
//! With `N >= (degree+1)/2` Jacobi nodes per polar angle and an even number
//! `M >= degree+1` of azimuthal nodes, the rule integrates every spherical
//! polynomial of total degree `<= degree` exactly: node sets are symmetric
//! under the antipodal map, so odd monomial factors cancel exactly, and the
//! surviving even factors are polynomials within the Gauss exactness range.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::pairwise_sum;
use crate::{fmath, Error, Result};

/// `int_0^pi sin^p(t) dt`, by the integer recursion `W_p = (p-1)/p W_{p-2}`.
pub fn sin_power_integral(p: usize) -> f64 {
    match p {
        0 => core::f64::consts::PI,
        1 => 2.0,
        _ => (p as f64 - 1.0) / (p as f64) * sin_power_integral(p - 2),
    }
}

/// Nodes and weights of the `npts`-point Gauss rule for the weight
/// `(1-t^2)^lambda` on `[-1, 1]`, where `2*lambda = two_lambda` (the weights
/// occurring on spheres are half-integer powers). Built by Golub-Welsch on
/// the Gegenbauer recurrence; nodes are symmetrized about the origin so that
/// antipodal cancellations are exact.
pub fn gauss_jacobi(npts: usize, two_lambda: usize) -> (Vec<f64>, Vec<f64>) {
    let lambda = two_lambda as f64 / 2.0;
    let mu0 = sin_power_integral(two_lambda + 1);
    if npts == 1 {
        return (alloc::vec![0.0], alloc::vec![mu0]);
    }
    let mut jac = DMatrix::<f64>::zeros(npts, npts);
    for k in 1..npts {
        let kf = k as f64;
        let beta = kf * (kf + 2.0 * lambda)
            / ((2.0 * (kf + lambda) + 1.0) * (2.0 * (kf + lambda) - 1.0));
        let off = fmath::sqrt(beta);
        jac[(k - 1, k)] = off;
        jac[(k, k - 1)] = off;
    }
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..npts)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN quadrature node"));
    // enforce exact symmetry about 0
    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    for i in 0..npts / 2 {
        let j = npts - 1 - i;
        let t = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -t;
        nodes[j] = t;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if npts % 2 == 1 {
        nodes[npts / 2] = 0.0;
    }
    (nodes, weights)
}

/// One angular quadrature node with its weight for the round measure.
#[derive(Clone, Debug)]
pub struct SphereNode {
    pub angles: Vec<f64>,
    pub weight: f64,
}

/// Quadrature rule on the unit sphere `S^{n-1}` with stated polynomial
/// exactness degree. Weights are positive and sum to the sphere volume.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub n: usize,
    pub degree: usize,
    pub nodes: Vec<SphereNode>,
}

impl SphereRule {
    pub fn new(n: usize, degree: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        let degree = degree.max(1);
        let npolar = (degree + 2) / 2; // 2*npolar - 1 >= degree
        let mut mphi = degree + 1;
        if mphi % 2 == 1 {
            mphi += 1;
        }
        // per polar angle a (0-based), the measure carries sin^{n-2-a}
        let mut axes: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for a in 0..n - 2 {
            let p = n - 2 - a;
            let (t, w) = gauss_jacobi(npolar, p - 1);
            let thetas: Vec<f64> = t.iter().map(|&c| fmath::acos(c.clamp(-1.0, 1.0))).collect();
            axes.push((thetas, w));
        }
        let phi_w = 2.0 * core::f64::consts::PI / mphi as f64;
        let mut nodes = Vec::new();
        let mut idx = alloc::vec![0usize; n - 2];
        loop {
            let mut base_angles = Vec::with_capacity(n - 1);
            let mut base_weight = 1.0;
            for (a, &i) in idx.iter().enumerate() {
                base_angles.push(axes[a].0[i]);
                base_weight *= axes[a].1[i];
            }
            for j in 0..mphi {
                let mut angles = base_angles.clone();
                angles.push(2.0 * core::f64::consts::PI * (j as f64) / (mphi as f64));
                nodes.push(SphereNode { angles, weight: base_weight * phi_w });
            }
            // advance the polar multi-index
            let mut carry = true;
            for a in (0..n - 2).rev() {
                if !carry {
                    break;
                }
                idx[a] += 1;
                if idx[a] < axes[a].0.len() {
                    carry = false;
                } else {
                    idx[a] = 0;
                }
            }
            if carry {
                break;
            }
        }
        Ok(SphereRule { n, degree, nodes })
    }

    /// Integral of `f` over the round unit sphere.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> Result<f64> {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .map(|node| node.weight * f(&node.angles))
            .collect();
        for (i, t) in terms.iter().enumerate() {
            if t.is_nan() {
                return Err(Error::NanSample { node: i });
            }
        }
        Ok(pairwise_sum(&terms))
    }
}
