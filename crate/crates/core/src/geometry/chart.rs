//! The asymptotic chart: a radial ladder standing in for `r -> infinity`
//! together with an angular quadrature rule, and integration over the
//! coordinate spheres `S_r`.

use alloc::vec::Vec;

use super::quadrature::SphereRule;
use super::ChartPoint;
use crate::{fmath, Error, Result};

/// Default quadrature exactness degree for dimension `n`.
pub fn default_degree(n: usize) -> usize {
    2 * n + 4
}

/// Six geometrically spaced radii; the extrapolation in `charges` turns the
/// ladder into a limit.
pub fn default_radial_ladder() -> Vec<f64> {
    let mut r = 2.0;
    let mut out = Vec::with_capacity(6);
    for _ in 0..6 {
        out.push(r);
        r *= 1.35;
    }
    out
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub n: usize,
    pub radial_nodes: Vec<f64>,
    pub rule: SphereRule,
}

impl Chart {
    pub fn new(n: usize, radial_nodes: Vec<f64>, degree: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        if radial_nodes.is_empty() || radial_nodes[0] <= 0.0 {
            return Err(Error::Domain("radial nodes must be positive".into()));
        }
        for w in radial_nodes.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Domain("radial nodes must be strictly increasing".into()));
            }
        }
        Ok(Chart { n, radial_nodes, rule: SphereRule::new(n, degree)? })
    }

    pub fn standard(n: usize) -> Result<Self> {
        Chart::new(n, default_radial_ladder(), default_degree(n))
    }

    pub fn degree(&self) -> usize {
        self.rule.degree
    }

    /// `oint_{S_r} f dsigma_{b_r}`, the area element being
    /// `sinh^{n-1}(r)` times the round measure.
    pub fn sphere_integrate(&self, r: f64, mut f: impl FnMut(&ChartPoint) -> f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::Domain(alloc::format!("radius must be positive, got {r}")));
        }
        let raw = self
            .rule
            .integrate(|angles| f(&ChartPoint::new(r, angles.to_vec())))?;
        Ok(fmath::powi(fmath::sinh(r), (self.n - 1) as i32) * raw)
    }

    /// Evaluate `f` on every angular node at radius `r` and return the
    /// maximum.
    pub fn angular_sup(&self, r: f64, mut f: impl FnMut(&ChartPoint) -> f64) -> f64 {
        let mut sup = f64::NEG_INFINITY;
        for node in &self.rule.nodes {
            let v = f(&ChartPoint::new(r, node.angles.clone()));
            if v > sup {
                sup = v;
            }
        }
        sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{sphere_volume, unit_vector};

    #[test]
    fn area_of_coordinate_sphere() {
        let chart = Chart::standard(3).unwrap();
        let got = chart.sphere_integrate(1.0, |_| 1.0).unwrap();
        let want = 4.0 * core::f64::consts::PI * fmath::sinh(1.0) * fmath::sinh(1.0);
        assert!((got - want).abs() < 1e-12 * want);
        assert!((want - 17.3552).abs() < 1e-3);
    }

    #[test]
    fn measure_factorizes() {
        for n in [3usize, 4, 6] {
            let chart = Chart::standard(n).unwrap();
            for r in [0.5, 1.7] {
                let got = chart.sphere_integrate(r, |_| 1.0).unwrap();
                let ratio = got / fmath::powi(fmath::sinh(r), (n - 1) as i32);
                assert!((ratio - sphere_volume(n - 1)).abs() < 1e-12 * ratio);
            }
        }
    }

    #[test]
    fn odd_harmonic_vanishes() {
        let chart = Chart::standard(4).unwrap();
        let got = chart
            .sphere_integrate(2.0, |p| {
                let x = unit_vector(&p.angles);
                x[0] * x[1] * x[3]
            })
            .unwrap();
        assert!(got.abs() < 1e-12);
    }

    #[test]
    fn chart_validation() {
        assert!(Chart::new(2, alloc::vec![1.0, 2.0], 6).is_err());
        assert!(Chart::new(3, alloc::vec![2.0, 1.0], 6).is_err());
        assert!(Chart::new(3, alloc::vec![-1.0, 2.0], 6).is_err());
    }
}
