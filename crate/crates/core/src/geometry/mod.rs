//! Charts, tensor fields, the hyperbolic background metric and its covariant
//! derivative, decay verification, and quadrature over coordinate spheres.

mod background;
mod chart;
mod decay;
mod field;
mod quadrature;

pub(crate) use background::angular_diag_derivs;
pub use background::{
    cov_deriv_components, scalar_curvature_of_metric_field,
    hessian_b, invert_metric, sym_packed_to_matrix,
    background_metric_diag, background_metric_field, background_metric_matrix,
    christoffel_background, christoffel_from, covariant_derivative_b, frame_scales, norm_b,
    norm_b_deriv, on_frame_components_b, scalar_curvature_from, sym_partials_to_matrices,
    CovariantDerivative,
};
pub use chart::{default_degree, default_radial_ladder, Chart};
pub use decay::{decay_verification, DecayOptions, DecayReport, DecaySample, Verdict};
pub use field::{sym_index, GridAxes, GridField, TensorField, Valence};
pub use quadrature::{gauss_jacobi, sin_power_integral, SphereNode, SphereRule};

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::fmath;

/// A point of the asymptotic chart, in coordinates `(r, t_1, ..., t_{n-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    pub r: f64,
    pub angles: Vec<f64>,
}

impl ChartPoint {
    pub fn new(r: f64, angles: Vec<f64>) -> Self {
        ChartPoint { r, angles }
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.angles.len() + 1
    }

    /// Coordinates flattened as `(r, t_1, ..., t_{n-1})`.
    pub fn coords(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim());
        c[0] = self.r;
        for (a, &t) in self.angles.iter().enumerate() {
            c[a + 1] = t;
        }
        c
    }

    pub fn from_coords(c: &DVector<f64>) -> Self {
        ChartPoint { r: c[0], angles: c.iter().skip(1).copied().collect() }
    }

    /// Unit vector of the angular part in `R^n`.
    pub fn unit_vector(&self) -> DVector<f64> {
        crate::sphere::unit_vector(&self.angles)
    }

    /// Image in the unit-ball model, `x = tanh(r/2) * omega`.
    pub fn ball_point(&self) -> DVector<f64> {
        self.unit_vector() * fmath::tanh(self.r / 2.0)
    }
}

/// Initial data set `(g, K, E)` on an asymptotic chart with claimed decay
/// rate `tau`.
#[derive(Clone)]
pub struct InitialData {
    pub chart: Chart,
    pub g: TensorField,
    pub k: TensorField,
    pub e: TensorField,
    pub tau: f64,
    /// Set by generators that know the data does not extend to a complete
    /// manifold (informational only).
    pub complete: bool,
    /// Cancellation-free evaluation of `g - b`, supplied by generators whose
    /// direct subtraction would lose precision at large radii.
    pub e_g_explicit: Option<TensorField>,
}

impl InitialData {
    pub fn n(&self) -> usize {
        self.chart.n
    }

    /// The deviation `e_g = g - b` from the hyperbolic background, with
    /// analytic derivatives whenever `g` carries them.
    pub fn e_g(&self) -> TensorField {
        match &self.e_g_explicit {
            Some(f) => f.clone(),
            None => self.g.sub(&background_metric_field(self.n())),
        }
    }
}
