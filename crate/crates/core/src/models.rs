//! Closed-form generators of charged initial data: hyperbolic space, the
//! Schwarzschild-AdS and Reissner-Nordstrom-AdS families rewritten in
//! asymptotic coordinates, seeded decaying perturbations, and a
//! conformally-perturbed family with strictly positive energy margin.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::geometry::{
    angular_diag_derivs, background_metric_field, default_radial_ladder, sym_index, Chart,
    InitialData, TensorField, Valence,
};
#[cfg(test)]
use crate::geometry::ChartPoint;
use crate::sphere;
use crate::{fmath, Error, Result};

/// Normalization constant relating the electric field to the spacetime field
/// strength in the purely electric reduction, `sqrt((n-1)(n-2)/2)`. It
/// cancels out of the induced initial data and is recorded here for
/// documentation only.
pub fn faraday_normalization(n: usize) -> f64 {
    let nf = n as f64;
    fmath::sqrt((nf - 1.0) * (nf - 2.0) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Hyperbolic,
    SchwarzschildAds,
    RnAds,
    Perturbation,
    /// Time-symmetric conformal deformation `g = (1 + eps e^{-tau r})^{4/(n-2)} b`;
    /// at `tau = n` the energy margin is strictly positive while the charge
    /// integrands keep a geometrically summable tail.
    ConformalBump,
}

/// Parameters of a generated model.
#[derive(Clone, Copy, Debug)]
pub struct ModelSpec {
    pub family: Family,
    pub n: usize,
    /// Mass parameter of the static potential (>= 0).
    pub mbar: f64,
    /// Charge parameter; fixes the radial electric field `E = qbar s^{1-n} d_r`.
    pub qbar: f64,
    /// Decay rate of perturbation-type families.
    pub tau: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl ModelSpec {
    pub fn hyperbolic(n: usize) -> Self {
        ModelSpec { family: Family::Hyperbolic, n, mbar: 0.0, qbar: 0.0, tau: 0.0, epsilon: 0.0, seed: 0 }
    }
}

/// Generate the initial data set described by a spec.
pub fn generate(spec: &ModelSpec) -> Result<InitialData> {
    match spec.family {
        Family::Hyperbolic => hyperbolic_data(spec.n),
        Family::SchwarzschildAds => rn_ads_data(spec.n, spec.mbar, 0.0),
        Family::RnAds => rn_ads_data(spec.n, spec.mbar, spec.qbar),
        Family::Perturbation => perturbed_data(spec.n, spec.tau, spec.epsilon, spec.seed),
        Family::ConformalBump => conformal_bump_data(spec.n, spec.tau, spec.epsilon),
    }
}

/// The time-symmetric background `(b, 0, 0)` with analytic derivatives.
pub fn hyperbolic_data(n: usize) -> Result<InitialData> {
    Ok(InitialData {
        chart: Chart::standard(n)?,
        g: background_metric_field(n),
        k: TensorField::zero(n, Valence::SymTwo),
        e: TensorField::zero(n, Valence::Vector),
        tau: n as f64,
        complete: true,
        e_g_explicit: None,
    })
}

/// Static exterior data of the spherical charged family with potential
/// `U(s) = 1 + s^2 - 2 mbar s^{2-n} + qbar^2 s^{2(2-n)}`, rewritten in a
/// radial coordinate with `g = dr^2 + s(r)^2 h` and `g - b = O(e^{-n r})`,
/// carrying the divergence-free field `E = qbar s^{1-n} d_r`. Time-symmetric.
///
/// Parameter regimes without a horizon still produce exterior data but the
/// result is flagged incomplete.
pub fn rn_ads_data(n: usize, mbar: f64, qbar: f64) -> Result<InitialData> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    if !(mbar.is_finite() && qbar.is_finite()) || mbar < 0.0 {
        return Err(Error::ModelDomain(alloc::format!(
            "mass parameter must be finite and non-negative, got mbar = {mbar}, qbar = {qbar}"
        )));
    }
    let base_ladder = default_radial_ladder();
    let probe = RadialTransform::horizon(n, mbar, qbar)?;
    let r_floor = probe.r_floor;
    let r_min = if base_ladder[0] > r_floor + 0.6 {
        base_ladder[0]
    } else {
        r_floor + 0.6
    };
    let ladder: Vec<f64> = (0..base_ladder.len()).map(|k| r_min * fmath::powi(1.35, k as i32)).collect();
    let chart = Chart::new(n, ladder.clone(), crate::geometry::default_degree(n))?;
    let transform = Arc::new(RadialTransform::build(
        probe,
        (r_floor + 0.05).max(0.2),
        ladder[ladder.len() - 1] + 0.5,
    )?);
    let complete = transform.has_horizon || (mbar == 0.0 && qbar == 0.0);

    let nf = n as f64;
    let tr_g = transform.clone();
    let ncomp = Valence::SymTwo.ncomp(n);
    let g = TensorField::analytic(n, Valence::SymTwo, move |p| {
        let (s, _, _) = tr_g.s_jets(p.r);
        let (h, _, _) = angular_diag_derivs(&p.angles);
        let mut v = DVector::zeros(ncomp);
        v[sym_index(n, 0, 0)] = 1.0;
        for a in 0..n - 1 {
            v[sym_index(n, a + 1, a + 1)] = s * s * h[a];
        }
        v
    });
    let tr_g1 = transform.clone();
    let g = g.with_d1(move |p| {
        let (s, sp, _) = tr_g1.s_jets(p.r);
        let (h, dh, _) = angular_diag_derivs(&p.angles);
        let mut d = DMatrix::zeros(ncomp, n);
        for a in 0..n - 1 {
            let row = sym_index(n, a + 1, a + 1);
            d[(row, 0)] = 2.0 * s * sp * h[a];
            for c in 0..n - 1 {
                d[(row, c + 1)] = s * s * dh[(a, c)];
            }
        }
        d
    });
    let tr_g2 = transform.clone();
    let g = g.with_d2(move |p| {
        let (s, sp, spp) = tr_g2.s_jets(p.r);
        let (h, dh, d2h) = angular_diag_derivs(&p.angles);
        let mut out: Vec<DMatrix<f64>> = (0..ncomp).map(|_| DMatrix::zeros(n, n)).collect();
        for a in 0..n - 1 {
            let row = sym_index(n, a + 1, a + 1);
            out[row][(0, 0)] = 2.0 * (sp * sp + s * spp) * h[a];
            for c in 0..n - 1 {
                let mixed = 2.0 * s * sp * dh[(a, c)];
                out[row][(0, c + 1)] = mixed;
                out[row][(c + 1, 0)] = mixed;
                for e in 0..n - 1 {
                    out[row][(c + 1, e + 1)] = s * s * d2h[a][(c, e)];
                }
            }
        }
        out
    });

    let tr_e = transform.clone();
    let e = TensorField::analytic(n, Valence::Vector, move |p| {
        let (s, _, _) = tr_e.s_jets(p.r);
        let mut v = DVector::zeros(n);
        v[0] = qbar * fmath::powf(s, 1.0 - nf);
        v
    });
    let tr_e1 = transform.clone();
    let e = e.with_d1(move |p| {
        let (s, sp, _) = tr_e1.s_jets(p.r);
        let mut d = DMatrix::zeros(n, n);
        d[(0, 0)] = qbar * (1.0 - nf) * fmath::powf(s, -nf) * sp;
        d
    });

    // g - b directly, through the cancellation-free identity
    // s^2 - sinh^2 r = sinh(2r + d) sinh(d) with d = asinh(s) - r, so the
    // charge integrands stay accurate at the outer ladder radii where the
    // naive subtraction loses all significant digits.
    let tr_eg = transform.clone();
    let e_g = TensorField::analytic(n, Valence::SymTwo, move |p| {
        let (psi, _) = tr_eg.psi_jets(p.r);
        let (h, _, _) = angular_diag_derivs(&p.angles);
        let mut v = DVector::zeros(ncomp);
        for a in 0..n - 1 {
            v[sym_index(n, a + 1, a + 1)] = psi * h[a];
        }
        v
    });
    let tr_eg1 = transform.clone();
    let e_g = e_g.with_d1(move |p| {
        let (psi, dpsi) = tr_eg1.psi_jets(p.r);
        let (h, dh, _) = angular_diag_derivs(&p.angles);
        let mut d = DMatrix::zeros(ncomp, n);
        for a in 0..n - 1 {
            let row = sym_index(n, a + 1, a + 1);
            d[(row, 0)] = dpsi * h[a];
            for c in 0..n - 1 {
                d[(row, c + 1)] = psi * dh[(a, c)];
            }
        }
        d
    });

    Ok(InitialData {
        chart,
        g,
        k: TensorField::zero(n, Valence::SymTwo),
        e,
        tau: if qbar != 0.0 { nf - 1.0 } else { nf },
        complete,
        e_g_explicit: Some(e_g),
    })
}

pub fn schwarzschild_ads_data(n: usize, mbar: f64) -> Result<InitialData> {
    rn_ads_data(n, mbar, 0.0)
}

/// The radial reparametrization `r(s) = asinh(s) - int_s^inf [(1+t^2)^{-1/2}
/// - U(t)^{-1/2}] dt`, chosen so that `s(r)/sinh(r) -> 1`, tabulated once on
/// a fine grid and interpolated; `s' = sqrt(U)` and `s'' = U'/2` follow
/// analytically.
struct RadialTransform {
    n: usize,
    mbar: f64,
    qbar: f64,
    has_horizon: bool,
    r_floor: f64,
    s_floor: f64,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
    table_r0: f64,
    table_dr: f64,
    /// ln s at table nodes
    table_y: Vec<f64>,
}

impl RadialTransform {
    fn u(&self, s: f64) -> f64 {
        let nf = self.n as f64;
        1.0 + s * s - 2.0 * self.mbar * fmath::powf(s, 2.0 - nf)
            + self.qbar * self.qbar * fmath::powf(s, 2.0 * (2.0 - nf))
    }

    fn du(&self, s: f64) -> f64 {
        let nf = self.n as f64;
        2.0 * s - 2.0 * self.mbar * (2.0 - nf) * fmath::powf(s, 1.0 - nf)
            + self.qbar * self.qbar * 2.0 * (2.0 - nf) * fmath::powf(s, 3.0 - 2.0 * nf)
    }

    /// `U(s) - (1 + s^2)`, evaluated without cancellation.
    fn u_defect(&self, s: f64) -> f64 {
        let nf = self.n as f64;
        -2.0 * self.mbar * fmath::powf(s, 2.0 - nf)
            + self.qbar * self.qbar * fmath::powf(s, 2.0 * (2.0 - nf))
    }

    /// Locate the outermost horizon and the usable radial floor.
    fn horizon(n: usize, mbar: f64, qbar: f64) -> Result<Self> {
        let (gl_nodes, gl_weights) = crate::geometry::gauss_jacobi(48, 0);
        let mut t = RadialTransform {
            n,
            mbar,
            qbar,
            has_horizon: false,
            r_floor: 0.0,
            s_floor: 1e-2,
            gl_nodes,
            gl_weights,
            table_r0: 0.0,
            table_dr: 0.02,
            table_y: Vec::new(),
        };
        if mbar == 0.0 && qbar == 0.0 {
            t.s_floor = 1e-3;
            t.r_floor = 0.0;
            return Ok(t);
        }
        // scan for the outermost sign change of U on a log grid
        let s_hi = 4.0 + fmath::powf(2.0 * mbar + qbar * qbar + 1.0, 1.0);
        let m = 4000;
        let lo_log = fmath::ln(1e-6);
        let hi_log = fmath::ln(s_hi);
        let mut s0 = 0.0f64;
        let mut prev_s = fmath::exp(lo_log);
        let mut prev_u = t.u(prev_s);
        for k in 1..=m {
            let s = fmath::exp(lo_log + (hi_log - lo_log) * (k as f64) / (m as f64));
            let u = t.u(s);
            if prev_u <= 0.0 && u > 0.0 {
                // bisection refine
                let (mut a, mut b) = (prev_s, s);
                for _ in 0..90 {
                    let mid = 0.5 * (a + b);
                    if t.u(mid) <= 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                s0 = 0.5 * (a + b);
            }
            prev_s = s;
            prev_u = u;
        }
        if s0 > 0.0 {
            t.has_horizon = true;
            t.s_floor = s0 * 1.02 + 0.02;
        } else {
            t.has_horizon = false;
            t.s_floor = 0.05;
        }
        t.r_floor = t.r_of_s(t.s_floor);
        Ok(t)
    }

    /// `int_s^inf [(1+t^2)^{-1/2} - U(t)^{-1/2}] dt` via `t = s/u`; the
    /// integrand is expressed through `U - (1+t^2)` so no digits cancel.
    fn delta(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (node, w) in self.gl_nodes.iter().zip(&self.gl_weights) {
            // map [-1,1] -> (0,1]
            let u = 0.5 * (node + 1.0);
            if u <= 0.0 {
                continue;
            }
            let t = s / u;
            let a = fmath::sqrt(1.0 + t * t);
            let b = fmath::sqrt(self.u(t));
            let f = self.u_defect(t) / (a * b * (a + b));
            acc += w * 0.5 * f * s / (u * u);
        }
        acc
    }

    /// `psi = s(r)^2 - sinh^2(r)` and its radial derivative, through the
    /// identity `sinh^2 A - sinh^2 B = sinh(A+B) sinh(A-B)` with
    /// `A = asinh(s) = r + d`, `d = delta(s)`.
    fn psi_jets(&self, r: f64) -> (f64, f64) {
        let s = self.s_at(r);
        let d = self.delta(s);
        let big = fmath::sinh(2.0 * r + d);
        let big_c = fmath::cosh(2.0 * r + d);
        let sd = fmath::sinh(d);
        let cd = fmath::cosh(d);
        // d' = sqrt(U)/sqrt(1+s^2) - 1, cancellation-free
        let a = fmath::sqrt(1.0 + s * s);
        let b = fmath::sqrt(self.u(s));
        let dprime = self.u_defect(s) / (a * (a + b));
        let psi = big * sd;
        let dpsi = big_c * (2.0 + dprime) * sd + big * cd * dprime;
        (psi, dpsi)
    }

    fn r_of_s(&self, s: f64) -> f64 {
        fmath::asinh(s) - self.delta(s)
    }

    fn s_of_r_newton(&self, r: f64, init: f64) -> f64 {
        let mut s = init.max(self.s_floor);
        for _ in 0..60 {
            let f = self.r_of_s(s) - r;
            let step = f * fmath::sqrt(self.u(s));
            let mut next = s - step;
            if next < self.s_floor {
                next = 0.5 * (s + self.s_floor);
            }
            if (next - s).abs() <= 1e-14 * (1.0 + s) {
                s = next;
                break;
            }
            s = next;
        }
        s
    }

    fn build(mut probe: RadialTransform, r_lo: f64, r_hi: f64) -> Result<Self> {
        let r_lo = r_lo.max(probe.r_floor + 1e-6);
        let count = ((r_hi - r_lo) / probe.table_dr) as usize + 2;
        let mut ys = Vec::with_capacity(count);
        let mut s_prev = fmath::sinh(r_lo.max(0.05));
        for k in 0..count {
            let r = r_lo + probe.table_dr * k as f64;
            let s = probe.s_of_r_newton(r, s_prev.max(fmath::sinh(r) * 0.5));
            ys.push(fmath::ln(s));
            s_prev = s;
        }
        probe.table_r0 = r_lo;
        probe.table_y = ys;
        Ok(probe)
    }

    /// `(s, s', s'')` at radius `r`.
    fn s_jets(&self, r: f64) -> (f64, f64, f64) {
        let s = self.s_at(r);
        let u = self.u(s);
        (s, fmath::sqrt(u), 0.5 * self.du(s))
    }

    fn s_at(&self, r: f64) -> f64 {
        let count = self.table_y.len();
        if count >= 6 {
            let pos = (r - self.table_r0) / self.table_dr;
            if pos >= 0.0 && pos <= (count - 1) as f64 {
                let near = pos as isize;
                let start = (near - 2).clamp(0, count as isize - 6) as usize;
                // quintic Lagrange on the uniform table
                let mut y = 0.0;
                for i in 0..6 {
                    let mut l = 1.0;
                    for j in 0..6 {
                        if j != i {
                            l *= (pos - (start + j) as f64) / ((start + i) as f64 - (start + j) as f64);
                        }
                    }
                    y += l * self.table_y[start + i];
                }
                return fmath::exp(y);
            }
        }
        self.s_of_r_newton(r, fmath::sinh(r.max(0.05)))
    }
}

fn seeded_coeffs(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    (0..count).map(|_| -1.0 + 2.0 * rng.random::<f64>()).collect()
}

/// Low-degree angular profile `a + sum_j b_j x^j + sum_{j<=k} c_jk x^j x^k`
/// with seeded coefficients; value, angle-gradient, angle-hessian.
#[derive(Clone)]
struct AngularPoly {
    n: usize,
    a: f64,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl AngularPoly {
    fn from_coeffs(n: usize, coeffs: &[f64]) -> (Self, usize) {
        let quad = n * (n + 1) / 2;
        let need = 1 + n + quad;
        let poly = AngularPoly {
            n,
            a: coeffs[0],
            b: coeffs[1..1 + n].to_vec(),
            c: coeffs[1 + n..need].to_vec(),
        };
        (poly, need)
    }

    fn value(&self, om: &DVector<f64>) -> f64 {
        let mut v = self.a;
        for j in 0..self.n {
            v += self.b[j] * om[j];
        }
        let mut idx = 0;
        for j in 0..self.n {
            for k in j..self.n {
                v += self.c[idx] * om[j] * om[k];
                idx += 1;
            }
        }
        v
    }

    /// Gradient with respect to the angles.
    fn grad(&self, om: &DVector<f64>, jac: &DMatrix<f64>) -> DVector<f64> {
        let m = self.n - 1;
        let mut g = DVector::zeros(m);
        for a in 0..m {
            let mut v = 0.0;
            for j in 0..self.n {
                v += self.b[j] * jac[(j, a)];
            }
            let mut idx = 0;
            for j in 0..self.n {
                for k in j..self.n {
                    v += self.c[idx] * (jac[(j, a)] * om[k] + om[j] * jac[(k, a)]);
                    idx += 1;
                }
            }
            g[a] = v;
        }
        g
    }
}

/// Seeded decaying perturbation of the background:
/// `g = b + eps e^{-tau r} (p1 Pi_ang + p2 dr^2)`,
/// `K = eps e^{-tau r} (p3 b + p4 dr^2)`,
/// `E = eps e^{-tau r} (p5 d_r + grad q / sinh r)`,
/// with low-degree angular profiles drawn deterministically from the seed.
pub fn perturbed_data(n: usize, tau: f64, epsilon: f64, seed: u64) -> Result<InitialData> {
    perturbed_data_impl(n, tau, epsilon, seed, None)
}

/// Same data pulled back by a rigid rotation of the sphere (the profiles are
/// evaluated at `R^T x`); used by the chart-covariance checks.
pub fn perturbed_data_rotated(
    n: usize,
    tau: f64,
    epsilon: f64,
    seed: u64,
    rotation: DMatrix<f64>,
) -> Result<InitialData> {
    perturbed_data_impl(n, tau, epsilon, seed, Some(rotation))
}

fn perturbed_data_impl(
    n: usize,
    tau: f64,
    epsilon: f64,
    seed: u64,
    rotation: Option<DMatrix<f64>>,
) -> Result<InitialData> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    if !(tau > n as f64 / 2.0) {
        return Err(Error::ModelDomain(alloc::format!(
            "perturbation decay rate must exceed n/2 = {}, got {tau}",
            n as f64 / 2.0
        )));
    }
    let quad = n * (n + 1) / 2;
    let per = 1 + n + quad;
    let coeffs = seeded_coeffs(seed, 6 * per);
    let mut polys = Vec::with_capacity(6);
    let mut off = 0;
    for _ in 0..6 {
        let (p, used) = AngularPoly::from_coeffs(n, &coeffs[off..]);
        polys.push(p);
        off += used;
    }
    let rot = Arc::new(rotation);
    let omega_at = move |angles: &[f64], rot: &Option<DMatrix<f64>>| -> (DVector<f64>, DMatrix<f64>) {
        let om = sphere::unit_vector(angles);
        let jac = sphere::unit_vector_jacobian(angles);
        match rot {
            Some(r) => (r.transpose() * &om, r.transpose() * &jac),
            None => (om, jac),
        }
    };

    let ncomp = Valence::SymTwo.ncomp(n);
    let env = move |r: f64| epsilon * fmath::exp(-tau * r);
    let denv = move |r: f64| -tau * epsilon * fmath::exp(-tau * r);

    // g = b + env (p1 Pi_ang + p2 dr^2)
    let b = background_metric_field(n);
    let (p1, p2) = (polys[0].clone(), polys[1].clone());
    let rot_g = rot.clone();
    let om_g = omega_at;
    let bump = TensorField::analytic(n, Valence::SymTwo, move |p| {
        let (om, _) = om_g(&p.angles, &rot_g);
        let diag = crate::geometry::background_metric_diag(p).expect("domain");
        let e = env(p.r);
        let mut v = DVector::zeros(ncomp);
        v[sym_index(n, 0, 0)] = e * p2.value(&om);
        for i in 1..n {
            v[sym_index(n, i, i)] = e * p1.value(&om) * diag[i];
        }
        v
    });
    let (p1d, p2d) = (polys[0].clone(), polys[1].clone());
    let rot_g1 = rot.clone();
    let bump = bump.with_d1(move |p| {
        let (om, jac) = om_g(&p.angles, &rot_g1);
        let diag = crate::geometry::background_metric_diag(p).expect("domain");
        let (h, dh, _) = angular_diag_derivs(&p.angles);
        let s2p = fmath::sinh(2.0 * p.r);
        let e = env(p.r);
        let de = denv(p.r);
        let v1 = p1d.value(&om);
        let g1 = p1d.grad(&om, &jac);
        let v2 = p2d.value(&om);
        let g2 = p2d.grad(&om, &jac);
        let mut d = DMatrix::zeros(ncomp, n);
        d[(sym_index(n, 0, 0), 0)] = de * v2;
        for c in 0..n - 1 {
            d[(sym_index(n, 0, 0), c + 1)] = e * g2[c];
        }
        for i in 1..n {
            let row = sym_index(n, i, i);
            d[(row, 0)] = de * v1 * diag[i] + e * v1 * s2p * h[i - 1];
            for c in 0..n - 1 {
                d[(row, c + 1)] = e * (g1[c] * diag[i]
                    + v1 * fmath::sinh(p.r) * fmath::sinh(p.r) * dh[(i - 1, c)]);
            }
        }
        d
    });
    let g = b.add(&bump);

    // K = env (p3 b + p4 dr^2)
    let (p3, p4) = (polys[2].clone(), polys[3].clone());
    let rot_k = rot.clone();
    let k_field = TensorField::analytic(n, Valence::SymTwo, move |p| {
        let (om, _) = om_g(&p.angles, &rot_k);
        let diag = crate::geometry::background_metric_diag(p).expect("domain");
        let e = env(p.r);
        let mut v = DVector::zeros(ncomp);
        v[sym_index(n, 0, 0)] = e * (p3.value(&om) + p4.value(&om));
        for i in 1..n {
            v[sym_index(n, i, i)] = e * p3.value(&om) * diag[i];
        }
        v
    });
    let (p3d, p4d) = (polys[2].clone(), polys[3].clone());
    let rot_k1 = rot.clone();
    let k_field = k_field.with_d1(move |p| {
        let (om, jac) = om_g(&p.angles, &rot_k1);
        let diag = crate::geometry::background_metric_diag(p).expect("domain");
        let (h, dh, _) = angular_diag_derivs(&p.angles);
        let s2p = fmath::sinh(2.0 * p.r);
        let e = env(p.r);
        let de = denv(p.r);
        let v3 = p3d.value(&om);
        let g3 = p3d.grad(&om, &jac);
        let v4 = p4d.value(&om);
        let g4 = p4d.grad(&om, &jac);
        let mut d = DMatrix::zeros(ncomp, n);
        d[(sym_index(n, 0, 0), 0)] = de * (v3 + v4);
        for c in 0..n - 1 {
            d[(sym_index(n, 0, 0), c + 1)] = e * (g3[c] + g4[c]);
        }
        for i in 1..n {
            let row = sym_index(n, i, i);
            d[(row, 0)] = de * v3 * diag[i] + e * v3 * s2p * h[i - 1];
            for c in 0..n - 1 {
                d[(row, c + 1)] = e * (g3[c] * diag[i]
                    + v3 * fmath::sinh(p.r) * fmath::sinh(p.r) * dh[(i - 1, c)]);
            }
        }
        d
    });

    // E = env (p5 d_r + grad q / sinh r), q = linear part of polys[5]
    let p5 = polys[4].clone();
    let q_poly = polys[5].clone();
    let rot_e = rot.clone();
    let e_field = TensorField::analytic(n, Valence::Vector, move |p| {
        let (om, jac) = om_g(&p.angles, &rot_e);
        let (h, _, _) = angular_diag_derivs(&p.angles);
        let e = env(p.r);
        let gq = q_poly.grad(&om, &jac);
        let mut v = DVector::zeros(n);
        v[0] = e * p5.value(&om);
        let sh = fmath::sinh(p.r);
        for a in 0..n - 1 {
            v[a + 1] = e * gq[a] / (h[a] * sh);
        }
        v
    });
    // finite differences supply E's derivatives (first order only is used)
    let e_field = e_field.with_fd_step(5e-3);

    Ok(InitialData {
        chart: Chart::standard(n)?,
        g,
        k: k_field,
        e: e_field,
        tau,
        complete: true,
        e_g_explicit: None,
    })
}

/// `g = (1 + eps e^{-kappa r})^{4/(n-2)} b`, `K = E = 0`. The linearized
/// energy margin is `(4(n-1)/(n-2)) eps e^{-kappa r} (n - kappa)(kappa + 1)`
/// to leading order, so the condition holds strictly for `kappa <= n`; at
/// `kappa = n` the margin comes from `coth r - 1 > 0` and the charge
/// integrands converge with a summable tail.
pub fn conformal_bump_data(n: usize, kappa: f64, epsilon: f64) -> Result<InitialData> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    if !(epsilon >= 0.0 && epsilon < 0.5) || !(kappa > n as f64 / 2.0) {
        return Err(Error::ModelDomain(alloc::format!(
            "conformal bump needs 0 <= eps < 0.5 and kappa > n/2, got eps = {epsilon}, kappa = {kappa}"
        )));
    }
    let expo = 4.0 / (n as f64 - 2.0);
    let phi_jets = move |r: f64| -> (f64, f64, f64) {
        let v = epsilon * fmath::exp(-kappa * r);
        let vp = -kappa * v;
        let vpp = kappa * kappa * v;
        let base = 1.0 + v;
        let phi = fmath::powf(base, expo);
        let phip = expo * fmath::powf(base, expo - 1.0) * vp;
        let phipp = expo * (expo - 1.0) * fmath::powf(base, expo - 2.0) * vp * vp
            + expo * fmath::powf(base, expo - 1.0) * vpp;
        (phi, phip, phipp)
    };
    let b = background_metric_field(n);
    let b1 = b.clone();
    let b2 = b.clone();
    let ncomp = Valence::SymTwo.ncomp(n);
    let g = TensorField::analytic(n, Valence::SymTwo, move |p| {
        let (phi, _, _) = phi_jets(p.r);
        b.value(p) * phi
    })
    .with_d1(move |p| {
        let (phi, phip, _) = phi_jets(p.r);
        let bv = b1.value(p);
        let mut d = b1.partials(p) * phi;
        for c in 0..ncomp {
            d[(c, 0)] += phip * bv[c];
        }
        d
    })
    .with_d2(move |p| {
        let (phi, phip, phipp) = phi_jets(p.r);
        let bv = b2.value(p);
        let bd = b2.partials(p);
        let bh = b2.second_partials(p);
        bh.into_iter()
            .enumerate()
            .map(|(c, mut m)| {
                m *= phi;
                let nn = m.nrows();
                for k in 0..nn {
                    m[(k, 0)] += phip * bd[(c, k)];
                    m[(0, k)] += phip * bd[(c, k)];
                }
                m[(0, 0)] += phipp * bv[c];
                m
            })
            .collect()
    });
    Ok(InitialData {
        chart: Chart::standard(n)?,
        g,
        k: TensorField::zero(n, Valence::SymTwo),
        e: TensorField::zero(n, Valence::Vector),
        tau: kappa,
        complete: true,
        e_g_explicit: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{constraint_map, dec_check, dec_margin};
    use crate::geometry::{decay_verification, norm_b, DecayOptions, Verdict};
    use crate::kids::sample_points;

    #[test]
    fn pure_ads_parameters_reduce_to_background() {
        let data = rn_ads_data(3, 0.0, 0.0).unwrap();
        assert!(data.complete);
        let e_g = data.e_g();
        for &r in &data.chart.radial_nodes {
            let p = ChartPoint::new(r, alloc::vec![1.0, 2.0]);
            let v = e_g.try_value(&p).unwrap();
            let norm = norm_b(&p, Valence::SymTwo, &v).unwrap();
            assert!(norm <= 1e-10, "r = {r}: |e_g| = {norm}");
        }
    }

    #[test]
    fn rn_ads_satisfies_the_constraints() {
        let data = rn_ads_data(3, 0.5, 0.2).unwrap();
        assert!(data.complete);
        for p in sample_points(3, 4, 3).iter().map(|p| ChartPoint::new(p.r + 2.0, p.angles.clone())) {
            let phi = constraint_map(&data, &p).unwrap();
            assert!((phi.phi1 + 6.0).abs() < 1e-8, "Phi1 = {}", phi.phi1);
            assert!(phi.phi2.norm() < 1e-8);
            assert!(phi.phi3.abs() < 1e-9, "div E = {}", phi.phi3);
            let margin = dec_margin(&data, &p).unwrap();
            assert!(margin.abs() < 1e-8);
        }
    }

    #[test]
    fn rn_ads_metric_is_arclength_gauge() {
        let data = rn_ads_data(4, 0.7, 0.3).unwrap();
        for &r in &data.chart.radial_nodes {
            let p = ChartPoint::new(r, alloc::vec![0.9, 1.1, 2.2]);
            let g = data.g.value(&p);
            assert!((g[sym_index(4, 0, 0)] - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn rn_ads_flux_is_radius_independent() {
        // flux with respect to g (unit normal and induced measure of g) is
        // exactly conserved; the b-flux converges to qbar from above
        let data = rn_ads_data(3, 0.5, 0.3).unwrap();
        let mut g_fluxes = Vec::new();
        let mut b_fluxes = Vec::new();
        for &r in &data.chart.radial_nodes {
            let gflux = data
                .chart
                .sphere_integrate(r, |p| {
                    let g = data.g.value(p);
                    let s2 = g[sym_index(3, 1, 1)]; // first angular diag has h = 1
                    data.e.value(p)[0] * s2 / (fmath::sinh(r) * fmath::sinh(r))
                })
                .unwrap();
            g_fluxes.push(gflux / crate::sphere::sphere_volume(2));
            let bflux = data.chart.sphere_integrate(r, |p| data.e.value(p)[0]).unwrap();
            b_fluxes.push(bflux / crate::sphere::sphere_volume(2));
        }
        for f in &g_fluxes {
            assert!((f - 0.3).abs() < 1e-9, "{g_fluxes:?}");
        }
        assert!((b_fluxes[b_fluxes.len() - 1] - 0.3).abs() < 1e-6, "{b_fluxes:?}");
    }

    #[test]
    fn rn_ads_decay_profile() {
        // (s / sinh - 1) e^{n r} settles to a constant
        let data = rn_ads_data(3, 0.4, 0.0).unwrap();
        let mut scaled = Vec::new();
        for &r in &data.chart.radial_nodes[2..] {
            let p = ChartPoint::new(r, alloc::vec![1.0, 1.0]);
            let g = data.g.value(&p);
            let s2 = g[sym_index(3, 1, 1)];
            let ratio = fmath::sqrt(s2) / fmath::sinh(r) - 1.0;
            scaled.push(ratio * fmath::exp(3.0 * r));
        }
        let last = scaled[scaled.len() - 1];
        for v in &scaled {
            assert!((v - last).abs() < 0.25 * last.abs(), "{scaled:?}");
        }
        // decay verification at the claimed rate passes
        let rep = decay_verification(&data, data.tau, DecayOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn naked_regime_is_flagged() {
        let data = rn_ads_data(3, 0.02, 0.4).unwrap();
        assert!(!data.complete);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(rn_ads_data(3, -1.0, 0.0).is_err());
        assert!(rn_ads_data(3, f64::NAN, 0.0).is_err());
        assert!(rn_ads_data(2, 0.1, 0.0).is_err());
    }

    #[test]
    fn perturbation_matches_declared_envelope() {
        let data = perturbed_data(3, 2.0, 1e-3, 7).unwrap();
        let rep = decay_verification(&data, 2.0, DecayOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn perturbation_is_deterministic_and_seed_sensitive() {
        let a = perturbed_data(3, 2.0, 1e-3, 9).unwrap();
        let b = perturbed_data(3, 2.0, 1e-3, 9).unwrap();
        let c = perturbed_data(3, 2.0, 1e-3, 10).unwrap();
        let p = ChartPoint::new(2.3, alloc::vec![1.1, 0.7]);
        assert_eq!(a.g.value(&p), b.g.value(&p));
        assert_eq!(a.k.value(&p), b.k.value(&p));
        assert!((a.g.value(&p) - c.g.value(&p)).norm() > 0.0);
    }

    #[test]
    fn zero_amplitude_perturbation_is_background() {
        let data = perturbed_data(3, 2.0, 0.0, 3).unwrap();
        let e_g = data.e_g();
        let p = ChartPoint::new(2.0, alloc::vec![1.0, 1.0]);
        assert!(e_g.value(&p).norm() < 1e-14);
        assert!(data.k.value(&p).norm() < 1e-14);
    }

    #[test]
    fn perturbation_requires_fast_enough_decay() {
        assert!(matches!(perturbed_data(3, 1.4, 1e-3, 1), Err(Error::ModelDomain(_))));
    }

    #[test]
    fn perturbation_derivatives_are_consistent() {
        let data = perturbed_data(3, 2.0, 1e-2, 21).unwrap();
        let e_g = data.e_g();
        let eg_fd = {
            let f = data.e_g();
            TensorField::analytic(3, Valence::SymTwo, move |p| f.value(p))
        };
        let p = ChartPoint::new(2.1, alloc::vec![0.8, 1.9]);
        let err = (e_g.partials(&p) - eg_fd.partials(&p)).abs().max();
        assert!(err < 1e-9, "analytic vs FD partials differ by {err}");
        let k_fd = {
            let k = data.k.clone();
            TensorField::analytic(3, Valence::SymTwo, move |p| k.value(p))
        };
        let errk = (data.k.partials(&p) - k_fd.partials(&p)).abs().max();
        assert!(errk < 1e-9, "{errk}");
    }

    #[test]
    fn conformal_bump_has_positive_margin() {
        let n = 3;
        let data = conformal_bump_data(n, 3.0, 1e-2).unwrap();
        let rep = dec_check(&data, 1e-8).unwrap();
        assert!(rep.pass);
        // strictly positive at the innermost ladder radius
        let p = ChartPoint::new(data.chart.radial_nodes[0], alloc::vec![1.0, 1.0]);
        let m = dec_margin(&data, &p).unwrap();
        assert!(m > 0.0, "margin = {m}");
    }

    #[test]
    fn faraday_constant_matches_display() {
        assert!((faraday_normalization(3) - 1.0).abs() < 1e-15);
        assert!((faraday_normalization(4) - (3.0f64).sqrt()).abs() < 1e-15);
    }
}
