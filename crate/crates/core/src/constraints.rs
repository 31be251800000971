//! The Einstein-Maxwell constraint map `Phi = (Phi_1, Phi_2, Phi_3)`, the
//! energy/current/charge densities, the dominant energy condition, and the
//! integrability diagnostic for the charge limits.
//!
//! All traces, norms and divergences here are taken with respect to the
//! physical metric `g`; the background enters only through the deficit
//! `Phi(h) - Phi(h_0) = (Phi_1 + n(n-1), Phi_2, Phi_3)`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::geometry::{
    background_metric_diag, christoffel_from, invert_metric, scalar_curvature_of_metric_field,
    sym_packed_to_matrix, sym_partials_to_matrices, ChartPoint, InitialData,
};
use crate::linalg::pairwise_sum;
use crate::kids::KID;
use crate::{fmath, Error, Result};

/// Values of the constraint map at a point: scalar, 1-form, scalar.
#[derive(Clone, Debug)]
pub struct ConstraintValues {
    pub phi1: f64,
    pub phi2: DVector<f64>,
    pub phi3: f64,
}

/// Energy, current and charge densities `(mu, J, varpi) = Phi / 2`.
#[derive(Clone, Debug)]
pub struct Densities {
    pub mu: f64,
    pub j: DVector<f64>,
    pub varpi: f64,
}

/// `Phi_1 = R_g + (tr_g K)^2 - |K|_g^2 - (n-1)(n-2)|E|_g^2`,
/// `Phi_2 = 2 (div_g K - d tr_g K)`, `Phi_3 = 2(n-1) div_g E`.
pub fn constraint_map(data: &InitialData, p: &ChartPoint) -> Result<ConstraintValues> {
    let n = data.n();
    let nf = n as f64;
    let g = sym_packed_to_matrix(n, &data.g.try_value(p)?);
    let dg = sym_partials_to_matrices(n, &data.g.try_partials(p)?);
    let inv = invert_metric(&g)?;
    let gamma = christoffel_from(&g, &dg)?;
    let r_scalar = scalar_curvature_of_metric_field(&data.g, p)?;

    let kmat = sym_packed_to_matrix(n, &data.k.try_value(p)?);
    let dk = sym_partials_to_matrices(n, &data.k.try_partials(p)?);
    let invk = &inv * &kmat;
    let tr_k = invk.trace();
    let k_norm2 = (&invk * &invk).trace();

    let e_vec = data.e.try_value(p)?;
    let de = data.e.try_partials(p)?;
    let e_norm2 = (e_vec.transpose() * &g * &e_vec)[(0, 0)];

    // (div_g K)_j = g^{ik} (d_i K_kj - G^m_ik K_mj - G^m_ij K_km)
    let mut div_k = DVector::zeros(n);
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                let mut t = dk[i][(k, j)];
                for m in 0..n {
                    t -= gamma[m][(i, k)] * kmat[(m, j)] + gamma[m][(i, j)] * kmat[(k, m)];
                }
                acc += inv[(i, k)] * t;
            }
        }
        div_k[j] = acc;
    }
    // d(tr_g K)_j = (d_j g^{ik}) K_ik + g^{ik} d_j K_ik
    let mut d_tr_k = DVector::zeros(n);
    for j in 0..n {
        let dinv_j = -(&inv * &dg[j] * &inv);
        d_tr_k[j] = (&dinv_j * &kmat).trace() + (&inv * &dk[j]).trace();
    }
    // div_g E = d_i E^i + G^i_im E^m
    let mut div_e = 0.0;
    for i in 0..n {
        div_e += de[(i, i)];
        for m in 0..n {
            div_e += gamma[i][(i, m)] * e_vec[m];
        }
    }

    Ok(ConstraintValues {
        phi1: r_scalar + tr_k * tr_k - k_norm2 - (nf - 1.0) * (nf - 2.0) * e_norm2,
        phi2: (div_k - d_tr_k) * 2.0,
        phi3: 2.0 * (nf - 1.0) * div_e,
    })
}

pub fn densities(data: &InitialData, p: &ChartPoint) -> Result<Densities> {
    let phi = constraint_map(data, p)?;
    Ok(Densities { mu: 0.5 * phi.phi1, j: phi.phi2 * 0.5, varpi: 0.5 * phi.phi3 })
}

/// Dominant-energy margin `mu + n(n-1)/2 - sqrt(|J|_g^2 + varpi^2)` at a
/// point.
pub fn dec_margin(data: &InitialData, p: &ChartPoint) -> Result<f64> {
    let n = data.n() as f64;
    let d = densities(data, p)?;
    let g = sym_packed_to_matrix(data.n(), &data.g.try_value(p)?);
    let inv = invert_metric(&g)?;
    let j_norm2 = (d.j.transpose() * &inv * &d.j)[(0, 0)];
    Ok(d.mu + n * (n - 1.0) / 2.0 - fmath::sqrt(j_norm2 + d.varpi * d.varpi))
}

/// Current density in a g-orthonormal frame (for feeding the curvature
/// endomorphism); the norm matches `|J|_g`.
pub fn current_on_frame(g: &DMatrix<f64>, j: &DVector<f64>) -> Result<DVector<f64>> {
    let ch = g.clone().cholesky().ok_or(Error::DegenerateMetric { det: g.determinant() })?;
    let mut out = j.clone();
    ch.l().solve_lower_triangular_mut(&mut out);
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct DecReport {
    /// Margin per sampled point.
    pub samples: Vec<(ChartPoint, f64)>,
    pub min_margin: f64,
    pub worst: ChartPoint,
    pub pass: bool,
    pub tol: f64,
}

/// Evaluate the DEC margin over the chart's ladder and angular nodes.
/// Passes when the margin stays above `-tol` everywhere sampled.
pub fn dec_check(data: &InitialData, tol: f64) -> Result<DecReport> {
    let chart = &data.chart;
    let mut samples = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut worst = ChartPoint::new(chart.radial_nodes[0], chart.rule.nodes[0].angles.clone());
    for &r in &chart.radial_nodes {
        for node in &chart.rule.nodes {
            let p = ChartPoint::new(r, node.angles.clone());
            let m = dec_margin(data, &p)?;
            if m < min_margin {
                min_margin = m;
                worst = p.clone();
            }
            samples.push((p, m));
        }
    }
    Ok(DecReport { samples, min_margin, worst, pass: min_margin >= -tol, tol })
}

/// `<eta, Phi(h) - Phi(h_0)>_b` at a point, the b-pairing of a KID with the
/// constraint deficit.
pub fn pairing_with_kid(data: &InitialData, kid: &KID, p: &ChartPoint) -> Result<f64> {
    let n = data.n();
    let nf = n as f64;
    let phi = constraint_map(data, p)?;
    let v = kid.v.try_value(p)?[0];
    let alpha = kid.alpha.try_value(p)?;
    let diag = background_metric_diag(p)?;
    let mut pair = v * (phi.phi1 + nf * (nf - 1.0)) + kid.f * phi.phi3;
    for i in 0..n {
        pair += alpha[i] * phi.phi2[i] / diag[i];
    }
    Ok(pair)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrabilityVerdict {
    /// Shell integrals are negligible or decay geometrically.
    Summable,
    NonSummable,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct IntegrabilityReport {
    /// `(r_lo, r_hi, integral of |<eta, Phi - Phi_0>| over the shell)`.
    pub shells: Vec<(f64, f64, f64)>,
    /// Fitted geometric ratio of consecutive shells, when meaningful.
    pub ratio: Option<f64>,
    pub verdict: IntegrabilityVerdict,
    /// Set when every shell is below the negligibility floor.
    pub negligible: bool,
}

/// Shell-decomposed `L^1` diagnostic for the integrability condition: the
/// integrals of `|<eta, Phi(h)-Phi(h_0)>|` over the ladder shells must have a
/// summable (geometrically decaying) tail.
pub fn integrability_check(data: &InitialData, kid: &KID) -> Result<IntegrabilityReport> {
    let chart = &data.chart;
    let radii = &chart.radial_nodes;
    if radii.len() < 4 {
        return Ok(IntegrabilityReport {
            shells: Vec::new(),
            ratio: None,
            verdict: IntegrabilityVerdict::Inconclusive,
            negligible: false,
        });
    }
    let nf = data.n() as f64;
    // 4-point Gauss-Legendre on each shell; alongside each shell integral,
    // accumulate a reference magnitude |eta| * n(n-1) against which roundoff
    // in the constraint deficit is measured (the raw deficit is a difference
    // of order-n(n-1) quantities, so this floor scales correctly with the
    // exponentially growing measure).
    let (gl_nodes, gl_weights) = crate::geometry::gauss_jacobi(4, 0);
    let mut shells = Vec::with_capacity(radii.len() - 1);
    let mut refs = Vec::with_capacity(radii.len() - 1);
    for w in radii.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut terms = Vec::with_capacity(4);
        let mut ref_terms = Vec::with_capacity(4);
        for (t, gw) in gl_nodes.iter().zip(&gl_weights) {
            let r = mid + half * t;
            let sphere = chart.sphere_integrate(r, |p| {
                pairing_with_kid(data, kid, p).map(fmath::abs).unwrap_or(f64::NAN)
            })?;
            terms.push(gw * half * sphere);
            let ref_sphere = chart.sphere_integrate(r, |p| {
                let v = kid.v.value(p)[0];
                let alpha = kid.alpha.value(p);
                let diag = background_metric_diag(p).expect("domain");
                let mut eta_mag = fmath::abs(v) + fmath::abs(kid.f);
                for i in 0..data.n() {
                    eta_mag += fmath::abs(alpha[i]) / fmath::sqrt(diag[i]);
                }
                eta_mag * nf * (nf - 1.0)
            })?;
            ref_terms.push(gw * half * ref_sphere);
        }
        shells.push((lo, hi, pairwise_sum(&terms)));
        refs.push(pairwise_sum(&ref_terms));
    }
    let floor = |k: usize| 1e-10 * refs[k].max(1e-30);
    let negligible = shells.iter().enumerate().all(|(k, s)| s.2 <= floor(k));
    if negligible {
        return Ok(IntegrabilityReport {
            shells,
            ratio: None,
            verdict: IntegrabilityVerdict::Summable,
            negligible: true,
        });
    }
    // geometric-ratio fit on the outer shells that sit above the floor
    let significant: Vec<f64> = shells
        .iter()
        .enumerate()
        .filter(|(k, s)| s.2 > floor(*k))
        .map(|(_, s)| s.2)
        .collect();
    let tail = &significant[significant.len().saturating_sub(4)..];
    let mut log_ratios = Vec::new();
    for w in tail.windows(2) {
        log_ratios.push(fmath::ln(w[1] / w[0]));
    }
    if log_ratios.is_empty() {
        return Ok(IntegrabilityReport {
            shells,
            ratio: None,
            verdict: IntegrabilityVerdict::Inconclusive,
            negligible: false,
        });
    }
    let mean_log = pairwise_sum(&log_ratios) / log_ratios.len() as f64;
    let ratio = fmath::exp(mean_log);
    let verdict = if ratio <= 0.97 {
        IntegrabilityVerdict::Summable
    } else if ratio >= 1.03 {
        IntegrabilityVerdict::NonSummable
    } else {
        IntegrabilityVerdict::Inconclusive
    };
    Ok(IntegrabilityReport { shells, ratio: Some(ratio), verdict, negligible: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::CliffordRep;
    use crate::geometry::{
        background_metric_field, sym_index, Chart, TensorField, Valence,
    };
    use crate::kids::sample_points;
    use crate::linalg::inner;
    use alloc::vec;

    fn hyperbolic(n: usize) -> InitialData {
        InitialData {
            chart: Chart::standard(n).unwrap(),
            g: background_metric_field(n),
            k: TensorField::zero(n, Valence::SymTwo),
            e: TensorField::zero(n, Valence::Vector),
            tau: n as f64,
            complete: true,
            e_g_explicit: None,
        }
    }

    #[test]
    fn hyperbolic_constraints() {
        for n in [3usize, 4] {
            let data = hyperbolic(n);
            let want = -((n * (n - 1)) as f64);
            for p in sample_points(n, 6, 1) {
                let phi = constraint_map(&data, &p).unwrap();
                assert!((phi.phi1 - want).abs() < 1e-8, "n={n}: {}", phi.phi1);
                assert!(phi.phi2.norm() < 1e-9);
                assert!(phi.phi3.abs() < 1e-12);
                let d = densities(&data, &p).unwrap();
                assert!((d.mu - 0.5 * want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn umbilical_slice_constraints() {
        // K = lambda b, E = 0 on the background:
        // Phi_1 = -n(n-1) + n(n-1) lambda^2, Phi_2 = 0
        let n = 3;
        let lambda = 0.37;
        let b = background_metric_field(n);
        let data = InitialData {
            chart: Chart::standard(n).unwrap(),
            g: b.clone(),
            k: b.combine(&b, lambda, 0.0),
            e: TensorField::zero(n, Valence::Vector),
            tau: 3.0,
            complete: true,
            e_g_explicit: None,
        };
        let nf = n as f64;
        let want = -nf * (nf - 1.0) + nf * (nf - 1.0) * lambda * lambda;
        for p in sample_points(n, 5, 2) {
            let phi = constraint_map(&data, &p).unwrap();
            assert!((phi.phi1 - want).abs() < 1e-8, "{} vs {want}", phi.phi1);
            assert!(phi.phi2.norm() < 1e-8);
        }
    }

    fn radial_divfree_field(n: usize, c: f64) -> TensorField {
        // E = c sinh^{1-n}(r) d_r is divergence-free for b
        TensorField::analytic(n, Valence::Vector, move |p| {
            let mut v = DVector::zeros(n);
            v[0] = c * fmath::powf(fmath::sinh(p.r), 1.0 - n as f64);
            v
        })
        .with_d1(move |p| {
            let mut d = DMatrix::zeros(n, n);
            d[(0, 0)] = c
                * (1.0 - n as f64)
                * fmath::powf(fmath::sinh(p.r), -(n as f64))
                * fmath::cosh(p.r);
            d
        })
    }

    #[test]
    fn gauss_density_linear_in_divergence_free_field() {
        let n = 3;
        let mut data = hyperbolic(n);
        data.e = radial_divfree_field(n, 0.7);
        let p = &sample_points(n, 4, 3)[1];
        let phi = constraint_map(&data, p).unwrap();
        assert!(phi.phi3.abs() < 1e-8, "div-free field: {}", phi.phi3);
        data.e = radial_divfree_field(n, 1.4);
        let phi2 = constraint_map(&data, p).unwrap();
        assert!(phi2.phi3.abs() < 1e-8, "doubled field: {}", phi2.phi3);
        // Phi_1 feels |E|^2
        let nf = n as f64;
        let e2 = fmath::powf(fmath::sinh(p.r), 2.0 * (1.0 - nf));
        let want = -nf * (nf - 1.0) - (nf - 1.0) * (nf - 2.0) * (1.4 * 1.4) * e2;
        assert!((phi2.phi1 - want).abs() < 1e-8);
    }

    #[test]
    fn dec_holds_on_background_with_zero_margin() {
        let data = hyperbolic(3);
        let rep = dec_check(&data, 1e-8).unwrap();
        assert!(rep.pass);
        assert!(rep.min_margin.abs() < 1e-8);
    }

    /// Conformal dip `g = (1 + v)^{4/(n-2)} b` with `v < 0` localized near
    /// `r0`, violating the time-symmetric energy condition there.
    fn conformal_dip(n: usize, eps: f64, r0: f64) -> InitialData {
        let b = background_metric_field(n);
        let expo = 4.0 / (n as f64 - 2.0);
        let g = TensorField::analytic(n, Valence::SymTwo, move |p| {
            let v = -eps * fmath::exp(-4.0 * (p.r - r0) * (p.r - r0));
            b.value(p) * fmath::powf(1.0 + v, expo)
        });
        InitialData {
            chart: Chart::standard(n).unwrap(),
            g,
            k: TensorField::zero(n, Valence::SymTwo),
            e: TensorField::zero(n, Valence::Vector),
            tau: n as f64,
            complete: true,
            e_g_explicit: None,
        }
    }

    #[test]
    fn dec_violation_is_located() {
        let n = 3;
        let r0 = 2.7;
        let data = conformal_dip(n, 1e-3, r0);
        let rep = dec_check(&data, 1e-8).unwrap();
        assert!(!rep.pass);
        assert!(rep.min_margin < -1e-6);
        assert!((rep.worst.r - r0).abs() < 1.0, "worst at r = {}", rep.worst.r);
    }

    #[test]
    fn integrability_zero_on_background() {
        let n = 3;
        let data = hyperbolic(n);
        let kid = KID::basis_potential(n, 0);
        let rep = integrability_check(&data, &kid).unwrap();
        assert_eq!(rep.verdict, IntegrabilityVerdict::Summable);
        assert!(rep.negligible);
        // inner shells are zero in absolute terms as well
        assert!(rep.shells[0].2 < 1e-9);
    }

    #[test]
    fn borderline_decay_is_not_summable() {
        // pure-trace angular perturbation with tau = n/2 exactly
        let n = 3;
        let tau = 1.5;
        let b = background_metric_field(n);
        let bump = TensorField::analytic(n, Valence::SymTwo, move |p| {
            let scale = 1e-3 * fmath::exp(-tau * p.r);
            let diag = background_metric_diag(p).unwrap();
            let mut v = DVector::zeros(Valence::SymTwo.ncomp(n));
            for i in 1..n {
                v[sym_index(n, i, i)] = scale * diag[i];
            }
            v
        });
        let data = InitialData {
            chart: Chart::standard(n).unwrap(),
            g: b.add(&bump),
            k: TensorField::zero(n, Valence::SymTwo),
            e: TensorField::zero(n, Valence::Vector),
            tau,
            complete: true,
            e_g_explicit: None,
        };
        let kid = KID::basis_potential(n, 0);
        let rep = integrability_check(&data, &kid).unwrap();
        assert_eq!(rep.verdict, IntegrabilityVerdict::NonSummable, "{:?}", rep.ratio);
    }

    #[test]
    fn short_ladder_is_inconclusive() {
        let n = 3;
        let mut data = hyperbolic(n);
        data.chart = Chart::new(n, vec![2.0, 3.0, 4.0], 8).unwrap();
        let kid = KID::basis_potential(n, 0);
        let rep = integrability_check(&data, &kid).unwrap();
        assert_eq!(rep.verdict, IntegrabilityVerdict::Inconclusive);
    }

    #[test]
    fn curvature_endomorphism_respects_dec_margin() {
        // <R phi, phi> >= margin/2 |phi|^2 pointwise, for densities taken
        // from data with all three density components active
        let n = 3;
        let b = background_metric_field(n);
        let k_field = TensorField::analytic(n, Valence::SymTwo, move |p| {
            let mut v = DVector::zeros(Valence::SymTwo.ncomp(n));
            v[sym_index(n, 0, 0)] = 0.1 * fmath::exp(-2.0 * p.r);
            v[sym_index(n, 0, 1)] = 0.05 * fmath::exp(-2.0 * p.r);
            v
        });
        let e_field = TensorField::analytic(n, Valence::Vector, move |p| {
            let mut v = DVector::zeros(n);
            v[0] = 0.2 * fmath::exp(-2.0 * p.r);
            v[1] = 0.1 * fmath::exp(-2.5 * p.r);
            v
        });
        let data = InitialData {
            chart: Chart::standard(n).unwrap(),
            g: b,
            k: k_field,
            e: e_field,
            tau: 2.0,
            complete: true,
            e_g_explicit: None,
        };
        let rep = CliffordRep::new(n).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(17);
        let nf = n as f64;
        for p in sample_points(n, 5, 29) {
            let d = densities(&data, &p).unwrap();
            let g = sym_packed_to_matrix(n, &data.g.try_value(&p).unwrap());
            let j_on = current_on_frame(&g, &d.j).unwrap();
            let margin = dec_margin(&data, &p).unwrap();
            for _ in 0..20 {
                let phi = rep.random_spinor(&mut rng);
                let rphi = rep.curvature_endomorphism(d.mu, d.varpi, &j_on, &phi).unwrap();
                let q = inner(&rphi, &phi).re;
                assert!(
                    q >= 0.5 * margin * phi.norm_squared() - 1e-9 * phi.norm_squared(),
                    "q = {q}, margin = {margin}"
                );
                let _ = nf;
            }
        }
    }
}
