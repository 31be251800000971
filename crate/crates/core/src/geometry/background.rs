//! The hyperbolic background metric `b = dr^2 + sinh^2(r) h` in chart
//! coordinates, its Christoffel symbols, covariant derivatives, orthonormal
//! frame norms, and the coordinate scalar-curvature formula for arbitrary
//! metrics.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::field::{sym_index, TensorField, Valence};
use super::ChartPoint;
use crate::{fmath, Error, Result};

/// Diagonal entries `h_a = prod_{e<a} sin^2(t_e)` of the round metric,
/// with first and second angle-derivatives.
#[allow(clippy::type_complexity)]
pub(crate) fn angular_diag_derivs(angles: &[f64]) -> (DVector<f64>, DMatrix<f64>, Vec<DMatrix<f64>>) {
    let m = angles.len();
    let factor = |e: usize, order: u8| -> f64 {
        let t = angles[e];
        match order {
            0 => {
                let s = fmath::sin(t);
                s * s
            }
            1 => fmath::sin(2.0 * t),
            _ => 2.0 * fmath::cos(2.0 * t),
        }
    };
    let mut h = DVector::zeros(m);
    let mut dh = DMatrix::zeros(m, m);
    let mut d2h: Vec<DMatrix<f64>> = (0..m).map(|_| DMatrix::zeros(m, m)).collect();
    for a in 0..m {
        let prod = |skip: &dyn Fn(usize) -> u8| -> f64 {
            (0..a).map(|e| factor(e, skip(e))).product()
        };
        h[a] = prod(&|_| 0);
        for c in 0..a {
            dh[(a, c)] = prod(&|e| if e == c { 1 } else { 0 });
            for d in 0..=c {
                let v = if c == d {
                    prod(&|e| if e == c { 2 } else { 0 })
                } else {
                    prod(&|e| if e == c || e == d { 1 } else { 0 })
                };
                d2h[a][(c, d)] = v;
                d2h[a][(d, c)] = v;
            }
        }
    }
    (h, dh, d2h)
}

/// Diagonal of `b` in coordinates: `(1, sinh^2 r * h_1, ..., sinh^2 r * h_{n-1})`.
pub fn background_metric_diag(p: &ChartPoint) -> Result<DVector<f64>> {
    if p.r <= 0.0 {
        return Err(Error::Domain(alloc::format!("radius must be positive, got {}", p.r)));
    }
    let n = p.dim();
    let s2 = {
        let s = fmath::sinh(p.r);
        s * s
    };
    let h = crate::sphere::round_metric_diag(&p.angles);
    let mut d = DVector::zeros(n);
    d[0] = 1.0;
    for a in 0..n - 1 {
        d[a + 1] = s2 * h[a];
    }
    Ok(d)
}

pub fn background_metric_matrix(p: &ChartPoint) -> Result<DMatrix<f64>> {
    let d = background_metric_diag(p)?;
    Ok(DMatrix::from_diagonal(&d))
}

/// Orthonormal-frame scale factors `sqrt(D_i)`; frame vectors are
/// `e_i = d_i / sqrt(D_i)`.
pub fn frame_scales(p: &ChartPoint) -> Result<DVector<f64>> {
    Ok(background_metric_diag(p)?.map(fmath::sqrt))
}

/// Diagonal entries of `b` with all first and second coordinate derivatives:
/// `(D, dD, d2D)` where `dD[(i,k)] = d_k D_i` and `d2D[i][(k,l)]`.
#[allow(clippy::type_complexity)]
fn background_diag_derivs(p: &ChartPoint) -> (DVector<f64>, DMatrix<f64>, Vec<DMatrix<f64>>) {
    let n = p.dim();
    let m = n - 1;
    let (h, dh, d2h) = angular_diag_derivs(&p.angles);
    let s = fmath::sinh(p.r);
    let s2 = s * s;
    let s2p = fmath::sinh(2.0 * p.r);
    let s2pp = 2.0 * fmath::cosh(2.0 * p.r);
    let mut d = DVector::zeros(n);
    let mut dd = DMatrix::zeros(n, n);
    let mut d2d: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
    d[0] = 1.0;
    for a in 0..m {
        let i = a + 1;
        d[i] = s2 * h[a];
        dd[(i, 0)] = s2p * h[a];
        d2d[i][(0, 0)] = s2pp * h[a];
        for c in 0..m {
            dd[(i, c + 1)] = s2 * dh[(a, c)];
            d2d[i][(0, c + 1)] = s2p * dh[(a, c)];
            d2d[i][(c + 1, 0)] = s2p * dh[(a, c)];
            for e in 0..m {
                d2d[i][(c + 1, e + 1)] = s2 * d2h[a][(c, e)];
            }
        }
    }
    (d, dd, d2d)
}

/// The background metric as a tensor field with analytic derivatives.
pub fn background_metric_field(n: usize) -> TensorField {
    let ncomp = Valence::SymTwo.ncomp(n);
    TensorField::analytic(n, Valence::SymTwo, move |p| {
        let d = background_metric_diag(p).expect("background metric domain");
        let mut v = DVector::zeros(ncomp);
        for i in 0..n {
            v[sym_index(n, i, i)] = d[i];
        }
        v
    })
    .with_d1(move |p| {
        let (_, dd, _) = background_diag_derivs(p);
        let mut out = DMatrix::zeros(ncomp, n);
        for i in 0..n {
            for k in 0..n {
                out[(sym_index(n, i, i), k)] = dd[(i, k)];
            }
        }
        out
    })
    .with_d2(move |p| {
        let (_, _, d2d) = background_diag_derivs(p);
        let mut out: Vec<DMatrix<f64>> = (0..ncomp).map(|_| DMatrix::zeros(n, n)).collect();
        for i in 0..n {
            out[sym_index(n, i, i)] = d2d[i].clone();
        }
        out
    })
}

/// Christoffel symbols of the background, `gamma[l][(i, j)]`.
pub fn christoffel_background(p: &ChartPoint) -> Result<Vec<DMatrix<f64>>> {
    let n = p.dim();
    let (d, dd, _) = background_diag_derivs(p);
    if p.r <= 0.0 {
        return Err(Error::Domain(alloc::format!("radius must be positive, got {}", p.r)));
    }
    let mut gam: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                if l == i {
                    v += dd[(l, j)];
                }
                if l == j {
                    v += dd[(l, i)];
                }
                if i == j {
                    v -= dd[(i, l)];
                }
                gam[l][(i, j)] = 0.5 * v / d[l];
            }
        }
    }
    Ok(gam)
}

/// Christoffel symbols of a general metric from its matrix and coordinate
/// partials `dg[k] = d_k g`.
pub fn christoffel_from(g: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let n = g.nrows();
    let inv = invert_metric(g)?;
    let mut gam: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                let c = 0.5 * (dg[i][(m, j)] + dg[j][(m, i)] - dg[m][(i, j)]);
                for (l, gl) in gam.iter_mut().enumerate() {
                    gl[(i, j)] += inv[(l, m)] * c;
                }
            }
        }
    }
    Ok(gam)
}

/// Inverse of a positive-definite metric, with a degeneracy check.
pub fn invert_metric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match g.clone().cholesky() {
        Some(ch) => Ok(ch.inverse()),
        None => Err(Error::DegenerateMetric { det: g.determinant() }),
    }
}

/// Unpack the column-per-coordinate layout of symmetric-tensor partials into
/// one matrix `d_k g` per coordinate.
pub fn sym_partials_to_matrices(n: usize, partials: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    (0..n)
        .map(|k| DMatrix::from_fn(n, n, |i, j| partials[(sym_index(n, i, j), k)]))
        .collect()
}

pub fn sym_packed_to_matrix(n: usize, packed: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| packed[sym_index(n, i, j)])
}

/// Covariant derivative of a tensor field; the derivative slot comes first.
#[derive(Clone, Debug)]
pub enum CovariantDerivative {
    /// `(df)_k`
    Scalar(DVector<f64>),
    /// `[(k, j)] = cd_k alpha_j`
    OneForm(DMatrix<f64>),
    /// `[(k, i)] = cd_k X^i`
    Vector(DMatrix<f64>),
    /// `[k][(i, j)] = cd_k e_ij`
    SymTwo(Vec<DMatrix<f64>>),
}

/// Assemble a covariant derivative from values, coordinate partials, and
/// Christoffel symbols.
pub fn cov_deriv_components(
    valence: Valence,
    n: usize,
    values: &DVector<f64>,
    partials: &DMatrix<f64>,
    gamma: &[DMatrix<f64>],
) -> CovariantDerivative {
    match valence {
        Valence::Scalar => {
            CovariantDerivative::Scalar(DVector::from_fn(n, |k, _| partials[(0, k)]))
        }
        Valence::OneForm => {
            let mut out = DMatrix::zeros(n, n);
            for k in 0..n {
                for j in 0..n {
                    let mut v = partials[(j, k)];
                    for (m, gm) in gamma.iter().enumerate() {
                        v -= gm[(k, j)] * values[m];
                    }
                    out[(k, j)] = v;
                }
            }
            CovariantDerivative::OneForm(out)
        }
        Valence::Vector => {
            let mut out = DMatrix::zeros(n, n);
            for k in 0..n {
                for i in 0..n {
                    let mut v = partials[(i, k)];
                    for m in 0..n {
                        v += gamma[i][(k, m)] * values[m];
                    }
                    out[(k, i)] = v;
                }
            }
            CovariantDerivative::Vector(out)
        }
        Valence::SymTwo => {
            let e = sym_packed_to_matrix(n, values);
            let mut out: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::zeros(n, n)).collect();
            for (k, ok) in out.iter_mut().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = partials[(sym_index(n, i, j), k)];
                        for (m, gm) in gamma.iter().enumerate() {
                            v -= gm[(k, i)] * e[(m, j)] + gm[(k, j)] * e[(i, m)];
                        }
                        ok[(i, j)] = v;
                    }
                }
            }
            CovariantDerivative::SymTwo(out)
        }
    }
}

/// Covariant derivative with respect to the background metric.
pub fn covariant_derivative_b(field: &TensorField, p: &ChartPoint) -> Result<CovariantDerivative> {
    let gamma = christoffel_background(p)?;
    let values = field.try_value(p)?;
    let partials = field.try_partials(p)?;
    Ok(cov_deriv_components(field.valence(), field.n(), &values, &partials, &gamma))
}

/// Hessian `cd dV` of a scalar field with respect to the background.
pub fn hessian_b(field: &TensorField, p: &ChartPoint) -> Result<DMatrix<f64>> {
    let gamma = christoffel_background(p)?;
    let grad = field.try_partials(p)?;
    let second = field.try_second_partials(p)?;
    let n = field.n();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let mut v = second[0][(k, j)];
            for (m, gm) in gamma.iter().enumerate() {
                v -= gm[(k, j)] * grad[(0, m)];
            }
            out[(k, j)] = v;
        }
    }
    Ok(out)
}

/// Frame norm `|T|_b` of coordinate components at a point.
pub fn norm_b(p: &ChartPoint, valence: Valence, values: &DVector<f64>) -> Result<f64> {
    let s = frame_scales(p)?;
    let n = p.dim();
    let sq = match valence {
        Valence::Scalar => values[0] * values[0],
        Valence::OneForm => (0..n).map(|i| (values[i] / s[i]) * (values[i] / s[i])).sum(),
        Valence::Vector => (0..n).map(|i| (values[i] * s[i]) * (values[i] * s[i])).sum(),
        Valence::SymTwo => {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let v = values[sym_index(n, i, j)] / (s[i] * s[j]);
                    acc += v * v;
                }
            }
            acc
        }
    };
    Ok(fmath::sqrt(sq))
}

/// Frame norm of a covariant derivative (all slots covariant except the
/// vector case, whose value slot is contravariant).
pub fn norm_b_deriv(p: &ChartPoint, cd: &CovariantDerivative) -> Result<f64> {
    let s = frame_scales(p)?;
    let n = p.dim();
    let sq = match cd {
        CovariantDerivative::Scalar(v) => (0..n).map(|k| (v[k] / s[k]) * (v[k] / s[k])).sum(),
        CovariantDerivative::OneForm(m) => {
            let mut acc = 0.0;
            for k in 0..n {
                for j in 0..n {
                    let v = m[(k, j)] / (s[k] * s[j]);
                    acc += v * v;
                }
            }
            acc
        }
        CovariantDerivative::Vector(m) => {
            let mut acc = 0.0;
            for k in 0..n {
                for i in 0..n {
                    let v = m[(k, i)] * s[i] / s[k];
                    acc += v * v;
                }
            }
            acc
        }
        CovariantDerivative::SymTwo(ts) => {
            let mut acc = 0.0;
            for (k, t) in ts.iter().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        let v = t[(i, j)] / (s[k] * s[i] * s[j]);
                        acc += v * v;
                    }
                }
            }
            acc
        }
    };
    Ok(fmath::sqrt(sq))
}

/// Components of a tensor in the b-orthonormal frame, same packing as the
/// coordinate components.
pub fn on_frame_components_b(
    p: &ChartPoint,
    valence: Valence,
    values: &DVector<f64>,
) -> Result<DVector<f64>> {
    let s = frame_scales(p)?;
    let n = p.dim();
    Ok(match valence {
        Valence::Scalar => values.clone(),
        Valence::OneForm => DVector::from_fn(n, |i, _| values[i] / s[i]),
        Valence::Vector => DVector::from_fn(n, |i, _| values[i] * s[i]),
        Valence::SymTwo => {
            let mut out = values.clone();
            for i in 0..n {
                for j in i..n {
                    out[sym_index(n, i, j)] /= s[i] * s[j];
                }
            }
            out
        }
    })
}

/// Scalar curvature of a metric field at a point. Uses analytic second
/// derivatives when the field carries them; otherwise evaluates the
/// coordinate formula at two finite-difference steps and Richardson-combines
/// them (the step error is 4th order, so the combination is 6th order).
pub fn scalar_curvature_of_metric_field(g: &TensorField, p: &ChartPoint) -> Result<f64> {
    if g.has_analytic_d2() || g.is_grid() {
        curvature_of_field_at(g, p)
    } else {
        let h = g.fd_step();
        let r_h = curvature_of_field_at(&g.clone().with_fd_step(h), p)?;
        let r_h2 = curvature_of_field_at(&g.clone().with_fd_step(h / 2.0), p)?;
        Ok((16.0 * r_h2 - r_h) / 15.0)
    }
}

fn curvature_of_field_at(g: &TensorField, p: &ChartPoint) -> Result<f64> {
    let n = g.n();
    let gm = sym_packed_to_matrix(n, &g.try_value(p)?);
    let dg = sym_partials_to_matrices(n, &g.try_partials(p)?);
    let d2_pc = g.try_second_partials(p)?;
    let d2g: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|l| DMatrix::from_fn(n, n, |i, j| d2_pc[sym_index(n, i, j)][(k, l)]))
                .collect()
        })
        .collect();
    scalar_curvature_from(&gm, &dg, &d2g)
}

/// Scalar curvature from the metric and its first and second coordinate
/// partials: `R = g^{ij} (d_l G^l_ij - d_i G^l_lj + G^l_lm G^m_ij - G^l_im G^m_lj)`.
pub fn scalar_curvature_from(
    g: &DMatrix<f64>,
    dg: &[DMatrix<f64>],
    d2g: &[Vec<DMatrix<f64>>],
) -> Result<f64> {
    let n = g.nrows();
    let inv = invert_metric(g)?;
    let gam = christoffel_from(g, dg)?;
    // d_k g^{lm} = -g^{la} (d_k g_ab) g^{bm}
    let dinv: Vec<DMatrix<f64>> = (0..n).map(|k| -(&inv * &dg[k] * &inv)).collect();
    // d_k Gamma^l_{ij}
    let mut dgam: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|_| (0..n).map(|_| DMatrix::zeros(n, n)).collect())
        .collect();
    for k in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    for m in 0..n {
                        let c = dg[i][(m, j)] + dg[j][(m, i)] - dg[m][(i, j)];
                        let c2 =
                            d2g[k][i][(m, j)] + d2g[k][j][(m, i)] - d2g[k][m][(i, j)];
                        v += 0.5 * (dinv[k][(l, m)] * c + inv[(l, m)] * c2);
                    }
                    dgam[k][l][(i, j)] = v;
                }
            }
        }
    }
    let mut r = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut ric = 0.0;
            for l in 0..n {
                ric += dgam[l][l][(i, j)] - dgam[i][l][(l, j)];
                for m in 0..n {
                    ric += gam[l][(l, m)] * gam[m][(i, j)] - gam[l][(i, m)] * gam[m][(l, j)];
                }
            }
            r += inv[(i, j)] * ric;
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pt(r: f64, angles: &[f64]) -> ChartPoint {
        ChartPoint::new(r, angles.to_vec())
    }

    #[test]
    fn metric_values() {
        let p = pt(1.0, &[0.9, 1.7]);
        let d = background_metric_diag(&p).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15);
        let s2 = fmath::sinh(1.0) * fmath::sinh(1.0);
        assert!((d[1] - s2).abs() < 1e-14);
        assert!((s2 - 1.3810978455418157).abs() < 1e-13);
        assert!((d[2] - s2 * fmath::sin(0.9) * fmath::sin(0.9)).abs() < 1e-14);
        assert!(background_metric_diag(&pt(-0.1, &[0.9, 1.7])).is_err());
        // angular block vanishes as r -> 0+
        let d0 = background_metric_diag(&pt(1e-8, &[0.9, 1.7])).unwrap();
        assert!(d0[1] < 1e-15);
    }

    #[test]
    fn background_field_derivatives_match_fd() {
        let n = 4;
        let b = background_metric_field(n);
        let b_fd = {
            let b2 = background_metric_field(n);
            TensorField::analytic(n, Valence::SymTwo, move |p| b2.value(p))
        };
        let p = pt(1.4, &[0.8, 1.2, 2.4]);
        let d_true = b.try_partials(&p).unwrap();
        let d_fd = b_fd.try_partials(&p).unwrap();
        assert!((&d_true - &d_fd).abs().max() < 2e-7);
        let dd_true = b.try_second_partials(&p).unwrap();
        let dd_fd = b_fd.try_second_partials(&p).unwrap();
        for c in 0..dd_true.len() {
            assert!((&dd_true[c] - &dd_fd[c]).abs().max() < 1e-6);
        }
    }

    #[test]
    fn metric_compatibility() {
        // covariant derivative of b vanishes
        for n in [3usize, 5] {
            let b = background_metric_field(n);
            let p = ChartPoint::new(1.3, (0..n - 1).map(|k| 0.7 + 0.4 * k as f64).collect());
            let cd = covariant_derivative_b(&b, &p).unwrap();
            let norm = norm_b_deriv(&p, &cd).unwrap();
            assert!(norm < 1e-9, "n = {n}, |cd b| = {norm}");
        }
    }

    #[test]
    fn constant_scalar_has_zero_gradient() {
        let f = TensorField::scalar(3, |_| 4.2);
        let p = pt(2.0, &[1.0, 0.5]);
        match covariant_derivative_b(&f, &p).unwrap() {
            CovariantDerivative::Scalar(df) => assert!(df.norm() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn static_potential_hessian_identity() {
        // cd dV = V b for V = cosh r, with finite-difference derivatives
        let f = TensorField::scalar(3, |p| fmath::cosh(p.r));
        for (r, a0, a1) in [(0.8, 0.9, 2.0), (1.7, 1.9, 4.1), (2.5, 0.4, 0.3)] {
            let p = pt(r, &[a0, a1]);
            let hess = hessian_b(&f, &p).unwrap();
            let want = background_metric_matrix(&p).unwrap() * fmath::cosh(r);
            let s = frame_scales(&p).unwrap();
            let mut frame_err = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    frame_err = frame_err.max((hess[(i, j)] - want[(i, j)]).abs() / (s[i] * s[j]));
                }
            }
            assert!(frame_err < 1e-8 * fmath::cosh(r).max(1.0), "r = {r}: {frame_err}");
        }
    }

    #[test]
    fn background_christoffels_match_general_formula() {
        let n = 4;
        let b = background_metric_field(n);
        let p = pt(1.1, &[0.6, 1.4, 3.0]);
        let special = christoffel_background(&p).unwrap();
        let dg = sym_partials_to_matrices(n, &b.try_partials(&p).unwrap());
        let g = background_metric_matrix(&p).unwrap();
        let general = christoffel_from(&g, &dg).unwrap();
        for l in 0..n {
            assert!((&special[l] - &general[l]).abs().max() < 1e-11);
        }
    }

    #[test]
    fn scalar_curvature_of_background() {
        for n in [3usize, 4, 5] {
            let b = background_metric_field(n);
            for (r, shift) in [(0.9, 0.0), (1.6, 0.3), (2.8, 0.6)] {
                let p = ChartPoint::new(
                    r,
                    (0..n - 1).map(|k| 0.5 + 0.3 * k as f64 + shift).collect(),
                );
                let g = background_metric_matrix(&p).unwrap();
                let dg = sym_partials_to_matrices(n, &b.try_partials(&p).unwrap());
                let d2_pc = b.try_second_partials(&p).unwrap();
                let d2g: Vec<Vec<DMatrix<f64>>> = (0..n)
                    .map(|k| {
                        (0..n)
                            .map(|l| {
                                DMatrix::from_fn(n, n, |i, j| d2_pc[sym_index(n, i, j)][(k, l)])
                            })
                            .collect()
                    })
                    .collect();
                let r_scal = scalar_curvature_from(&g, &dg, &d2g).unwrap();
                let want = -((n * (n - 1)) as f64);
                assert!((r_scal - want).abs() < 1e-9, "n = {n}: R = {r_scal}");
            }
        }
    }

    #[test]
    fn curvature_via_finite_differences() {
        // same check but with every derivative taken by finite differences
        // (Richardson-refined, as in the constraint evaluation)
        let n = 3;
        let exact = background_metric_field(n);
        let b = TensorField::analytic(n, Valence::SymTwo, move |p| exact.value(p));
        for (r, a0, a1) in [(1.2, 1.0, 2.2), (2.1, 0.6, 4.0), (0.7, 1.8, 1.1)] {
            let p = pt(r, &[a0, a1]);
            let r_scal = scalar_curvature_of_metric_field(&b, &p).unwrap();
            assert!((r_scal + 6.0).abs() < 1e-8, "R = {r_scal}");
        }
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0]));
        let dg: Vec<DMatrix<f64>> = (0..3).map(|_| DMatrix::zeros(3, 3)).collect();
        assert!(matches!(
            christoffel_from(&g, &dg),
            Err(Error::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn fd_convergence_order_on_hessian() {
        // halving the step reduces the 4th-order error by ~16 (within 20%)
        let f_coarse = TensorField::scalar(3, |p| fmath::cosh(p.r)).with_fd_step(0.2);
        let f_fine = TensorField::scalar(3, |p| fmath::cosh(p.r)).with_fd_step(0.1);
        let p = pt(1.5, &[1.1, 0.7]);
        let want = background_metric_matrix(&p).unwrap() * fmath::cosh(p.r);
        let e_coarse = (&hessian_b(&f_coarse, &p).unwrap() - &want).abs().max();
        let e_fine = (&hessian_b(&f_fine, &p).unwrap() - &want).abs().max();
        let factor = e_coarse / e_fine;
        assert!(
            (factor - 16.0).abs() <= 0.2 * 16.0,
            "convergence factor {factor} not within 20% of 16"
        );
    }
}
