//! Killing initial data at infinity: static potentials of the hyperbolic
//! background, Killing 1-forms, the Lorentz metric on the potential space,
//! imaginary Killing spinors in the ball model, the quadratic map from
//! spinor parameters to the positivity cone, and residual verification that
//! a triple `(V, alpha, f)` lies in the kernel of the adjoint linearized
//! constraint operator.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::clifford::CliffordRep;
use crate::geometry::{
    background_metric_diag, background_metric_matrix, covariant_derivative_b, hessian_b, norm_b,
    ChartPoint, CovariantDerivative, TensorField, Valence,
};
use crate::linalg::{inner, CVec};
use crate::sphere;
use crate::{fmath, Error, Result};

/// Which of the two imaginary Killing spinor families to use. The library
/// standardizes on `Plus` (derivative sign `-i/2 c(X)` in the Killing
/// equation); `Minus` is available behind this flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KillingSign {
    #[default]
    Plus,
    Minus,
}

/// Where a KID came from.
#[derive(Clone, Debug)]
pub enum Provenance {
    /// Static potential basis element `V_(mu)`.
    PotentialBasis(usize),
    /// Killing 1-form basis element (index into [`killing_field_basis`]).
    KillingBasis(usize),
    /// The triple `(0, 0, 1)` generating the electric charge.
    UnitCharge,
    /// Image of a spinor parameter under the quadratic map.
    Spinor(CVec),
    Custom,
}

/// A Killing-initial-data triple `(V, alpha, f)`.
#[derive(Clone)]
pub struct KID {
    pub v: TensorField,
    pub alpha: TensorField,
    pub f: f64,
    /// Present when `f` was obtained by evaluating a field; used to audit
    /// constancy.
    pub f_field: Option<TensorField>,
    pub provenance: Provenance,
}

/// Static potential `V_(mu)` in the polar chart: `V_(0) = cosh r`,
/// `V_(j) = x^j sinh r`.
pub fn static_potential_polar(n: usize, mu: usize, p: &ChartPoint) -> Result<f64> {
    if mu > n {
        return Err(Error::ShapeMismatch { expected: n, got: mu });
    }
    if p.r < 0.0 {
        return Err(Error::Domain("negative radius".into()));
    }
    Ok(if mu == 0 {
        fmath::cosh(p.r)
    } else {
        p.unit_vector()[mu - 1] * fmath::sinh(p.r)
    })
}

/// Static potential `V_(mu)` in the ball model: `V_(0) = (1+|x|^2)/(1-|x|^2)`,
/// `V_(j) = 2 x^j / (1-|x|^2)`.
pub fn static_potential_ball(n: usize, mu: usize, x: &DVector<f64>) -> Result<f64> {
    if x.len() != n || mu > n {
        return Err(Error::ShapeMismatch { expected: n, got: x.len() });
    }
    let r2 = x.norm_squared();
    if r2 >= 1.0 {
        return Err(Error::Domain(alloc::format!("|x| = {} not inside the unit ball", x.norm())));
    }
    Ok(if mu == 0 { (1.0 + r2) / (1.0 - r2) } else { 2.0 * x[mu - 1] / (1.0 - r2) })
}

/// The potential basis element as a field with analytic derivatives.
pub fn potential_basis_field(n: usize, mu: usize) -> TensorField {
    if mu == 0 {
        TensorField::scalar(n, |p| fmath::cosh(p.r))
            .with_d1(move |p| {
                let mut d = DMatrix::zeros(1, n);
                d[(0, 0)] = fmath::sinh(p.r);
                d
            })
            .with_d2(move |p| {
                let mut h = DMatrix::zeros(n, n);
                h[(0, 0)] = fmath::cosh(p.r);
                vec![h]
            })
    } else {
        let j = mu - 1;
        TensorField::scalar(n, move |p| sphere::unit_vector(&p.angles)[j] * fmath::sinh(p.r))
            .with_d1(move |p| {
                let om = sphere::unit_vector(&p.angles);
                let jac = sphere::unit_vector_jacobian(&p.angles);
                let mut d = DMatrix::zeros(1, n);
                d[(0, 0)] = om[j] * fmath::cosh(p.r);
                for a in 0..n - 1 {
                    d[(0, a + 1)] = jac[(j, a)] * fmath::sinh(p.r);
                }
                d
            })
            .with_d2(move |p| {
                let om = sphere::unit_vector(&p.angles);
                let jac = sphere::unit_vector_jacobian(&p.angles);
                let hes = sphere::unit_vector_hessian(&p.angles);
                let (sh, ch) = (fmath::sinh(p.r), fmath::cosh(p.r));
                let mut h = DMatrix::zeros(n, n);
                h[(0, 0)] = om[j] * sh;
                for a in 0..n - 1 {
                    h[(0, a + 1)] = jac[(j, a)] * ch;
                    h[(a + 1, 0)] = jac[(j, a)] * ch;
                    for b in 0..n - 1 {
                        h[(a + 1, b + 1)] = hes[j][(a, b)] * sh;
                    }
                }
                vec![h]
            })
    }
}

impl KID {
    pub fn n(&self) -> usize {
        self.v.n()
    }

    /// The KID `(V_(mu), 0, 0)`.
    pub fn basis_potential(n: usize, mu: usize) -> Self {
        KID {
            v: potential_basis_field(n, mu),
            alpha: TensorField::zero(n, Valence::OneForm),
            f: 0.0,
            f_field: None,
            provenance: Provenance::PotentialBasis(mu),
        }
    }

    /// The KID `(0, 0, 1)`.
    pub fn unit_charge(n: usize) -> Self {
        KID {
            v: TensorField::zero(n, Valence::Scalar),
            alpha: TensorField::zero(n, Valence::OneForm),
            f: 1.0,
            f_field: None,
            provenance: Provenance::UnitCharge,
        }
    }

    /// The KID `(0, alpha_k, 0)` for the k-th Killing basis element.
    pub fn basis_killing(n: usize, k: usize) -> Self {
        let forms = killing_field_basis(n);
        KID {
            alpha: forms[k].clone(),
            v: TensorField::zero(n, Valence::Scalar),
            f: 0.0,
            f_field: None,
            provenance: Provenance::KillingBasis(k),
        }
    }

    /// Linear combination `ca * a + cb * b`.
    pub fn combine(a: &KID, b: &KID, ca: f64, cb: f64) -> KID {
        KID {
            v: a.v.combine(&b.v, ca, cb),
            alpha: a.alpha.combine(&b.alpha, ca, cb),
            f: ca * a.f + cb * b.f,
            f_field: None,
            provenance: Provenance::Custom,
        }
    }
}

/// Basis of the `n(n+1)/2`-dimensional space of Killing 1-forms of the
/// hyperbolic metric: rotations `sinh^2 r (x^i dx^j - x^j dx^i)` followed by
/// boosts `x^j dr + sinh r cosh r dx^j` (angular differentials taken on the
/// sphere).
pub fn killing_field_basis(n: usize) -> Vec<TensorField> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(
                TensorField::analytic(n, Valence::OneForm, move |p| {
                    let om = sphere::unit_vector(&p.angles);
                    let jac = sphere::unit_vector_jacobian(&p.angles);
                    let s2 = fmath::sinh(p.r) * fmath::sinh(p.r);
                    let mut alpha = DVector::zeros(n);
                    for a in 0..n - 1 {
                        alpha[a + 1] = s2 * (om[i] * jac[(j, a)] - om[j] * jac[(i, a)]);
                    }
                    alpha
                })
                .with_d1(move |p| {
                    let om = sphere::unit_vector(&p.angles);
                    let jac = sphere::unit_vector_jacobian(&p.angles);
                    let hes = sphere::unit_vector_hessian(&p.angles);
                    let s2 = fmath::sinh(p.r) * fmath::sinh(p.r);
                    let s2p = fmath::sinh(2.0 * p.r);
                    let mut d = DMatrix::zeros(n, n);
                    for a in 0..n - 1 {
                        let ang = om[i] * jac[(j, a)] - om[j] * jac[(i, a)];
                        d[(a + 1, 0)] = s2p * ang;
                        for b in 0..n - 1 {
                            d[(a + 1, b + 1)] = s2
                                * (jac[(i, b)] * jac[(j, a)] + om[i] * hes[j][(a, b)]
                                    - jac[(j, b)] * jac[(i, a)]
                                    - om[j] * hes[i][(a, b)]);
                        }
                    }
                    d
                }),
            );
        }
    }
    for j in 0..n {
        out.push(
            TensorField::analytic(n, Valence::OneForm, move |p| {
                let om = sphere::unit_vector(&p.angles);
                let jac = sphere::unit_vector_jacobian(&p.angles);
                let sc = fmath::sinh(p.r) * fmath::cosh(p.r);
                let mut alpha = DVector::zeros(n);
                alpha[0] = om[j];
                for a in 0..n - 1 {
                    alpha[a + 1] = sc * jac[(j, a)];
                }
                alpha
            })
            .with_d1(move |p| {
                let jac = sphere::unit_vector_jacobian(&p.angles);
                let hes = sphere::unit_vector_hessian(&p.angles);
                let sc = fmath::sinh(p.r) * fmath::cosh(p.r);
                let c2 = fmath::cosh(2.0 * p.r);
                let mut d = DMatrix::zeros(n, n);
                for b in 0..n - 1 {
                    d[(0, b + 1)] = jac[(j, b)];
                }
                for a in 0..n - 1 {
                    d[(a + 1, 0)] = c2 * jac[(j, a)];
                    for b in 0..n - 1 {
                        d[(a + 1, b + 1)] = sc * hes[j][(a, b)];
                    }
                }
                d
            }),
        );
    }
    out
}

/// Lorentz pairing `eta(X, Y) = X^0 Y^0 - sum_j X^j Y^j` on coefficient
/// vectors in the `V_(mu)` basis.
pub fn eta_inner(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let mut acc = x[0] * y[0];
    for j in 1..x.len() {
        acc -= x[j] * y[j];
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalClass {
    TimelikeFuture,
    TimelikePast,
    Null,
    Spacelike,
}

/// Causal classification of a coefficient vector, with tolerance `tol` on
/// the Lorentz norm for the null case.
pub fn causal_class(x: &DVector<f64>, tol: f64) -> CausalClass {
    let q = eta_inner(x, x);
    if q > tol {
        if x[0] > 0.0 {
            CausalClass::TimelikeFuture
        } else {
            CausalClass::TimelikePast
        }
    } else if q < -tol {
        CausalClass::Spacelike
    } else {
        CausalClass::Null
    }
}

/// The extrinsic imaginary Killing spinor `zeta_u(x)` at a ball point,
/// `phi_u^pm = omega^{-1/2} (1 -+ i c(x)) u` with `omega = (1-|x|^2)/2`;
/// for odd n the doubled section `(phi_v^+, phi_w^-)` (signs swapped for the
/// `Minus` family).
pub fn killing_spinor(
    rep: &CliffordRep,
    u: &CVec,
    x: &DVector<f64>,
    sign: KillingSign,
) -> Result<CVec> {
    if x.len() != rep.n() {
        return Err(Error::ShapeMismatch { expected: rep.n(), got: x.len() });
    }
    if u.len() != rep.dim_spinor() {
        return Err(Error::ShapeMismatch { expected: rep.dim_spinor(), got: u.len() });
    }
    let r2 = x.norm_squared();
    if r2 >= 1.0 {
        return Err(Error::Domain(alloc::format!("|x| = {} not inside the unit ball", x.norm())));
    }
    let omega = (1.0 - r2) / 2.0;
    let scale = Complex::new(1.0 / fmath::sqrt(omega), 0.0);
    let phi = |part: &CVec, plus_family: bool| -> CVec {
        let c = rep.mul_base(x, part);
        let ipart = if plus_family { -crate::linalg::I } else { crate::linalg::I };
        (part + c * ipart) * scale
    };
    if rep.is_doubled() {
        let bd = rep.base_dim();
        let v = CVec::from_fn(bd, |i, _| u[i]);
        let w = CVec::from_fn(bd, |i, _| u[bd + i]);
        let (top_plus, bottom_plus) = match sign {
            KillingSign::Plus => (true, false),
            KillingSign::Minus => (false, true),
        };
        let top = phi(&v, top_plus);
        let bottom = phi(&w, bottom_plus);
        let mut out = CVec::zeros(2 * bd);
        for i in 0..bd {
            out[i] = top[i];
            out[bd + i] = bottom[i];
        }
        Ok(out)
    } else {
        Ok(phi(u, matches!(sign, KillingSign::Plus)))
    }
}

/// Covariant derivative `nabla^b_{e_i} psi` of a spinor field given in the
/// identified (flat) bundle over the ball, via the conformal spin-connection
/// identity for `b = omega^{-2} delta`:
/// `nabla^b_{e_i} psi = omega d_i psi + c(d_i) c(grad omega) psi / 2 + (d_i omega) psi / 2`,
/// where `e_i = omega d_i` is the b-orthonormal frame. The field is sampled
/// by 4th-order finite differences with step `h`.
pub fn spinor_covariant_derivative_b(
    rep: &CliffordRep,
    field: &dyn Fn(&DVector<f64>) -> CVec,
    x: &DVector<f64>,
    i: usize,
    h: f64,
) -> CVec {
    let mut shift = |dx: f64| {
        let mut y = x.clone();
        y[i] += dx;
        field(&y)
    };
    let dpsi = (shift(-2.0 * h) - shift(2.0 * h) + (shift(h) - shift(-h)) * Complex::new(8.0, 0.0))
        * Complex::new(1.0 / (12.0 * h), 0.0);
    let psi = field(x);
    let omega = (1.0 - x.norm_squared()) / 2.0;
    let grad_omega = -x.clone();
    let ei = DVector::from_fn(x.len(), |k, _| if k == i { 1.0 } else { 0.0 });
    let cw = rep.mul(&grad_omega, &psi).expect("shape");
    let ccw = rep.mul(&ei, &cw).expect("shape");
    dpsi * Complex::new(omega, 0.0)
        + ccw * Complex::new(0.5, 0.0)
        + psi * Complex::new(0.5 * grad_omega[i], 0.0)
}

/// Max over frame directions of `|nabla^b_{e_i} zeta +- (i/2) c(e_i) zeta|`
/// at a ball point: the Killing-equation residual of the spinor generated by
/// `u`. The `h` step feeds the finite-difference derivative.
pub fn killing_spinor_residual(
    rep: &CliffordRep,
    u: &CVec,
    x: &DVector<f64>,
    sign: KillingSign,
    h: f64,
) -> Result<f64> {
    let field = |y: &DVector<f64>| killing_spinor(rep, u, y, sign).expect("ball domain");
    let n = rep.n();
    let mut worst = 0.0f64;
    for i in 0..n {
        let nabla = spinor_covariant_derivative_b(rep, &field, x, i, h);
        let ei = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
        let zeta = field(x);
        let c = rep.mul(&ei, &zeta)?;
        let half_i = Complex::new(0.0, 0.5);
        let res = match sign {
            KillingSign::Plus => nabla + c * half_i,
            KillingSign::Minus => nabla - c * half_i,
        };
        worst = worst.max(res.norm());
    }
    Ok(worst)
}

/// The quadratic map `u -> (V_u, alpha_u, f_u)`:
/// `V_u = |zeta_u|^2`, `alpha_u(X) = <c(X) chi zeta_u, zeta_u>`,
/// `f_u = <chi zeta_u, zeta_u>`. The image lies in the kernel of the adjoint
/// linearized constraint operator; `f_u` is checked to be constant.
pub fn kid_from_spinor(rep: &CliffordRep, u: &CVec) -> Result<KID> {
    kid_from_spinor_signed(rep, u, KillingSign::Plus)
}

pub fn kid_from_spinor_signed(rep: &CliffordRep, u: &CVec, sign: KillingSign) -> Result<KID> {
    if u.len() != rep.dim_spinor() {
        return Err(Error::ShapeMismatch { expected: rep.dim_spinor(), got: u.len() });
    }
    let n = rep.n();
    let rep_v = rep.clone();
    let u_v = u.clone();
    let v_field = TensorField::scalar(n, move |p| {
        let x = p.ball_point();
        killing_spinor(&rep_v, &u_v, &x, sign).expect("ball domain").norm_squared()
    })
    .with_fd_step(5e-3);
    let rep_a = rep.clone();
    let u_a = u.clone();
    let alpha_field = TensorField::analytic(n, Valence::OneForm, move |p| {
        let x = p.ball_point();
        let zeta = killing_spinor(&rep_a, &u_a, &x, sign).expect("ball domain");
        let chi_zeta = rep_a.chirality() * &zeta;
        let omega = (1.0 - x.norm_squared()) / 2.0;
        // frame components <c(e_i) chi zeta, zeta>, then cartesian coordinate
        // components A_i / omega, then pullback along x(r, t)
        let mut cart = DVector::zeros(n);
        for i in 0..n {
            let ei = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
            let c = rep_a.mul(&ei, &chi_zeta).expect("shape");
            let pairing = inner(&c, &zeta);
            debug_assert!(pairing.im.abs() <= 1e-10 * zeta.norm_squared().max(1.0));
            cart[i] = pairing.re / omega;
        }
        let om = sphere::unit_vector(&p.angles);
        let jac = sphere::unit_vector_jacobian(&p.angles);
        let t = fmath::tanh(p.r / 2.0);
        let dt_dr = 0.5 * (1.0 - t * t);
        let mut alpha = DVector::zeros(n);
        for i in 0..n {
            alpha[0] += cart[i] * dt_dr * om[i];
        }
        for a in 0..n - 1 {
            for i in 0..n {
                alpha[a + 1] += cart[i] * t * jac[(i, a)];
            }
        }
        alpha
    })
    .with_fd_step(5e-3);
    let rep_f = rep.clone();
    let u_f = u.clone();
    let f_field = TensorField::scalar(n, move |p| {
        let x = p.ball_point();
        let zeta = killing_spinor(&rep_f, &u_f, &x, sign).expect("ball domain");
        inner(&(rep_f.chirality() * &zeta), &zeta).re
    });
    // evaluate f near the origin and audit constancy on scattered points
    let origin = ChartPoint::new(1e-8, vec![0.9; n - 1]);
    let f0 = f_field.value(&origin)[0];
    let scale = u.norm_squared().max(1e-30);
    let mut rng = seeded_rng(0x5eed);
    for _ in 0..8 {
        let p = random_point(n, &mut rng, 0.2, 2.5);
        let fv = f_field.value(&p)[0];
        if (fv - f0).abs() > 1e-9 * scale {
            return Err(Error::Inconsistency(alloc::format!(
                "f_u varies across points: {fv} vs {f0}"
            )));
        }
    }
    Ok(KID {
        v: v_field,
        alpha: alpha_field,
        f: f0,
        f_field: Some(f_field),
        provenance: Provenance::Spinor(u.clone()),
    })
}

fn seeded_rng(seed: u64) -> ChaCha8Rng {
    <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed)
}

pub(crate) fn random_point<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    r_min: f64,
    r_max: f64,
) -> ChartPoint {
    let r = r_min + (r_max - r_min) * rng.random::<f64>();
    let angles = (0..n - 1)
        .map(|a| {
            if a + 2 == n {
                2.0 * core::f64::consts::PI * rng.random::<f64>()
            } else {
                0.3 + (core::f64::consts::PI - 0.6) * rng.random::<f64>()
            }
        })
        .collect();
    ChartPoint::new(r, angles)
}

/// Deterministic scattered sample points for residual checks.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = seeded_rng(seed);
    (0..count).map(|_| random_point(n, &mut rng, 0.4, 2.4)).collect()
}

/// Sup-norms of the three adjoint-kernel equations over the sample points:
/// `cd dV - (lap V) b + (n-1) V b`, `-L_{alpha} b + 2 (div alpha) b`, and
/// `-2(n-1) df` (the latter audited through the stored field when present).
#[derive(Clone, Copy, Debug)]
pub struct KernelResidual {
    pub hessian: f64,
    pub killing: f64,
    pub df: f64,
}

pub fn adjoint_kernel_residual(kid: &KID, points: &[ChartPoint]) -> Result<KernelResidual> {
    let n = kid.n();
    let nf = n as f64;
    let mut hess_sup = 0.0f64;
    let mut kill_sup = 0.0f64;
    let mut df_sup = 0.0f64;
    for p in points {
        let b = background_metric_matrix(p)?;
        let diag = background_metric_diag(p)?;
        // g-equation
        let hess = hessian_b(&kid.v, p)?;
        let vval = kid.v.try_value(p)?[0];
        let lap: f64 = (0..n).map(|i| hess[(i, i)] / diag[i]).sum();
        let resid = &hess - &b * lap + &b * ((nf - 1.0) * vval);
        hess_sup = hess_sup.max(frame_norm_matrix(p, &resid)?);
        // K-equation
        let cd = covariant_derivative_b(&kid.alpha, p)?;
        let grad = match cd {
            CovariantDerivative::OneForm(m) => m,
            _ => unreachable!(),
        };
        let mut lie = DMatrix::zeros(n, n);
        let mut div = 0.0;
        for i in 0..n {
            for j in 0..n {
                lie[(i, j)] = grad[(i, j)] + grad[(j, i)];
            }
            div += grad[(i, i)] / diag[i];
        }
        let resid_k = -&lie + &b * (2.0 * div);
        kill_sup = kill_sup.max(frame_norm_matrix(p, &resid_k)?);
        // E-equation
        if let Some(ff) = &kid.f_field {
            let df = ff.try_partials(p)?;
            let df_vec = DVector::from_fn(n, |k, _| df[(0, k)]);
            df_sup = df_sup.max(2.0 * (nf - 1.0) * norm_b(p, Valence::OneForm, &df_vec)?);
        }
    }
    Ok(KernelResidual { hessian: hess_sup, killing: kill_sup, df: df_sup })
}

fn frame_norm_matrix(p: &ChartPoint, m: &DMatrix<f64>) -> Result<f64> {
    let s = crate::geometry::frame_scales(p)?;
    let n = p.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)] / (s[i] * s[j]);
            acc += v * v;
        }
    }
    Ok(fmath::sqrt(acc))
}
