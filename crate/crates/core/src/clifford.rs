//! Complex Clifford algebra representations in arbitrary dimension `n >= 3`,
//! with a chirality operator, the odd-dimension doubling, boundary
//! projections and the algebraic curvature endomorphism.
//!
//! Gamma operators are built once, by a fixed iterated Pauli tensor-product
//! recursion, so that results are reproducible bit-for-bit across runs (the
//! construction is tagged by [`crate::CLIFFORD_REP_TAG`]).

use alloc::vec::Vec;

use nalgebra::{Complex, DVector};
use rand::Rng;

use crate::linalg::{self, CMat, CVec, I};
use crate::{Error, Result};

/// A spinor is a complex vector of length [`CliffordRep::dim_spinor`].
pub type Spinor = CVec;

/// Gamma-operator set with chirality for dimension `n`.
///
/// Invariants established by the constructor and exercised by the test suite:
/// `G_i G_j + G_j G_i = -2 delta_ij`, `G_i^* = -G_i`, `chi^2 = Id`,
/// `chi^* = chi` and `G_i chi + chi G_i = 0`. For odd `n` the operators act
/// on a doubled space with block action `(phi1, phi2) -> (c phi1, -c phi2)`
/// and the chirality swaps the two blocks.
#[derive(Clone, Debug)]
pub struct CliffordRep {
    n: usize,
    dim_spinor: usize,
    base_dim: usize,
    gammas: Vec<CMat>,
    chirality: CMat,
    base_gammas: Vec<CMat>,
}

fn pauli() -> (CMat, CMat, CMat) {
    let zero = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let s1 = CMat::from_row_slice(2, 2, &[zero, one, one, zero]);
    let s2 = CMat::from_row_slice(2, 2, &[zero, -I, I, zero]);
    let s3 = CMat::from_row_slice(2, 2, &[one, zero, zero, -one]);
    (s1, s2, s3)
}

/// Hermitian generators `gh_1..gh_2m` of the even Clifford algebra on
/// `C^(2^m)`: `gh_(2k-1) = s3^(k-1) (x) s1 (x) 1`, `gh_(2k) = s3^(k-1) (x) s2 (x) 1`.
fn hermitian_generators(m: usize) -> Vec<CMat> {
    let (s1, s2, s3) = pauli();
    let id2 = CMat::identity(2, 2);
    let mut out = Vec::with_capacity(2 * m);
    for k in 1..=m {
        for sigma in [&s1, &s2] {
            let mut acc = CMat::identity(1, 1);
            for slot in 1..=m {
                let factor = if slot < k {
                    &s3
                } else if slot == k {
                    sigma
                } else {
                    &id2
                };
                acc = linalg::kron(&acc, factor);
            }
            out.push(acc);
        }
    }
    // Restore the (gh_1, gh_2, ..., gh_2m) ordering: the loop above pushed
    // them already in that order.
    out
}

/// Chirality `i^m gh_1 ... gh_2m` of the even algebra.
fn even_chirality(gh: &[CMat]) -> CMat {
    let m = gh.len() / 2;
    let dim = gh[0].nrows();
    let mut acc = CMat::identity(dim, dim);
    for g in gh {
        acc = &acc * g;
    }
    let mut phase = Complex::new(1.0, 0.0);
    for _ in 0..m {
        phase *= I;
    }
    acc * phase
}

impl CliffordRep {
    /// Build the representation for dimension `n >= 3`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        let m = n / 2;
        let base_dim = 1usize << m;
        let gh = hermitian_generators(m);
        let even_gammas: Vec<CMat> = gh.iter().map(|g| g * I).collect();
        let chi = even_chirality(&gh);
        if n % 2 == 0 {
            Ok(CliffordRep {
                n,
                dim_spinor: base_dim,
                base_dim,
                base_gammas: even_gammas.clone(),
                gammas: even_gammas,
                chirality: chi,
            })
        } else {
            // Odd n = 2m + 1: the undoubled algebra gains i*chi as the last
            // generator; the doubled space carries (c, -c) with a swap as
            // chirality.
            let mut base = even_gammas;
            base.push(&chi * I);
            let dim = 2 * base_dim;
            let zero = CMat::zeros(base_dim, base_dim);
            let gammas: Vec<CMat> = base
                .iter()
                .map(|c| {
                    let mut g = CMat::zeros(dim, dim);
                    g.view_mut((0, 0), (base_dim, base_dim)).copy_from(c);
                    g.view_mut((base_dim, base_dim), (base_dim, base_dim))
                        .copy_from(&(-c));
                    g
                })
                .collect();
            let mut swap = CMat::zeros(dim, dim);
            let id = CMat::identity(base_dim, base_dim);
            swap.view_mut((0, base_dim), (base_dim, base_dim)).copy_from(&id);
            swap.view_mut((base_dim, 0), (base_dim, base_dim)).copy_from(&id);
            let _ = zero;
            Ok(CliffordRep {
                n,
                dim_spinor: dim,
                base_dim,
                gammas,
                chirality: swap,
                base_gammas: base,
            })
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the spinor space the gammas act on (doubled when n is odd).
    pub fn dim_spinor(&self) -> usize {
        self.dim_spinor
    }

    /// Dimension `2^(n/2)` of the undoubled spinor space.
    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn is_doubled(&self) -> bool {
        self.n % 2 == 1
    }

    pub fn gamma(&self, i: usize) -> &CMat {
        &self.gammas[i]
    }

    pub fn gammas(&self) -> &[CMat] {
        &self.gammas
    }

    pub fn chirality(&self) -> &CMat {
        &self.chirality
    }

    /// Undoubled generators on `C^(2^(n/2))`; equal to [`Self::gammas`] for even n.
    pub fn base_gammas(&self) -> &[CMat] {
        &self.base_gammas
    }

    fn check_vector(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::ShapeMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    fn check_spinor(&self, phi: &Spinor) -> Result<()> {
        if phi.len() != self.dim_spinor {
            return Err(Error::ShapeMismatch { expected: self.dim_spinor, got: phi.len() });
        }
        Ok(())
    }

    /// Clifford multiplication `c(X) phi = sum_i X^i G_i phi` for `X` given in
    /// a b-orthonormal frame.
    pub fn mul(&self, x: &DVector<f64>, phi: &Spinor) -> Result<Spinor> {
        self.check_vector(x)?;
        self.check_spinor(phi)?;
        let mut out = CVec::zeros(self.dim_spinor);
        for (i, g) in self.gammas.iter().enumerate() {
            if x[i] != 0.0 {
                out += g * phi * Complex::new(x[i], 0.0);
            }
        }
        Ok(out)
    }

    /// The matrix of `c(X)`.
    pub fn mul_operator(&self, x: &DVector<f64>) -> Result<CMat> {
        self.check_vector(x)?;
        let mut out = CMat::zeros(self.dim_spinor, self.dim_spinor);
        for (i, g) in self.gammas.iter().enumerate() {
            out += g * Complex::new(x[i], 0.0);
        }
        Ok(out)
    }

    /// Undoubled Clifford multiplication on `C^(2^(n/2))`.
    pub(crate) fn mul_base(&self, x: &DVector<f64>, phi: &CVec) -> CVec {
        let mut out = CVec::zeros(self.base_dim);
        for (i, g) in self.base_gammas.iter().enumerate() {
            if x[i] != 0.0 {
                out += g * phi * Complex::new(x[i], 0.0);
            }
        }
        out
    }

    /// Chirality boundary projections `pi_pm phi = (phi +- c(nu) chi phi)/2`
    /// for a unit vector `nu`.
    pub fn boundary_projections(&self, nu: &DVector<f64>, phi: &Spinor) -> Result<(Spinor, Spinor)> {
        self.check_vector(nu)?;
        self.check_spinor(phi)?;
        let norm = nu.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnit { norm });
        }
        let cg = self.mul(nu, &(&self.chirality * phi))?;
        let plus = (phi + &cg) * Complex::new(0.5, 0.0);
        let minus = (phi - &cg) * Complex::new(0.5, 0.0);
        Ok((plus, minus))
    }

    /// Curvature endomorphism
    /// `R phi = ((mu + n(n-1)/2) phi + varpi chi phi + c(J) chi phi) / 2`
    /// with `J` in the orthonormal frame. Hermitian as an operator.
    pub fn curvature_endomorphism(
        &self,
        mu: f64,
        varpi: f64,
        j: &DVector<f64>,
        phi: &Spinor,
    ) -> Result<Spinor> {
        self.check_vector(j)?;
        self.check_spinor(phi)?;
        let n = self.n as f64;
        let chi_phi = &self.chirality * phi;
        let mut out = phi * Complex::new(mu + n * (n - 1.0) / 2.0, 0.0);
        out += &chi_phi * Complex::new(varpi, 0.0);
        out += self.mul(j, &chi_phi)?;
        Ok(out * Complex::new(0.5, 0.0))
    }

    /// Matrix form of the curvature endomorphism.
    pub fn curvature_operator(&self, mu: f64, varpi: f64, j: &DVector<f64>) -> Result<CMat> {
        self.check_vector(j)?;
        let n = self.n as f64;
        let dim = self.dim_spinor;
        let mut op = CMat::identity(dim, dim) * Complex::new(mu + n * (n - 1.0) / 2.0, 0.0);
        op += &self.chirality * Complex::new(varpi, 0.0);
        op += self.mul_operator(j)? * &self.chirality;
        Ok(op * Complex::new(0.5, 0.0))
    }

    /// Representation conjugated by a unitary of the undoubled space. For odd
    /// n the doubled operators are conjugated by `diag(u, u)`, which preserves
    /// the block structure that the spinor constructions rely on.
    pub fn conjugated(&self, u: &CMat) -> Result<CliffordRep> {
        if u.nrows() != self.base_dim || u.ncols() != self.base_dim {
            return Err(Error::ShapeMismatch { expected: self.base_dim, got: u.nrows() });
        }
        let ud = u.adjoint();
        let conj_base = |m: &CMat| u * m * &ud;
        let base_gammas: Vec<CMat> = self.base_gammas.iter().map(conj_base).collect();
        let big;
        let big_ref = if self.is_doubled() {
            let dim = self.dim_spinor;
            let mut b = CMat::zeros(dim, dim);
            b.view_mut((0, 0), (self.base_dim, self.base_dim)).copy_from(u);
            b.view_mut((self.base_dim, self.base_dim), (self.base_dim, self.base_dim))
                .copy_from(u);
            big = b;
            &big
        } else {
            u
        };
        let bd = big_ref.adjoint();
        let gammas: Vec<CMat> = self.gammas.iter().map(|m| big_ref * m * &bd).collect();
        let chirality = big_ref * &self.chirality * &bd;
        Ok(CliffordRep {
            n: self.n,
            dim_spinor: self.dim_spinor,
            base_dim: self.base_dim,
            gammas,
            chirality,
            base_gammas,
        })
    }

    /// Random spinor with independent complex Gaussian components.
    pub fn random_spinor<R: Rng + ?Sized>(&self, rng: &mut R) -> Spinor {
        linalg::random_cvec(self.dim_spinor, rng)
    }
}

/// Largest deviation, over all defining identities, from an exact Clifford
/// representation with chirality. Used by the verification suites.
pub fn identity_defect(rep: &CliffordRep) -> f64 {
    let dim = rep.dim_spinor();
    let id = CMat::identity(dim, dim);
    let mut worst = 0.0f64;
    let mut upd = |d: f64| {
        if d > worst {
            worst = d;
        }
    };
    for i in 0..rep.n() {
        let gi = rep.gamma(i);
        upd(linalg::matrix_defect(&gi.adjoint(), &(-gi)));
        for j in 0..rep.n() {
            let gj = rep.gamma(j);
            let anti = gi * gj + gj * gi;
            let want = if i == j { &id * Complex::new(-2.0, 0.0) } else { CMat::zeros(dim, dim) };
            upd(linalg::matrix_defect(&anti, &want));
        }
        let chi = rep.chirality();
        upd(linalg::matrix_defect(&(gi * chi + chi * gi), &CMat::zeros(dim, dim)));
    }
    let chi = rep.chirality();
    upd(linalg::matrix_defect(&(chi * chi), &id));
    upd(linalg::matrix_defect(&chi.adjoint(), chi));
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inner;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_low_dimension() {
        assert!(matches!(CliffordRep::new(2), Err(Error::InvalidDimension(2))));
    }

    #[test]
    fn dimensions_and_doubling() {
        let r4 = CliffordRep::new(4).unwrap();
        assert_eq!(r4.dim_spinor(), 4);
        assert!(!r4.is_doubled());
        let r3 = CliffordRep::new(3).unwrap();
        assert_eq!(r3.dim_spinor(), 4);
        assert_eq!(r3.base_dim(), 2);
        // chirality swaps the two blocks
        let chi = r3.chirality();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(chi[(i, j + 2)], Complex::new(want, 0.0));
                assert_eq!(chi[(i + 2, j)], Complex::new(want, 0.0));
                assert_eq!(chi[(i, j)], Complex::new(0.0, 0.0));
                assert_eq!(chi[(i + 2, j + 2)], Complex::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn defining_identities_to_machine_precision() {
        for n in 3..=8 {
            let rep = CliffordRep::new(n).unwrap();
            assert!(identity_defect(&rep) <= 1e-14, "n = {n}");
        }
    }

    #[test]
    fn anticommutator_and_square_examples() {
        let rep = CliffordRep::new(4).unwrap();
        let g1 = rep.gamma(0);
        let g2 = rep.gamma(1);
        let anti = g1 * g2 + g2 * g1;
        assert!(anti.iter().all(|z| z.norm() == 0.0));
        let sq = g1 * g1;
        let id = CMat::identity(4, 4);
        assert!(linalg::matrix_defect(&sq, &(&id * Complex::new(-1.0, 0.0))) == 0.0);
    }

    #[test]
    fn clifford_mul_linearity_and_square() {
        let rep = CliffordRep::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = rep.random_spinor(&mut rng);
        let zero = DVector::zeros(5);
        assert!(rep.mul(&zero, &phi).unwrap().norm() == 0.0);
        let e1 = DVector::from_fn(5, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let twice = rep.mul(&e1, &rep.mul(&e1, &phi).unwrap()).unwrap();
        assert!((twice + &phi).norm() < 1e-14);
        // skew-symmetry of the pairing
        let psi = rep.random_spinor(&mut rng);
        let x = DVector::from_fn(5, |i, _| 0.3 * (i as f64) - 0.7);
        let lhs = inner(&rep.mul(&x, &phi).unwrap(), &psi) + inner(&phi, &rep.mul(&x, &psi).unwrap());
        assert!(lhs.norm() < 1e-13);
    }

    #[test]
    fn mul_shape_errors() {
        let rep = CliffordRep::new(3).unwrap();
        let phi = CVec::zeros(4);
        let bad = DVector::zeros(4);
        assert!(rep.mul(&bad, &phi).is_err());
        let badphi = CVec::zeros(3);
        let x = DVector::zeros(3);
        assert!(rep.mul(&x, &badphi).is_err());
    }

    fn unit_radial(n: usize) -> DVector<f64> {
        DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn projections_identities() {
        for n in [3usize, 4, 6, 7] {
            let rep = CliffordRep::new(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let nu = unit_radial(n);
            for _ in 0..100 {
                let phi = rep.random_spinor(&mut rng);
                let (p, m) = rep.boundary_projections(&nu, &phi).unwrap();
                assert!((&p + &m - &phi).norm() < 1e-13 * phi.norm());
                let (pp, pm) = rep.boundary_projections(&nu, &p).unwrap();
                assert!((&pp - &p).norm() < 1e-13 * phi.norm());
                assert!(pm.norm() < 1e-13 * phi.norm());
                // <c(nu) chi phi, phi> = |pi+ phi|^2 - |pi- phi|^2
                let cg = rep.mul(&nu, &(rep.chirality() * &phi)).unwrap();
                let lhs = inner(&cg, &phi);
                let want = p.norm_squared() - m.norm_squared();
                assert!((lhs.re - want).abs() < 1e-12 * phi.norm_squared());
                assert!(lhs.im.abs() < 1e-12 * phi.norm_squared());
                // Im<c(nu) phi, phi> = 2 Im<c(nu) pi+ phi, pi- phi>
                let cphi = rep.mul(&nu, &phi).unwrap();
                let lhs2 = inner(&cphi, &phi).im;
                let rhs2 = 2.0 * inner(&rep.mul(&nu, &p).unwrap(), &m).im;
                assert!((lhs2 - rhs2).abs() < 1e-12 * phi.norm_squared());
            }
        }
    }

    #[test]
    fn projection_requires_unit_normal() {
        let rep = CliffordRep::new(4).unwrap();
        let phi = CVec::zeros(4);
        let nu = DVector::from_fn(4, |i, _| if i == 0 { 2.0 } else { 0.0 });
        assert!(matches!(rep.boundary_projections(&nu, &phi), Err(Error::NotUnit { .. })));
    }

    #[test]
    fn curvature_endomorphism_vacuum_and_bound() {
        for n in [3usize, 4, 5] {
            let rep = CliffordRep::new(n).unwrap();
            let nf = n as f64;
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let phi = rep.random_spinor(&mut rng);
            // vacuum background values annihilate everything
            let zero = DVector::zeros(n);
            let out = rep
                .curvature_endomorphism(-nf * (nf - 1.0) / 2.0, 0.0, &zero, &phi)
                .unwrap();
            assert!(out.norm() < 1e-14 * phi.norm());
            // lower bound of the quadratic form
            for _ in 0..50 {
                let mu = -2.0 + 4.0 * rng.random::<f64>();
                let varpi = -1.0 + 2.0 * rng.random::<f64>();
                let j = DVector::from_fn(n, |_, _| -0.5 + rng.random::<f64>());
                let phi = rep.random_spinor(&mut rng);
                let rphi = rep.curvature_endomorphism(mu, varpi, &j, &phi).unwrap();
                let q = inner(&rphi, &phi);
                assert!(q.im.abs() < 1e-11 * phi.norm_squared());
                let bound = 0.5
                    * (mu + nf * (nf - 1.0) / 2.0 - (j.norm_squared() + varpi * varpi).sqrt())
                    * phi.norm_squared();
                assert!(q.re >= bound - 1e-10 * phi.norm_squared());
            }
        }
    }

    #[test]
    fn curvature_endomorphism_kernel_example() {
        let rep = CliffordRep::new(4).unwrap();
        let nf = 4.0f64;
        // chirality eigenvector with eigenvalue -1
        let eig = rep.chirality().clone().symmetric_eigen();
        let mut idx = 0;
        for k in 0..4 {
            if eig.eigenvalues[k] < 0.0 {
                idx = k;
                break;
            }
        }
        let phi: CVec = eig.eigenvectors.column(idx).into_owned();
        let zero = DVector::zeros(4);
        let out = rep
            .curvature_endomorphism(1.0 - nf * (nf - 1.0) / 2.0, 1.0, &zero, &phi)
            .unwrap();
        assert!(out.norm() < 1e-13);
    }

    #[test]
    fn curvature_operator_is_hermitian_with_sharp_bound() {
        let rep = CliffordRep::new(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = DVector::from_fn(6, |_, _| -1.0 + 2.0 * rng.random::<f64>());
        let mu = 0.7;
        let varpi = -0.4;
        let op = rep.curvature_operator(mu, varpi, &j).unwrap();
        assert!(linalg::hermitian_defect(&op) < 1e-13);
        let vals = linalg::hermitian_eigenvalues(&op);
        let nf = 6.0f64;
        let min_expected =
            0.5 * (mu + nf * (nf - 1.0) / 2.0 - (j.norm_squared() + varpi * varpi).sqrt());
        assert!((vals[0] - min_expected).abs() < 1e-12);
    }

    #[test]
    fn conjugated_rep_keeps_identities() {
        for n in [4usize, 5] {
            let rep = CliffordRep::new(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let u = linalg::random_unitary(rep.base_dim(), &mut rng);
            let conj = rep.conjugated(&u).unwrap();
            assert!(identity_defect(&conj) < 1e-13);
        }
    }
}
