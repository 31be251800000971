//! Tensor fields on the asymptotic chart.
//!
//! Fields come in two formats: closed-form callables (optionally carrying
//! analytic first and second coordinate derivatives) and gridded samples with
//! local Lagrange interpolation. Derivatives fall back to 4th-order centered
//! finite differences when nothing better is available. All components are
//! stored in the coordinate frame `(r, t_1, ..., t_{n-1})`; conversions to the
//! b-orthonormal frame live in `background`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::ChartPoint;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valence {
    Scalar,
    OneForm,
    Vector,
    SymTwo,
}

impl Valence {
    /// Number of stored components in dimension `n` (symmetric tensors are
    /// packed by upper triangle).
    pub fn ncomp(self, n: usize) -> usize {
        match self {
            Valence::Scalar => 1,
            Valence::OneForm | Valence::Vector => n,
            Valence::SymTwo => n * (n + 1) / 2,
        }
    }
}

/// Packed index of the `(i, j)` component of a symmetric 2-tensor.
#[inline]
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

type EvalFn = dyn Fn(&ChartPoint) -> DVector<f64> + Send + Sync;
type D1Fn = dyn Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync;
type D2Fn = dyn Fn(&ChartPoint) -> Vec<DMatrix<f64>> + Send + Sync;

#[derive(Clone)]
enum FieldData {
    Analytic {
        eval: Arc<EvalFn>,
        d1: Option<Arc<D1Fn>>,
        d2: Option<Arc<D2Fn>>,
    },
    Grid(Arc<GridField>),
}

/// A tensor field with evaluation and coordinate-derivative access.
#[derive(Clone)]
pub struct TensorField {
    n: usize,
    valence: Valence,
    data: FieldData,
    fd_step: f64,
}

pub const DEFAULT_FD_STEP: f64 = 0.01;

impl TensorField {
    pub fn analytic(
        n: usize,
        valence: Valence,
        eval: impl Fn(&ChartPoint) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        TensorField {
            n,
            valence,
            data: FieldData::Analytic { eval: Arc::new(eval), d1: None, d2: None },
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn scalar(n: usize, f: impl Fn(&ChartPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self::analytic(n, Valence::Scalar, move |p| DVector::from_element(1, f(p)))
    }

    pub fn with_d1(
        mut self,
        d1: impl Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        if let FieldData::Analytic { d1: slot, .. } = &mut self.data {
            *slot = Some(Arc::new(d1));
        }
        self
    }

    pub fn with_d2(
        mut self,
        d2: impl Fn(&ChartPoint) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        if let FieldData::Analytic { d2: slot, .. } = &mut self.data {
            *slot = Some(Arc::new(d2));
        }
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn from_grid(grid: GridField) -> Self {
        TensorField {
            n: grid.n,
            valence: grid.valence,
            fd_step: DEFAULT_FD_STEP,
            data: FieldData::Grid(Arc::new(grid)),
        }
    }

    /// Constant zero field of the given valence.
    pub fn zero(n: usize, valence: Valence) -> Self {
        let ncomp = valence.ncomp(n);
        let mut f = Self::analytic(n, valence, move |_| DVector::zeros(ncomp));
        let nc = ncomp;
        let nn = n;
        f = f.with_d1(move |_| DMatrix::zeros(nc, nn));
        let nc2 = ncomp;
        let nn2 = n;
        f.with_d2(move |_| (0..nc2).map(|_| DMatrix::zeros(nn2, nn2)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn ncomp(&self) -> usize {
        self.valence.ncomp(self.n)
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn has_analytic_d1(&self) -> bool {
        matches!(&self.data, FieldData::Analytic { d1: Some(_), .. })
    }

    pub fn has_analytic_d2(&self) -> bool {
        matches!(&self.data, FieldData::Analytic { d2: Some(_), .. })
    }

    pub fn is_grid(&self) -> bool {
        matches!(&self.data, FieldData::Grid(_))
    }

    pub fn try_value(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        match &self.data {
            FieldData::Analytic { eval, .. } => Ok(eval(p)),
            FieldData::Grid(grid) => Ok(grid.eval(p, 0)?.0),
        }
    }

    /// Coordinate partials, one column per coordinate (`ncomp x n`).
    pub fn try_partials(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        match &self.data {
            FieldData::Analytic { d1: Some(d1), .. } => Ok(d1(p)),
            FieldData::Analytic { .. } => self.fd_partials(p),
            FieldData::Grid(grid) => Ok(grid.eval(p, 1)?.1.expect("grid d1")),
        }
    }

    /// Second coordinate partials, one symmetric `n x n` matrix per component.
    pub fn try_second_partials(&self, p: &ChartPoint) -> Result<Vec<DMatrix<f64>>> {
        match &self.data {
            FieldData::Analytic { d2: Some(d2), .. } => Ok(d2(p)),
            FieldData::Analytic { d1: Some(_), .. } => self.fd_of_partials(p),
            FieldData::Analytic { .. } => self.fd_second(p),
            FieldData::Grid(grid) => Ok(grid.eval(p, 2)?.2.expect("grid d2")),
        }
    }

    pub fn value(&self, p: &ChartPoint) -> DVector<f64> {
        self.try_value(p).expect("field evaluation failed")
    }

    pub fn partials(&self, p: &ChartPoint) -> DMatrix<f64> {
        self.try_partials(p).expect("field derivative failed")
    }

    pub fn second_partials(&self, p: &ChartPoint) -> Vec<DMatrix<f64>> {
        self.try_second_partials(p).expect("field second derivative failed")
    }

    /// Pointwise difference `self - other`; derivatives delegate to the best
    /// route each operand offers.
    pub fn sub(&self, other: &TensorField) -> TensorField {
        self.combine(other, 1.0, -1.0)
    }

    pub fn add(&self, other: &TensorField) -> TensorField {
        self.combine(other, 1.0, 1.0)
    }

    pub fn combine(&self, other: &TensorField, ca: f64, cb: f64) -> TensorField {
        assert_eq!(self.valence, other.valence, "valence mismatch");
        assert_eq!(self.n, other.n, "dimension mismatch");
        let (a, b) = (self.clone(), other.clone());
        let (a1, b1) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        TensorField::analytic(self.n, self.valence, move |p| {
            a.value(p) * ca + b.value(p) * cb
        })
        .with_d1(move |p| a1.partials(p) * ca + b1.partials(p) * cb)
        .with_d2(move |p| {
            let da = a2.second_partials(p);
            let db = b2.second_partials(p);
            da.into_iter().zip(db).map(|(x, y)| x * ca + y * cb).collect()
        })
        .with_fd_step(self.fd_step.min(other.fd_step))
    }

    fn shifted(p: &ChartPoint, k: usize, dx: f64) -> ChartPoint {
        let mut q = p.clone();
        if k == 0 {
            q.r += dx;
        } else {
            q.angles[k - 1] += dx;
        }
        q
    }

    fn fd_partials(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let h = self.fd_step;
        let ncomp = self.ncomp();
        let mut out = DMatrix::zeros(ncomp, self.n);
        for k in 0..self.n {
            let fp2 = self.try_value(&Self::shifted(p, k, 2.0 * h))?;
            let fp1 = self.try_value(&Self::shifted(p, k, h))?;
            let fm1 = self.try_value(&Self::shifted(p, k, -h))?;
            let fm2 = self.try_value(&Self::shifted(p, k, -2.0 * h))?;
            let col = (fm2 - fp2 + (fp1 - fm1) * 8.0) / (12.0 * h);
            out.set_column(k, &col);
        }
        Ok(out)
    }

    /// 4th-order finite differences of an analytic first derivative.
    fn fd_of_partials(&self, p: &ChartPoint) -> Result<Vec<DMatrix<f64>>> {
        let h = self.fd_step;
        let ncomp = self.ncomp();
        let mut per_l: Vec<DMatrix<f64>> = Vec::with_capacity(self.n);
        for l in 0..self.n {
            let dp2 = self.try_partials(&Self::shifted(p, l, 2.0 * h))?;
            let dp1 = self.try_partials(&Self::shifted(p, l, h))?;
            let dm1 = self.try_partials(&Self::shifted(p, l, -h))?;
            let dm2 = self.try_partials(&Self::shifted(p, l, -2.0 * h))?;
            per_l.push((dm2 - dp2 + (dp1 - dm1) * 8.0) / (12.0 * h));
        }
        Ok((0..ncomp)
            .map(|c| {
                DMatrix::from_fn(self.n, self.n, |k, l| {
                    0.5 * (per_l[l][(c, k)] + per_l[k][(c, l)])
                })
            })
            .collect())
    }

    /// Direct second-difference stencils on values.
    fn fd_second(&self, p: &ChartPoint) -> Result<Vec<DMatrix<f64>>> {
        let h = self.fd_step;
        let ncomp = self.ncomp();
        let f0 = self.try_value(p)?;
        let mut diag: Vec<DVector<f64>> = Vec::with_capacity(self.n);
        for k in 0..self.n {
            let fp2 = self.try_value(&Self::shifted(p, k, 2.0 * h))?;
            let fp1 = self.try_value(&Self::shifted(p, k, h))?;
            let fm1 = self.try_value(&Self::shifted(p, k, -h))?;
            let fm2 = self.try_value(&Self::shifted(p, k, -2.0 * h))?;
            diag.push((-(fp2 + fm2) + (fp1 + fm1) * 16.0 - &f0 * 30.0) / (12.0 * h * h));
        }
        // mixed partials by nesting the 4th-order first-difference
        let d1_at = |q: &ChartPoint, k: usize| -> Result<DVector<f64>> {
            let fp2 = self.try_value(&Self::shifted(q, k, 2.0 * h))?;
            let fp1 = self.try_value(&Self::shifted(q, k, h))?;
            let fm1 = self.try_value(&Self::shifted(q, k, -h))?;
            let fm2 = self.try_value(&Self::shifted(q, k, -2.0 * h))?;
            Ok((fm2 - fp2 + (fp1 - fm1) * 8.0) / (12.0 * h))
        };
        let mut mixed: Vec<Vec<DVector<f64>>> = alloc::vec![Vec::new(); self.n];
        for k in 0..self.n {
            for l in 0..k {
                let gp2 = d1_at(&Self::shifted(p, l, 2.0 * h), k)?;
                let gp1 = d1_at(&Self::shifted(p, l, h), k)?;
                let gm1 = d1_at(&Self::shifted(p, l, -h), k)?;
                let gm2 = d1_at(&Self::shifted(p, l, -2.0 * h), k)?;
                mixed[k].push((gm2 - gp2 + (gp1 - gm1) * 8.0) / (12.0 * h));
            }
        }
        Ok((0..ncomp)
            .map(|c| {
                DMatrix::from_fn(self.n, self.n, |k, l| {
                    if k == l {
                        diag[k][c]
                    } else {
                        let (a, b) = if k > l { (k, l) } else { (l, k) };
                        mixed[a][b][c]
                    }
                })
            })
            .collect())
    }
}

/// Axes of a tensor-product grid: uniform radial nodes, cell-centered uniform
/// polar angles in `(0, pi)`, and a uniform periodic azimuth.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxes {
    pub radial: Vec<f64>,
    pub polar: Vec<Vec<f64>>,
    pub azimuth: Vec<f64>,
}

impl GridAxes {
    pub fn regular(n: usize, r_min: f64, r_max: f64, nr: usize, npolar: usize, nazimuth: usize) -> Self {
        let radial = (0..nr)
            .map(|i| r_min + (r_max - r_min) * (i as f64) / ((nr - 1) as f64))
            .collect();
        let polar = (0..n - 2)
            .map(|_| {
                let h = core::f64::consts::PI / npolar as f64;
                (0..npolar).map(|i| (i as f64 + 0.5) * h).collect()
            })
            .collect();
        let azimuth = (0..nazimuth)
            .map(|j| 2.0 * core::f64::consts::PI * (j as f64) / (nazimuth as f64))
            .collect();
        GridAxes { radial, polar, azimuth }
    }

    pub fn n(&self) -> usize {
        self.polar.len() + 2
    }

    fn axis(&self, d: usize) -> &[f64] {
        if d == 0 {
            &self.radial
        } else if d <= self.polar.len() {
            &self.polar[d - 1]
        } else {
            &self.azimuth
        }
    }

    fn is_periodic(&self, d: usize) -> bool {
        d == self.polar.len() + 1
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..self.n()).map(|d| self.axis(d).len()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for d in 0..self.n() {
            let ax = self.axis(d);
            if ax.len() < 2 {
                return Err(Error::Stencil(alloc::format!("axis {d} has {} nodes", ax.len())));
            }
            let h = ax[1] - ax[0];
            if h <= 0.0 {
                return Err(Error::Stencil(alloc::format!("axis {d} is not increasing")));
            }
            for w in ax.windows(2) {
                if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
                    return Err(Error::Stencil(alloc::format!("axis {d} is not uniform")));
                }
            }
        }
        Ok(())
    }
}

/// Gridded tensor samples with local Lagrange interpolation.
///
/// Values are stored as `[radial][angular multi-index][component]`, the
/// angular multi-index running row-major over polar axes then azimuth.
#[derive(Clone)]
pub struct GridField {
    pub n: usize,
    pub valence: Valence,
    pub axes: GridAxes,
    pub values: Vec<f64>,
    /// Width of the interpolation stencil per axis.
    pub stencil: usize,
}

impl GridField {
    pub fn new(valence: Valence, axes: GridAxes, values: Vec<f64>, stencil: usize) -> Result<Self> {
        axes.validate()?;
        let n = axes.n();
        let want: usize = axes.counts().iter().product::<usize>() * valence.ncomp(n);
        if values.len() != want {
            return Err(Error::ShapeMismatch { expected: want, got: values.len() });
        }
        if stencil < 2 {
            return Err(Error::Stencil(alloc::format!("stencil width {stencil} too small")));
        }
        for (d, count) in axes.counts().iter().enumerate() {
            if *count < stencil {
                return Err(Error::Stencil(alloc::format!(
                    "axis {d}: {count} nodes cannot host a {stencil}-point stencil"
                )));
            }
        }
        Ok(GridField { n, valence, axes, values, stencil })
    }

    /// Sample a field on the axes.
    pub fn sample(field: &TensorField, axes: GridAxes, stencil: usize) -> Result<Self> {
        let n = axes.n();
        assert_eq!(field.n(), n);
        let counts = axes.counts();
        let ncomp = field.ncomp();
        let total: usize = counts.iter().product();
        let mut values = Vec::with_capacity(total * ncomp);
        let mut idx = alloc::vec![0usize; n];
        loop {
            let mut coords = DVector::zeros(n);
            for d in 0..n {
                coords[d] = axes.axis(d)[idx[d]];
            }
            let p = ChartPoint::from_coords(&coords);
            let v = field.try_value(&p)?;
            values.extend(v.iter());
            let mut carry = true;
            for d in (0..n).rev() {
                if !carry {
                    break;
                }
                idx[d] += 1;
                if idx[d] < counts[d] {
                    carry = false;
                } else {
                    idx[d] = 0;
                }
            }
            if carry {
                break;
            }
        }
        GridField::new(field.valence(), axes, values, stencil)
    }

    fn flat_index(&self, idx: &[isize]) -> usize {
        let counts = self.axes.counts();
        let mut flat = 0usize;
        for d in 0..self.n {
            let len = counts[d] as isize;
            let mut i = idx[d];
            if self.axes.is_periodic(d) {
                i = i.rem_euclid(len);
            }
            debug_assert!(i >= 0 && i < len);
            flat = flat * counts[d] as usize + i as usize;
        }
        flat * self.valence.ncomp(self.n)
    }

    /// Window start and node positions for interpolation along axis `d`.
    fn window(&self, d: usize, x: f64) -> Result<(isize, Vec<f64>)> {
        let ax = self.axes.axis(d);
        let len = ax.len() as isize;
        let w = self.stencil as isize;
        let h = ax[1] - ax[0];
        if self.axes.is_periodic(d) {
            if len < w {
                return Err(Error::Stencil(alloc::format!(
                    "axis {d}: {len} nodes cannot host a {w}-point stencil"
                )));
            }
            let period = 2.0 * core::f64::consts::PI;
            let xw = x - period * crate::fmath::floor((x - ax[0]) / period);
            let near = crate::fmath::floor((xw - ax[0]) / h) as isize;
            let start = near - (w - 1) / 2;
            let nodes = (0..w).map(|k| ax[0] + ((start + k) as f64) * h).collect();
            // shift positions so the evaluation coordinate falls inside
            let _ = xw;
            Ok((start, nodes))
        } else {
            if len < w {
                return Err(Error::Stencil(alloc::format!(
                    "axis {d}: {len} nodes cannot host a {w}-point stencil"
                )));
            }
            let lo = ax[0] - 0.51 * h;
            let hi = ax[ax.len() - 1] + 0.51 * h;
            if x < lo || x > hi {
                return Err(Error::Domain(alloc::format!(
                    "coordinate {x} outside grid axis {d} range [{lo}, {hi}]"
                )));
            }
            let near = crate::fmath::floor((x - ax[0]) / h + 0.5) as isize;
            let start = (near - w / 2).clamp(0, len - w);
            let nodes = (0..w).map(|k| ax[(start + k) as usize]).collect();
            Ok((start, nodes))
        }
    }

    /// Evaluate the local interpolant (and optionally its first/second
    /// derivatives) at a chart point.
    #[allow(clippy::type_complexity)]
    pub fn eval(
        &self,
        p: &ChartPoint,
        want: u8,
    ) -> Result<(DVector<f64>, Option<DMatrix<f64>>, Option<Vec<DMatrix<f64>>>)> {
        let n = self.n;
        let coords = p.coords();
        let mut starts = Vec::with_capacity(n);
        let mut bases: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::with_capacity(n);
        for d in 0..n {
            let mut x = coords[d];
            if self.axes.is_periodic(d) {
                let period = 2.0 * core::f64::consts::PI;
                let ax0 = self.axes.axis(d)[0];
                x -= period * crate::fmath::floor((x - ax0) / period);
            }
            let (start, nodes) = self.window(d, x)?;
            starts.push(start);
            bases.push(lagrange_basis(&nodes, x, want));
        }
        let ncomp = self.valence.ncomp(n);
        let mut value = DVector::zeros(ncomp);
        let mut d1 = if want >= 1 { Some(DMatrix::zeros(ncomp, n)) } else { None };
        let mut d2 = if want >= 2 {
            Some((0..ncomp).map(|_| DMatrix::zeros(n, n)).collect::<Vec<_>>())
        } else {
            None
        };
        let w = self.stencil;
        let mut multi = alloc::vec![0usize; n];
        let mut idx = alloc::vec![0isize; n];
        loop {
            for d in 0..n {
                idx[d] = starts[d] + multi[d] as isize;
            }
            let base = self.flat_index(&idx);
            let mut prod = 1.0;
            for d in 0..n {
                prod *= bases[d].0[multi[d]];
            }
            for c in 0..ncomp {
                let v = self.values[base + c];
                value[c] += prod * v;
            }
            if let Some(d1m) = d1.as_mut() {
                for k in 0..n {
                    let mut pk = 1.0;
                    for d in 0..n {
                        pk *= if d == k { bases[d].1[multi[d]] } else { bases[d].0[multi[d]] };
                    }
                    for c in 0..ncomp {
                        d1m[(c, k)] += pk * self.values[base + c];
                    }
                }
            }
            if let Some(d2v) = d2.as_mut() {
                for k in 0..n {
                    for l in 0..=k {
                        let mut pkl = 1.0;
                        for d in 0..n {
                            pkl *= if k == l && d == k {
                                bases[d].2[multi[d]]
                            } else if d == k || d == l {
                                bases[d].1[multi[d]]
                            } else {
                                bases[d].0[multi[d]]
                            };
                        }
                        for (c, mat) in d2v.iter_mut().enumerate() {
                            mat[(k, l)] += pkl * self.values[base + c];
                            if k != l {
                                mat[(l, k)] += pkl * self.values[base + c];
                            }
                        }
                    }
                }
            }
            let mut carry = true;
            for d in (0..n).rev() {
                if !carry {
                    break;
                }
                multi[d] += 1;
                if multi[d] < w {
                    carry = false;
                } else {
                    multi[d] = 0;
                }
            }
            if carry {
                break;
            }
        }
        Ok((value, d1, d2))
    }
}

/// Values, first and second derivatives of the Lagrange basis on `nodes`
/// at `x`.
fn lagrange_basis(nodes: &[f64], x: f64, want: u8) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let w = nodes.len();
    let mut vals = alloc::vec![0.0; w];
    let mut d1s = alloc::vec![0.0; w];
    let mut d2s = alloc::vec![0.0; w];
    for i in 0..w {
        let mut denom = 1.0;
        for j in 0..w {
            if j != i {
                denom *= nodes[i] - nodes[j];
            }
        }
        let mut v = 1.0;
        for j in 0..w {
            if j != i {
                v *= x - nodes[j];
            }
        }
        vals[i] = v / denom;
        if want >= 1 {
            let mut s = 0.0;
            for k in 0..w {
                if k == i {
                    continue;
                }
                let mut p = 1.0;
                for j in 0..w {
                    if j != i && j != k {
                        p *= x - nodes[j];
                    }
                }
                s += p;
            }
            d1s[i] = s / denom;
        }
        if want >= 2 {
            let mut s = 0.0;
            for k in 0..w {
                if k == i {
                    continue;
                }
                for l in 0..w {
                    if l == i || l == k {
                        continue;
                    }
                    let mut p = 1.0;
                    for j in 0..w {
                        if j != i && j != k && j != l {
                            p *= x - nodes[j];
                        }
                    }
                    s += p;
                }
                // each unordered pair counted twice; keep as is (sum over
                // ordered pairs equals the second derivative)
            }
            d2s[i] = s / denom;
        }
    }
    (vals, d1s, d2s)
}
