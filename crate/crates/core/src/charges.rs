//! The charged energy-momentum: boundary integrands, the charge functional
//! as a radial limit of sphere integrals, electric charge, mass vector and
//! mass, the positivity-matrix criterion, and the cone-positivity scan.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

use crate::clifford::CliffordRep;
use crate::geometry::{
    background_metric_diag, christoffel_background, cov_deriv_components, ChartPoint,
    CovariantDerivative, InitialData, TensorField, Valence,
};
use crate::kids::{causal_class, eta_inner, kid_from_spinor, CausalClass, KID};
use crate::linalg::{self, pairwise_sum, CMat, CVec, I};
use crate::sphere::sphere_volume;
use crate::{fmath, Error, Result};

/// Options for the radial extrapolation of charge integrals.
#[derive(Clone, Copy, Debug)]
pub struct XiOptions {
    /// Hard floor for the fitted decay rate.
    pub sigma_floor: f64,
    /// The window lower bound is `max(sigma_floor, tau - (n-1) - sigma_margin)`,
    /// informed by the integrand decay budget (integrand ~ e^{-tau r},
    /// measure ~ e^{(n-1) r}, potential growth ~ e^r).
    pub sigma_margin: f64,
    /// A fit is flagged unreliable when its RMS misfit exceeds this fraction
    /// of the charge scale.
    pub rms_rel_threshold: f64,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions { sigma_floor: 0.02, sigma_margin: 1.25, rms_rel_threshold: 1e-3 }
    }
}

/// Internal switchboard for mutation testing of the integrand assembly.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MutationHook {
    #[default]
    None,
    /// Flip the sign of the `i_{grad V} e` contraction inside U_1.
    FlipU1Contraction,
    /// Flip the sign of U_2.
    FlipU2,
}

/// Diagnostics of one extrapolated charge.
#[derive(Clone, Debug)]
pub struct TailFit {
    /// Extrapolated raw limit (before charge normalization).
    pub limit: f64,
    pub coefficient: f64,
    pub sigma: f64,
    pub rms: f64,
    pub window: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct ChargeValue {
    /// Normalized charge (the functional value).
    pub value: f64,
    /// Raw sphere integrals per ladder radius.
    pub per_radius: Vec<(f64, f64)>,
    pub fit: TailFit,
    pub reliable: bool,
}

/// Least-squares fit of `I(r) = I_inf + c e^{-sigma r}` with `sigma` scanned
/// over the window and refined by golden section.
pub fn fit_exponential_tail(radii: &[f64], values: &[f64], window: (f64, f64)) -> TailFit {
    assert!(radii.len() == values.len() && radii.len() >= 3);
    let scale = values.iter().fold(0.0f64, |a, v| a.max(fmath::abs(*v))).max(1e-300);
    let solve = |sigma: f64| -> (f64, f64, f64) {
        // normal equations for the basis [1, e^{-sigma r}]
        let m = radii.len() as f64;
        let mut se = 0.0;
        let mut see = 0.0;
        let mut sv = 0.0;
        let mut sev = 0.0;
        for (r, v) in radii.iter().zip(values) {
            let e = fmath::exp(-sigma * (r - radii[0]));
            se += e;
            see += e * e;
            sv += v / scale;
            sev += e * v / scale;
        }
        let det = m * see - se * se;
        if fmath::abs(det) < 1e-14 * m * see.max(1e-300) {
            let i_inf = sv / m;
            let mut rss = 0.0;
            for v in values {
                let d = v / scale - i_inf;
                rss += d * d;
            }
            return (i_inf * scale, 0.0, fmath::sqrt(rss / m) * scale);
        }
        let i_inf = (see * sv - se * sev) / det;
        let c = (m * sev - se * sv) / det;
        let mut rss = 0.0;
        for (r, v) in radii.iter().zip(values) {
            let e = fmath::exp(-sigma * (r - radii[0]));
            let d = v / scale - i_inf - c * e;
            rss += d * d;
        }
        (i_inf * scale, c * scale, fmath::sqrt(rss / radii.len() as f64) * scale)
    };
    let (lo, hi) = window;
    let mut best_sigma = lo;
    let mut best_rms = f64::INFINITY;
    let steps = 96;
    for k in 0..=steps {
        let sigma = lo * fmath::exp(fmath::ln(hi / lo) * (k as f64) / (steps as f64));
        let (_, _, rms) = solve(sigma);
        if rms < best_rms {
            best_rms = rms;
            best_sigma = sigma;
        }
    }
    // golden-section refinement around the best scan point
    let phi = 0.5 * ((5.0f64).sqrt() - 1.0);
    let mut a = best_sigma / 1.3;
    let mut b = (best_sigma * 1.3).min(hi);
    a = a.max(lo);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = solve(x1).2;
    let mut f2 = solve(x2).2;
    for _ in 0..60 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = solve(x1).2;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = solve(x2).2;
        }
    }
    let sigma = 0.5 * (a + b);
    let (i_inf, c_scaled, rms) = solve(sigma);
    // the fitted amplitude refers to r - r_0; rescale to absolute radii
    let coefficient = c_scaled * fmath::exp(sigma * radii[0]);
    TailFit { limit: i_inf, coefficient, sigma, rms, window }
}

fn sigma_window(n: usize, tau: f64, opts: &XiOptions) -> (f64, f64) {
    let lo = (tau - (n as f64 - 1.0) - opts.sigma_margin).max(opts.sigma_floor);
    let hi = 2.0 * (tau + n as f64) + 1.0;
    (lo, hi)
}

/// Jets of the data shared by every KID at one quadrature node.
struct NodeJets {
    diag: DVector<f64>,
    e: DMatrix<f64>,
    cd_e: Vec<DMatrix<f64>>,
    k: DMatrix<f64>,
    e_vec: DVector<f64>,
}

fn node_jets(data: &InitialData, e_g: &TensorField, p: &ChartPoint) -> Result<NodeJets> {
    let n = data.n();
    let diag = background_metric_diag(p)?;
    let gamma = christoffel_background(p)?;
    let e_packed = e_g.try_value(p)?;
    let e_partials = e_g.try_partials(p)?;
    let cd = cov_deriv_components(Valence::SymTwo, n, &e_packed, &e_partials, &gamma);
    let cd_e = match cd {
        CovariantDerivative::SymTwo(v) => v,
        _ => unreachable!(),
    };
    let e = crate::geometry::sym_packed_to_matrix(n, &e_packed);
    let k = crate::geometry::sym_packed_to_matrix(n, &data.k.try_value(p)?);
    let e_vec = data.e.try_value(p)?;
    Ok(NodeJets { diag, e, cd_e, k, e_vec })
}

/// The boundary integrand `U_1(V) + U_2(alpha) + U_3(f)` as a 1-form in
/// coordinates; every trace, divergence, sharp and flat is taken with
/// respect to the background.
pub fn integrand_u(data: &InitialData, kid: &KID, p: &ChartPoint) -> Result<DVector<f64>> {
    let e_g = data.e_g();
    let jets = node_jets(data, &e_g, p)?;
    let n = data.n();
    let v = kid.v.try_value(p)?[0];
    let dv = kid.v.try_partials(p)?;
    let dv = DVector::from_fn(n, |k, _| dv[(0, k)]);
    let alpha = kid.alpha.try_value(p)?;
    Ok(assemble_u(n, &jets, v, &dv, &alpha, kid.f, MutationHook::None))
}

fn assemble_u(
    n: usize,
    jets: &NodeJets,
    v: f64,
    dv: &DVector<f64>,
    alpha: &DVector<f64>,
    f: f64,
    hook: MutationHook,
) -> DVector<f64> {
    let nf = n as f64;
    let d = &jets.diag;
    let mut out = DVector::zeros(n);
    let tr_e: f64 = (0..n).map(|i| jets.e[(i, i)] / d[i]).sum();
    let tr_k: f64 = (0..n).map(|i| jets.k[(i, i)] / d[i]).sum();
    let contraction_sign = if hook == MutationHook::FlipU1Contraction { 1.0 } else { -1.0 };
    let u2_sign = if hook == MutationHook::FlipU2 { -1.0 } else { 1.0 };
    for j in 0..n {
        // U_1
        let div_e_j: f64 = (0..n).map(|i| jets.cd_e[i][(i, j)] / d[i]).sum();
        let dtr_e_j: f64 = (0..n).map(|i| jets.cd_e[j][(i, i)] / d[i]).sum();
        let contr_j: f64 = (0..n).map(|i| dv[i] / d[i] * jets.e[(i, j)]).sum();
        let u1 = v * (div_e_j - dtr_e_j) + contraction_sign * contr_j + tr_e * dv[j];
        // U_2
        let ak_j: f64 = (0..n).map(|i| alpha[i] / d[i] * jets.k[(i, j)]).sum();
        let u2 = 2.0 * (ak_j - tr_k * alpha[j]);
        // U_3
        let u3 = 2.0 * (nf - 1.0) * f * d[j] * jets.e_vec[j];
        out[j] = u1 + u2_sign * u2 + u3;
    }
    out
}

/// Evaluate the charge functional on a batch of KIDs sharing one sweep of
/// the data jets over the ladder spheres.
pub fn xi_batch(data: &InitialData, kids: &[KID], opts: &XiOptions) -> Result<Vec<ChargeValue>> {
    xi_batch_with(data, kids, opts, MutationHook::None)
}

#[doc(hidden)]
pub fn xi_batch_with(
    data: &InitialData,
    kids: &[KID],
    opts: &XiOptions,
    hook: MutationHook,
) -> Result<Vec<ChargeValue>> {
    let chart = &data.chart;
    let n = data.n();
    if chart.radial_nodes.len() < 4 {
        return Err(Error::Domain("charge extrapolation needs at least 4 ladder radii".into()));
    }
    let e_g = data.e_g();
    let mut per_radius: Vec<Vec<f64>> = alloc::vec![Vec::new(); kids.len()];
    for &r in &chart.radial_nodes {
        let area_factor = fmath::powi(fmath::sinh(r), (n - 1) as i32);
        let mut sums: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(chart.rule.nodes.len()); kids.len()];
        for node in &chart.rule.nodes {
            let p = ChartPoint::new(r, node.angles.clone());
            let jets = node_jets(data, &e_g, &p)?;
            for (ki, kid) in kids.iter().enumerate() {
                let v = kid.v.try_value(&p)?[0];
                let dvm = kid.v.try_partials(&p)?;
                let dv = DVector::from_fn(n, |k, _| dvm[(0, k)]);
                let alpha = kid.alpha.try_value(&p)?;
                let u = assemble_u(n, &jets, v, &dv, &alpha, kid.f, hook);
                // U(nu_{b_r}) is the radial component (nu = d_r, b_rr = 1)
                sums[ki].push(node.weight * u[0]);
            }
        }
        for (ki, s) in sums.iter().enumerate() {
            let total = pairwise_sum(s);
            if total.is_nan() {
                return Err(Error::NanSample { node: ki });
            }
            per_radius[ki].push(area_factor * total);
        }
    }
    let window = sigma_window(n, data.tau, opts);
    let norm = 2.0 * (n as f64 - 1.0) * sphere_volume(n - 1);
    Ok(per_radius
        .into_iter()
        .map(|raw| {
            let fit = fit_exponential_tail(&chart.radial_nodes, &raw, window);
            let scale = raw.iter().fold(fmath::abs(fit.limit), |a, v| a.max(fmath::abs(*v))).max(1e-14);
            let reliable = fit.rms <= opts.rms_rel_threshold * scale;
            ChargeValue {
                value: fit.limit / norm,
                per_radius: chart.radial_nodes.iter().copied().zip(raw).collect(),
                fit,
                reliable,
            }
        })
        .collect())
}

/// The charge functional on one KID.
pub fn xi(data: &InitialData, kid: &KID, opts: &XiOptions) -> Result<ChargeValue> {
    Ok(xi_batch(data, core::slice::from_ref(kid), opts)?.pop().expect("one result"))
}

/// Electric charge through the direct flux formula
/// `Q = lim (1/omega_{n-1}) oint E^flat(nu) dsigma`; must agree with
/// `Xi(0,0,1)` (they differ only by the arrangement of the normalization).
pub fn electric_charge(data: &InitialData, opts: &XiOptions) -> Result<ChargeValue> {
    let chart = &data.chart;
    let n = data.n();
    if chart.radial_nodes.len() < 4 {
        return Err(Error::Domain("charge extrapolation needs at least 4 ladder radii".into()));
    }
    let mut raw = Vec::with_capacity(chart.radial_nodes.len());
    for &r in &chart.radial_nodes {
        // E^flat(nu) = b_{rr} E^r = E^r
        raw.push(chart.sphere_integrate(r, |p| data.e.value(p)[0])?);
    }
    let window = sigma_window(n, data.tau, opts);
    let fit = fit_exponential_tail(&chart.radial_nodes, &raw, window);
    let scale = raw.iter().fold(fmath::abs(fit.limit), |a, v| a.max(fmath::abs(*v))).max(1e-14);
    let reliable = fit.rms <= opts.rms_rel_threshold * scale;
    Ok(ChargeValue {
        value: fit.limit / sphere_volume(n - 1),
        per_radius: chart.radial_nodes.iter().copied().zip(raw).collect(),
        fit,
        reliable,
    })
}

/// Labels for the per-charge diagnostics of a report.
#[derive(Clone, Debug)]
pub struct ChargeDiagnostics {
    pub label: String,
    pub charge: ChargeValue,
}

/// Mass vector, Killing charges, electric charge, mass and positivity data
/// of an initial data set.
#[derive(Clone, Debug)]
pub struct ChargeReport {
    pub n: usize,
    /// `m_(mu) = Xi(V_(mu), 0, 0)`.
    pub m_mu: DVector<f64>,
    /// `Xi(0, alpha_k, 0)` over the Killing basis.
    pub killing_charges: Vec<f64>,
    /// `Q = Xi(0, 0, 1)`.
    pub q: f64,
    /// `sqrt(|eta(m, m)|)`; for spacelike mass vectors the sign convention is
    /// left open and only the magnitude is reported.
    pub mass: f64,
    pub causal: CausalClass,
    /// Minimum eigenvalue of the mass-charge operator.
    pub min_eig: f64,
    pub charges: Vec<ChargeDiagnostics>,
    pub reliable: bool,
    pub warnings: Vec<String>,
}

impl ChargeReport {
    /// `eta(m, m)`.
    pub fn eta_norm(&self) -> f64 {
        eta_inner(&self.m_mu, &self.m_mu)
    }

    /// The positivity criterion `m >= |Q|` in its operator form.
    pub fn mass_charge_inequality(&self, tol: f64) -> bool {
        self.min_eig >= -tol
    }
}

/// Compute the full charge report of an initial data set.
pub fn mass_vector(data: &InitialData, rep: &CliffordRep, opts: &XiOptions) -> Result<ChargeReport> {
    let n = data.n();
    if rep.n() != n {
        return Err(Error::ShapeMismatch { expected: n, got: rep.n() });
    }
    let mut kids: Vec<KID> = (0..=n).map(|mu| KID::basis_potential(n, mu)).collect();
    let n_kill = n * (n + 1) / 2;
    for k in 0..n_kill {
        kids.push(KID::basis_killing(n, k));
    }
    kids.push(KID::unit_charge(n));
    let values = xi_batch(data, &kids, opts)?;
    let m_mu = DVector::from_fn(n + 1, |mu, _| values[mu].value);
    let killing_charges: Vec<f64> = (0..n_kill).map(|k| values[n + 1 + k].value).collect();
    let q = values[n + 1 + n_kill].value;
    let eta = eta_inner(&m_mu, &m_mu);
    let mass = fmath::sqrt(fmath::abs(eta));
    let scale = m_mu.norm_squared().max(1.0);
    let causal = causal_class(&m_mu, 1e-12 * scale);
    let m_slice: Vec<f64> = m_mu.iter().copied().collect();
    let (_, min_eig) = positivity_matrix(rep, &m_slice, q)?;
    let mut warnings = Vec::new();
    let mut labels: Vec<String> = (0..=n).map(|mu| alloc::format!("m_{mu}")).collect();
    for k in 0..n_kill {
        labels.push(alloc::format!("killing_{k}"));
    }
    labels.push(String::from("q"));
    let mut reliable = true;
    let charges: Vec<ChargeDiagnostics> = labels
        .into_iter()
        .zip(values)
        .map(|(label, charge)| {
            if !charge.reliable {
                reliable = false;
                warnings.push(alloc::format!(
                    "fit for {label} did not converge (rms {:.3e})",
                    charge.fit.rms
                ));
            }
            ChargeDiagnostics { label, charge }
        })
        .collect();
    Ok(ChargeReport {
        n,
        m_mu,
        killing_charges,
        q,
        mass,
        causal,
        min_eig,
        charges,
        reliable,
        warnings,
    })
}

/// The Hermitian mass-charge operator
/// `M = m_0 Id - i sum_j m_j Gamma_j + Q chi` together with its minimum
/// eigenvalue. Positivity of `M` is the operator form of `m >= |Q|`.
pub fn positivity_matrix(rep: &CliffordRep, m_mu: &[f64], q: f64) -> Result<(CMat, f64)> {
    let n = rep.n();
    if m_mu.len() != n + 1 {
        return Err(Error::ShapeMismatch { expected: n + 1, got: m_mu.len() });
    }
    let dim = rep.dim_spinor();
    let mut op = CMat::identity(dim, dim) * Complex::new(m_mu[0], 0.0);
    for j in 1..=n {
        op += rep.gamma(j - 1) * (-I) * Complex::new(m_mu[j], 0.0);
    }
    op += rep.chirality() * Complex::new(q, 0.0);
    let scale: f64 = m_mu.iter().map(|v| fmath::abs(*v)).sum::<f64>() + fmath::abs(q) + 1.0;
    let defect = linalg::hermitian_defect(&op);
    if defect > 1e-10 * scale {
        return Err(Error::Inconsistency(alloc::format!(
            "mass-charge operator is not Hermitian (defect {defect})"
        )));
    }
    let (min_eig, _) = linalg::hermitian_min_eig(&op);
    Ok((op, min_eig))
}

/// Result of scanning the charge functional over the spinor cone.
#[derive(Clone, Debug)]
pub struct ConeScan {
    /// `Xi(K(u))` for every sampled parameter (basis vectors first).
    pub values: Vec<f64>,
    pub min_value: f64,
    pub worst_u: CVec,
    /// Time-symmetric cross-check at the worst parameter:
    /// `(Xi(K(u)), 2 <u, M u>)`.
    pub cross_check: Option<(f64, f64)>,
    /// Eigenvector refinement: the minimizer of the quadratic form and the
    /// functional value there.
    pub refined: Option<(CVec, f64)>,
    pub reliable: bool,
}

fn is_time_symmetric(data: &InitialData) -> bool {
    let n = data.n();
    for r in [data.chart.radial_nodes[0], data.chart.radial_nodes[2]] {
        let p = ChartPoint::new(r, alloc::vec![1.0; n - 1]);
        if data.k.value(&p).norm() > 1e-13 {
            return false;
        }
    }
    true
}

/// Evaluate `Xi(K(u))` for the standard basis plus `samples` random unit
/// parameters. In the time-symmetric case the scan is cross-checked against
/// the quadratic form of the mass-charge operator from `report`, and the
/// minimum eigenvector is used as a refinement step.
pub fn cone_positivity_scan(
    data: &InitialData,
    rep: &CliffordRep,
    report: &ChargeReport,
    samples: usize,
    seed: u64,
    opts: &XiOptions,
) -> Result<ConeScan> {
    let dim = rep.dim_spinor();
    let mut params: Vec<CVec> = (0..dim)
        .map(|k| CVec::from_fn(dim, |i, _| if i == k { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) }))
        .collect();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    for _ in 0..samples {
        let mut u = linalg::random_cvec(dim, &mut rng);
        let norm = u.norm();
        if norm > 0.0 {
            u /= Complex::new(norm, 0.0);
        }
        params.push(u);
    }
    let kids: Vec<KID> = params
        .iter()
        .map(|u| kid_from_spinor(rep, u))
        .collect::<Result<_>>()?;
    let values = xi_batch(data, &kids, opts)?;
    let reliable = values.iter().all(|v| v.reliable);
    let mut min_value = f64::INFINITY;
    let mut worst = 0usize;
    let vals: Vec<f64> = values.iter().map(|v| v.value).collect();
    for (k, v) in vals.iter().enumerate() {
        if *v < min_value {
            min_value = *v;
            worst = k;
        }
    }
    let mut worst_u = params[worst].clone();
    let ts = is_time_symmetric(data);
    let mut cross_check = None;
    let mut refined = None;
    if ts {
        let m_slice: Vec<f64> = report.m_mu.iter().copied().collect();
        let (op, _) = positivity_matrix(rep, &m_slice, report.q)?;
        let quad = |u: &CVec| 2.0 * linalg::inner(u, &(&op * u)).re;
        cross_check = Some((vals[worst], quad(&params[worst])));
        let (_, u_star) = linalg::hermitian_min_eig(&op);
        let kid_star = kid_from_spinor(rep, &u_star)?;
        let xi_star = xi(data, &kid_star, opts)?;
        if xi_star.value < min_value {
            min_value = xi_star.value;
            worst_u = u_star.clone();
        }
        refined = Some((u_star, xi_star.value));
    }
    Ok(ConeScan { values: vals, min_value, worst_u, cross_check, refined, reliable })
}
