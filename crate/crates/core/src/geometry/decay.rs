//! Verification of the asymptotic decay `e_g, K, E = O(e^{-tau r})` on the
//! radial ladder: the weighted sup-norms `e^{tau r} |.|_b` must stay bounded
//! on the outer half of the ladder.

use alloc::string::String;
use alloc::vec::Vec;

use super::background::{covariant_derivative_b, norm_b, norm_b_deriv};
use super::{InitialData, Valence};
use crate::{fmath, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Weighted sup-norms at one radial node.
#[derive(Clone, Debug)]
pub struct DecaySample {
    pub r: f64,
    /// `e^{tau r} sup |g - b|_b`
    pub e_norm: f64,
    /// `e^{tau r} sup |cd (g - b)|_b`
    pub de_norm: f64,
    pub k_norm: f64,
    pub e_field_norm: f64,
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub tau: f64,
    pub samples: Vec<DecaySample>,
    pub verdict: Verdict,
    /// The bound each series was tested against.
    pub bound: f64,
    /// Series name and radius of the worst offender.
    pub worst: Option<(String, f64, f64)>,
}

#[derive(Clone, Copy, Debug)]
pub struct DecayOptions {
    /// Absolute bound `C` for the weighted norms; when absent the bound is
    /// adaptive (`growth_factor` times the inner-half maximum). The constant
    /// in the decay condition is not fixed by theory, so this is a knob.
    pub bound: Option<f64>,
    pub growth_factor: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { bound: None, growth_factor: 2.0 }
    }
}

/// Evaluate the weighted decay norms of `data` against the rate `tau` on the
/// chart's radial ladder.
pub fn decay_verification(data: &InitialData, tau: f64, opts: DecayOptions) -> Result<DecayReport> {
    let chart = &data.chart;
    let e_g = data.e_g();
    let mut samples = Vec::with_capacity(chart.radial_nodes.len());
    for &r in &chart.radial_nodes {
        let w = fmath::exp(tau * r);
        let mut e_sup = 0.0f64;
        let mut de_sup = 0.0f64;
        let mut k_sup = 0.0f64;
        let mut ef_sup = 0.0f64;
        for node in &chart.rule.nodes {
            let p = super::ChartPoint::new(r, node.angles.clone());
            let ev = e_g.try_value(&p)?;
            e_sup = e_sup.max(norm_b(&p, Valence::SymTwo, &ev)?);
            let cd = covariant_derivative_b(&e_g, &p)?;
            de_sup = de_sup.max(norm_b_deriv(&p, &cd)?);
            let kv = data.k.try_value(&p)?;
            k_sup = k_sup.max(norm_b(&p, Valence::SymTwo, &kv)?);
            let efv = data.e.try_value(&p)?;
            ef_sup = ef_sup.max(norm_b(&p, Valence::Vector, &efv)?);
        }
        samples.push(DecaySample {
            r,
            e_norm: w * e_sup,
            de_norm: w * de_sup,
            k_norm: w * k_sup,
            e_field_norm: w * ef_sup,
        });
    }
    if samples.len() < 4 {
        return Ok(DecayReport {
            tau,
            samples,
            verdict: Verdict::Inconclusive,
            bound: f64::NAN,
            worst: None,
        });
    }
    let split = samples.len() / 2;
    let series: [(&str, fn(&DecaySample) -> f64); 4] = [
        ("e_g", |s| s.e_norm),
        ("grad_e_g", |s| s.de_norm),
        ("K", |s| s.k_norm),
        ("E", |s| s.e_field_norm),
    ];
    let mut verdict = Verdict::Pass;
    let mut worst: Option<(String, f64, f64)> = None;
    let mut bound_used = 0.0f64;
    for (name, get) in series {
        let inner_max = samples[..split].iter().map(get).fold(0.0f64, f64::max);
        let bound = opts.bound.unwrap_or(opts.growth_factor * inner_max + 1e-12);
        bound_used = bound_used.max(bound);
        for s in &samples[split..] {
            let v = get(s);
            if v > bound {
                verdict = Verdict::Fail;
                let replace = match &worst {
                    None => true,
                    Some((_, _, w)) => v / bound > *w,
                };
                if replace {
                    worst = Some((String::from(name), s.r, v / bound));
                }
            }
        }
    }
    Ok(DecayReport { tau, samples, verdict, bound: bound_used, worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        background_metric_field, sym_index, Chart, ChartPoint, TensorField,
    };
    use nalgebra::DVector;

    fn hyperbolic_like(n: usize) -> InitialData {
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

    /// `g = b + eps e^{-rate r} (angular part of b)`.
    fn perturbed(n: usize, eps: f64, rate: f64, tau: f64) -> InitialData {
        let b = background_metric_field(n);
        let bump = TensorField::analytic(n, Valence::SymTwo, move |p: &ChartPoint| {
            let diag = crate::geometry::background_metric_diag(p).unwrap();
            let scale = eps * crate::fmath::exp(-rate * p.r);
            let mut v = DVector::zeros(Valence::SymTwo.ncomp(n));
            for i in 1..n {
                v[sym_index(n, i, i)] = scale * diag[i];
            }
            v
        });
        InitialData {
            chart: Chart::standard(n).unwrap(),
            g: b.add(&bump),
            k: TensorField::zero(n, Valence::SymTwo),
            e: TensorField::zero(n, Valence::Vector),
            tau,
            complete: true,
            e_g_explicit: None,
        }
    }

    #[test]
    fn exact_background_passes_with_zero_norms() {
        let data = hyperbolic_like(3);
        let rep = decay_verification(&data, 3.0, DecayOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        for s in &rep.samples {
            assert!(s.e_norm < 1e-10 && s.de_norm < 1e-8 && s.k_norm == 0.0);
        }
    }

    #[test]
    fn matched_envelope_passes_with_amplitude() {
        let eps = 1e-3;
        let data = perturbed(3, eps, 2.0, 2.0);
        let rep = decay_verification(&data, 2.0, DecayOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        // weighted norm is ~ eps * |angular projector|_b = eps * sqrt(n-1)
        let want = eps * (2.0f64).sqrt();
        for s in &rep.samples {
            assert!((s.e_norm - want).abs() < 0.2 * want, "{} vs {}", s.e_norm, want);
        }
    }

    #[test]
    fn overclaimed_rate_fails() {
        // true decay e^{-r}, claimed tau = 3
        let data = perturbed(3, 1e-3, 1.0, 3.0);
        let rep = decay_verification(&data, 3.0, DecayOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.worst.is_some());
    }

    #[test]
    fn short_ladder_is_inconclusive() {
        let mut data = hyperbolic_like(3);
        data.chart = Chart::new(3, alloc::vec![2.0, 3.0, 4.0], 8).unwrap();
        let rep = decay_verification(&data, 3.0, DecayOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }
}
