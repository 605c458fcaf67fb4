//! Incremental stability certificates and their sample-based validation.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::linf;
use crate::kinf::MonotoneFn;

use super::{NetworkSpec, SubsystemSpec};

/// Absolute slack allowed by the sample checks.
pub const CHECK_TOL: f64 = 1e-9;

/// The pair function `G(x, x')` of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `‖x − x'‖∞`
    Sup,
    /// `sqrt((x − x')ᵀ P (x − x'))`
    Quadratic(Vec<Vec<f64>>),
}

impl Metric {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Sup => linf(x, y),
            Metric::Quadratic(p) => {
                let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                let q: f64 = p
                    .iter()
                    .zip(&d)
                    .map(|(row, di)| di * row.iter().zip(&d).map(|(pij, dj)| pij * dj).sum::<f64>())
                    .sum();
                q.max(0.0).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IssCertificate {
    pub metric: Metric,
    pub kappa: MonotoneFn,
    pub rho_int: MonotoneFn,
    pub rho_ext: MonotoneFn,
    pub alpha_lower: MonotoneFn,
    pub alpha_upper: MonotoneFn,
    pub gamma_hat: MonotoneFn,
    pub lipschitz: MonotoneFn,
    pub sigma: Option<MonotoneFn>,
}

impl IssCertificate {
    /// `α⁻¹ = ℓ ∘ α̲⁻¹`, the factor turning `G`-levels into output distances.
    pub fn alpha_inverse(&self) -> Result<MonotoneFn> {
        Ok(self.lipschitz.compose(&self.alpha_lower.inverse()?))
    }

    /// `α = (ℓ ∘ α̲⁻¹)⁻¹`
    pub fn alpha(&self) -> Result<MonotoneFn> {
        self.alpha_inverse()?.inverse()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CertificateReport {
    pub samples: usize,
    /// Largest violation of each check (negative means slack).
    pub sandwich_margin: f64,
    pub dissipation_margin: f64,
    pub lipschitz_margin: f64,
    pub triangle_margin: f64,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        [self.sandwich_margin, self.dissipation_margin, self.lipschitz_margin, self.triangle_margin]
            .iter()
            .all(|&m| m <= CHECK_TOL)
    }
}

/// Samples `samples` tuples `(x, x', x'', u, u', w, w')` and records the worst
/// margin of the sandwich bound, the dissipation inequality, the output
/// Lipschitz bound and the triangle-type bound.
pub fn sample_certificate<R: Rng + ?Sized>(
    net: &NetworkSpec,
    i: usize,
    samples: usize,
    rng: &mut R,
) -> Result<CertificateReport> {
    let sub = &net.subsystems[i];
    let cert = &sub.certificate;
    let mut rep = CertificateReport {
        samples,
        sandwich_margin: f64::NEG_INFINITY,
        dissipation_margin: f64::NEG_INFINITY,
        lipschitz_margin: f64::NEG_INFINITY,
        triangle_margin: f64::NEG_INFINITY,
    };
    for _ in 0..samples {
        let (x, x2, x3) = (sub.state_set.sample(rng), sub.state_set.sample(rng), sub.state_set.sample(rng));
        let (u, u2) = (sample_input(sub, rng), sample_input(sub, rng));
        let (w, w2) = (net.sample_internal(i, rng), net.sample_internal(i, rng));

        let g = cert.metric.eval(&x, &x2);
        let d = linf(&x, &x2);
        let lo = cert.alpha_lower.eval(d)? - g;
        let hi = g - cert.alpha_upper.eval(d)?;
        rep.sandwich_margin = rep.sandwich_margin.max(lo).max(hi);

        let (fx, fx2) = (sub.eval_dynamics(&x, &u, &w)?, sub.eval_dynamics(&x2, &u2, &w2)?);
        let lhs = cert.metric.eval(&fx, &fx2) - g;
        let rhs = -cert.kappa.eval(g)? + cert.rho_int.eval(linf(&w, &w2))? + cert.rho_ext.eval(linf(&u, &u2))?;
        rep.dissipation_margin = rep.dissipation_margin.max(lhs - rhs);

        let dh = linf(&sub.eval_all_outputs(&x)?, &sub.eval_all_outputs(&x2)?);
        rep.lipschitz_margin = rep.lipschitz_margin.max(dh - cert.lipschitz.eval(d)?);

        let ti = g - cert.metric.eval(&x, &x3) - cert.gamma_hat.eval(linf(&x2, &x3))?;
        rep.triangle_margin = rep.triangle_margin.max(ti);
    }
    Ok(rep)
}

/// Runs [`sample_certificate`] and turns a failed check into an error.
pub fn validate_certificate<R: Rng + ?Sized>(
    net: &NetworkSpec,
    i: usize,
    samples: usize,
    rng: &mut R,
) -> Result<CertificateReport> {
    let rep = sample_certificate(net, i, samples, rng)?;
    let checks = [
        ("sandwich bound", rep.sandwich_margin),
        ("dissipation inequality", rep.dissipation_margin),
        ("output Lipschitz bound", rep.lipschitz_margin),
        ("triangle bound", rep.triangle_margin),
    ];
    if let Some((name, m)) = checks.iter().find(|(_, m)| *m > CHECK_TOL) {
        return Err(Error::Certificate(format!(
            "subsystem {}: {name} violated by {m:.3e} on a sampled tuple",
            net.subsystems[i].id
        )));
    }
    Ok(rep)
}

fn sample_input<R: Rng + ?Sized>(sub: &SubsystemSpec, rng: &mut R) -> Vec<f64> {
    sub.input_set.as_ref().map_or_else(Vec::new, |u| u.sample(rng))
}
