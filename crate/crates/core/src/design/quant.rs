//! Admissible quantization parameters for given local precisions.

use crate::error::{Error, Result};
use crate::geometry::boxspan;
use crate::kinf::MonotoneFn;
use crate::model::{IssCertificate, NetworkSpec, SubsystemSpec};

/// `min{γ̂⁻¹[κ(ϖ) − ρ_int(ϑ) − ρ_ext(μ)], ᾱ⁻¹(ϖ)}`.
pub fn eta_bound(cert: &IssCertificate, varpi: f64, vartheta: f64, mu: f64) -> Result<f64> {
    let budget = cert.kappa.eval(varpi)? - cert.rho_int.eval(vartheta)? - cert.rho_ext.eval(mu)?;
    if !(budget > 0.0) {
        return Err(Error::InfeasiblePrecision(format!(
            "κ(ϖ) − ρ_int(ϑ) − ρ_ext(μ) = {budget} leaves no room for state quantization"
        )));
    }
    Ok(cert.gamma_hat.inverse()?.eval(budget)?.min(cert.alpha_upper.inverse()?.eval(varpi)?))
}

/// Upper limit on `η` from the state and secret sets: `min{span(X_S), span(X∖X_S)}`,
/// ignoring whichever of the two sets is empty.
pub fn span_limit(sub: &SubsystemSpec) -> Result<f64> {
    let mut limit = f64::INFINITY;
    if !sub.secret_set.is_empty() {
        limit = limit.min(boxspan(&sub.secret_set)?);
    }
    let rest = sub.state_set.difference(&sub.secret_set)?;
    if !rest.is_empty() {
        limit = limit.min(boxspan(&rest)?);
    }
    if limit.is_infinite() {
        limit = boxspan(&sub.state_set)?;
    }
    Ok(limit)
}

/// Largest state quantization keeping `G` a simulation function at `(ϖ, ϑ)`
/// with external-input quantization `μ`.
pub fn max_eta(sub: &SubsystemSpec, varpi: f64, vartheta: f64, mu: f64) -> Result<f64> {
    Ok(eta_bound(&sub.certificate, varpi, vartheta, mu)?.min(span_limit(sub)?))
}

/// `α̲⁻¹(ϖ)`, the smallest secret-set inflation for current and infinite-step notions.
pub fn min_theta(cert: &IssCertificate, varpi: f64) -> Result<f64> {
    cert.alpha_lower.inverse()?.eval(varpi)
}

/// `ε = α⁻¹(ϖ)`.
pub fn epsilon_of(alpha: &MonotoneFn, varpi: f64) -> Result<f64> {
    alpha.inverse()?.eval(varpi)
}

/// `ε` of the network, with `α⁻¹ = max_i α_i⁻¹`.
pub fn network_epsilon(net: &NetworkSpec, varpi: f64) -> Result<f64> {
    let mut eps: f64 = 0.0;
    for sub in &net.subsystems {
        eps = eps.max(sub.certificate.alpha_inverse()?.eval(varpi)?);
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Metric;

    fn cert(kappa: f64, rho_int: f64, alpha_lower: f64) -> IssCertificate {
        IssCertificate {
            metric: Metric::Sup,
            kappa: MonotoneFn::Linear(kappa),
            rho_int: MonotoneFn::linear(rho_int),
            rho_ext: MonotoneFn::identity(),
            alpha_lower: MonotoneFn::Linear(alpha_lower),
            alpha_upper: MonotoneFn::identity(),
            gamma_hat: MonotoneFn::identity(),
            lipschitz: MonotoneFn::identity(),
            sigma: None,
        }
    }

    #[test]
    fn eta_bounds() {
        assert!((eta_bound(&cert(0.6, 0.0, 1.0), 0.01, 0.01, 0.0).unwrap() - 0.006).abs() < 1e-12);
        assert!((eta_bound(&cert(0.6, 0.4, 1.0), 0.01, 0.01, 0.0).unwrap() - 0.002).abs() < 1e-12);
        assert!((eta_bound(&cert(0.9, 0.05, 1.0), 0.25, 0.25, 0.0).unwrap() - 0.2125).abs() < 1e-12);
        assert!(matches!(eta_bound(&cert(0.6, 0.4, 1.0), 0.01, 0.02, 0.0), Err(Error::InfeasiblePrecision(_))));
    }

    #[test]
    fn theta_and_epsilon() {
        assert_eq!(min_theta(&cert(0.9, 0.05, 1.0), 0.25).unwrap(), 0.25);
        assert_eq!(min_theta(&cert(0.9, 0.05, 2.0), 0.5).unwrap(), 0.25);
        assert_eq!(epsilon_of(&MonotoneFn::identity(), 0.25).unwrap(), 0.25);
        assert_eq!(epsilon_of(&MonotoneFn::Linear(0.5), 1.0).unwrap(), 2.0);
        let c = cert(0.9, 0.05, 2.0);
        assert_eq!(c.alpha().unwrap(), MonotoneFn::Linear(2.0));
    }
}
