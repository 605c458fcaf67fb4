//! Interconnection graph analysis and compositional parameter design.

mod algorithm;
pub mod graph;
pub mod quant;
pub mod small_gain;

pub use algorithm::{
    check_composability, design_parameters, CompositionViolation, DesignOptions, DesignResult, LocalDesign, PhiEntry,
};
pub use graph::{tarjan_scc, SccDecomposition};
pub use quant::{epsilon_of, eta_bound, max_eta, min_theta, network_epsilon, span_limit};
pub use small_gain::{check_sigma, check_small_gain, find_sigma, GainMatrix, SmallGainCheck};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn fixture(name: &str) -> crate::model::NetworkSpec {
        let path = format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"));
        crate::model::load_model(path).unwrap()
    }

    #[test]
    fn nonlinear_network_design() {
        let net = fixture("nonlinear6.toml");
        let d = design_parameters(&net, 0.01, DesignOptions::default()).unwrap();
        for l in &d.subsystems {
            assert!((l.varpi - 0.01).abs() < 1e-12, "{l:?}");
            assert!((l.vartheta - 0.01).abs() < 1e-12, "{l:?}");
        }
        let etas: Vec<f64> = d.subsystems.iter().map(|l| l.eta_max).collect();
        for (e, want) in etas.iter().zip([0.006, 0.002, 0.002, 0.004, 0.004, 0.004]) {
            assert!((e - want).abs() < 1e-12, "{etas:?}");
        }
        assert!(d.phi.iter().all(|p| p.phi == 0.0));
        assert!(check_composability(&d, &net).unwrap().is_empty());
        assert_eq!(d.epsilon, 0.01);
    }

    #[test]
    fn cascade_design() {
        let net = fixture("cascade3.toml");
        let d = design_parameters(&net, 0.25, DesignOptions::default()).unwrap();
        for l in &d.subsystems {
            assert_eq!((l.varpi, l.vartheta), (0.25, 0.25));
            assert!((l.eta_max - 0.2).abs() < 1e-12 || (l.eta_max - 0.2125).abs() < 1e-12);
        }
        assert_eq!(d.subsystems.iter().map(|l| l.pass).collect::<Vec<_>>(), vec![3, 2, 1]);
    }

    #[test]
    fn infeasible_cycle_reports_witness() {
        let net = fixture("infeasible_cycle.toml");
        match design_parameters(&net, 0.1, DesignOptions::default()) {
            Err(crate::Error::SmallGainViolated { cycle, product }) => {
                assert_eq!(cycle.len(), 2);
                assert!((product - 1.2).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn isolated_subsystem_without_coupling() {
        let net = parse_model(
            r#"
            [subsystem.1]
            state_set = ["[0, 1]"]
            dynamics = ["0.5*x1"]
            [subsystem.1.certificate]
            kappa = "0.5*s"
            rho_int = "0"
            rho_ext = "0"
            alpha_lower = "s"
            alpha_upper = "s"
            gamma_hat = "s"
            lipschitz = "s"
            "#,
        )
        .unwrap();
        let d = design_parameters(&net, 1.0, DesignOptions::default()).unwrap();
        assert_eq!((d.subsystems[0].varpi, d.subsystems[0].vartheta), (1.0, 1.0));
    }

    #[test]
    fn design_is_deterministic() {
        let net = fixture("nonlinear6.toml");
        let opts = DesignOptions { phi_fraction: 0.5, ..Default::default() };
        let a = serde_json::to_string(&design_parameters(&net, 0.01, opts).unwrap()).unwrap();
        let b = serde_json::to_string(&design_parameters(&net, 0.01, opts).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn positive_phi_fraction_stays_composable() {
        let net = fixture("nonlinear6.toml");
        let opts = DesignOptions { phi_fraction: 0.5, ..Default::default() };
        let d = design_parameters(&net, 0.01, opts).unwrap();
        assert!(d.phi.iter().any(|p| p.phi > 0.0));
        assert!(check_composability(&d, &net).unwrap().is_empty());
    }
}
