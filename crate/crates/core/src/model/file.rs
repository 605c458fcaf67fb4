use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::BoxUnion;
use crate::kinf::MonotoneFn;

use super::certificate::{IssCertificate, Metric};
use super::expr::Expr;
use super::{InternalBlock, NetworkSpec, SubsystemSpec};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default)]
    network: NetworkFile,
    subsystem: BTreeMap<String, SubsystemFile>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    #[serde(default)]
    edges: Vec<[usize; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubsystemFile {
    state_set: Vec<String>,
    #[serde(default)]
    input_set: Option<Vec<String>>,
    #[serde(default)]
    secret_set: Vec<String>,
    #[serde(default)]
    internal_set: BTreeMap<String, Vec<String>>,
    dynamics: Vec<String>,
    #[serde(default)]
    output: BTreeMap<String, Vec<String>>,
    certificate: CertificateFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateFile {
    kappa: String,
    rho_int: String,
    rho_ext: String,
    alpha_lower: String,
    alpha_upper: String,
    gamma_hat: String,
    lipschitz: String,
    #[serde(default)]
    sigma: Option<String>,
    #[serde(default)]
    metric: Option<String>,
    #[serde(default)]
    metric_matrix: Option<Vec<Vec<f64>>>,
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NetworkSpec> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Model(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<NetworkSpec> {
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    let mut ids: Vec<(usize, SubsystemFile)> =
        file.subsystem.into_iter().map(|(k, v)| Ok((parse_id(&k)?, v))).collect::<Result<_>>()?;
    ids.sort_by_key(|(id, _)| *id);
    for (pos, (id, _)) in ids.iter().enumerate() {
        if *id != pos + 1 {
            return Err(Error::Model(format!(
                "subsystems must be numbered 1..{} without gaps (found {id})",
                ids.len()
            )));
        }
    }
    let n = ids.len();
    let subsystems = ids.into_iter().map(|(id, f)| build_subsystem(id, f, n)).collect::<Result<Vec<_>>>()?;
    let edges = file
        .network
        .edges
        .iter()
        .map(|&[j, i]| {
            if j == 0 || i == 0 {
                Err(Error::Model("subsystem identifiers start at 1".into()))
            } else {
                Ok((j - 1, i - 1))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkSpec::new(subsystems, edges)
}

fn parse_id(key: &str) -> Result<usize> {
    key.parse::<usize>()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| Error::Model(format!("`{key}` is not a subsystem identifier")))
}

fn context(id: usize, what: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Model(format!("subsystem {id} {what}: {e}"))
}

fn exprs(id: usize, what: &str, items: &[String]) -> Result<Vec<Expr>> {
    items.iter().map(|s| Expr::parse(s).map_err(context(id, what))).collect()
}

fn build_subsystem(id: usize, f: SubsystemFile, n: usize) -> Result<SubsystemSpec> {
    let state_set = BoxUnion::parse_list(&f.state_set).map_err(context(id, "state_set"))?;
    let input_set = f.input_set.map(|s| BoxUnion::parse_list(&s).map_err(context(id, "input_set"))).transpose()?;
    let secret_set = if f.secret_set.is_empty() {
        BoxUnion::empty(state_set.dim())
    } else {
        BoxUnion::parse_list(&f.secret_set).map_err(context(id, "secret_set"))?
    };
    if secret_set.dim() != state_set.dim() {
        return Err(Error::Model(format!("subsystem {id}: secret_set has the wrong dimension")));
    }
    if !secret_set.difference(&state_set)?.is_empty() {
        return Err(Error::Model(format!("subsystem {id}: secret_set is not contained in state_set")));
    }
    let internal = f
        .internal_set
        .iter()
        .map(|(k, v)| {
            Ok(InternalBlock {
                from: parse_id(k)? - 1,
                dim: 0,
                set: Some(BoxUnion::parse_list(v).map_err(context(id, "internal_set"))?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outputs = BTreeMap::new();
    for (k, v) in &f.output {
        let target = parse_id(k)?;
        if target > n {
            return Err(Error::Model(format!("subsystem {id}: output.{target} names a missing subsystem")));
        }
        outputs.insert(target - 1, exprs(id, &format!("output.{k}"), v)?);
    }
    Ok(SubsystemSpec {
        id,
        dynamics: exprs(id, "dynamics", &f.dynamics)?,
        state_set,
        input_set,
        secret_set,
        internal,
        outputs,
        certificate: build_certificate(id, &f.certificate)?,
    })
}

fn build_certificate(id: usize, c: &CertificateFile) -> Result<IssCertificate> {
    let func = |name: &str, s: &str| MonotoneFn::parse(s).map_err(context(id, name));
    let metric = match (c.metric.as_deref(), &c.metric_matrix) {
        (None | Some("sup"), None) => Metric::Sup,
        (Some("quadratic"), Some(p)) => Metric::Quadratic(p.clone()),
        (Some("quadratic"), None) => {
            return Err(Error::Model(format!("subsystem {id}: quadratic metric needs metric_matrix")))
        }
        (other, _) => return Err(Error::Model(format!("subsystem {id}: unsupported metric {other:?}"))),
    };
    let cert = IssCertificate {
        metric,
        kappa: func("kappa", &c.kappa)?,
        rho_int: func("rho_int", &c.rho_int)?,
        rho_ext: func("rho_ext", &c.rho_ext)?,
        alpha_lower: func("alpha_lower", &c.alpha_lower)?,
        alpha_upper: func("alpha_upper", &c.alpha_upper)?,
        gamma_hat: func("gamma_hat", &c.gamma_hat)?,
        lipschitz: func("lipschitz", &c.lipschitz)?,
        sigma: c.sigma.as_deref().map(|s| func("sigma", s)).transpose()?,
    };
    for (name, f) in [
        ("kappa", &cert.kappa),
        ("alpha_lower", &cert.alpha_lower),
        ("alpha_upper", &cert.alpha_upper),
        ("gamma_hat", &cert.gamma_hat),
        ("lipschitz", &cert.lipschitz),
    ] {
        if f.is_zero() {
            return Err(Error::Model(format!("subsystem {id}: {name} must be of class K-infinity")));
        }
    }
    Ok(cert)
}
