//! Interconnection gains inside a strongly connected component, the cyclic
//! small-gain test, and scaling functions σ for linear gains.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinf::MonotoneFn;
use crate::model::NetworkSpec;

/// Gains `γ_ij` (keyed `(i, j)`, meaning `j` feeds `i`) among `members`.
/// Missing entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    pub members: Vec<usize>,
    pub gains: BTreeMap<(usize, usize), MonotoneFn>,
}

impl GainMatrix {
    /// `γ_ij = κ_i⁻¹ ∘ ρ_int,i ∘ α_j⁻¹` for every in-component edge `j → i`.
    pub fn of_component(net: &NetworkSpec, members: &[usize]) -> Result<Self> {
        let mut gains = BTreeMap::new();
        for &i in members {
            let ci = &net.subsystems[i].certificate;
            for j in net.preds(i) {
                if !members.contains(&j) {
                    continue;
                }
                let alpha_inv = net.subsystems[j].certificate.alpha_inverse()?;
                let g = ci.kappa.inverse()?.compose(&ci.rho_int).compose(&alpha_inv);
                if !g.is_zero() {
                    gains.insert((i, j), g);
                }
            }
        }
        Ok(Self { members: members.to_vec(), gains })
    }

    /// Linear gains from `(i, j, c)` triples on vertices `0..n`.
    pub fn linear(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let gains = entries.iter().filter(|e| e.2 != 0.0).map(|&(i, j, c)| ((i, j), MonotoneFn::Linear(c))).collect();
        Self { members: (0..n).collect(), gains }
    }

    /// Coefficient matrix over member positions, when every gain is linear.
    fn coefficients(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.members.len();
        let pos = |v: usize| self.members.iter().position(|&x| x == v).expect("gain outside component");
        let mut c = vec![vec![0.0; m]; m];
        for (&(i, j), g) in &self.gains {
            let k = g.as_linear().ok_or_else(|| Error::NonLinearGain(format!("γ_{}{} = {g}", i + 1, j + 1)))?;
            c[pos(i)][pos(j)] = k;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallGainCheck {
    pub holds: bool,
    pub cycles_checked: usize,
    /// Largest geometric mean of gains over a cycle, if any cycle exists.
    pub max_cycle_mean: Option<f64>,
    /// On failure: the cycle (1-based ids in signal-flow order) and its gain product.
    pub witness: Option<(Vec<usize>, f64)>,
}

/// Every simple cycle, as member positions in signal-flow order, with the
/// product of gains along it. Cycles start at their smallest position.
fn simple_cycles(c: &[Vec<f64>]) -> Vec<(Vec<usize>, f64)> {
    let m = c.len();
    let mut out = Vec::new();
    for start in 0..m {
        let mut path = vec![start];
        let mut on_path = vec![false; m];
        on_path[start] = true;
        extend(c, start, &mut path, &mut on_path, 1.0, &mut out);
    }
    out
}

fn extend(
    c: &[Vec<f64>],
    start: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    product: f64,
    out: &mut Vec<(Vec<usize>, f64)>,
) {
    let v = *path.last().unwrap();
    // Signal flows v → w when w's gain from v is non-zero: c[w][v].
    for w in start..c.len() {
        let g = c[w][v];
        if g == 0.0 {
            continue;
        }
        if w == start {
            out.push((path.clone(), product * g));
        } else if !on_path[w] {
            on_path[w] = true;
            path.push(w);
            extend(c, start, path, on_path, product * g, out);
            path.pop();
            on_path[w] = false;
        }
    }
}

/// Karp's maximum mean cycle on `ln c`, returned as a geometric mean.
fn max_cycle_mean(c: &[Vec<f64>]) -> Option<f64> {
    let m = c.len();
    let mut d = vec![vec![f64::NEG_INFINITY; m]; m + 1];
    d[0].iter_mut().for_each(|x| *x = 0.0);
    for k in 1..=m {
        for w in 0..m {
            for v in 0..m {
                if c[w][v] > 0.0 && d[k - 1][v] > f64::NEG_INFINITY {
                    d[k][w] = d[k][w].max(d[k - 1][v] + c[w][v].ln());
                }
            }
        }
    }
    let mut best: Option<f64> = None;
    for v in 0..m {
        if d[m][v] == f64::NEG_INFINITY {
            continue;
        }
        let worst = (0..m)
            .filter(|&k| d[k][v] > f64::NEG_INFINITY)
            .map(|k| (d[m][v] - d[k][v]) / (m - k) as f64)
            .fold(f64::INFINITY, f64::min);
        best = Some(best.map_or(worst, |b: f64| b.max(worst)));
    }
    best.map(f64::exp)
}

/// Every cyclic composition of gains must lie strictly below the identity.
/// Cycles are enumerated and the verdict is cross-checked against the
/// maximum cycle mean.
pub fn check_small_gain(g: &GainMatrix) -> Result<SmallGainCheck> {
    let c = g.coefficients()?;
    let cycles = simple_cycles(&c);
    let worst = cycles
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(cyc, p)| (cyc.iter().map(|&k| g.members[k] + 1).collect::<Vec<_>>(), *p));
    let holds = cycles.iter().all(|(_, p)| *p < 1.0);
    let mean = max_cycle_mean(&c);
    let spectral_holds = mean.is_none_or(|l| l < 1.0);
    if holds != spectral_holds {
        let log_mean = mean.map_or(0.0, f64::ln);
        if log_mean.abs() >= 1e-12 {
            return Err(Error::Internal(format!("cycle enumeration and maximum cycle mean disagree (mean {mean:?})")));
        }
    }
    Ok(SmallGainCheck {
        holds,
        cycles_checked: cycles.len(),
        max_cycle_mean: mean,
        witness: if holds { None } else { worst },
    })
}

/// Linear σ_i = s_i·s with `max_j γ_ij s_j < s_i` and `max_i s_i = 1`.
/// Gains are first scaled by the midpoint between the maximum cycle mean
/// and 1, which leaves strict slack on every constraint.
pub fn find_sigma(g: &GainMatrix) -> Result<Vec<MonotoneFn>> {
    let check = check_small_gain(g)?;
    if let Some((cycle, product)) = check.witness {
        return Err(Error::SmallGainViolated { cycle, product });
    }
    let c = g.coefficients()?;
    let m = c.len();
    // Without cycles any scale below 1 works; 0.5 leaves a factor-2 margin.
    let scale = check.max_cycle_mean.map_or(0.5, |lambda| 0.5 * (1.0 + lambda));
    let mut s = vec![1.0; m];
    for _ in 0..=m {
        let next: Vec<f64> = (0..m).map(|i| (0..m).map(|j| c[i][j] / scale * s[j]).fold(1.0, f64::max)).collect();
        if next == s {
            break;
        }
        s = next;
    }
    let top = s.iter().copied().fold(0.0, f64::max);
    s.iter_mut().for_each(|x| *x /= top);
    for i in 0..m {
        for j in 0..m {
            if c[i][j] > 0.0 && c[i][j] * s[j] >= s[i] {
                return Err(Error::Internal(format!(
                    "scaling search left γ_{}{}·σ_{} ≥ σ_{}",
                    g.members[i] + 1,
                    g.members[j] + 1,
                    g.members[j] + 1,
                    g.members[i] + 1
                )));
            }
        }
    }
    Ok(s.into_iter().map(MonotoneFn::Linear).collect())
}

/// Checks user-supplied σ against `max_j γ_ij ∘ σ_j < σ_i` on a logarithmic
/// grid of arguments; used when some gain is not linear.
pub fn check_sigma(g: &GainMatrix, sigma: &[MonotoneFn]) -> Result<()> {
    let pos = |v: usize| g.members.iter().position(|&x| x == v).unwrap();
    for (&(i, j), gain) in &g.gains {
        let (si, sj) = (&sigma[pos(i)], &sigma[pos(j)]);
        for k in -60..=30 {
            let r = 10f64.powf(k as f64 / 10.0);
            let lhs = gain.eval(sj.eval(r)?)?;
            if lhs >= si.eval(r)? {
                return Err(Error::NonLinearGain(format!(
                    "σ fails γ_{}{} ∘ σ_{} < σ_{} at r = {r:e}",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1
                )));
            }
        }
    }
    Ok(())
}
