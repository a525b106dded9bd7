//! KL and χ² diagnostics, and stationary distributions of finite chains.

use crate::error::{domain, shape, Error, Result};
use crate::game::check_distribution;
use crate::stochastic::model::Policy;

const STATIONARY_RESIDUAL: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 1_000_000;

/// `KL(q ‖ p)`; infinite when `q` puts mass where `p` has none.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> Result<f64> {
    if q.len() != p.len() {
        return Err(shape(format!("distributions of length {} and {}", q.len(), p.len())));
    }
    let mut total = 0.0;
    for (&qa, &pa) in q.iter().zip(p) {
        if qa > 0.0 {
            if pa <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += qa * (qa / pa).ln();
        }
    }
    Ok(total.max(0.0))
}

/// First `(state, action)` with `μ(s) > 0`, `alt > 0` and `null = 0`.
pub fn support_violation(null_policy: &Policy, alt_policy: &Policy, mu: &[f64]) -> Option<(usize, usize)> {
    mu.iter().enumerate().filter(|(_, m)| **m > 0.0).find_map(|(s, _)| {
        (0..null_policy.num_actions())
            .find(|&a| alt_policy.prob(s, a) > 0.0 && null_policy.prob(s, a) == 0.0)
            .map(|a| (s, a))
    })
}

/// `Σ_s μ(s) KL(π_alt(·|s) ‖ π_null(·|s))`. Returns `+∞` on a support
/// violation at a visited state; [`support_violation`] names the culprit.
pub fn state_avg_kl(null_policy: &Policy, alt_policy: &Policy, mu: &[f64]) -> Result<f64> {
    null_policy.check_same_shape(alt_policy)?;
    if mu.len() != null_policy.num_states() {
        return Err(shape(format!(
            "state distribution of length {} for {} states",
            mu.len(),
            null_policy.num_states()
        )));
    }
    check_distribution(mu).map_err(domain)?;
    let mut total = 0.0;
    for (s, &m) in mu.iter().enumerate() {
        if m > 0.0 {
            total += m * kl_divergence(alt_policy.row(s), null_policy.row(s))?;
        }
    }
    Ok(total)
}

/// `½ Σ (q − p)² / p`.
pub fn chi_square_div(q: &[f64], p: &[f64]) -> Result<f64> {
    if q.len() != p.len() {
        return Err(shape(format!("distributions of length {} and {}", q.len(), p.len())));
    }
    if p.iter().any(|x| !(*x > 0.0)) {
        return Err(domain("reference distribution needs full support"));
    }
    Ok(0.5 * q.iter().zip(p).map(|(a, b)| (a - b) * (a - b) / b).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCheckRow {
    pub epsilon: f64,
    pub kl: f64,
    pub quadratic: f64,
}

impl QuadraticCheckRow {
    /// `KL / (ε² χ²)`; NaN when the quadratic term vanishes.
    pub fn ratio(&self) -> f64 {
        self.kl / self.quadratic
    }
}

/// Exact `KL(P_ε ‖ P)` for `P_ε = (1 − ε) P + ε Q` next to `ε² χ²(Q ‖ P)`.
pub fn kl_quadratic_check(p: &[f64], q: &[f64], epsilons: &[f64]) -> Result<Vec<QuadraticCheckRow>> {
    let chi = chi_square_div(q, p)?;
    check_distribution(p).map_err(domain)?;
    check_distribution(q).map_err(domain)?;
    epsilons
        .iter()
        .map(|&eps| {
            if !(0.0..=1.0).contains(&eps) {
                return Err(domain(format!("mixture weight {eps} outside [0, 1]")));
            }
            let mixed: Vec<f64> = p.iter().zip(q).map(|(a, b)| (1.0 - eps) * a + eps * b).collect();
            Ok(QuadraticCheckRow {
                epsilon: eps,
                kl: kl_divergence(&mixed, p)?,
                quadratic: eps * eps * chi,
            })
        })
        .collect()
}

/// Stationary law of an ergodic row-stochastic matrix by power iteration.
///
/// The chain must have a single recurrent class and that class must be
/// aperiodic; transient states receive mass 0.
pub fn stationary_distribution(chain: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = chain.len();
    if n == 0 || chain.iter().any(|r| r.len() != n) {
        return Err(shape("chain must be a nonempty square matrix"));
    }
    for (i, row) in chain.iter().enumerate() {
        if row.iter().any(|p| !(*p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(domain(format!("row {i} is not a distribution")));
        }
    }
    check_ergodic(chain)?;

    let mut mu = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..STATIONARY_MAX_ITER {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in chain.iter().enumerate() {
            let m = mu[i];
            if m != 0.0 {
                for (x, p) in next.iter_mut().zip(row) {
                    *x += m * p;
                }
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let residual: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut mu, &mut next);
        if residual < STATIONARY_RESIDUAL {
            return Ok(mu);
        }
    }
    Err(Error::Ergodicity(format!(
        "power iteration did not settle in {STATIONARY_MAX_ITER} steps"
    )))
}

fn reachable(chain: &[Vec<f64>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; chain.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for (v, &p) in chain[u].iter().enumerate() {
            if p > 0.0 && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_ergodic(chain: &[Vec<f64>]) -> Result<()> {
    let n = chain.len();
    let reach: Vec<Vec<bool>> = (0..n).map(|s| reachable(chain, s)).collect();
    // A state is recurrent when everything it reaches reaches it back.
    let recurrent: Vec<usize> = (0..n)
        .filter(|&s| (0..n).all(|t| !reach[s][t] || reach[t][s]))
        .collect();
    let root = recurrent[0];
    if recurrent.iter().any(|&s| !reach[root][s]) {
        return Err(Error::Ergodicity("more than one recurrent class".into()));
    }
    // Period of the class: gcd of level differences along its edges.
    let mut level = vec![usize::MAX; n];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut period = 0;
    while let Some(u) = queue.pop_front() {
        for (v, &p) in chain[u].iter().enumerate() {
            if p > 0.0 {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                } else {
                    period = gcd(period, (level[u] + 1).abs_diff(level[v]));
                }
            }
        }
    }
    if period != 1 {
        return Err(Error::Ergodicity(format!("recurrent class has period {period}")));
    }
    Ok(())
}
