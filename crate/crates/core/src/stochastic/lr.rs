//! Likelihood-ratio e-processes for a known null policy against one or more
//! alternative policies, and the matching detection-time ceilings.

use crate::error::{domain, shape, Error, Result};
use crate::game::NORMALIZATION_TOL;
use crate::stochastic::model::Policy;

/// `π_alt(a|s) / π_null(a|s)`.
pub fn lr_evalue(null_policy: &Policy, alt_policy: &Policy, state: usize, action: usize) -> Result<f64> {
    null_policy.check_same_shape(alt_policy)?;
    null_policy.check_index(state, action)?;
    let p0 = null_policy.prob(state, action);
    let p1 = alt_policy.prob(state, action);
    match (p0 > 0.0, p1 > 0.0) {
        (true, _) => Ok(p1 / p0),
        (false, true) => Err(Error::Support { state, action }),
        (false, false) => Err(Error::UndefinedAction { state, action }),
    }
}

/// Prior-weighted bank of likelihood-ratio martingales for one suspect.
#[derive(Debug, Clone, PartialEq)]
pub struct LRMonitorState {
    alternatives: Vec<Policy>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    log_lr: Vec<f64>,
    round: u64,
    log_value: f64,
    log_running_max: f64,
    crossing_time: Option<u64>,
}

impl LRMonitorState {
    pub fn new(alternatives: Vec<Policy>, weights: Vec<f64>) -> Result<Self> {
        if alternatives.is_empty() || alternatives.len() != weights.len() {
            return Err(shape(format!(
                "{} alternatives with {} weights",
                alternatives.len(),
                weights.len()
            )));
        }
        for alt in &alternatives[1..] {
            alternatives[0].check_same_shape(alt)?;
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(domain("mixture weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(domain(format!("mixture weights sum to {total}")));
        }
        let k = alternatives.len();
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            alternatives,
            weights,
            log_lr: vec![0.0; k],
            round: 0,
            log_value: 0.0,
            log_running_max: 0.0,
            crossing_time: None,
        })
    }

    /// Equal-weight mixture.
    pub fn uniform(alternatives: Vec<Policy>) -> Result<Self> {
        let k = alternatives.len();
        Self::new(alternatives, vec![1.0 / k as f64; k])
    }

    pub fn alternatives(&self) -> &[Policy] {
        &self.alternatives
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Accumulated `log M^{(k)}` per alternative; `-inf` once a component died.
    pub fn log_lr(&self) -> &[f64] {
        &self.log_lr
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    /// `Σ_k w_k M^{(k)}`.
    pub fn mixture_value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn running_max(&self) -> f64 {
        self.log_running_max.exp()
    }

    pub fn crossing_time(&self) -> Option<u64> {
        self.crossing_time
    }

    /// `ln Σ_k w_k M^{(k)}`, max-shifted.
    fn log_mixture(&self) -> f64 {
        let terms = self.log_lr.iter().zip(&self.log_weights).map(|(l, w)| l + w);
        let peak = terms.clone().fold(f64::NEG_INFINITY, f64::max);
        if peak == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        peak + terms.map(|t| (t - peak).exp()).sum::<f64>().ln()
    }
}

/// One observation of the suspect's action. A component whose alternative has
/// no null support at the observation dies (wealth 0) instead of erroring.
pub fn lr_step(
    state: &mut LRMonitorState,
    observed_state: usize,
    observed_action: usize,
    null_policy: &Policy,
    threshold: f64,
) -> Result<()> {
    if !(threshold > 1.0) {
        return Err(domain(format!("threshold {threshold} must exceed 1")));
    }
    null_policy.check_same_shape(&state.alternatives[0])?;
    null_policy.check_index(observed_state, observed_action)?;
    let p0 = null_policy.prob(observed_state, observed_action);
    for (k, alt) in state.alternatives.iter().enumerate() {
        let p1 = alt.prob(observed_state, observed_action);
        state.log_lr[k] += if p0 > 0.0 {
            (p1 / p0).ln()
        } else {
            f64::NEG_INFINITY
        };
    }
    state.round += 1;
    state.log_value = state.log_mixture();
    state.log_running_max = state.log_running_max.max(state.log_value);
    if state.crossing_time.is_none() && state.log_value >= threshold.ln() {
        state.crossing_time = Some(state.round);
    }
    Ok(())
}

/// `(ln b + C + ln(1/w)) / KL̄`; pass `weight = 1` for a single alternative.
pub fn lr_detection_bound(b: f64, overshoot: f64, kl_bar: f64, weight: f64) -> Result<f64> {
    if !(b > 1.0) {
        return Err(domain(format!("threshold {b} must exceed 1")));
    }
    if !(overshoot >= 0.0) {
        return Err(domain(format!("overshoot {overshoot} must be nonnegative")));
    }
    if !(kl_bar > 0.0) {
        return Err(domain(format!("average KL {kl_bar} must be positive")));
    }
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(domain(format!("prior weight {weight} outside (0, 1]")));
    }
    Ok((b.ln() + overshoot - weight.ln()) / kl_bar)
}

/// `max |ln(π_alt / π_null)|` over the alternative's support.
pub fn overshoot_constant(null_policy: &Policy, alt_policy: &Policy) -> Result<f64> {
    null_policy.check_same_shape(alt_policy)?;
    let mut c: f64 = 0.0;
    for s in 0..null_policy.num_states() {
        for a in 0..null_policy.num_actions() {
            if alt_policy.prob(s, a) > 0.0 {
                c = c.max(lr_evalue(null_policy, alt_policy, s, a)?.ln().abs());
            }
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::model::mixture_policy;

    fn chase_row() -> Policy {
        let w = [1.0, 1.0, 10.0, 1.0, 10.0];
        Policy::new(vec![w.iter().map(|x| x / 23.0).collect()]).unwrap()
    }

    fn eps_alternatives(eps: &[f64]) -> Vec<Policy> {
        let null = Policy::uniform(1, 5).unwrap();
        eps.iter()
            .map(|&e| mixture_policy(&null, &chase_row(), e).unwrap())
            .collect()
    }

    #[test]
    fn evalue_examples() {
        let null = Policy::uniform(1, 5).unwrap();
        let alt = eps_alternatives(&[0.6]).remove(0);
        let e = lr_evalue(&null, &alt, 0, 2).unwrap();
        // 0.3409 is printed to four decimals, so the ratio carries ±2.5e-4.
        assert!((e - 1.7045).abs() < 2.5e-4, "{e}");
        assert!((e - (0.08 + 0.6 * 10.0 / 23.0) / 0.2).abs() < 1e-12);
        assert_eq!(lr_evalue(&null, &null, 0, 3).unwrap(), 1.0);
        let dead = Policy::new(vec![vec![0.0, 0.25, 0.25, 0.25, 0.25]]).unwrap();
        assert_eq!(lr_evalue(&null, &dead, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn evalue_support_errors() {
        let null = Policy::new(vec![vec![0.0, 0.5, 0.5]]).unwrap();
        let alt = Policy::new(vec![vec![0.2, 0.4, 0.4]]).unwrap();
        assert!(matches!(lr_evalue(&null, &alt, 0, 0), Err(Error::Support { .. })));
        assert!(matches!(lr_evalue(&null, &null, 0, 0), Err(Error::UndefinedAction { .. })));
        assert!(lr_evalue(&null, &alt, 1, 0).is_err());
    }

    #[test]
    fn step_zero_of_chase_trace() {
        let null = Policy::uniform(1, 5).unwrap();
        let mut m = LRMonitorState::uniform(eps_alternatives(&[0.1, 0.3, 0.5, 0.7, 0.9])).unwrap();
        lr_step(&mut m, 0, 2, &null, 20.0).unwrap();
        assert!((m.mixture_value() - 1.587).abs() < 1e-3, "{}", m.mixture_value());
        assert!((m.mixture_value() - (1.0 + 0.5 * 27.0 / 23.0)).abs() < 1e-12);
    }

    #[test]
    fn null_alternative_stays_at_one() {
        let null = Policy::uniform(2, 3).unwrap();
        let mut m = LRMonitorState::uniform(vec![null.clone()]).unwrap();
        for t in 0..500 {
            lr_step(&mut m, t % 2, t % 3, &null, 20.0).unwrap();
            assert_eq!(m.mixture_value(), 1.0);
        }
        assert_eq!(m.crossing_time(), None);
    }

    #[test]
    fn zero_likelihood_kills_one_component() {
        let null = Policy::new(vec![vec![0.2, 0.4, 0.4]]).unwrap();
        let bad = Policy::new(vec![vec![0.0, 0.5, 0.5]]).unwrap();
        let good = Policy::new(vec![vec![0.4, 0.3, 0.3]]).unwrap();
        let mut m = LRMonitorState::new(vec![bad, good], vec![0.5, 0.5]).unwrap();
        lr_step(&mut m, 0, 0, &null, 20.0).unwrap();
        assert_eq!(m.log_lr()[0], f64::NEG_INFINITY);
        assert!((m.mixture_value() - 1.0).abs() < 1e-15);
        lr_step(&mut m, 0, 0, &null, 20.0).unwrap();
        assert!((m.mixture_value() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn support_violation_does_not_error() {
        let null = Policy::new(vec![vec![0.0, 0.5, 0.5]]).unwrap();
        let alt = Policy::new(vec![vec![0.5, 0.25, 0.25]]).unwrap();
        let mut m = LRMonitorState::uniform(vec![alt]).unwrap();
        lr_step(&mut m, 0, 0, &null, 20.0).unwrap();
        assert_eq!(m.mixture_value(), 0.0);
        lr_step(&mut m, 0, 1, &null, 20.0).unwrap();
        assert_eq!(m.mixture_value(), 0.0);
    }

    #[test]
    fn crossing_recorded_once() {
        let null = Policy::uniform(1, 5).unwrap();
        let mut m = LRMonitorState::uniform(vec![chase_row()]).unwrap();
        let mut steps = 0;
        while m.crossing_time().is_none() {
            lr_step(&mut m, 0, 2, &null, 20.0).unwrap();
            steps += 1;
        }
        // (50/23)^t >= 20 first at t = 4.
        assert_eq!(m.crossing_time(), Some(4));
        assert_eq!(steps, 4);
        assert!(m.running_max() >= 20.0);
    }

    #[test]
    fn bounds() {
        assert!((lr_detection_bound(20.0, 0.0, 0.01, 1.0).unwrap() - 299.5732273553991).abs() < 1e-9);
        let with_c = lr_detection_bound(20.0, 1.5, 0.01, 1.0).unwrap();
        assert!((with_c - (20f64.ln() + 1.5) / 0.01).abs() < 1e-9);
        let mix = lr_detection_bound(20.0, 0.0, 0.02, 0.2).unwrap();
        assert!((mix - (20f64.ln() + 5f64.ln()) / 0.02).abs() < 1e-9);
        assert!(lr_detection_bound(20.0, 0.0, 0.0, 1.0).is_err());
        let null = Policy::uniform(1, 5).unwrap();
        let c = overshoot_constant(&null, &chase_row()).unwrap();
        assert!((c - (23.0f64 / 5.0).ln()).abs() < 1e-12, "{c}");
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(LRMonitorState::new(vec![chase_row()], vec![0.5]).is_err());
        assert!(LRMonitorState::new(vec![chase_row(), chase_row()], vec![1.0, 0.0]).is_err());
        assert!(LRMonitorState::new(vec![], vec![]).is_err());
    }
}
