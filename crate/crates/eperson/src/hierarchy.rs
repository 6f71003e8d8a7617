//! Two-level agent composition.
//!
//! The higher level holds context states; each context binds an
//! own-state prior and a preference vector for the lower level. Descent
//! mixes the bindings under the current high posterior (priors in
//! probability space; preferences mixed in probability space and
//! re-logged). Ascent summarizes the lower posterior's own factor as its
//! argmax, which becomes the higher level's observation — the summary
//! alphabet is the lower state space. The two levels step synchronously.

use crate::agent::{Agent, AgentError, ObserveOutcome, PlanOutcome};
use crate::model::{GenerativeModel, ModelError};
use crate::perception::{infer_state, Belief, InferenceResult, PerceptionError};
use crate::prob::{ln_clamped, Categorical, ProbError};
use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("{0} bindings for {1} high states (need one per context)")]
    BindingCount(usize, usize),
    #[error("binding {index}: prior has {got} entries, lower own-state cardinality is {want}")]
    BindingPriorShape { index: usize, got: usize, want: usize },
    #[error("binding {index}: C has {got} entries, lower observation count is {want}")]
    BindingPrefShape { index: usize, got: usize, want: usize },
    #[error("high observation cardinality {got} must equal lower own-state cardinality {want}")]
    SummaryAlphabet { got: usize, want: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Lower-level prior and preferences bound to one high context state.
#[derive(Debug, Clone)]
pub struct ContextBinding {
    pub d_prior: Categorical,
    /// Raw log-preference weights over lower observations.
    pub c_pref: Vec<f64>,
}

/// The higher level of a two-level agent.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    high: GenerativeModel,
    bindings: Vec<ContextBinding>,
    /// Normalized log-preference vectors, one per context.
    bindings_c_normalized: Vec<Vec<f64>>,
    pub high_belief: Belief,
    pub last_result: Option<InferenceResult>,
}

impl Hierarchy {
    /// Wires a high model over contexts to per-context lower bindings.
    /// `low_own_cardinality` and `low_num_observations` come from the
    /// lower model this hierarchy will sit on.
    pub fn new(
        high: GenerativeModel,
        bindings: Vec<ContextBinding>,
        low_own_cardinality: usize,
        low_num_observations: usize,
    ) -> Result<Self, HierarchyError> {
        let contexts = high.factors()[high.own_factor()].cardinality;
        if bindings.len() != contexts {
            return Err(HierarchyError::BindingCount(bindings.len(), contexts));
        }
        for (index, b) in bindings.iter().enumerate() {
            if b.d_prior.len() != low_own_cardinality {
                return Err(HierarchyError::BindingPriorShape {
                    index,
                    got: b.d_prior.len(),
                    want: low_own_cardinality,
                });
            }
            if b.c_pref.len() != low_num_observations {
                return Err(HierarchyError::BindingPrefShape {
                    index,
                    got: b.c_pref.len(),
                    want: low_num_observations,
                });
            }
        }
        if high.num_observations() != low_own_cardinality {
            return Err(HierarchyError::SummaryAlphabet {
                got: high.num_observations(),
                want: low_own_cardinality,
            });
        }
        let bindings_c_normalized = bindings
            .iter()
            .map(|b| {
                let max = b.c_pref.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z = max + b.c_pref.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                b.c_pref.iter().map(|v| v - z).collect()
            })
            .collect();
        let high_belief = Belief::from_priors(&high);
        Ok(Self {
            high,
            bindings,
            bindings_c_normalized,
            high_belief,
            last_result: None,
        })
    }

    pub fn high_model(&self) -> &GenerativeModel {
        &self.high
    }

    pub fn bindings(&self) -> &[ContextBinding] {
        &self.bindings
    }

    pub fn num_contexts(&self) -> usize {
        self.bindings.len()
    }

    /// Current posterior over contexts.
    pub fn high_posterior(&self) -> &Categorical {
        &self.high_belief.factors[self.high.own_factor()]
    }

    /// Mixes the bindings under the high posterior: the effective lower
    /// prior is the probability mixture of the bound priors; the effective
    /// preferences are the probability mixture of the bound preference
    /// distributions, re-logged.
    pub fn descend(&self) -> Result<(Categorical, Vec<f64>), HierarchyError> {
        let q = self.high_posterior();
        let n_states = self.bindings[0].d_prior.len();
        let n_obs = self.bindings_c_normalized[0].len();

        let mut prior = vec![0.0; n_states];
        let mut pref = vec![0.0; n_obs];
        for (k, binding) in self.bindings.iter().enumerate() {
            let w = q.get(k);
            if w == 0.0 {
                continue;
            }
            for (s, p) in prior.iter_mut().enumerate() {
                *p += w * binding.d_prior.get(s);
            }
            for (o, c) in pref.iter_mut().enumerate() {
                *c += w * self.bindings_c_normalized[k][o].exp();
            }
        }
        let prior = Categorical::normalize(&prior)?;
        let c: Vec<f64> = pref.iter().map(|&p| ln_clamped(p)).collect();
        Ok((prior, c))
    }

    /// Argmax summary of a lower posterior, lowest index on ties.
    pub fn ascend(lower_own_posterior: &Categorical) -> usize {
        lower_own_posterior.argmax()
    }

    /// Feeds one lower posterior upward: summarize, propagate the high
    /// belief through its first transition slice, and infer.
    pub fn absorb_summary(
        &mut self,
        lower_own_posterior: &Categorical,
    ) -> Result<InferenceResult, HierarchyError> {
        let o_high = Self::ascend(lower_own_posterior);
        let own = self.high.own_factor();
        let mut prior = self.high_belief.clone();
        prior.factors[own] = self.high.propagate(&prior.factors[own], 0)?;
        let result = infer_state(&self.high, &prior, o_high)?;
        self.high_belief = result.posterior.clone();
        self.last_result = Some(result.clone());
        Ok(result)
    }
}

/// One full hierarchical timestep: descend, lower inference on the
/// observation, ascend, higher inference, then lower planning under the
/// descended preferences. Returns both inference results and the control
/// committed for the next round.
pub fn step_hierarchical(
    agent: &mut Agent,
    obs_low: usize,
    rng: &mut dyn RngCore,
) -> Result<(ObserveOutcome, PlanOutcome), AgentError> {
    if agent.hierarchy.is_none() {
        return Err(AgentError::NotHierarchical);
    }
    let observed = agent.observe(obs_low)?;
    let planned = agent.plan(rng)?;
    Ok((observed, planned))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FactorRole, ModelSpec, StateFactor};

    fn high_over(contexts: usize, summary_alphabet: usize, informative: bool) -> GenerativeModel {
        // p(summary | context): uniform when uninformative.
        let mut a = vec![vec![0.0; contexts]; summary_alphabet];
        for (o, row) in a.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = if informative {
                    if o % contexts == k {
                        0.9 / (summary_alphabet as f64 / contexts as f64)
                    } else {
                        0.1 / (summary_alphabet as f64 - summary_alphabet as f64 / contexts as f64)
                    }
                } else {
                    1.0 / summary_alphabet as f64
                };
            }
        }
        let eye: Vec<Vec<f64>> = (0..contexts)
            .map(|i| (0..contexts).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        GenerativeModel::from_spec(&ModelSpec {
            factors: vec![StateFactor {
                role: FactorRole::Own,
                cardinality: contexts,
            }],
            num_observations: summary_alphabet,
            a_obs: a,
            b_trans: vec![eye],
            c_pref: vec![0.0; summary_alphabet],
            d_priors: vec![vec![1.0 / contexts as f64; contexts]],
            policies: vec![vec![0]],
        })
        .unwrap()
    }

    fn hierarchy_with_bindings(bindings: Vec<ContextBinding>) -> Hierarchy {
        let contexts = bindings.len();
        let states = bindings[0].d_prior.len();
        let n_obs = bindings[0].c_pref.len();
        Hierarchy::new(high_over(contexts, states, false), bindings, states, n_obs).unwrap()
    }

    #[test]
    fn descend_delta_recovers_binding() {
        let b0 = ContextBinding {
            d_prior: Categorical::new(vec![1.0, 0.0]).unwrap(),
            c_pref: vec![2.0, 0.0],
        };
        let b1 = ContextBinding {
            d_prior: Categorical::new(vec![0.0, 1.0]).unwrap(),
            c_pref: vec![0.0, 2.0],
        };
        let mut h = hierarchy_with_bindings(vec![b0, b1]);
        h.high_belief.factors[0] = Categorical::delta(2, 1).unwrap();
        let (prior, c) = h.descend().unwrap();
        assert_eq!(prior.probs(), &[0.0, 1.0]);
        // Exactly binding 1's normalized preferences.
        let z: f64 = (0.0f64).exp() + (2.0f64).exp();
        assert!((c[1] - (2.0 - z.ln())).abs() < 1e-12);
    }

    #[test]
    fn descend_identical_bindings_ignore_high_belief() {
        let b = ContextBinding {
            d_prior: Categorical::new(vec![0.3, 0.7]).unwrap(),
            c_pref: vec![1.0, -1.0],
        };
        let mut h = hierarchy_with_bindings(vec![b.clone(), b]);
        h.high_belief.factors[0] = Categorical::new(vec![0.2, 0.8]).unwrap();
        let (prior, _) = h.descend().unwrap();
        assert!((prior.get(0) - 0.3).abs() < 1e-12);
        assert!((prior.get(1) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn descend_mixture_oracle() {
        let b0 = ContextBinding {
            d_prior: Categorical::new(vec![1.0, 0.0]).unwrap(),
            c_pref: vec![0.0, 0.0],
        };
        let b1 = ContextBinding {
            d_prior: Categorical::new(vec![0.0, 1.0]).unwrap(),
            c_pref: vec![0.0, 0.0],
        };
        let h = hierarchy_with_bindings(vec![b0, b1]); // uniform high prior
        let (prior, _) = h.descend().unwrap();
        assert!((prior.get(0) - 0.5).abs() < 1e-12);
        assert!((prior.get(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn descend_is_always_valid() {
        // Mixture of extreme bindings stays a proper distribution and a
        // normalizable preference vector for any high belief.
        let b0 = ContextBinding {
            d_prior: Categorical::new(vec![1.0, 0.0]).unwrap(),
            c_pref: vec![30.0, -30.0],
        };
        let b1 = ContextBinding {
            d_prior: Categorical::new(vec![0.0, 1.0]).unwrap(),
            c_pref: vec![-30.0, 30.0],
        };
        let mut h = hierarchy_with_bindings(vec![b0, b1]);
        for p in [0.0, 0.13, 0.5, 0.99, 1.0] {
            h.high_belief.factors[0] = Categorical::new(vec![p, 1.0 - p]).unwrap();
            let (prior, c) = h.descend().unwrap();
            let s: f64 = prior.probs().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let z: f64 = c.iter().map(|v| v.exp()).sum();
            assert!((z - 1.0).abs() < 1e-9, "exp(C) sums to {z}");
        }
    }

    #[test]
    fn ascend_examples() {
        let d = Categorical::delta(4, 3).unwrap();
        assert_eq!(Hierarchy::ascend(&d), 3);
        let p = Categorical::new(vec![0.6, 0.4]).unwrap();
        assert_eq!(Hierarchy::ascend(&p), 0);
        let tied = Categorical::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(Hierarchy::ascend(&tied), 0);
    }

    #[test]
    fn uninformative_summary_leaves_high_prior() {
        let b = ContextBinding {
            d_prior: Categorical::uniform(2).unwrap(),
            c_pref: vec![0.0, 0.0],
        };
        let mut h = hierarchy_with_bindings(vec![b.clone(), b]);
        let before = h.high_posterior().clone();
        for _ in 0..5 {
            h.absorb_summary(&Categorical::new(vec![0.8, 0.2]).unwrap()).unwrap();
        }
        for (a, b) in h.high_posterior().probs().iter().zip(before.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn informative_summary_moves_high_belief() {
        let b = ContextBinding {
            d_prior: Categorical::uniform(2).unwrap(),
            c_pref: vec![0.0, 0.0],
        };
        let high = high_over(2, 2, true);
        let mut h = Hierarchy::new(high, vec![b.clone(), b], 2, 2).unwrap();
        h.absorb_summary(&Categorical::new(vec![0.9, 0.1]).unwrap()).unwrap();
        assert!(h.high_posterior().get(0) > 0.8);
        let u3 = h.high_posterior().entropy();
        assert!(u3 <= (2.0f64).ln());
    }
}
