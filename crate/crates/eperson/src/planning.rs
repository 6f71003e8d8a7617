//! Expected free energy evaluation and action selection.
//!
//! A policy's expected free energy accumulates, per step, an epistemic
//! term (expected KL between the predicted posterior and the predictive
//! state prior — the mutual information between future states and
//! observations) and a pragmatic term (expected log-preference of the
//! predicted observations): `G = -sum(epistemic) - sum(pragmatic)`.
//!
//! Rollouts are single-pass: the belief is pushed through `B` without
//! re-conditioning on intermediate hypothetical observations, so the
//! outer expectation runs under the policy-conditioned predictive joint.
//! Partner and shared factors are held at the current posterior during
//! rollout; only the own factor is controllable.

use crate::model::{GenerativeModel, ModelError, Policy};
use crate::perception::Belief;
use crate::prob::{Categorical, ProbError};
use thiserror::Error;

/// Default softmax precision over `-G` for policy selection.
pub const DEFAULT_PRECISION: f64 = 4.0;

#[derive(Debug, Error)]
pub enum PlanningError {
    #[error("empty policy evaluation list")]
    EmptyEvaluations,
    #[error("posterior has {posterior} entries but there are {policies} policies")]
    LengthMismatch { posterior: usize, policies: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Expected free energy of one policy, with its decomposition.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub policy: Policy,
    /// `G` in nats; lower is better.
    pub efe: f64,
    /// Total expected information gain (`>= 0`).
    pub epistemic: f64,
    /// Total expected log-preference (`<= 0`).
    pub pragmatic: f64,
    /// Per-step `(epistemic, pragmatic)` pairs.
    pub per_step: Vec<(f64, f64)>,
}

/// Posterior over policies marginalized to a first-step control choice.
#[derive(Debug, Clone)]
pub struct ActionDistribution {
    pub over_policies: Categorical,
    /// Policy-posterior-weighted marginal of first controls.
    pub over_controls: Categorical,
    /// `argmax` of `over_controls`, lowest index on ties.
    pub chosen: usize,
    pub precision_used: f64,
}

/// Partner dynamics applied to the partner factor during rollouts: the
/// assumed partner model's transitions under the partner's predicted
/// action distribution.
#[derive(Debug, Clone, Copy)]
pub struct RolloutCoupling<'a> {
    pub other_model: &'a GenerativeModel,
    pub predicted_action: &'a Categorical,
}

/// Evaluates one policy from the given belief.
pub fn expected_free_energy(
    model: &GenerativeModel,
    belief: &Belief,
    policy: &Policy,
) -> Result<PolicyEvaluation, PlanningError> {
    expected_free_energy_coupled(model, belief, policy, None)
}

/// Like [`expected_free_energy`], additionally advancing the partner
/// factor each rollout step by the partner's predicted action mixture, so
/// predicted trajectories of the partner enter the policy's expected
/// observations.
pub fn expected_free_energy_coupled(
    model: &GenerativeModel,
    belief: &Belief,
    policy: &Policy,
    coupling: Option<RolloutCoupling<'_>>,
) -> Result<PolicyEvaluation, PlanningError> {
    model.check_belief_shape(&belief.factors)?;
    let ix = model.indexer();
    let own = model.own_factor();
    let other = model.factor_with_role(crate::model::FactorRole::Other);
    let n_obs = model.num_observations();
    let n_cfg = ix.num_configs();

    let mut rolled = belief.clone();
    let mut per_step = Vec::with_capacity(policy.horizon());
    let mut epistemic_total = 0.0;
    let mut pragmatic_total = 0.0;

    for &control in &policy.controls {
        rolled.factors[own] = model.propagate(&rolled.factors[own], control)?;
        if let (Some(c), Some(other_idx)) = (coupling, other) {
            rolled.factors[other_idx] = c
                .other_model
                .propagate_mixture(&rolled.factors[other_idx], c.predicted_action)?;
        }

        // Predictive joint over configurations and observations.
        let mut q_joint = vec![0.0; n_cfg];
        for (config, q) in q_joint.iter_mut().enumerate() {
            *q = ix.joint_prob(&rolled.factors, config);
        }
        let mut q_obs = vec![0.0; n_obs];
        for (config, &qc) in q_joint.iter().enumerate() {
            if qc == 0.0 {
                continue;
            }
            let col = model.likelihood().column(config);
            for (o, q) in q_obs.iter_mut().enumerate() {
                *q += qc * col[o];
            }
        }

        // Epistemic: E_{Q(o)} KL( Q(s|o) || Q(s) ).
        let mut epistemic = 0.0;
        for (o, &zo) in q_obs.iter().enumerate() {
            if zo <= 0.0 {
                continue;
            }
            let mut kl = 0.0;
            for (config, &qc) in q_joint.iter().enumerate() {
                let w = model.likelihood().prob(o, config) * qc;
                if w <= 0.0 {
                    continue;
                }
                let post = w / zo;
                kl += post * (post.ln() - qc.ln());
            }
            epistemic += zo * kl;
        }

        // Pragmatic: E_{Q(o)} ln P(o | C).
        let mut pragmatic = 0.0;
        for (o, &zo) in q_obs.iter().enumerate() {
            if zo > 0.0 {
                pragmatic += zo * model.log_preferences()[o];
            }
        }

        epistemic_total += epistemic;
        pragmatic_total += pragmatic;
        per_step.push((epistemic, pragmatic));
    }

    Ok(PolicyEvaluation {
        policy: policy.clone(),
        efe: -(epistemic_total + pragmatic_total),
        epistemic: epistemic_total,
        pragmatic: pragmatic_total,
        per_step,
    })
}

/// Evaluates the model's whole policy set.
pub fn evaluate_policies(
    model: &GenerativeModel,
    belief: &Belief,
) -> Result<Vec<PolicyEvaluation>, PlanningError> {
    evaluate_policies_coupled(model, belief, None)
}

/// Evaluates the policy set with partner dynamics in the rollouts.
pub fn evaluate_policies_coupled(
    model: &GenerativeModel,
    belief: &Belief,
    coupling: Option<RolloutCoupling<'_>>,
) -> Result<Vec<PolicyEvaluation>, PlanningError> {
    model
        .policies()
        .iter()
        .map(|p| expected_free_energy_coupled(model, belief, p, coupling))
        .collect()
}

/// `softmax(-precision * G)`: lower expected free energy, higher mass.
pub fn policy_posterior(
    evals: &[PolicyEvaluation],
    precision: f64,
) -> Result<Categorical, PlanningError> {
    if evals.is_empty() {
        return Err(PlanningError::EmptyEvaluations);
    }
    let neg_g: Vec<f64> = evals.iter().map(|e| -e.efe).collect();
    Ok(Categorical::softmax(&neg_g, precision)?)
}

/// Marginalizes a policy posterior onto first-step controls and picks the
/// argmax (lowest index on ties). Deterministic given its inputs.
pub fn select_action(
    posterior: &Categorical,
    policies: &[Policy],
    num_controls: usize,
) -> Result<ActionDistribution, PlanningError> {
    if posterior.len() != policies.len() {
        return Err(PlanningError::LengthMismatch {
            posterior: posterior.len(),
            policies: policies.len(),
        });
    }
    if policies.is_empty() {
        return Err(PlanningError::EmptyEvaluations);
    }
    let mut weights = vec![0.0; num_controls];
    for (p, policy) in policies.iter().enumerate() {
        weights[policy.controls[0]] += posterior.get(p);
    }
    let over_controls = Categorical::normalize(&weights)?;
    Ok(ActionDistribution {
        chosen: over_controls.argmax(),
        over_policies: posterior.clone(),
        over_controls,
        precision_used: f64::NAN, // set by callers that know it
    })
}

/// Convenience: posterior + marginalization in one step.
pub fn select_action_with_precision(
    evals: &[PolicyEvaluation],
    precision: f64,
    num_controls: usize,
) -> Result<ActionDistribution, PlanningError> {
    let posterior = policy_posterior(evals, precision)?;
    let policies: Vec<Policy> = evals.iter().map(|e| e.policy.clone()).collect();
    let mut dist = select_action(&posterior, &policies, num_controls)?;
    dist.precision_used = precision;
    Ok(dist)
}

/// Soft minimum of `G` at the given precision:
/// `-(1/precision) ln sum exp(-precision * G)`. Converges to the hard
/// minimum as precision grows, and its argmin over first controls agrees
/// exactly with the argmax of the marginalized action distribution.
pub fn soft_min_efe(efes: &[f64], precision: f64) -> Option<f64> {
    if efes.is_empty() {
        return None;
    }
    let m = efes.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = efes.iter().map(|g| (-precision * (g - m)).exp()).sum();
    Some(m - sum.ln() / precision)
}

/// Soft-min `G` restricted to policies whose first control is `control`.
pub fn soft_min_efe_committed(
    evals: &[PolicyEvaluation],
    control: usize,
    precision: f64,
) -> Option<f64> {
    let efes: Vec<f64> = evals
        .iter()
        .filter(|e| e.policy.controls[0] == control)
        .map(|e| e.efe)
        .collect();
    soft_min_efe(&efes, precision)
}
