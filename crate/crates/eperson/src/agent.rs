//! Agent composition: a generative model plus belief state, optionally
//! extended with a two-level hierarchy and a social coupling, driven
//! through a plan / act / observe cycle by the episode loop.

use crate::hierarchy::Hierarchy;
use crate::model::{GenerativeModel, ModelError};
use crate::perception::{infer_state, Belief, InferenceResult, PerceptionError};
use crate::planning::{
    evaluate_policies_coupled, select_action_with_precision, ActionDistribution, PlanningError,
    PolicyEvaluation, DEFAULT_PRECISION,
};
use crate::prob::{Categorical, ProbError};
use crate::social::Social;
use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("observe called before any plan committed a control")]
    NoCommittedControl,
    #[error("agent is not hierarchical")]
    NotHierarchical,
    #[error("agent is not coupled")]
    NotCoupled,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Social(#[from] crate::social::SocialError),
    #[error(transparent)]
    Hierarchy(#[from] crate::hierarchy::HierarchyError),
}

/// What one planning call produced.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    /// The committed control (argmax, sampled, or socially regulated).
    pub control: usize,
    /// Per-policy expected free energies from the agent's own model.
    pub evaluations: Vec<PolicyEvaluation>,
    /// Policy posterior and first-control marginal; `chosen` is the plain
    /// argmax even when the committed control came from social selection.
    pub action: ActionDistribution,
    /// Social emotional value of the committed control, when coupled with
    /// `w > 0`.
    pub valence: Option<f64>,
}

/// What one observation produced.
#[derive(Debug, Clone)]
pub struct ObserveOutcome {
    pub low: InferenceResult,
    pub high: Option<InferenceResult>,
}

/// One simulated agent.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: usize,
    model: GenerativeModel,
    pub belief: Belief,
    pub precision: f64,
    pub sample_actions: bool,
    last_control: Option<usize>,
    /// Partner's predicted action distribution, computed at plan time and
    /// consumed by the next observe to advance the partner factor.
    pending_other_prediction: Option<Categorical>,
    /// Additive log-preference offsets pushed in by a broadcast context.
    ctx_c_offsets: Option<Vec<f64>>,
    pub hierarchy: Option<Hierarchy>,
    pub social: Option<Social>,
}

impl Agent {
    /// A flat first-person agent starting from the model's priors.
    pub fn flat(id: usize, model: GenerativeModel) -> Self {
        let belief = Belief::from_priors(&model);
        Self {
            id,
            model,
            belief,
            precision: DEFAULT_PRECISION,
            sample_actions: false,
            last_control: None,
            pending_other_prediction: None,
            ctx_c_offsets: None,
            hierarchy: None,
            social: None,
        }
    }

    /// Attaches a two-level hierarchy; the own-state prior is replaced by
    /// the context mixture descended from the high prior.
    pub fn with_hierarchy(mut self, hierarchy: Hierarchy) -> Result<Self, AgentError> {
        let (prior, _c) = hierarchy.descend()?;
        self.belief.factors[self.model.own_factor()] = prior;
        self.hierarchy = Some(hierarchy);
        Ok(self)
    }

    /// Attaches a social coupling (partner model and social weight).
    pub fn with_social(mut self, social: Social) -> Self {
        self.social = Some(social);
        self
    }

    pub fn with_precision(mut self, precision: f64) -> Self {
        self.precision = precision;
        self
    }

    pub fn model(&self) -> &GenerativeModel {
        &self.model
    }

    pub fn last_control(&self) -> Option<usize> {
        self.last_control
    }

    pub fn set_ctx_offsets(&mut self, offsets: Option<Vec<f64>>) {
        self.ctx_c_offsets = offsets;
    }

    /// The stored context offsets, when they fit the given model's
    /// observation alphabet.
    pub fn ctx_offsets_for(&self, model: &GenerativeModel) -> Option<Vec<f64>> {
        self.ctx_c_offsets
            .as_ref()
            .filter(|o| o.len() == model.num_observations())
            .cloned()
    }

    /// Partner dynamics for rollouts, when coupled and a prediction is
    /// pending.
    pub fn rollout_coupling(&self) -> Option<crate::planning::RolloutCoupling<'_>> {
        match (&self.social, &self.pending_other_prediction) {
            (Some(social), Some(prediction)) => Some(crate::planning::RolloutCoupling {
                other_model: &social.other_model,
                predicted_action: prediction,
            }),
            _ => None,
        }
    }

    /// Replaces the shared-context factor of the belief with a broadcast
    /// posterior, if this agent's model carries such a factor.
    pub fn sync_shared_factor(&mut self, broadcast: &Categorical) {
        if let Some(idx) = self.model.factor_with_role(crate::model::FactorRole::Shared) {
            if self.belief.factors[idx].len() == broadcast.len() {
                self.belief.factors[idx] = broadcast.clone();
            }
        }
    }

    /// The model with context-dependent preferences (and, for bookkeeping,
    /// the descended own prior) applied. Borrows when nothing is layered.
    pub fn effective_model(&self) -> Result<std::borrow::Cow<'_, GenerativeModel>, AgentError> {
        if self.hierarchy.is_none() && self.ctx_c_offsets.is_none() {
            return Ok(std::borrow::Cow::Borrowed(&self.model));
        }
        let (prior, mut c) = match &self.hierarchy {
            Some(h) => h.descend()?,
            None => (
                self.model.priors()[self.model.own_factor()].clone(),
                self.model.log_preferences().to_vec(),
            ),
        };
        if let Some(offsets) = &self.ctx_c_offsets {
            for (ci, oi) in c.iter_mut().zip(offsets) {
                *ci += oi;
            }
        }
        Ok(std::borrow::Cow::Owned(
            self.model.with_prior_and_preferences(prior, &c)?,
        ))
    }

    /// Evaluates the policy set, selects a control (argmax of the
    /// first-control marginal; sampled instead when `sample_actions` is
    /// set; socially regulated when coupled with `w > 0`), and commits it.
    pub fn plan(&mut self, rng: &mut dyn RngCore) -> Result<PlanOutcome, AgentError> {
        // Predict the partner's next action while the pre-action belief is
        // current; rollouts use it as partner dynamics and the next
        // observe advances the partner factor with it.
        if self.social.is_some() {
            let prediction = crate::social::predict_other_action(self)?;
            self.pending_other_prediction = Some(prediction);
        }

        let (evaluations, num_controls) = {
            let model = self.effective_model()?;
            let evaluations =
                evaluate_policies_coupled(&model, &self.belief, self.rollout_coupling())?;
            (evaluations, model.num_controls())
        };
        let action = select_action_with_precision(&evaluations, self.precision, num_controls)?;

        let socially_regulated = self.social.as_ref().is_some_and(|s| s.w > 0.0);
        let (control, valence) = if socially_regulated {
            let candidates: Vec<usize> = (0..num_controls).collect();
            let choice = crate::social::select_action_social(self, &candidates)?;
            (choice.control, Some(choice.valence))
        } else if self.sample_actions {
            let u = rand::Rng::gen::<f64>(rng);
            (action.over_controls.sample_index(u), None)
        } else {
            (action.chosen, None)
        };

        self.last_control = Some(control);
        Ok(PlanOutcome {
            control,
            evaluations,
            action,
            valence,
        })
    }

    /// Advances the belief with the committed control and the new
    /// observation: own factor through `B`, partner factor through the
    /// predicted partner action, then posterior inference; hierarchical
    /// agents push an argmax summary up and infer the high level.
    pub fn observe(&mut self, obs: usize) -> Result<ObserveOutcome, AgentError> {
        let control = self.last_control.ok_or(AgentError::NoCommittedControl)?;
        let own = self.model.own_factor();
        self.belief.factors[own] = self.model.propagate(&self.belief.factors[own], control)?;

        let prediction = self.pending_other_prediction.take();
        if let (Some(social), Some(prediction)) = (&self.social, prediction) {
            if let Some(other_idx) = self.model.factor_with_role(crate::model::FactorRole::Other) {
                self.belief.factors[other_idx] =
                    social.propagate_partner(&self.belief.factors[other_idx], &prediction)?;
            }
        }

        let prior = self.belief.clone();
        let low = infer_state(&self.model, &prior, obs)?;
        self.belief = low.posterior.clone();

        let high = match &mut self.hierarchy {
            Some(h) => Some(h.absorb_summary(&self.belief.factors[own])?),
            None => None,
        };

        if let Some(social) = &mut self.social {
            if let Some(other_idx) = self.model.factor_with_role(crate::model::FactorRole::Other) {
                social.absorb_other_summary(&self.belief.factors[other_idx])?;
            }
        }

        Ok(ObserveOutcome { low, high })
    }
}
