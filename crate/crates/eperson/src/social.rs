//! Second-person bidirectional coupling and third-person shared context.
//!
//! A coupled agent's likelihood is conditioned on the joint (own,
//! partner[, shared]) configuration, so partner state is inferred from
//! the agent's own observations — agents never read each other's
//! internals. Each agent carries an assumed partner model (by default a
//! copy of its own) used three ways: to predict the partner's next action
//! (which advances the partner belief factor between rounds), to report
//! the partner's expected free energies from the agent's perspective, and
//! to regulate action choice by social emotional value.
//!
//! Social emotional value blends the change in achievable expected free
//! energy a candidate action causes for oneself and for the partner;
//! regulation picks the candidate whose value is closest to neutral.
//! Baselines differ by design: one's own change is measured against the
//! unconstrained optimum (so pure self-regard reduces to ordinary
//! minimum-G selection), the partner's against facing an unpredictable
//! uniform action.
//!
//! The third-person context is one self-contained agent whose posterior
//! over its own state is broadcast to the parties each round. The parties
//! receive it as a belief factor and as additive preference offsets; they
//! cannot influence it.

use crate::agent::{Agent, AgentError, ObserveOutcome, PlanOutcome};
use crate::environment::{EnvError, Environment};
use crate::model::{FactorRole, GenerativeModel, ModelError};
use crate::perception::{infer_state, Belief};
use crate::planning::{
    evaluate_policies, evaluate_policies_coupled, policy_posterior, select_action, soft_min_efe,
    soft_min_efe_committed, PolicyEvaluation,
};
use crate::prob::Categorical;
use rand::RngCore;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SocialError {
    #[error("agent has no social coupling")]
    NotCoupled,
    #[error("agent's model has no partner factor")]
    NoPartnerFactor,
    #[error("no candidate controls")]
    NoCandidates,
    #[error("no policy starts with control {0}")]
    UnreachableControl(usize),
    #[error("context ('they') model must be self-contained (exactly one own factor), found {0} factors")]
    ContextNotSelfContained(usize),
    #[error("environment has no context channel")]
    NoContextChannel,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Social coupling state attached to an agent.
#[derive(Debug, Clone)]
pub struct Social {
    /// The agent's model of the partner (default: a copy of its own).
    pub other_model: GenerativeModel,
    /// Social weight in `[0, 1]`: 0 = pure self-regard.
    pub w: f64,
    /// Softmax precision for partner-action prediction; lower values
    /// spread predicted trajectories over more timesteps. `None` uses the
    /// agent's own precision.
    pub prediction_precision: Option<f64>,
    /// Achievable (soft-min) G for self under the last committed control.
    pub last_efe_self: f64,
    /// Partner's achievable (soft-min) G under the last committed control.
    pub last_efe_other: f64,
    pub last_valence: Option<f64>,
    /// Mirrored high level for the partner, tracked for the deep
    /// second-person uncertainty cell.
    pub other_high: Option<OtherHighTracker>,
}

impl Social {
    pub fn new(other_model: GenerativeModel, w: f64) -> Self {
        Self {
            other_model,
            w,
            prediction_precision: None,
            last_efe_self: f64::NAN,
            last_efe_other: f64::NAN,
            last_valence: None,
            other_high: None,
        }
    }

    pub fn with_other_high(mut self, model: GenerativeModel) -> Self {
        let belief = Belief::from_priors(&model);
        self.other_high = Some(OtherHighTracker { model, belief });
        self
    }

    /// Advances a partner-state belief by the partner's predicted action
    /// distribution: `q' = sum_c p(c) B_other[c] q`.
    pub fn propagate_partner(
        &self,
        belief_other: &Categorical,
        prediction: &Categorical,
    ) -> Result<Categorical, AgentError> {
        let mut out = vec![0.0; belief_other.len()];
        for c in 0..prediction.len() {
            let w = prediction.get(c);
            if w == 0.0 {
                continue;
            }
            let moved = self.other_model.propagate(belief_other, c)?;
            for (o, m) in out.iter_mut().zip(moved.probs()) {
                *o += w * m;
            }
        }
        Ok(Categorical::normalize(&out)?)
    }

    /// Updates the mirrored partner high level from the partner-factor
    /// posterior. No-op when no high level is tracked.
    pub fn absorb_other_summary(&mut self, other_posterior: &Categorical) -> Result<(), AgentError> {
        if let Some(tracker) = &mut self.other_high {
            let o_high = other_posterior.argmax();
            let own = tracker.model.own_factor();
            let mut prior = tracker.belief.clone();
            prior.factors[own] = tracker.model.propagate(&prior.factors[own], 0)?;
            let result = infer_state(&tracker.model, &prior, o_high)?;
            tracker.belief = result.posterior;
        }
        Ok(())
    }
}

/// Mirrored partner high-level model and belief.
#[derive(Debug, Clone)]
pub struct OtherHighTracker {
    pub model: GenerativeModel,
    pub belief: Belief,
}

impl OtherHighTracker {
    pub fn posterior(&self) -> &Categorical {
        &self.belief.factors[self.model.own_factor()]
    }
}

/// The partner's belief as the agent models it: roles swapped — the
/// partner's own state is what the agent believes about the partner, the
/// partner's partner is the agent itself. `own_substitute`, when given,
/// replaces the agent's own-state belief (used to evaluate a committed
/// control from the partner's side).
pub(crate) fn other_view(
    agent: &Agent,
    own_substitute: Option<&Categorical>,
) -> Result<Belief, AgentError> {
    let social = agent.social.as_ref().ok_or(SocialError::NotCoupled)?;
    let my = agent.model();
    let my_own = &agent.belief.factors[my.own_factor()];
    let my_other_idx = my
        .factor_with_role(FactorRole::Other)
        .ok_or(SocialError::NoPartnerFactor)?;
    let my_other = &agent.belief.factors[my_other_idx];

    let mut factors = Vec::with_capacity(social.other_model.factors().len());
    for (i, f) in social.other_model.factors().iter().enumerate() {
        let q = match f.role {
            FactorRole::Own => my_other.clone(),
            FactorRole::Other => own_substitute.unwrap_or(my_own).clone(),
            FactorRole::Shared => match my.factor_with_role(FactorRole::Shared) {
                Some(idx) => agent.belief.factors[idx].clone(),
                None => social.other_model.priors()[i].clone(),
            },
        };
        factors.push(q);
    }
    let belief = Belief::new(factors);
    social.other_model.check_belief_shape(&belief.factors)?;
    Ok(belief)
}

/// The partner model with the agent's current context offsets applied
/// (the broadcast is public, so the simulated partner sees it too).
fn other_effective_model(agent: &Agent) -> Result<GenerativeModel, AgentError> {
    let social = agent.social.as_ref().ok_or(SocialError::NotCoupled)?;
    match agent.ctx_offsets_for(&social.other_model) {
        Some(offsets) => {
            let m = &social.other_model;
            let mut c = m.log_preferences().to_vec();
            for (ci, oi) in c.iter_mut().zip(&offsets) {
                *ci += oi;
            }
            Ok(m.with_prior_and_preferences(m.priors()[m.own_factor()].clone(), &c)?)
        }
        None => Ok(social.other_model.clone()),
    }
}

/// Runs planning on the assumed partner model, seeded with the agent's
/// current partner-state belief as the partner's presumed self-belief.
/// The simulated partner faces an unpredictable counterpart: its own
/// partner factor (standing for this agent) advances by the uniform
/// action mixture during rollouts — the depth-1 cut of mutual prediction.
pub fn simulate_other(agent: &Agent) -> Result<Vec<PolicyEvaluation>, AgentError> {
    simulate_other_with_own(agent, None)
}

fn simulate_other_with_own(
    agent: &Agent,
    own_substitute: Option<&Categorical>,
) -> Result<Vec<PolicyEvaluation>, AgentError> {
    let model = other_effective_model(agent)?;
    let belief = other_view(agent, own_substitute)?;
    if own_substitute.is_some() {
        // Hypothetically committed state: hold it fixed for the partner.
        return Ok(evaluate_policies(&model, &belief)?);
    }
    let uniform = Categorical::uniform(agent.model().num_controls()).map_err(|e| {
        AgentError::from(crate::model::ModelError::from(e))
    })?;
    let coupling = crate::planning::RolloutCoupling {
        other_model: agent.model(),
        predicted_action: &uniform,
    };
    Ok(evaluate_policies_coupled(&model, &belief, Some(coupling))?)
}

/// The partner's predicted next-action distribution (their policy
/// posterior marginalized to first controls), from the agent's view.
pub fn predict_other_action(agent: &Agent) -> Result<Categorical, AgentError> {
    let social = agent.social.as_ref().ok_or(SocialError::NotCoupled)?;
    let evals = simulate_other(agent)?;
    let precision = social.prediction_precision.unwrap_or(agent.precision);
    let posterior = policy_posterior(&evals, precision)?;
    let policies: Vec<_> = evals.iter().map(|e| e.policy.clone()).collect();
    let dist = select_action(&posterior, &policies, social.other_model.num_controls())?;
    Ok(dist.over_controls)
}

/// Social emotional value: `(1 - w) * (-dg_self) + w * (-dg_other)`.
/// A negative change in achievable expected free energy is an
/// improvement, hence positive valence.
pub fn social_emotional_value(delta_g_self: f64, delta_g_other: f64, w: f64) -> f64 {
    (1.0 - w) * (-delta_g_self) + w * (-delta_g_other)
}

/// Per-candidate breakdown from social action selection.
#[derive(Debug, Clone)]
pub struct SocialChoice {
    pub control: usize,
    pub valence: f64,
    pub delta_g_self: f64,
    pub delta_g_other: f64,
    /// `(control, delta_g_self, delta_g_other, valence)` per candidate.
    pub candidates: Vec<(usize, f64, f64, f64)>,
}

/// Picks the entry whose valence is closest to neutral, lowest control
/// index on ties.
fn pick_neutral(valences: &[(usize, f64)]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &(c, v) in valences {
        let better = match best {
            None => true,
            Some((_, bv)) => v.abs() < bv.abs(),
        };
        if better {
            best = Some((c, v));
        }
    }
    best
}

/// Social action selection: for each candidate control, measure the
/// change in one's own achievable (soft-min) G from committing it and the
/// change in the partner's achievable G from facing it, blend by `w`, and
/// choose the control with the most neutral value.
pub fn select_action_social(agent: &mut Agent, candidates: &[usize]) -> Result<SocialChoice, AgentError> {
    if candidates.is_empty() {
        return Err(SocialError::NoCandidates.into());
    }
    let w = agent.social.as_ref().ok_or(SocialError::NotCoupled)?.w;
    let precision = agent.precision;

    let model = agent.effective_model()?.into_owned();
    let evals = evaluate_policies_coupled(&model, &agent.belief, agent.rollout_coupling())?;
    let efes: Vec<f64> = evals.iter().map(|e| e.efe).collect();
    let g0_self = soft_min_efe(&efes, precision).ok_or(SocialError::NoCandidates)?;

    // Partner baseline: facing my next state under an unpredictable
    // (uniform) action mixture.
    let my_own = agent.belief.factors[model.own_factor()].clone();
    let n_controls = model.num_controls();
    let mut mixed = vec![0.0; my_own.len()];
    for c in 0..n_controls {
        let moved = model.propagate(&my_own, c)?;
        for (m, v) in mixed.iter_mut().zip(moved.probs()) {
            *m += v / n_controls as f64;
        }
    }
    let mixed = Categorical::normalize(&mixed)?;
    let evals_other = simulate_other_with_own(agent, Some(&mixed))?;
    let other_efes: Vec<f64> = evals_other.iter().map(|e| e.efe).collect();
    let g0_other = soft_min_efe(&other_efes, precision).ok_or(SocialError::NoCandidates)?;

    let mut rows = Vec::with_capacity(candidates.len());
    for &c in candidates {
        let g_self = soft_min_efe_committed(&evals, c, precision)
            .ok_or(SocialError::UnreachableControl(c))?;
        let own_next = model.propagate(&my_own, c)?;
        let evals_other = simulate_other_with_own(agent, Some(&own_next))?;
        let other_efes: Vec<f64> = evals_other.iter().map(|e| e.efe).collect();
        let g_other = soft_min_efe(&other_efes, precision).ok_or(SocialError::NoCandidates)?;
        let dgs = g_self - g0_self;
        let dgo = g_other - g0_other;
        rows.push((c, dgs, dgo, social_emotional_value(dgs, dgo, w)));
    }

    let (control, valence) =
        pick_neutral(&rows.iter().map(|&(c, _, _, v)| (c, v)).collect::<Vec<_>>())
            .ok_or(SocialError::NoCandidates)?;
    let &(_, dgs, dgo, _) = rows.iter().find(|r| r.0 == control).expect("chosen row");

    let social = agent.social.as_mut().expect("checked above");
    social.last_efe_self = g0_self + dgs;
    social.last_efe_other = g0_other + dgo;
    social.last_valence = Some(valence);

    Ok(SocialChoice {
        control,
        valence,
        delta_g_self: dgs,
        delta_g_other: dgo,
        candidates: rows,
    })
}

/// The third-person context: a self-contained agent whose own-state
/// posterior is broadcast to the parties, plus per-context preference
/// offsets the broadcast pushes into their planning.
#[derive(Debug, Clone)]
pub struct SharedContext {
    pub they: Agent,
    /// `c_offsets[k][o]`: additive log-preference offset on party
    /// observation `o` under context state `k`. Empty = inert context.
    pub c_offsets: Vec<Vec<f64>>,
}

impl SharedContext {
    pub fn new(they: Agent, c_offsets: Vec<Vec<f64>>) -> Result<Self, SocialError> {
        let n_factors = they.model().factors().len();
        if n_factors != 1 {
            return Err(SocialError::ContextNotSelfContained(n_factors));
        }
        Ok(Self { they, c_offsets })
    }

    /// The current broadcast: the context agent's own-state posterior.
    pub fn broadcast(&self) -> &Categorical {
        &self.they.belief.factors[self.they.model().own_factor()]
    }

    /// Expected preference offsets under the broadcast.
    pub fn expected_offsets(&self) -> Option<Vec<f64>> {
        if self.c_offsets.is_empty() {
            return None;
        }
        let b = self.broadcast();
        let n_obs = self.c_offsets[0].len();
        let mut out = vec![0.0; n_obs];
        for (k, offsets) in self.c_offsets.iter().enumerate() {
            let w = b.get(k);
            for (o, v) in out.iter_mut().zip(offsets) {
                *o += w * v;
            }
        }
        Some(out)
    }
}

/// One agent's share of a synchronized round.
#[derive(Debug, Clone)]
pub struct RoundStep {
    pub plan: PlanOutcome,
    pub observation: usize,
    pub observe: ObserveOutcome,
}

/// A synchronized second-person round: all parties plan (socially when
/// `w > 0`), all act simultaneously, the environment emits every party's
/// observation, and all infer. Coupling flows only through observations.
pub fn step_second_person(
    agents: &mut [Agent],
    env: &mut dyn Environment,
    rng: &mut dyn RngCore,
) -> Result<Vec<RoundStep>, AgentError> {
    let mut plans = Vec::with_capacity(agents.len());
    for agent in agents.iter_mut() {
        plans.push(agent.plan(rng)?);
    }
    let controls: Vec<usize> = plans.iter().map(|p| p.control).collect();
    let observations = env.step(&controls).map_err(SocialError::from)?;
    let mut steps = Vec::with_capacity(agents.len());
    for ((agent, plan), &observation) in agents.iter_mut().zip(plans).zip(&observations) {
        let observe = agent.observe(observation)?;
        steps.push(RoundStep {
            plan,
            observation,
            observe,
        });
    }
    Ok(steps)
}

/// A third-person round: the context agent steps first on its own
/// exogenous channel, its posterior is broadcast into the parties'
/// shared factors and preference offsets, then an ordinary second-person
/// round runs. The parties cannot influence the context.
pub fn step_third_person(
    agents: &mut [Agent],
    ctx: &mut SharedContext,
    env: &mut dyn Environment,
    rng: &mut dyn RngCore,
) -> Result<(RoundStep, Vec<RoundStep>), AgentError> {
    let they_plan = ctx.they.plan(rng)?;
    let they_obs = env.context_step().ok_or(SocialError::NoContextChannel)?;
    let they_observe = ctx.they.observe(they_obs)?;

    let broadcast = ctx.broadcast().clone();
    let offsets = ctx.expected_offsets();
    for agent in agents.iter_mut() {
        agent.sync_shared_factor(&broadcast);
        agent.set_ctx_offsets(offsets.clone());
    }

    let steps = step_second_person(agents, env, rng)?;
    Ok((
        RoundStep {
            plan: they_plan,
            observation: they_obs,
            observe: they_observe,
        },
        steps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSpec, StateFactor};

    #[test]
    fn valence_examples() {
        assert_eq!(social_emotional_value(1.3, 9.9, 0.0), -1.3);
        assert_eq!(social_emotional_value(-0.7, 0.7, 0.5), 0.0);
        // w = 0.25, dgs = -2, dgo = 4 -> 0.75*2 + 0.25*(-4) = 0.5.
        assert!((social_emotional_value(-2.0, 4.0, 0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pick_neutral_prefers_zero_then_lowest_index() {
        assert_eq!(pick_neutral(&[(0, 0.0), (1, 0.4)]), Some((0, 0.0)));
        assert_eq!(pick_neutral(&[(0, 0.4), (1, 0.0)]), Some((1, 0.0)));
        // Tie on |v|: first (lowest index) wins.
        assert_eq!(pick_neutral(&[(0, 0.3), (1, -0.3)]), Some((0, 0.3)));
    }

    fn symmetric_coupled() -> Agent {
        // Two own states, two partner states, obs = partner's state via an
        // identity channel. Config order (own, other), other fastest.
        let spec = ModelSpec {
            factors: vec![
                StateFactor {
                    role: FactorRole::Own,
                    cardinality: 2,
                },
                StateFactor {
                    role: FactorRole::Other,
                    cardinality: 2,
                },
            ],
            num_observations: 2,
            a_obs: vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]],
            b_trans: vec![
                vec![vec![1.0, 1.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            ],
            c_pref: vec![0.3, -0.3],
            d_priors: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            policies: vec![vec![0], vec![1]],
        };
        let model = GenerativeModel::from_spec(&spec).unwrap();
        let social = Social::new(model.clone(), 0.0);
        Agent::flat(0, model).with_social(social)
    }

    #[test]
    fn simulate_other_symmetric_matches_own() {
        let agent = symmetric_coupled();
        let uniform = Categorical::uniform(2).unwrap();
        let coupling = crate::planning::RolloutCoupling {
            other_model: agent.model(),
            predicted_action: &uniform,
        };
        let own = evaluate_policies_coupled(agent.model(), &agent.belief, Some(coupling)).unwrap();
        let other = simulate_other(&agent).unwrap();
        assert_eq!(own.len(), other.len());
        for (a, b) in own.iter().zip(&other) {
            assert!((a.efe - b.efe).abs() < 1e-12);
            assert!((a.epistemic - b.epistemic).abs() < 1e-12);
        }
    }

    #[test]
    fn simulate_other_matches_direct_planning_invocation() {
        let mut agent = symmetric_coupled();
        agent.belief.factors[0] = Categorical::new(vec![0.8, 0.2]).unwrap();
        agent.belief.factors[1] = Categorical::new(vec![0.1, 0.9]).unwrap();
        let other = simulate_other(&agent).unwrap();
        // Direct invocation on the partner model with the swapped belief
        // and the same unpredictable-counterpart rollout dynamics.
        let swapped = Belief::new(vec![
            agent.belief.factors[1].clone(),
            agent.belief.factors[0].clone(),
        ]);
        let uniform = Categorical::uniform(2).unwrap();
        let coupling = crate::planning::RolloutCoupling {
            other_model: agent.model(),
            predicted_action: &uniform,
        };
        let direct = evaluate_policies_coupled(
            &agent.social.as_ref().unwrap().other_model,
            &swapped,
            Some(coupling),
        )
        .unwrap();
        for (a, b) in other.iter().zip(&direct) {
            assert!((a.efe - b.efe).abs() < 1e-12);
        }
    }

    #[test]
    fn w_zero_social_choice_coincides_with_plain_selection() {
        let mut agent = symmetric_coupled();
        agent.belief.factors[1] = Categorical::new(vec![0.7, 0.3]).unwrap();
        let evals = evaluate_policies(agent.model(), &agent.belief).unwrap();
        let plain = crate::planning::select_action_with_precision(&evals, agent.precision, 2)
            .unwrap()
            .chosen;
        let social = select_action_social(&mut agent, &[0, 1]).unwrap();
        assert_eq!(social.control, plain);
    }

    #[test]
    fn delta_belief_partner_has_zero_epistemic() {
        // The partner's channel reveals its own state (identity over the
        // own axis, constant over its partner): a certain agent has
        // nothing left to learn, whatever its counterpart does.
        let spec = ModelSpec {
            factors: vec![
                StateFactor {
                    role: FactorRole::Own,
                    cardinality: 2,
                },
                StateFactor {
                    role: FactorRole::Other,
                    cardinality: 2,
                },
            ],
            num_observations: 2,
            a_obs: vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]],
            b_trans: vec![
                vec![vec![1.0, 1.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            ],
            c_pref: vec![0.0, 0.0],
            d_priors: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            policies: vec![vec![0], vec![1]],
        };
        let model = GenerativeModel::from_spec(&spec).unwrap();
        let social = Social::new(model.clone(), 0.0);
        let mut agent = Agent::flat(0, model).with_social(social);
        // The simulated partner's own state is what this agent believes
        // about the partner; pin it.
        agent.belief.factors[1] = Categorical::delta(2, 1).unwrap();
        let evals = simulate_other(&agent).unwrap();
        for e in &evals {
            // Each policy pins the sim's own chain; observations carry no
            // residual information.
            assert!(e.epistemic.abs() < 1e-10, "epistemic {}", e.epistemic);
        }
    }
}
