//! The per-agent uncertainty grid: three information depths (observable,
//! shallow hidden, deep hidden) crossed with three person perspectives
//! (first, second, third), every value a Shannon entropy in nats.
//!
//! Joint cells are computed under the mean-field factorization — the sum
//! of the factor entropies — consistent with how beliefs are represented;
//! the gap to the true joint entropy is the price of mean-field. Cells a
//! topology does not support are explicitly not-applicable, never zero,
//! so "no topology" can't be confused with "no uncertainty". Each agent
//! reports its own grid; a partner's view of the agent shows up as the
//! partner's own row in the trace, not inside this agent's grid.

use crate::agent::{Agent, AgentError};
use crate::social::{other_view, SharedContext};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UncertaintyError {
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// Depth axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Observable = 0,
    HiddenLow = 1,
    HiddenHigh = 2,
}

/// Person axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Person {
    First = 0,
    Second = 1,
    Third = 2,
}

/// The 3x3 grid; `None` marks a cell not applicable to the agent's
/// topology. `bounds` carries `ln(support cardinality)` per present cell.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMatrix {
    cells: [[Option<f64>; 3]; 3],
    bounds: [[Option<f64>; 3]; 3],
}

impl UncertaintyMatrix {
    pub fn cell(&self, level: Level, person: Person) -> Option<f64> {
        self.cells[level as usize][person as usize]
    }

    pub fn bound(&self, level: Level, person: Person) -> Option<f64> {
        self.bounds[level as usize][person as usize]
    }

    pub fn cells(&self) -> &[[Option<f64>; 3]; 3] {
        &self.cells
    }

    /// Every present cell within `[0, ln(cardinality)]` (with slack for
    /// float accumulation).
    pub fn all_within_bounds(&self) -> bool {
        for level in 0..3 {
            for person in 0..3 {
                if let Some(v) = self.cells[level][person] {
                    let bound = self.bounds[level][person].unwrap_or(f64::INFINITY);
                    if !(v >= -1e-12 && v <= bound + 1e-9) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Level 1, first person: entropy of the agent's predictive observation
/// distribution.
pub fn u_observable(agent: &Agent) -> Result<f64, UncertaintyError> {
    let q = agent
        .model()
        .predict_observation(&agent.belief.factors)
        .map_err(AgentError::from)?;
    Ok(q.entropy())
}

/// Level 2, first person: entropy of the own-state posterior.
pub fn u_hidden_low(agent: &Agent) -> f64 {
    agent.belief.factors[agent.model().own_factor()].entropy()
}

/// Level 3, first person: entropy of the high-level posterior; absent for
/// flat agents.
pub fn u_hidden_high(agent: &Agent) -> Option<f64> {
    agent.hierarchy.as_ref().map(|h| h.high_posterior().entropy())
}

/// Second-person column `(level 1, level 2, level 3)`; absent entirely
/// for uncoupled agents, level 3 absent without mirrored high levels.
pub fn u_second_person(
    agent: &Agent,
) -> Result<Option<(f64, f64, Option<f64>)>, UncertaintyError> {
    let Some(social) = &agent.social else {
        return Ok(None);
    };
    let Some(other_idx) = agent.model().factor_with_role(crate::model::FactorRole::Other) else {
        return Ok(None);
    };

    // Joint predictive observations: own channel plus the partner's
    // channel as simulated through the assumed partner model.
    let q_own = agent
        .model()
        .predict_observation(&agent.belief.factors)
        .map_err(AgentError::from)?;
    let partner_belief = other_view(agent, None)?;
    let q_other = social
        .other_model
        .predict_observation(&partner_belief.factors)
        .map_err(AgentError::from)?;
    let level1 = q_own.entropy() + q_other.entropy();

    let level2 = u_hidden_low(agent) + agent.belief.factors[other_idx].entropy();

    let level3 = match (&agent.hierarchy, &social.other_high) {
        (Some(h), Some(oh)) => {
            Some(h.high_posterior().entropy() + oh.posterior().entropy())
        }
        _ => None,
    };

    Ok(Some((level1, level2, level3)))
}

/// Third-person column: the second-person column extended with the
/// broadcast context — its predictive observation at level 1, its state
/// posterior at level 2. The bundled context agent is flat, so it adds no
/// deep term at level 3.
pub fn u_third_person(
    agent: &Agent,
    ctx: &SharedContext,
) -> Result<Option<(f64, f64, Option<f64>)>, UncertaintyError> {
    let Some((l1, l2, l3)) = u_second_person(agent)? else {
        return Ok(None);
    };
    let broadcast = ctx.broadcast();
    let q_they = ctx
        .they
        .model()
        .predict_observation(&[broadcast.clone()])
        .map_err(AgentError::from)?;
    Ok(Some((
        l1 + q_they.entropy(),
        l2 + broadcast.entropy(),
        l3,
    )))
}

/// Assembles every applicable cell for one agent.
pub fn matrix(agent: &Agent, ctx: Option<&SharedContext>) -> Result<UncertaintyMatrix, UncertaintyError> {
    let mut cells: [[Option<f64>; 3]; 3] = Default::default();
    let mut bounds: [[Option<f64>; 3]; 3] = Default::default();

    let model = agent.model();
    let ln_obs = (model.num_observations() as f64).ln();
    let ln_own = (model.factors()[model.own_factor()].cardinality as f64).ln();

    cells[0][0] = Some(u_observable(agent)?);
    bounds[0][0] = Some(ln_obs);
    cells[1][0] = Some(u_hidden_low(agent));
    bounds[1][0] = Some(ln_own);
    if let Some(h) = &agent.hierarchy {
        cells[2][0] = Some(u_hidden_high(agent).expect("hierarchical"));
        bounds[2][0] = Some((h.num_contexts() as f64).ln());
    }

    if let Some((l1, l2, l3)) = u_second_person(agent)? {
        let social = agent.social.as_ref().expect("coupled");
        let other_idx = model
            .factor_with_role(crate::model::FactorRole::Other)
            .expect("coupled");
        let ln_obs_other = (social.other_model.num_observations() as f64).ln();
        let ln_other = (model.factors()[other_idx].cardinality as f64).ln();
        cells[0][1] = Some(l1);
        bounds[0][1] = Some(ln_obs + ln_obs_other);
        cells[1][1] = Some(l2);
        bounds[1][1] = Some(ln_own + ln_other);
        if let Some(l3) = l3 {
            let h = agent.hierarchy.as_ref().expect("deep cell needs hierarchy");
            let oh = social.other_high.as_ref().expect("deep cell needs mirror");
            let ln_ctx = (h.num_contexts() as f64).ln();
            let ln_ctx_other =
                (oh.model.factors()[oh.model.own_factor()].cardinality as f64).ln();
            cells[2][1] = Some(l3);
            bounds[2][1] = Some(ln_ctx + ln_ctx_other);
        }

        if let Some(ctx) = ctx {
            if let Some((t1, t2, t3)) = u_third_person(agent, ctx)? {
                let they = ctx.they.model();
                cells[0][2] = Some(t1);
                bounds[0][2] = Some(bounds[0][1].unwrap() + (they.num_observations() as f64).ln());
                cells[1][2] = Some(t2);
                bounds[1][2] = Some(
                    bounds[1][1].unwrap()
                        + (they.factors()[they.own_factor()].cardinality as f64).ln(),
                );
                if let Some(t3) = t3 {
                    cells[2][2] = Some(t3);
                    bounds[2][2] = bounds[2][1];
                }
            }
        }
    }

    Ok(UncertaintyMatrix { cells, bounds })
}
