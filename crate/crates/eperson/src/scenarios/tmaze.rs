//! A T-maze foraging world: four locations (center, left arm, right arm,
//! cue), a hidden reward side fixed per episode, and a hierarchical agent
//! whose high-level context states are the two reward sides.
//!
//! Observations pair the location with a stimulus: the rewarded arm shows
//! `reward`, the unrewarded arm shows `none`, and the cue location shows a
//! signal lamp that lights exactly when the reward is on the left —
//! either way the cue observation pins down the context. Arms are
//! absorbing for the episode.

use crate::environment::{EnvError, Environment, EpisodeOutcome};
use crate::hierarchy::{ContextBinding, Hierarchy};
use crate::model::{FactorRole, GenerativeModel, ModelSpec, Policy, StateFactor};
use crate::prob::Categorical;
use crate::agent::Agent;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const POS_CENTER: usize = 0;
pub const POS_LEFT: usize = 1;
pub const POS_RIGHT: usize = 2;
pub const POS_CUE: usize = 3;

pub const STIM_NONE: usize = 0;
pub const STIM_REWARD: usize = 1;
pub const STIM_CUE_SIGNAL: usize = 2;

pub const NUM_POSITIONS: usize = 4;
pub const NUM_STIMULI: usize = 3;
pub const NUM_OBSERVATIONS: usize = NUM_POSITIONS * NUM_STIMULI; // 12
pub const NUM_CONTEXTS: usize = 2; // 0: reward left, 1: reward right
pub const NUM_STATES: usize = NUM_POSITIONS * NUM_CONTEXTS; // 8
pub const NUM_CONTROLS: usize = 4; // move-to targets

pub fn observation(position: usize, stimulus: usize) -> usize {
    position * NUM_STIMULI + stimulus
}

pub fn state_index(position: usize, context: usize) -> usize {
    position * NUM_CONTEXTS + context
}

fn stimulus(position: usize, context: usize) -> usize {
    match position {
        POS_LEFT if context == 0 => STIM_REWARD,
        POS_RIGHT if context == 1 => STIM_REWARD,
        POS_CUE if context == 0 => STIM_CUE_SIGNAL,
        _ => STIM_NONE,
    }
}

fn next_position(position: usize, control: usize) -> usize {
    if position == POS_LEFT || position == POS_RIGHT {
        position // arms absorb
    } else {
        control
    }
}

#[derive(Debug, Clone)]
pub struct TMazeEnv {
    context: usize,
    position: usize,
}

impl TMazeEnv {
    pub fn new() -> Self {
        Self {
            context: 0,
            position: POS_CENTER,
        }
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn position(&self) -> usize {
        self.position
    }
}

impl Default for TMazeEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for TMazeEnv {
    fn num_agents(&self) -> usize {
        1
    }

    fn observation_alphabet(&self, _agent: usize) -> usize {
        NUM_OBSERVATIONS
    }

    fn control_alphabet(&self, _agent: usize) -> usize {
        NUM_CONTROLS
    }

    fn reset(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.context = rng.gen_range(0..NUM_CONTEXTS);
        self.position = POS_CENTER;
    }

    fn step(&mut self, controls: &[usize]) -> Result<Vec<usize>, EnvError> {
        if controls.len() != 1 {
            return Err(EnvError::ControlCount {
                expected: 1,
                actual: controls.len(),
            });
        }
        if controls[0] >= NUM_CONTROLS {
            return Err(EnvError::BadControl {
                agent: 0,
                control: controls[0],
            });
        }
        self.position = next_position(self.position, controls[0]);
        Ok(vec![observation(
            self.position,
            stimulus(self.position, self.context),
        )])
    }

    fn outcome(&self) -> EpisodeOutcome {
        EpisodeOutcome::Running
    }
}

/// Raw log-preference weights bound to one context: the matching arm's
/// reward is sought, an empty arm is strongly dispreferred.
pub fn context_preferences(context: usize) -> Vec<f64> {
    let mut c = vec![0.0; NUM_OBSERVATIONS];
    let arm = if context == 0 { POS_LEFT } else { POS_RIGHT };
    c[observation(arm, STIM_REWARD)] = 3.0;
    c[observation(POS_LEFT, STIM_NONE)] = -4.0;
    c[observation(POS_RIGHT, STIM_NONE)] = -4.0;
    c
}

/// The lower-level model spec: joint (position, context) states,
/// deterministic move dynamics on positions, deterministic stimulus map.
pub fn low_model_spec(c_pref: Vec<f64>, d_prior: Vec<f64>, horizon: usize) -> ModelSpec {
    let mut a_obs = vec![vec![0.0; NUM_STATES]; NUM_OBSERVATIONS];
    for pos in 0..NUM_POSITIONS {
        for ctx in 0..NUM_CONTEXTS {
            a_obs[observation(pos, stimulus(pos, ctx))][state_index(pos, ctx)] = 1.0;
        }
    }
    let mut b_trans = Vec::with_capacity(NUM_CONTROLS);
    for control in 0..NUM_CONTROLS {
        let mut b = vec![vec![0.0; NUM_STATES]; NUM_STATES];
        for pos in 0..NUM_POSITIONS {
            for ctx in 0..NUM_CONTEXTS {
                let to = state_index(next_position(pos, control), ctx);
                b[to][state_index(pos, ctx)] = 1.0;
            }
        }
        b_trans.push(b);
    }
    let policies = Policy::enumerate(NUM_CONTROLS, horizon)
        .expect("within cap")
        .into_iter()
        .map(|p| p.controls)
        .collect();
    ModelSpec {
        factors: vec![StateFactor {
            role: FactorRole::Own,
            cardinality: NUM_STATES,
        }],
        num_observations: NUM_OBSERVATIONS,
        a_obs,
        b_trans,
        c_pref,
        d_priors: vec![d_prior],
        policies,
    }
}

/// High-level model over contexts. Summaries at the center carry no
/// context information (they are tie-break artifacts); summaries at the
/// arms and the cue are strongly context-aligned.
pub fn high_model(num_contexts: usize) -> GenerativeModel {
    let mut a = vec![vec![0.0; num_contexts]; NUM_STATES];
    for k in 0..num_contexts {
        let mut col = vec![0.0; NUM_STATES];
        for pos in 0..NUM_POSITIONS {
            for ctx in 0..NUM_CONTEXTS {
                col[state_index(pos, ctx)] = if pos == POS_CENTER {
                    0.5
                } else if ctx == k {
                    0.99
                } else {
                    0.01
                };
            }
        }
        let z: f64 = col.iter().sum();
        for (s, v) in col.iter().enumerate() {
            a[s][k] = v / z;
        }
    }
    let eye: Vec<Vec<f64>> = (0..num_contexts)
        .map(|i| (0..num_contexts).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    GenerativeModel::from_spec(&ModelSpec {
        factors: vec![StateFactor {
            role: FactorRole::Own,
            cardinality: num_contexts,
        }],
        num_observations: NUM_STATES,
        a_obs: a,
        b_trans: vec![eye],
        c_pref: vec![0.0; NUM_STATES],
        d_priors: vec![vec![1.0 / num_contexts as f64; num_contexts]],
        policies: vec![vec![0]],
    })
    .expect("static construction")
}

/// One context binding: prior pinned to the center with that reward side,
/// preferences seeking that side's reward.
pub fn binding(context: usize) -> ContextBinding {
    let mut d = vec![0.0; NUM_STATES];
    d[state_index(POS_CENTER, context)] = 1.0;
    ContextBinding {
        d_prior: Categorical::new(d).unwrap(),
        c_pref: context_preferences(context),
    }
}

/// The standard two-context hierarchical forager.
pub fn hierarchical_agent(id: usize, horizon: usize) -> Agent {
    // The low model's own C is inert; planning always sees the descended
    // mixture of the context bindings.
    let low = GenerativeModel::from_spec(&low_model_spec(
        vec![0.0; NUM_OBSERVATIONS],
        uniform_context_center_prior(),
        horizon,
    ))
    .expect("static construction");
    let hierarchy = Hierarchy::new(
        high_model(NUM_CONTEXTS),
        vec![binding(0), binding(1)],
        NUM_STATES,
        NUM_OBSERVATIONS,
    )
    .expect("static construction");
    Agent::flat(id, low)
        .with_hierarchy(hierarchy)
        .expect("static construction")
}

/// Center-position prior, uniform over contexts.
pub fn uniform_context_center_prior() -> Vec<f64> {
    let mut d = vec![0.0; NUM_STATES];
    d[state_index(POS_CENTER, 0)] = 0.5;
    d[state_index(POS_CENTER, 1)] = 0.5;
    d
}
