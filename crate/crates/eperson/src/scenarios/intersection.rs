//! Scramble-intersection world: four agents on a 5x5 grid, each starting
//! mid-edge and heading to the opposite edge, all paths crossing the
//! center cell. Controls are forward/wait; moves are simultaneous; two
//! active agents on one cell is a collision and ends the episode. An
//! agent reaching its far edge exits the grid.
//!
//! Each agent observes its own cell plus the occupancy of the four
//! adjacent cells. Its model tracks one designated partner's progress
//! along that partner's path and predicts the partner's motion, treating
//! a partner on its own cell or directly ahead as blocking; remaining
//! traffic enters the likelihood as independent occupancy noise. Agents
//! differ in how strongly they avoid blocked-ahead observations, which
//! staggers their crossings.

use crate::agent::Agent;
use crate::environment::{EnvError, Environment, EpisodeOutcome};
use crate::model::{FactorRole, GenerativeModel, ModelSpec, Policy, StateFactor};
use crate::social::Social;

pub const GRID: usize = 5;
pub const NUM_AGENTS: usize = 4;
pub const PATH_LEN: usize = 5;
pub const CTRL_FORWARD: usize = 0;
pub const CTRL_WAIT: usize = 1;
pub const NUM_CONTROLS: usize = 2;
pub const NUM_CELLS: usize = GRID * GRID;
pub const NUM_OBSERVATIONS: usize = NUM_CELLS * 16;

/// Occupancy noise attributed to unmodelled agents.
const OCCUPANCY_NOISE: f64 = 0.1;
/// Blocked-ahead aversion per agent; the spread staggers center crossings.
pub const CAUTION: [f64; NUM_AGENTS] = [0.5, 4.0, 8.0, 14.0];
/// Prediction softness per agent: later agents foresee their predecessor
/// lingering longer, stretching their yield window.
pub const PREDICTION_PRECISION: [f64; NUM_AGENTS] = [4.0, 1.0, 0.4, 0.2];
pub const GOAL_UTILITY: f64 = 4.0;
pub const PROGRESS_UTILITY: f64 = 0.4;

/// Grid cell of agent `who` at path index `p`.
pub fn path_cell(who: usize, p: usize) -> (usize, usize) {
    match who {
        0 => (p, 2),         // north edge heading south
        1 => (2, 4 - p),     // east edge heading west
        2 => (4 - p, 2),     // south edge heading north
        _ => (2, p),         // west edge heading east
    }
}

/// Direction of travel as an adjacency-bit index (N, E, S, W).
fn travel_bit(who: usize) -> usize {
    match who {
        0 => 2, // south
        1 => 3, // west
        2 => 0, // north
        _ => 1, // east
    }
}

fn neighbor(cell: (usize, usize), bit: usize) -> Option<(usize, usize)> {
    let (r, c) = (cell.0 as isize, cell.1 as isize);
    let (nr, nc) = match bit {
        0 => (r - 1, c),
        1 => (r, c + 1),
        2 => (r + 1, c),
        _ => (r, c - 1),
    };
    if nr < 0 || nc < 0 || nr >= GRID as isize || nc >= GRID as isize {
        None
    } else {
        Some((nr as usize, nc as usize))
    }
}

pub fn cell_index(cell: (usize, usize)) -> usize {
    cell.0 * GRID + cell.1
}

#[derive(Debug, Clone)]
pub struct IntersectionEnv {
    progress: [usize; NUM_AGENTS],
    collided: bool,
}

impl IntersectionEnv {
    pub fn new() -> Self {
        Self {
            progress: [0; NUM_AGENTS],
            collided: false,
        }
    }

    pub fn progress(&self) -> &[usize; NUM_AGENTS] {
        &self.progress
    }

    fn active(&self, who: usize) -> bool {
        self.progress[who] < PATH_LEN - 1
    }

    fn observation_for(&self, who: usize) -> usize {
        let cell = path_cell(who, self.progress[who]);
        let mut bits = 0usize;
        for bit in 0..4 {
            let Some(n) = neighbor(cell, bit) else { continue };
            let occupied = (0..NUM_AGENTS).any(|j| {
                j != who && self.active(j) && path_cell(j, self.progress[j]) == n
            });
            if occupied {
                bits |= 1 << bit;
            }
        }
        cell_index(cell) * 16 + bits
    }
}

impl Default for IntersectionEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for IntersectionEnv {
    fn num_agents(&self) -> usize {
        NUM_AGENTS
    }

    fn observation_alphabet(&self, _agent: usize) -> usize {
        NUM_OBSERVATIONS
    }

    fn control_alphabet(&self, _agent: usize) -> usize {
        NUM_CONTROLS
    }

    fn reset(&mut self, _seed: u64) {
        self.progress = [0; NUM_AGENTS];
        self.collided = false;
    }

    fn step(&mut self, controls: &[usize]) -> Result<Vec<usize>, EnvError> {
        if controls.len() != NUM_AGENTS {
            return Err(EnvError::ControlCount {
                expected: NUM_AGENTS,
                actual: controls.len(),
            });
        }
        for (agent, &c) in controls.iter().enumerate() {
            if c >= NUM_CONTROLS {
                return Err(EnvError::BadControl { agent, control: c });
            }
        }
        for (who, &c) in controls.iter().enumerate() {
            if c == CTRL_FORWARD && self.progress[who] < PATH_LEN - 1 {
                self.progress[who] += 1;
            }
        }
        // Two active agents sharing a cell is a collision; exited agents
        // have left the grid.
        'outer: for i in 0..NUM_AGENTS {
            for j in i + 1..NUM_AGENTS {
                if self.active(i)
                    && self.active(j)
                    && path_cell(i, self.progress[i]) == path_cell(j, self.progress[j])
                {
                    self.collided = true;
                    break 'outer;
                }
            }
        }
        Ok((0..NUM_AGENTS).map(|who| self.observation_for(who)).collect())
    }

    fn outcome(&self) -> EpisodeOutcome {
        if self.collided {
            EpisodeOutcome::Terminal("collision".into())
        } else if self.progress.iter().all(|&p| p == PATH_LEN - 1) {
            EpisodeOutcome::Terminal("arrived".into())
        } else {
            EpisodeOutcome::Running
        }
    }
}

/// The partner each agent tracks: its predecessor in the caution order.
/// For crossing traffic the blocked-ahead region is exactly the center,
/// so a tracked predecessor produces yielding rather than racing.
pub fn partner_of(who: usize) -> usize {
    (who + NUM_AGENTS - 1) % NUM_AGENTS
}

/// Probability the adjacency bit reads occupied given own and partner
/// path positions. The travel-direction bit also fires for a co-located
/// partner: the agent treats same-cell as blocked-ahead.
fn bit_probability(who: usize, partner: usize, bit: usize, p: usize, q: usize) -> f64 {
    let mine = path_cell(who, p);
    let Some(n) = neighbor(mine, bit) else {
        return 0.0; // off-grid cells are never occupied
    };
    if q < PATH_LEN - 1 {
        let theirs = path_cell(partner, q);
        if theirs == n || (bit == travel_bit(who) && theirs == mine) {
            return 1.0;
        }
    }
    OCCUPANCY_NOISE
}

/// Per-agent utility weights.
#[derive(Debug, Clone, Copy)]
pub struct AgentTuning {
    pub caution: f64,
    pub progress: f64,
    pub goal: f64,
    /// Partner-action prediction softness (softmax precision).
    pub prediction_precision: f64,
}

pub fn default_tuning(who: usize) -> AgentTuning {
    AgentTuning {
        caution: CAUTION[who],
        progress: PROGRESS_UTILITY,
        goal: GOAL_UTILITY,
        prediction_precision: PREDICTION_PRECISION[who],
    }
}

/// Generative model for one intersection agent.
pub fn agent_model(who: usize, horizon: usize) -> GenerativeModel {
    agent_model_tuned(who, horizon, default_tuning(who))
}

pub fn agent_model_tuned(who: usize, horizon: usize, tuning: AgentTuning) -> GenerativeModel {
    let partner = partner_of(who);
    let num_configs = PATH_LEN * PATH_LEN;
    let mut a_obs = vec![vec![0.0; num_configs]; NUM_OBSERVATIONS];
    for p in 0..PATH_LEN {
        let my_cell = cell_index(path_cell(who, p));
        for q in 0..PATH_LEN {
            let config = p * PATH_LEN + q;
            let probs: Vec<f64> = (0..4)
                .map(|bit| bit_probability(who, partner, bit, p, q))
                .collect();
            for bits in 0..16usize {
                let mut prob = 1.0;
                for (bit, pb) in probs.iter().enumerate() {
                    prob *= if bits & (1 << bit) != 0 { *pb } else { 1.0 - *pb };
                }
                a_obs[my_cell * 16 + bits][config] = prob;
            }
        }
    }

    let mut forward = vec![vec![0.0; PATH_LEN]; PATH_LEN];
    let mut wait = vec![vec![0.0; PATH_LEN]; PATH_LEN];
    for p in 0..PATH_LEN {
        let next = (p + 1).min(PATH_LEN - 1);
        forward[next][p] = 1.0;
        wait[p][p] = 1.0;
    }

    let goal_cell = cell_index(path_cell(who, PATH_LEN - 1));
    let path_idx_of_cell = |cell: usize| (0..PATH_LEN).find(|&p| cell_index(path_cell(who, p)) == cell);
    let c_pref: Vec<f64> = (0..NUM_OBSERVATIONS)
        .map(|obs| {
            let cell = obs / 16;
            let bits = obs % 16;
            let mut u = 0.0;
            if cell == goal_cell {
                u += tuning.goal;
            }
            if let Some(p) = path_idx_of_cell(cell) {
                u += tuning.progress * p as f64;
            }
            if bits & (1 << travel_bit(who)) != 0 {
                u -= tuning.caution;
            }
            u
        })
        .collect();

    let mut own_prior = vec![0.0; PATH_LEN];
    own_prior[0] = 1.0;
    let mut partner_prior = vec![0.0; PATH_LEN];
    partner_prior[0] = 1.0;

    let policies = Policy::enumerate(NUM_CONTROLS, horizon)
        .expect("within cap")
        .into_iter()
        .map(|p| p.controls)
        .collect();

    GenerativeModel::from_spec(&ModelSpec {
        factors: vec![
            StateFactor {
                role: FactorRole::Own,
                cardinality: PATH_LEN,
            },
            StateFactor {
                role: FactorRole::Other,
                cardinality: PATH_LEN,
            },
        ],
        num_observations: NUM_OBSERVATIONS,
        a_obs,
        b_trans: vec![forward, wait],
        c_pref,
        d_priors: vec![own_prior, partner_prior],
        policies,
    })
    .expect("static construction")
}

pub fn agent(who: usize, horizon: usize) -> Agent {
    agent_tuned(who, horizon, default_tuning(who), forward_eager_tuning())
}

pub fn agent_tuned(
    who: usize,
    horizon: usize,
    own: AgentTuning,
    partner: AgentTuning,
) -> Agent {
    let model = agent_model_tuned(who, horizon, own);
    let partner_model = agent_model_tuned(partner_of(who), horizon, partner);
    let mut social = Social::new(partner_model, 0.0);
    social.prediction_precision = Some(own.prediction_precision);
    Agent::flat(who, model).with_social(social)
}

/// The assumed partner model: same geometry, but preferences reduced to
/// eager progress. Predictions from it say oncoming traffic presses on,
/// which is what a yielding policy must assume.
pub fn forward_eager_tuning() -> AgentTuning {
    AgentTuning {
        caution: 0.0,
        progress: 1.0,
        goal: 4.0,
        prediction_precision: 4.0,
    }
}
