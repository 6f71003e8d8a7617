//! Minimal two-agent signaling world: each agent's control is delivered,
//! unchanged, as the other agent's observation. Exercises partner-state
//! inference through an identity channel.

use crate::agent::Agent;
use crate::environment::{EnvError, Environment, EpisodeOutcome};
use crate::model::{FactorRole, GenerativeModel, ModelSpec, StateFactor};
use crate::social::Social;

pub const NUM_SIGNALS: usize = 2;

#[derive(Debug, Clone, Default)]
pub struct SignalingEnv;

impl Environment for SignalingEnv {
    fn num_agents(&self) -> usize {
        2
    }

    fn observation_alphabet(&self, _agent: usize) -> usize {
        NUM_SIGNALS
    }

    fn control_alphabet(&self, _agent: usize) -> usize {
        NUM_SIGNALS
    }

    fn reset(&mut self, _seed: u64) {}

    fn step(&mut self, controls: &[usize]) -> Result<Vec<usize>, EnvError> {
        if controls.len() != 2 {
            return Err(EnvError::ControlCount {
                expected: 2,
                actual: controls.len(),
            });
        }
        for (agent, &c) in controls.iter().enumerate() {
            if c >= NUM_SIGNALS {
                return Err(EnvError::BadControl { agent, control: c });
            }
        }
        Ok(vec![controls[1], controls[0]])
    }

    fn outcome(&self) -> EpisodeOutcome {
        EpisodeOutcome::Running
    }
}

/// Own state = my last signal, partner state = their last signal; the
/// observation is the partner's state through an identity channel.
pub fn agent_model() -> GenerativeModel {
    // Config order (own, other), other fastest.
    let a_obs = vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]];
    let b_trans = vec![
        vec![vec![1.0, 1.0], vec![0.0, 0.0]], // signal 0: own state -> 0
        vec![vec![0.0, 0.0], vec![1.0, 1.0]], // signal 1: own state -> 1
    ];
    GenerativeModel::from_spec(&ModelSpec {
        factors: vec![
            StateFactor {
                role: FactorRole::Own,
                cardinality: NUM_SIGNALS,
            },
            StateFactor {
                role: FactorRole::Other,
                cardinality: NUM_SIGNALS,
            },
        ],
        num_observations: NUM_SIGNALS,
        a_obs,
        b_trans,
        c_pref: vec![0.0; NUM_SIGNALS],
        d_priors: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        policies: vec![vec![0], vec![1]],
    })
    .expect("static construction")
}

pub fn agent(id: usize, w: f64) -> Agent {
    let model = agent_model();
    let social = Social::new(model.clone(), w);
    Agent::flat(id, model).with_social(social)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::step_second_person;
    use crate::uncertainty;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_channel_swaps_controls() {
        let mut env = SignalingEnv;
        assert_eq!(env.step(&[0, 1]).unwrap(), vec![1, 0]);
    }

    #[test]
    fn partner_entropy_strictly_decreases_after_round_one() {
        let mut env = SignalingEnv;
        env.reset(0);
        let mut agents = vec![agent(0, 0.0), agent(1, 0.0)];
        let before: Vec<f64> = agents
            .iter()
            .map(|a| {
                uncertainty::matrix(a, None)
                    .unwrap()
                    .cell(uncertainty::Level::HiddenLow, uncertainty::Person::Second)
                    .unwrap()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        step_second_person(&mut agents, &mut env, &mut rng).unwrap();
        for (agent, b) in agents.iter().zip(&before) {
            let after = uncertainty::matrix(agent, None)
                .unwrap()
                .cell(uncertainty::Level::HiddenLow, uncertainty::Person::Second)
                .unwrap();
            assert!(after < b - 1e-9, "no strict decrease: {b} -> {after}");
        }
    }

    #[test]
    fn symmetric_agents_mirror_exactly() {
        let mut env = SignalingEnv;
        env.reset(0);
        let mut agents = vec![agent(0, 0.0), agent(1, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..3 {
            let steps = step_second_person(&mut agents, &mut env, &mut rng).unwrap();
            assert_eq!(steps[0].plan.control, steps[1].plan.control);
            assert_eq!(steps[0].observation, steps[1].observation);
        }
        assert_eq!(agents[0].belief, agents[1].belief);
    }
}
