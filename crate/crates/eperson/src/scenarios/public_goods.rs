//! Iterated two-player public goods game with punishment.
//!
//! Each round both players hold an endowment of 1.0 and pick one of four
//! controls: keep or contribute, crossed with punishing the opponent or
//! abstaining. Contributions are multiplied by 1.6 and split evenly;
//! punishing costs the punisher 0.2 and fines the punished 0.8 (fines are
//! destroyed, not transferred). Mutual contribution maximizes the joint
//! payoff while keeping dominates individually.
//!
//! Observations report both players' last controls plus the player's own
//! payoff quantized into five bins. The norm variant adds an uninvolved
//! context agent tracking an exogenous lenient/strict regime; its
//! posterior is broadcast to the players and shifts their preferences
//! toward contribution when the strict regime is believed.

use crate::agent::Agent;
use crate::environment::{EnvError, Environment, EpisodeOutcome};
use crate::model::{FactorRole, GenerativeModel, ModelSpec, StateFactor};
use crate::social::{SharedContext, Social};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NUM_CONTROLS: usize = 4;
pub const NUM_BINS: usize = 5;
pub const NUM_OBSERVATIONS: usize = NUM_CONTROLS * NUM_CONTROLS * NUM_BINS; // 80

pub const ENDOWMENT: f64 = 1.0;
pub const POT_MULTIPLIER: f64 = 1.6;
pub const PUNISH_COST: f64 = 0.2;
pub const FINE: f64 = 0.8;

/// Preference weight per payoff bin.
pub const BIN_UTILITY: f64 = 1.0;
/// Strict-norm preference offset on contribution observations.
pub const NORM_OFFSET: f64 = 2.0;
/// Per-round probability the exogenous norm regime flips.
pub const NORM_FLIP_PROB: f64 = 0.05;
/// Context agent's observation accuracy about the true regime.
pub const NORM_OBS_ACCURACY: f64 = 0.9;

pub fn contributes(control: usize) -> bool {
    control >= 2
}

pub fn punishes(control: usize) -> bool {
    control % 2 == 1
}

/// One player's round payoff given both controls.
pub fn payoff(own: usize, other: usize) -> f64 {
    let contributions = contributes(own) as u32 + contributes(other) as u32;
    let share = POT_MULTIPLIER * contributions as f64 / 2.0;
    let mut p = ENDOWMENT - if contributes(own) { 1.0 } else { 0.0 } + share;
    if punishes(own) {
        p -= PUNISH_COST;
    }
    if punishes(other) {
        p -= FINE;
    }
    p
}

/// Quantizes a payoff into one of five bins.
pub fn payoff_bin(p: f64) -> usize {
    if p < 0.25 {
        0
    } else if p < 0.9 {
        1
    } else if p < 1.3 {
        2
    } else if p < 1.7 {
        3
    } else {
        4
    }
}

pub fn observation(own: usize, other: usize) -> usize {
    own * (NUM_CONTROLS * NUM_BINS) + other * NUM_BINS + payoff_bin(payoff(own, other))
}

pub fn obs_own_control(obs: usize) -> usize {
    obs / (NUM_CONTROLS * NUM_BINS)
}

pub fn obs_bin(obs: usize) -> usize {
    obs % NUM_BINS
}

#[derive(Debug, Clone, Default)]
pub struct PublicGoodsEnv;

impl Environment for PublicGoodsEnv {
    fn num_agents(&self) -> usize {
        2
    }

    fn observation_alphabet(&self, _agent: usize) -> usize {
        NUM_OBSERVATIONS
    }

    fn control_alphabet(&self, _agent: usize) -> usize {
        NUM_CONTROLS
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
            if c >= NUM_CONTROLS {
                return Err(EnvError::BadControl { agent, control: c });
            }
        }
        Ok(vec![
            observation(controls[0], controls[1]),
            observation(controls[1], controls[0]),
        ])
    }

    fn outcome(&self) -> EpisodeOutcome {
        EpisodeOutcome::Running
    }
}

/// The norm variant: the same payoff game plus an exogenous two-state
/// regime process observed (noisily) only by the context agent. The
/// regime never reads the players' controls.
#[derive(Debug, Clone)]
pub struct PublicGoodsNormEnv {
    game: PublicGoodsEnv,
    true_regime: usize,
    rng: ChaCha8Rng,
}

impl PublicGoodsNormEnv {
    pub fn new() -> Self {
        Self {
            game: PublicGoodsEnv,
            true_regime: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn true_regime(&self) -> usize {
        self.true_regime
    }
}

impl Default for PublicGoodsNormEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for PublicGoodsNormEnv {
    fn num_agents(&self) -> usize {
        2
    }

    fn observation_alphabet(&self, _agent: usize) -> usize {
        NUM_OBSERVATIONS
    }

    fn control_alphabet(&self, _agent: usize) -> usize {
        NUM_CONTROLS
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.true_regime = self.rng.gen_range(0..2);
    }

    fn context_step(&mut self) -> Option<usize> {
        if self.rng.gen::<f64>() < NORM_FLIP_PROB {
            self.true_regime = 1 - self.true_regime;
        }
        let correct = self.rng.gen::<f64>() < NORM_OBS_ACCURACY;
        Some(if correct {
            self.true_regime
        } else {
            1 - self.true_regime
        })
    }

    fn step(&mut self, controls: &[usize]) -> Result<Vec<usize>, EnvError> {
        self.game.step(controls)
    }

    fn outcome(&self) -> EpisodeOutcome {
        EpisodeOutcome::Running
    }
}

/// Player model: own state and partner state are last controls, the
/// likelihood reproduces the deterministic observation encoding, and
/// preferences scale with the payoff bin. With `with_norm_factor` the
/// state gains a shared regime factor the likelihood ignores (the regime
/// reaches behavior through preference offsets, not through the channel).
pub fn player_model(with_norm_factor: bool) -> GenerativeModel {
    let mut factors = vec![
        StateFactor {
            role: FactorRole::Own,
            cardinality: NUM_CONTROLS,
        },
        StateFactor {
            role: FactorRole::Other,
            cardinality: NUM_CONTROLS,
        },
    ];
    if with_norm_factor {
        factors.push(StateFactor {
            role: FactorRole::Shared,
            cardinality: 2,
        });
    }
    let shared_card = if with_norm_factor { 2 } else { 1 };
    let num_configs = NUM_CONTROLS * NUM_CONTROLS * shared_card;

    let mut a_obs = vec![vec![0.0; num_configs]; NUM_OBSERVATIONS];
    for own in 0..NUM_CONTROLS {
        for other in 0..NUM_CONTROLS {
            for shared in 0..shared_card {
                let config = (own * NUM_CONTROLS + other) * shared_card + shared;
                a_obs[observation(own, other)][config] = 1.0;
            }
        }
    }

    let mut b_trans = Vec::with_capacity(NUM_CONTROLS);
    for control in 0..NUM_CONTROLS {
        let mut b = vec![vec![0.0; NUM_CONTROLS]; NUM_CONTROLS];
        for from in 0..NUM_CONTROLS {
            b[control][from] = 1.0;
        }
        b_trans.push(b);
    }

    let c_pref: Vec<f64> = (0..NUM_OBSERVATIONS)
        .map(|o| BIN_UTILITY * obs_bin(o) as f64)
        .collect();

    let mut d_priors = vec![
        vec![1.0 / NUM_CONTROLS as f64; NUM_CONTROLS],
        vec![1.0 / NUM_CONTROLS as f64; NUM_CONTROLS],
    ];
    if with_norm_factor {
        d_priors.push(vec![0.5, 0.5]);
    }

    GenerativeModel::from_spec(&ModelSpec {
        factors,
        num_observations: NUM_OBSERVATIONS,
        a_obs,
        b_trans,
        c_pref,
        d_priors,
        policies: (0..NUM_CONTROLS).map(|c| vec![c]).collect(),
    })
    .expect("static construction")
}

pub fn player(id: usize, w: f64, with_norm_factor: bool) -> Agent {
    let model = player_model(with_norm_factor);
    let social = Social::new(model.clone(), w);
    Agent::flat(id, model).with_social(social)
}

/// The context agent and its preference offsets: under the strict regime
/// the players' contribution observations gain [`NORM_OFFSET`].
pub fn norm_context() -> SharedContext {
    let they_model = GenerativeModel::from_spec(&ModelSpec {
        factors: vec![StateFactor {
            role: FactorRole::Own,
            cardinality: 2,
        }],
        num_observations: 2,
        a_obs: vec![
            vec![NORM_OBS_ACCURACY, 1.0 - NORM_OBS_ACCURACY],
            vec![1.0 - NORM_OBS_ACCURACY, NORM_OBS_ACCURACY],
        ],
        b_trans: vec![vec![
            vec![1.0 - NORM_FLIP_PROB, NORM_FLIP_PROB],
            vec![NORM_FLIP_PROB, 1.0 - NORM_FLIP_PROB],
        ]],
        c_pref: vec![0.0, 0.0],
        d_priors: vec![vec![0.5, 0.5]],
        policies: vec![vec![0]],
    })
    .expect("static construction");
    let they = Agent::flat(2, they_model);

    let lenient = vec![0.0; NUM_OBSERVATIONS];
    let strict: Vec<f64> = (0..NUM_OBSERVATIONS)
        .map(|o| {
            if contributes(obs_own_control(o)) {
                NORM_OFFSET
            } else {
                0.0
            }
        })
        .collect();
    SharedContext::new(they, vec![lenient, strict]).expect("static construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::step_second_person;
    use rand::SeedableRng;

    #[test]
    fn payoff_accounting_balances_every_round() {
        for own in 0..NUM_CONTROLS {
            for other in 0..NUM_CONTROLS {
                let total = payoff(own, other) + payoff(other, own);
                let contributions = contributes(own) as u32 + contributes(other) as u32;
                let frictions = (PUNISH_COST + FINE)
                    * (punishes(own) as u32 + punishes(other) as u32) as f64;
                let expected =
                    2.0 * ENDOWMENT + (POT_MULTIPLIER - 1.0) * contributions as f64 - frictions;
                assert!(
                    (total - expected).abs() < 1e-12,
                    "({own},{other}): {total} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn mutual_contribution_beats_mutual_keeping_jointly_but_not_individually() {
        assert!(payoff(2, 2) + payoff(2, 2) > payoff(0, 0) + payoff(0, 0));
        // Keeping dominates regardless of the other's choice.
        assert!(payoff(0, 0) > payoff(2, 0));
        assert!(payoff(0, 2) > payoff(2, 2));
    }

    #[test]
    fn bins_distinguish_the_key_outcomes() {
        let b = |own, other| payoff_bin(payoff(own, other));
        assert!(b(0, 0) > b(2, 0), "keep vs contribute facing a keeper");
        assert!(b(0, 2) > b(2, 2), "keep vs contribute facing a contributor");
        assert!(b(2, 2) > b(0, 0), "mutual contribution beats mutual keeping");
    }

    #[test]
    fn selfish_players_keep() {
        let mut env = PublicGoodsEnv;
        env.reset(0);
        let mut agents = vec![player(0, 0.0, false), player(1, 0.0, false)];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let steps = step_second_person(&mut agents, &mut env, &mut rng).unwrap();
            for s in &steps {
                assert!(!contributes(s.plan.control), "selfish agent contributed");
            }
        }
    }

    #[test]
    fn strongly_social_players_contribute() {
        let mut env = PublicGoodsEnv;
        env.reset(0);
        let mut agents = vec![player(0, 0.5, false), player(1, 0.5, false)];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut contributions = 0usize;
        let mut rounds = 0usize;
        for _ in 0..5 {
            let steps = step_second_person(&mut agents, &mut env, &mut rng).unwrap();
            for s in &steps {
                rounds += 1;
                contributions += contributes(s.plan.control) as usize;
                assert!(s.plan.valence.is_some());
            }
        }
        assert!(
            contributions * 2 > rounds,
            "w=0.5 contributed {contributions}/{rounds}"
        );
    }

    #[test]
    fn norm_process_is_control_independent() {
        let run = |controls: &[usize; 2]| {
            let mut env = PublicGoodsNormEnv::new();
            env.reset(42);
            let mut stream = Vec::new();
            for _ in 0..30 {
                stream.push(env.context_step().unwrap());
                env.step(controls).unwrap();
            }
            stream
        };
        assert_eq!(run(&[0, 0]), run(&[3, 2]));
    }
}
