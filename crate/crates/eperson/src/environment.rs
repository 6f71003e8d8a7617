//! The simulated-world contract: deterministic given `(seed, actions)`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("expected {expected} controls, got {actual}")]
    ControlCount { expected: usize, actual: usize },
    #[error("control {control} out of range for agent {agent}")]
    BadControl { agent: usize, control: usize },
    #[error("environment already terminal")]
    AlreadyTerminal,
}

/// Why an episode stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpisodeOutcome {
    Running,
    /// Terminal with a short machine-readable reason ("collision",
    /// "arrived", ...).
    Terminal(String),
    /// The step budget ran out; recorded as an outcome, not an error.
    StepLimit,
}

impl EpisodeOutcome {
    pub fn label(&self) -> &str {
        match self {
            EpisodeOutcome::Running => "running",
            EpisodeOutcome::Terminal(s) => s,
            EpisodeOutcome::StepLimit => "step-limit",
        }
    }
}

/// A deterministic, seeded world shared by one or more agents.
///
/// Given the same seed and the same joint action sequence, the
/// observation sequence is reproducible exactly.
pub trait Environment {
    fn num_agents(&self) -> usize;

    /// Size of agent `i`'s observation alphabet.
    fn observation_alphabet(&self, agent: usize) -> usize;

    /// Number of controls agent `i` may submit.
    fn control_alphabet(&self, agent: usize) -> usize;

    /// Reinitializes hidden state from the seed.
    fn reset(&mut self, seed: u64);

    /// Advances the exogenous context process, if this world has one, and
    /// returns the context agent's observation for the round. Runs before
    /// the parties act and never sees their controls.
    fn context_step(&mut self) -> Option<usize> {
        None
    }

    /// Applies all parties' controls simultaneously and returns one
    /// observation index per agent.
    fn step(&mut self, controls: &[usize]) -> Result<Vec<usize>, EnvError>;

    fn outcome(&self) -> EpisodeOutcome;
}
