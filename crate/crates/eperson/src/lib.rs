//! Multi-agent active-inference simulation library.
//!
//! Agents carry discrete generative models (likelihood `A`, controlled
//! transitions `B`, log-preferences `C`, priors `D`, a policy set),
//! perceive by variational free energy minimization, and plan by expected
//! free energy minimization. On top of the single-agent loop sit a
//! two-level hierarchy (context states supplying the lower level's prior
//! and preferences), bidirectional two-agent coupling with an opponent
//! model and social-valence action regulation, and a unidirectional
//! broadcast context. Every agent reports a 3x3 uncertainty grid
//! (observable / shallow hidden / deep hidden, crossed with
//! first / second / third person) at every step.
//!
//! The `eperson` binary runs the bundled scenarios and writes
//! line-delimited trace records; see the README for the CLI surface.

pub mod agent;
pub mod environment;
pub mod hierarchy;
pub mod model;
pub mod perception;
pub mod planning;
pub mod prob;
pub mod harness;
pub mod scenarios;
pub mod social;
pub mod uncertainty;

pub use agent::{Agent, ObserveOutcome, PlanOutcome};
pub use environment::{Environment, EpisodeOutcome};
pub use hierarchy::{ContextBinding, Hierarchy};
pub use model::{FactorRole, GenerativeModel, ModelSpec, Policy, StateFactor};
pub use perception::{infer_state, variational_free_energy, Belief, InferenceResult};
pub use planning::{
    evaluate_policies, expected_free_energy, policy_posterior, select_action, ActionDistribution,
    PolicyEvaluation,
};
pub use prob::{joint_entropy, Categorical, ConditionalTable};
pub use social::{
    simulate_other, social_emotional_value, step_second_person, step_third_person, SharedContext,
    Social,
};
