//! Per-agent generative model: observation likelihood `A`, controlled
//! transitions `B`, log-preferences `C`, per-factor priors `D`, and the
//! candidate policy set.
//!
//! Hidden state is factorized into labelled factors (the agent's own
//! state, a partner's state, a shared context). `A` is conditioned on the
//! full joint factor configuration; `B` drives the own-state factor only —
//! partner and shared factors evolve through observation coupling, not
//! through the agent's transitions. `C` is stored as the log of a proper
//! distribution over observations so expected log-preference is bounded
//! above by zero.

use crate::prob::{Categorical, ConditionalTable, ProbError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on policy enumeration (`|controls|^horizon`).
pub const MAX_POLICIES: usize = 1024;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),
    #[error("belief shape does not match model factors: {0}")]
    BeliefShape(String),
    #[error("control index {control} out of range ({num_controls} controls)")]
    ControlOutOfRange { control: usize, num_controls: usize },
    #[error("policy enumeration of {requested} policies exceeds cap {MAX_POLICIES}")]
    PolicyCapExceeded { requested: usize },
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Role of one hidden-state factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorRole {
    /// The agent's own controllable state.
    Own,
    /// A partner's state, inferred from observations.
    Other,
    /// A broadcast context state, supplied from outside.
    Shared,
}

/// One hidden-state factor: its role and cardinality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateFactor {
    pub role: FactorRole,
    pub cardinality: usize,
}

/// A fixed-horizon sequence of control indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub controls: Vec<usize>,
}

impl Policy {
    pub fn new(controls: Vec<usize>) -> Self {
        Self { controls }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    /// All `num_controls^horizon` policies in lexicographic order, subject
    /// to [`MAX_POLICIES`].
    pub fn enumerate(num_controls: usize, horizon: usize) -> Result<Vec<Policy>, ModelError> {
        if num_controls == 0 || horizon == 0 {
            return Ok(Vec::new());
        }
        let mut total: usize = 1;
        for _ in 0..horizon {
            total = total.saturating_mul(num_controls);
            if total > MAX_POLICIES {
                return Err(ModelError::PolicyCapExceeded { requested: total });
            }
        }
        let mut out = Vec::with_capacity(total);
        let mut controls = vec![0usize; horizon];
        loop {
            out.push(Policy::new(controls.clone()));
            // Odometer increment, last position fastest.
            let mut pos = horizon;
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                controls[pos] += 1;
                if controls[pos] < num_controls {
                    break;
                }
                controls[pos] = 0;
            }
        }
    }
}

/// Mixed-radix indexing of joint factor configurations. The last factor
/// varies fastest; `A` columns follow this order.
#[derive(Debug, Clone)]
pub struct JointIndexer {
    cards: Vec<usize>,
}

impl JointIndexer {
    pub fn new(cards: Vec<usize>) -> Self {
        Self { cards }
    }

    pub fn num_configs(&self) -> usize {
        self.cards.iter().product()
    }

    pub fn num_factors(&self) -> usize {
        self.cards.len()
    }

    pub fn flatten(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for (c, &card) in coords.iter().zip(&self.cards) {
            idx = idx * card + c;
        }
        idx
    }

    pub fn coord(&self, config: usize, factor: usize) -> usize {
        let mut rest = config;
        for f in (factor + 1..self.cards.len()).rev() {
            rest /= self.cards[f];
        }
        rest % self.cards[factor]
    }

    /// Mean-field joint weight of one configuration.
    pub fn joint_prob(&self, factors: &[Categorical], config: usize) -> f64 {
        let mut rest = config;
        let mut p = 1.0;
        for f in (0..self.cards.len()).rev() {
            let c = rest % self.cards[f];
            rest /= self.cards[f];
            p *= factors[f].get(c);
        }
        p
    }
}

/// Plain-data model description: row-major matrices with explicit
/// dimensions, as written in scenario configuration files. Validated as a
/// whole by [`validate`] before being turned into a [`GenerativeModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub factors: Vec<StateFactor>,
    pub num_observations: usize,
    /// Observation likelihood, `num_observations` rows over joint configs.
    pub a_obs: Vec<Vec<f64>>,
    /// One own-state transition matrix per control, each row-major square.
    pub b_trans: Vec<Vec<Vec<f64>>>,
    /// Raw log-preference weights over observations (normalized on build).
    pub c_pref: Vec<f64>,
    /// One prior per factor, in factor order.
    pub d_priors: Vec<Vec<f64>>,
    pub policies: Vec<Vec<usize>>,
}

/// One violated invariant, with enough indices to locate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub what: String,
}

/// Outcome of validating a [`ModelSpec`]: empty means pass.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, what: impl Into<String>) {
        self.violations.push(Violation { what: what.into() });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            write!(f, "pass")
        } else {
            for v in &self.violations {
                writeln!(f, "- {}", v.what)?;
            }
            Ok(())
        }
    }
}

/// Checks every structural invariant of a model description and reports
/// all violations rather than stopping at the first.
pub fn validate(spec: &ModelSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tol = crate::prob::NORMALIZATION_TOL;

    if spec.factors.is_empty() {
        report.push("model has no state factors");
        return report;
    }
    let own_count = spec.factors.iter().filter(|f| f.role == FactorRole::Own).count();
    if own_count != 1 {
        report.push(format!("expected exactly one Own factor, found {own_count}"));
    }
    for (i, f) in spec.factors.iter().enumerate() {
        if f.cardinality == 0 {
            report.push(format!("factor {i} has cardinality 0"));
        }
    }
    let num_configs: usize = spec.factors.iter().map(|f| f.cardinality).product();
    let own_card = spec
        .factors
        .iter()
        .find(|f| f.role == FactorRole::Own)
        .map_or(0, |f| f.cardinality);

    // A: num_observations rows, num_configs columns, column-stochastic.
    if spec.a_obs.len() != spec.num_observations {
        report.push(format!(
            "A has {} rows, expected num_observations = {}",
            spec.a_obs.len(),
            spec.num_observations
        ));
    }
    for (i, row) in spec.a_obs.iter().enumerate() {
        if row.len() != num_configs {
            report.push(format!(
                "A row {i} has {} columns, expected product of factor cardinalities = {num_configs}",
                row.len()
            ));
        }
    }
    if spec.a_obs.iter().all(|r| r.len() == num_configs) && spec.a_obs.len() == spec.num_observations {
        for c in 0..num_configs {
            let sum: f64 = spec.a_obs.iter().map(|row| row[c]).sum();
            if (sum - 1.0).abs() > tol {
                report.push(format!("A column {c} sums to {sum}, expected 1"));
            }
            for (i, row) in spec.a_obs.iter().enumerate() {
                if row[c] < 0.0 {
                    report.push(format!("A[{i}][{c}] is negative"));
                }
            }
        }
    }

    // B: per-control square tables over the own factor.
    if spec.b_trans.is_empty() {
        report.push("model has no transition slices (zero controls)");
    }
    for (u, b) in spec.b_trans.iter().enumerate() {
        if b.len() != own_card || b.iter().any(|row| row.len() != own_card) {
            report.push(format!(
                "B slice {u} is not {own_card}x{own_card} over the own factor"
            ));
            continue;
        }
        for c in 0..own_card {
            let sum: f64 = b.iter().map(|row| row[c]).sum();
            if (sum - 1.0).abs() > tol {
                report.push(format!("B slice {u} column {c} sums to {sum}, expected 1"));
            }
        }
    }

    // C: one finite log-weight per observation; exp(C) must carry mass.
    if spec.c_pref.len() != spec.num_observations {
        report.push(format!(
            "C has {} entries, expected num_observations = {}",
            spec.c_pref.len(),
            spec.num_observations
        ));
    }
    if spec.c_pref.iter().any(|v| !v.is_finite()) {
        report.push("C contains a non-finite entry".to_string());
    }

    // D: one valid prior per factor.
    if spec.d_priors.len() != spec.factors.len() {
        report.push(format!(
            "expected {} priors (one per factor), found {}",
            spec.factors.len(),
            spec.d_priors.len()
        ));
    }
    for (i, (d, f)) in spec.d_priors.iter().zip(&spec.factors).enumerate() {
        if d.len() != f.cardinality {
            report.push(format!(
                "prior {i} has {} entries, factor cardinality is {}",
                d.len(),
                f.cardinality
            ));
        } else if Categorical::new(d.clone()).is_err() {
            report.push(format!("prior {i} is not a valid distribution"));
        }
    }

    // Policies: non-empty, uniform horizon, in-range controls.
    if spec.policies.is_empty() {
        report.push("policy set is empty");
    }
    let horizon = spec.policies.first().map_or(0, Vec::len);
    for (p, policy) in spec.policies.iter().enumerate() {
        if policy.is_empty() {
            report.push(format!("policy {p} is empty"));
        }
        if policy.len() != horizon {
            report.push(format!(
                "policy {p} has horizon {}, expected {horizon} (all policies share one horizon)",
                policy.len()
            ));
        }
        for (t, &u) in policy.iter().enumerate() {
            if u >= spec.b_trans.len() {
                report.push(format!(
                    "policy {p} step {t} references control {u}, but only {} controls exist",
                    spec.b_trans.len()
                ));
            }
        }
    }
    if spec.policies.len() > MAX_POLICIES {
        report.push(format!(
            "policy set size {} exceeds cap {MAX_POLICIES}",
            spec.policies.len()
        ));
    }

    report
}

/// A validated, immutable generative model. Construction goes through
/// [`validate`]; after that the model is shareable read-only.
#[derive(Debug, Clone)]
pub struct GenerativeModel {
    factors: Vec<StateFactor>,
    indexer: JointIndexer,
    own_factor: usize,
    a_obs: ConditionalTable,
    b_trans: Vec<ConditionalTable>,
    c_pref: Vec<f64>,
    d_priors: Vec<Categorical>,
    policies: Vec<Policy>,
}

impl GenerativeModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self, ModelError> {
        let report = validate(spec);
        if !report.passed() {
            return Err(ModelError::Invalid(report));
        }
        let num_configs: usize = spec.factors.iter().map(|f| f.cardinality).product();
        let own_factor = spec
            .factors
            .iter()
            .position(|f| f.role == FactorRole::Own)
            .expect("validated");
        let own_card = spec.factors[own_factor].cardinality;

        let mut a_data = vec![0.0; spec.num_observations * num_configs];
        for (i, row) in spec.a_obs.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                a_data[c * spec.num_observations + i] = v;
            }
        }
        let a_obs = ConditionalTable::from_columns(spec.num_observations, num_configs, a_data)?;

        let b_trans = spec
            .b_trans
            .iter()
            .map(|b| ConditionalTable::from_rows(b))
            .collect::<Result<Vec<_>, _>>()?;
        let _ = own_card;

        // Normalize C in log space: c_i - ln(sum_j exp(c_j)).
        let max = spec.c_pref.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + spec.c_pref.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let c_pref: Vec<f64> = spec.c_pref.iter().map(|v| v - log_z).collect();

        let d_priors = spec
            .d_priors
            .iter()
            .map(|d| Categorical::new(d.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let policies = spec.policies.iter().cloned().map(Policy::new).collect();

        Ok(Self {
            factors: spec.factors.clone(),
            indexer: JointIndexer::new(spec.factors.iter().map(|f| f.cardinality).collect()),
            own_factor,
            a_obs,
            b_trans,
            c_pref,
            d_priors,
            policies,
        })
    }

    pub fn factors(&self) -> &[StateFactor] {
        &self.factors
    }

    pub fn indexer(&self) -> &JointIndexer {
        &self.indexer
    }

    /// Index of the own-state factor.
    pub fn own_factor(&self) -> usize {
        self.own_factor
    }

    /// Index of the first factor with the given role, if present.
    pub fn factor_with_role(&self, role: FactorRole) -> Option<usize> {
        self.factors.iter().position(|f| f.role == role)
    }

    pub fn num_observations(&self) -> usize {
        self.a_obs.outcomes()
    }

    pub fn num_controls(&self) -> usize {
        self.b_trans.len()
    }

    pub fn likelihood(&self) -> &ConditionalTable {
        &self.a_obs
    }

    pub fn transition(&self, control: usize) -> Result<&ConditionalTable, ModelError> {
        self.b_trans.get(control).ok_or(ModelError::ControlOutOfRange {
            control,
            num_controls: self.b_trans.len(),
        })
    }

    /// Normalized log-preferences over observations (each `<= 0`).
    pub fn log_preferences(&self) -> &[f64] {
        &self.c_pref
    }

    pub fn priors(&self) -> &[Categorical] {
        &self.d_priors
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    /// Rebinds the own-factor prior and the log-preferences, revalidating
    /// shape. Used by the hierarchy to push context down into the lower
    /// level.
    pub fn with_prior_and_preferences(
        &self,
        own_prior: Categorical,
        c_pref_raw: &[f64],
    ) -> Result<Self, ModelError> {
        if own_prior.len() != self.factors[self.own_factor].cardinality {
            return Err(ModelError::BeliefShape(format!(
                "own prior has {} entries, factor cardinality is {}",
                own_prior.len(),
                self.factors[self.own_factor].cardinality
            )));
        }
        if c_pref_raw.len() != self.num_observations() {
            return Err(ModelError::BeliefShape(format!(
                "C has {} entries, expected {}",
                c_pref_raw.len(),
                self.num_observations()
            )));
        }
        let max = c_pref_raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + c_pref_raw.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let mut out = self.clone();
        out.c_pref = c_pref_raw.iter().map(|v| v - log_z).collect();
        out.d_priors[self.own_factor] = own_prior;
        Ok(out)
    }

    /// Checks a per-factor belief against this model's factor shape.
    pub fn check_belief_shape(&self, factors: &[Categorical]) -> Result<(), ModelError> {
        if factors.len() != self.factors.len() {
            return Err(ModelError::BeliefShape(format!(
                "{} belief factors, model has {}",
                factors.len(),
                self.factors.len()
            )));
        }
        for (i, (b, f)) in factors.iter().zip(&self.factors).enumerate() {
            if b.len() != f.cardinality {
                return Err(ModelError::BeliefShape(format!(
                    "belief factor {i} has {} entries, cardinality is {}",
                    b.len(),
                    f.cardinality
                )));
            }
        }
        Ok(())
    }

    /// Predictive observation distribution under a mean-field belief:
    /// `Q(o) = sum_config A[:, config] * prod_f q_f(config_f)`.
    pub fn predict_observation(&self, factors: &[Categorical]) -> Result<Categorical, ModelError> {
        self.check_belief_shape(factors)?;
        let n_obs = self.num_observations();
        let mut out = vec![0.0; n_obs];
        for config in 0..self.indexer.num_configs() {
            let w = self.indexer.joint_prob(factors, config);
            if w == 0.0 {
                continue;
            }
            let col = self.a_obs.column(config);
            for (o, v) in out.iter_mut().enumerate() {
                *v += w * col[o];
            }
        }
        Ok(Categorical::normalize(&out)?)
    }

    /// Pushes the own-state belief through one transition slice.
    pub fn propagate(&self, belief_own: &Categorical, control: usize) -> Result<Categorical, ModelError> {
        let b = self.transition(control)?;
        Ok(b.apply(belief_own)?)
    }

    /// Pushes a belief through the control-weighted transition mixture:
    /// `q' = sum_c p(c) B[c] q`.
    pub fn propagate_mixture(
        &self,
        belief_own: &Categorical,
        action_dist: &Categorical,
    ) -> Result<Categorical, ModelError> {
        if action_dist.len() != self.num_controls() {
            return Err(ModelError::ControlOutOfRange {
                control: action_dist.len(),
                num_controls: self.num_controls(),
            });
        }
        let mut out = vec![0.0; belief_own.len()];
        for c in 0..action_dist.len() {
            let w = action_dist.get(c);
            if w == 0.0 {
                continue;
            }
            let moved = self.propagate(belief_own, c)?;
            for (o, m) in out.iter_mut().zip(moved.probs()) {
                *o += w * m;
            }
        }
        Ok(Categorical::normalize(&out)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn single_factor_spec(
        a_rows: Vec<Vec<f64>>,
        b: Vec<Vec<Vec<f64>>>,
        c: Vec<f64>,
        d: Vec<f64>,
        policies: Vec<Vec<usize>>,
    ) -> ModelSpec {
        let states = d.len();
        ModelSpec {
            factors: vec![StateFactor {
                role: FactorRole::Own,
                cardinality: states,
            }],
            num_observations: a_rows.len(),
            a_obs: a_rows,
            b_trans: b,
            c_pref: c,
            d_priors: vec![d],
            policies,
        }
    }

    fn well_formed() -> ModelSpec {
        single_factor_spec(
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            vec![vec![0]],
        )
    }

    #[test]
    fn validate_passes_well_formed() {
        let report = validate(&well_formed());
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn validate_names_bad_column() {
        let mut spec = well_formed();
        spec.a_obs[0][1] = 0.0; // column 1 now sums to 0.9
        let report = validate(&spec);
        assert!(!report.passed());
        assert!(
            report.violations.iter().any(|v| v.what.contains("column 1")),
            "{report}"
        );
    }

    #[test]
    fn validate_names_bad_policy() {
        let mut spec = well_formed();
        spec.policies.push(vec![1]); // control 1 does not exist
        let report = validate(&spec);
        assert!(
            report.violations.iter().any(|v| v.what.contains("policy 1")),
            "{report}"
        );
    }

    #[test]
    fn predict_observation_cases() {
        // Identity A: delta belief maps to delta observation.
        let spec = single_factor_spec(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            vec![vec![0]],
        );
        let m = GenerativeModel::from_spec(&spec).unwrap();
        let q = m
            .predict_observation(&[Categorical::delta(2, 1).unwrap()])
            .unwrap();
        assert_eq!(q.probs(), &[0.0, 1.0]);

        // Uniform columns: any belief maps to uniform observations.
        let spec = single_factor_spec(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            vec![vec![0]],
        );
        let m = GenerativeModel::from_spec(&spec).unwrap();
        let q = m
            .predict_observation(&[Categorical::new(vec![0.3, 0.7]).unwrap()])
            .unwrap();
        assert!((q.get(0) - 0.5).abs() < 1e-15);

        // Matrix-vector oracle: A = [[.9,.1],[.1,.9]], belief [.5,.5].
        let m = GenerativeModel::from_spec(&well_formed()).unwrap();
        let q = m.predict_observation(&[Categorical::uniform(2).unwrap()]).unwrap();
        assert!((q.get(0) - 0.5).abs() < 1e-15);
        assert!((q.get(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn propagate_cases() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let perm = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let mixing = vec![vec![0.8, 0.3], vec![0.2, 0.7]];
        let spec = single_factor_spec(
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            vec![id, perm, mixing],
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            vec![vec![0]],
        );
        let m = GenerativeModel::from_spec(&spec).unwrap();
        let b = Categorical::new(vec![0.3, 0.7]).unwrap();

        let out = m.propagate(&b, 0).unwrap();
        assert_eq!(out.probs(), b.probs());

        let d = Categorical::delta(2, 0).unwrap();
        let out = m.propagate(&d, 1).unwrap();
        assert_eq!(out.probs(), &[0.0, 1.0]);

        // Matrix-vector oracle: [[.8,.3],[.2,.7]] * [.5,.5] = [.55,.45].
        let out = m.propagate(&Categorical::uniform(2).unwrap(), 2).unwrap();
        assert!((out.get(0) - 0.55).abs() < 1e-15);
        assert!((out.get(1) - 0.45).abs() < 1e-15);

        assert!(matches!(
            m.propagate(&b, 3),
            Err(ModelError::ControlOutOfRange { control: 3, .. })
        ));
    }

    #[test]
    fn propagate_is_linear_in_belief() {
        let spec = single_factor_spec(
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            vec![vec![vec![0.8, 0.3], vec![0.2, 0.7]]],
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            vec![vec![0]],
        );
        let m = GenerativeModel::from_spec(&spec).unwrap();
        let p = Categorical::new(vec![0.9, 0.1]).unwrap();
        let q = Categorical::new(vec![0.2, 0.8]).unwrap();
        let alpha = 0.3;
        let mix = Categorical::new(
            p.probs()
                .iter()
                .zip(q.probs())
                .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                .collect(),
        )
        .unwrap();
        let lhs = m.propagate(&mix, 0).unwrap();
        let pa = m.propagate(&p, 0).unwrap();
        let qa = m.propagate(&q, 0).unwrap();
        for i in 0..2 {
            let rhs = alpha * pa.get(i) + (1.0 - alpha) * qa.get(i);
            assert!((lhs.get(i) - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn policy_enumeration_cap() {
        let all = Policy::enumerate(2, 3).unwrap();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].controls, vec![0, 0, 0]);
        assert_eq!(all[7].controls, vec![1, 1, 1]);
        assert!(matches!(
            Policy::enumerate(4, 6),
            Err(ModelError::PolicyCapExceeded { .. })
        ));
    }

    #[test]
    fn joint_indexer_round_trip() {
        let ix = JointIndexer::new(vec![3, 2, 4]);
        assert_eq!(ix.num_configs(), 24);
        for config in 0..24 {
            let coords: Vec<usize> = (0..3).map(|f| ix.coord(config, f)).collect();
            assert_eq!(ix.flatten(&coords), config);
        }
        // Last factor varies fastest.
        assert_eq!(ix.flatten(&[0, 0, 1]), 1);
        assert_eq!(ix.flatten(&[0, 1, 0]), 4);
        assert_eq!(ix.flatten(&[1, 0, 0]), 8);
    }

    #[test]
    fn c_preferences_are_normalized_logs() {
        let spec = single_factor_spec(
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            vec![3.0, -4.0],
            vec![0.5, 0.5],
            vec![vec![0]],
        );
        let m = GenerativeModel::from_spec(&spec).unwrap();
        let z: f64 = m.log_preferences().iter().map(|c| c.exp()).sum();
        assert!((z - 1.0).abs() < 1e-12);
        assert!(m.log_preferences().iter().all(|&c| c <= 0.0));
        // Differences of raw weights are preserved.
        assert!((m.log_preferences()[0] - m.log_preferences()[1] - 7.0).abs() < 1e-12);
    }
}
