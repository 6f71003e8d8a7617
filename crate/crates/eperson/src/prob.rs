//! Exact categorical-probability primitives.
//!
//! Everything downstream (generative models, inference, planning, the
//! uncertainty grid) is built on two types: [`Categorical`], a normalized
//! probability vector over a finite support, and [`ConditionalTable`], a
//! column-stochastic matrix of categoricals. All arithmetic is `f64` in
//! nats; distributions are renormalized after every multiplicative update
//! to absorb float drift.

use thiserror::Error;

/// Sum-to-one tolerance for a valid distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Probabilities below this are treated as exact zero inside entropies,
/// and model probabilities are clamped up to it before taking logs.
pub const PROB_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("input has no positive mass (all entries zero or empty)")]
    NoMass,
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("non-finite entry at index {index}")]
    NonFiniteEntry { index: usize },
    #[error("support size mismatch: {left} vs {right}")]
    SupportMismatch { left: usize, right: usize },
    #[error("absolute continuity violated: q[{index}] > 0 but p[{index}] = 0")]
    AbsoluteContinuity { index: usize },
    #[error("entries sum to {sum}, expected 1 within {NORMALIZATION_TOL}")]
    NotNormalized { sum: f64 },
    #[error("empty distribution list")]
    EmptyList,
    #[error("precision must be positive and finite, got {0}")]
    BadPrecision(f64),
    #[error("column {column} sums to {sum}, expected 1 within {NORMALIZATION_TOL}")]
    ColumnNotNormalized { column: usize, sum: f64 },
    #[error("table shape mismatch: expected {expected} entries, got {actual}")]
    TableShape { expected: usize, actual: usize },
}

/// `ln` with the documented floor: arguments below [`PROB_FLOOR`] are
/// clamped up before the log. Used wherever a *model* probability enters
/// a log so that structurally-impossible events stay finite.
#[inline]
pub fn ln_clamped(x: f64) -> f64 {
    x.max(PROB_FLOOR).ln()
}

/// A normalized probability vector over a finite support.
///
/// Invariants: every entry is `>= 0`, the entries sum to one within
/// [`NORMALIZATION_TOL`], and the support is non-empty. Constructors
/// enforce these; the inner vector is never exposed mutably.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    /// Validates an already-normalized vector.
    pub fn new(probs: Vec<f64>) -> Result<Self, ProbError> {
        if probs.is_empty() {
            return Err(ProbError::NoMass);
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() {
                return Err(ProbError::NonFiniteEntry { index: i });
            }
            if p < 0.0 {
                return Err(ProbError::NegativeEntry { index: i, value: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ProbError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    /// Normalizes a non-negative weight vector into a distribution.
    ///
    /// Rejects empty, all-zero, negative, or non-finite input. Idempotent:
    /// normalizing an already-normalized vector returns it bit-for-bit
    /// (division by a sum of exactly 1.0 is exact).
    pub fn normalize(raw: &[f64]) -> Result<Self, ProbError> {
        if raw.is_empty() {
            return Err(ProbError::NoMass);
        }
        let mut sum = 0.0;
        for (i, &w) in raw.iter().enumerate() {
            if !w.is_finite() {
                return Err(ProbError::NonFiniteEntry { index: i });
            }
            if w < 0.0 {
                return Err(ProbError::NegativeEntry { index: i, value: w });
            }
            sum += w;
        }
        if sum <= 0.0 {
            return Err(ProbError::NoMass);
        }
        // Already-valid distributions pass through untouched, which makes
        // normalization exactly idempotent.
        if (sum - 1.0).abs() <= NORMALIZATION_TOL {
            return Ok(Self {
                probs: raw.to_vec(),
            });
        }
        Ok(Self {
            probs: raw.iter().map(|w| w / sum).collect(),
        })
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Result<Self, ProbError> {
        if n == 0 {
            return Err(ProbError::NoMass);
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    /// Point mass on outcome `k` of a support of size `n`.
    pub fn delta(n: usize, k: usize) -> Result<Self, ProbError> {
        if n == 0 || k >= n {
            return Err(ProbError::NoMass);
        }
        let mut probs = vec![0.0; n];
        probs[k] = 1.0;
        Ok(Self { probs })
    }

    /// Stable softmax: `exp(precision * v_i) / sum_j exp(precision * v_j)`
    /// with max-subtraction. Invariant under adding a constant to `values`.
    pub fn softmax(values: &[f64], precision: f64) -> Result<Self, ProbError> {
        if values.is_empty() {
            return Err(ProbError::NoMass);
        }
        if !(precision.is_finite() && precision > 0.0) {
            return Err(ProbError::BadPrecision(precision));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(ProbError::NonFiniteEntry { index: i });
            }
        }
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = values.iter().map(|v| (precision * (v - max)).exp()).collect();
        Self::normalize(&weights)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Index of the largest entry, lowest index first on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy in nats, with `0 ln 0 := 0`. Entries below
    /// [`PROB_FLOOR`] are treated as exact zeros. Result is in
    /// `[0, ln(len)]`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for &p in &self.probs {
            if p >= PROB_FLOOR {
                h -= p * p.ln();
            }
        }
        // -0.0 from a pure point mass reads poorly in traces.
        if h == 0.0 {
            0.0
        } else {
            h
        }
    }

    /// `KL(self || other)` in nats.
    ///
    /// Requires matching supports and absolute continuity: any index with
    /// `q_i > 0` and `p_i = 0` is rejected rather than returning infinity.
    pub fn kl_divergence(&self, other: &Categorical) -> Result<f64, ProbError> {
        if self.len() != other.len() {
            return Err(ProbError::SupportMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let mut kl = 0.0;
        for (i, (&q, &p)) in self.probs.iter().zip(other.probs.iter()).enumerate() {
            if q < PROB_FLOOR {
                continue;
            }
            if p <= 0.0 {
                return Err(ProbError::AbsoluteContinuity { index: i });
            }
            kl += q * (q.ln() - p.ln());
        }
        Ok(kl)
    }

    /// Draws one index using a uniform variate in `[0, 1)`.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut cum = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            cum += p;
            if u < cum {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Joint entropy of independent factors: the sum of the factor entropies.
pub fn joint_entropy(factors: &[&Categorical]) -> Result<f64, ProbError> {
    if factors.is_empty() {
        return Err(ProbError::EmptyList);
    }
    Ok(factors.iter().map(|p| p.entropy()).sum())
}

/// A column-stochastic table: `outcomes x conditions`, each column a
/// valid [`Categorical`]. Stored column-major so a condition's
/// distribution is one contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    outcomes: usize,
    conditions: usize,
    data: Vec<f64>, // column-major, len = outcomes * conditions
}

impl ConditionalTable {
    /// Builds from column-major data, validating every column.
    pub fn from_columns(outcomes: usize, conditions: usize, data: Vec<f64>) -> Result<Self, ProbError> {
        if outcomes == 0 || conditions == 0 || data.len() != outcomes * conditions {
            return Err(ProbError::TableShape {
                expected: outcomes * conditions,
                actual: data.len(),
            });
        }
        for c in 0..conditions {
            let col = &data[c * outcomes..(c + 1) * outcomes];
            let mut sum = 0.0;
            for (i, &v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ProbError::NonFiniteEntry { index: c * outcomes + i });
                }
                if v < 0.0 {
                    return Err(ProbError::NegativeEntry {
                        index: c * outcomes + i,
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(ProbError::ColumnNotNormalized { column: c, sum });
            }
        }
        Ok(Self {
            outcomes,
            conditions,
            data,
        })
    }

    /// Builds from rows (`rows[i][j] = p(outcome i | condition j)`).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ProbError> {
        let outcomes = rows.len();
        let conditions = rows.first().map_or(0, Vec::len);
        if outcomes == 0 || conditions == 0 {
            return Err(ProbError::TableShape {
                expected: 0,
                actual: 0,
            });
        }
        let mut data = vec![0.0; outcomes * conditions];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != conditions {
                return Err(ProbError::TableShape {
                    expected: conditions,
                    actual: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                data[c * outcomes + i] = v;
            }
        }
        Self::from_columns(outcomes, conditions, data)
    }

    /// Identity table (square, deterministic pass-through).
    pub fn identity(n: usize) -> Result<Self, ProbError> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_columns(n, n, data)
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn conditions(&self) -> usize {
        self.conditions
    }

    /// `p(outcome | condition)`.
    pub fn prob(&self, outcome: usize, condition: usize) -> f64 {
        self.data[condition * self.outcomes + outcome]
    }

    /// The column for one condition.
    pub fn column(&self, condition: usize) -> &[f64] {
        &self.data[condition * self.outcomes..(condition + 1) * self.outcomes]
    }

    /// Marginalizes over conditions: `out_i = sum_c p(i|c) w_c`. `weights`
    /// must be a distribution over conditions; the result is renormalized.
    pub fn apply(&self, weights: &Categorical) -> Result<Categorical, ProbError> {
        if weights.len() != self.conditions {
            return Err(ProbError::SupportMismatch {
                left: weights.len(),
                right: self.conditions,
            });
        }
        let mut out = vec![0.0; self.outcomes];
        for c in 0..self.conditions {
            let w = weights.get(c);
            if w == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += w * self.prob(i, c);
            }
        }
        Categorical::normalize(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN_2: f64 = std::f64::consts::LN_2;

    /// Direct-summation oracle for entropy, independent of the method.
    fn entropy_oracle(p: &[f64]) -> f64 {
        p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
    }

    /// Direct-summation oracle for KL.
    fn kl_oracle(q: &[f64], p: &[f64]) -> f64 {
        q.iter()
            .zip(p)
            .filter(|(&qi, _)| qi > 0.0)
            .map(|(&qi, &pi)| qi * (qi / pi).ln())
            .sum()
    }

    #[test]
    fn normalize_symmetric_and_plain() {
        let c = Categorical::normalize(&[2.0, 2.0]).unwrap();
        assert_eq!(c.probs(), &[0.5, 0.5]);
        let c = Categorical::normalize(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.probs(), &[1.0, 0.0, 0.0]);
        let c = Categorical::normalize(&[1.0, 3.0]).unwrap();
        assert_eq!(c.probs(), &[0.25, 0.75]);
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert_eq!(Categorical::normalize(&[0.0, 0.0]), Err(ProbError::NoMass));
        assert_eq!(Categorical::normalize(&[]), Err(ProbError::NoMass));
        assert!(matches!(
            Categorical::normalize(&[1.0, -0.5]),
            Err(ProbError::NegativeEntry { index: 1, .. })
        ));
        assert!(matches!(
            Categorical::normalize(&[f64::NAN, 1.0]),
            Err(ProbError::NonFiniteEntry { index: 0 })
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let once = Categorical::normalize(&[0.3, 1.7, 2.4]).unwrap();
        let twice = Categorical::normalize(once.probs()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn entropy_examples() {
        let uniform4 = Categorical::uniform(4).unwrap();
        assert!((uniform4.entropy() - 4.0_f64.ln()).abs() < 1e-12);

        let degenerate = Categorical::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(degenerate.entropy(), 0.0);

        let skewed = Categorical::new(vec![0.25, 0.75]).unwrap();
        let expected = entropy_oracle(&[0.25, 0.75]);
        assert!((expected - 0.562_335_145).abs() < 1e-9);
        assert!((skewed.entropy() - expected).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        let p = Categorical::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(p.kl_divergence(&p).unwrap(), 0.0);

        let q = Categorical::new(vec![1.0, 0.0]).unwrap();
        let half = Categorical::uniform(2).unwrap();
        assert!((q.kl_divergence(&half).unwrap() - LN_2).abs() < 1e-15);

        let a = Categorical::new(vec![0.5, 0.5]).unwrap();
        let b = Categorical::new(vec![0.25, 0.75]).unwrap();
        let expected = kl_oracle(&[0.5, 0.5], &[0.25, 0.75]);
        assert!((expected - 0.143_841_036).abs() < 1e-9);
        assert!((a.kl_divergence(&b).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn kl_rejects_mismatch_and_infinite() {
        let q = Categorical::uniform(3).unwrap();
        let p = Categorical::uniform(2).unwrap();
        assert!(matches!(
            q.kl_divergence(&p),
            Err(ProbError::SupportMismatch { left: 3, right: 2 })
        ));
        let q = Categorical::new(vec![0.5, 0.5]).unwrap();
        let p = Categorical::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            q.kl_divergence(&p),
            Err(ProbError::AbsoluteContinuity { index: 1 })
        ));
    }

    #[test]
    fn softmax_examples() {
        let c = Categorical::softmax(&[3.0, 3.0, 3.0], 7.0).unwrap();
        for &p in c.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }

        // Closed form: exp(0), exp(ln 2) = 1, 2 -> [1/3, 2/3].
        let c = Categorical::softmax(&[0.0, LN_2], 1.0).unwrap();
        assert!((c.get(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.get(1) - 2.0 / 3.0).abs() < 1e-15);

        // Argmax limit at high precision.
        let c = Categorical::softmax(&[0.0, 10.0], 100.0).unwrap();
        assert!(c.get(0).abs() < 1e-12);
        assert!((c.get(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariance() {
        let a = Categorical::softmax(&[0.1, 0.9, 0.4], 2.5).unwrap();
        let b = Categorical::softmax(&[100.1, 100.9, 100.4], 2.5).unwrap();
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_entropy_examples() {
        let u2 = Categorical::uniform(2).unwrap();
        let h = joint_entropy(&[&u2, &u2]).unwrap();
        assert!((h - 2.0 * LN_2).abs() < 1e-15);

        let delta = Categorical::delta(3, 1).unwrap();
        let any = Categorical::new(vec![0.25, 0.75]).unwrap();
        let h = joint_entropy(&[&delta, &any]).unwrap();
        assert!((h - any.entropy()).abs() < 1e-15);

        let a = Categorical::new(vec![0.25, 0.75]).unwrap();
        let b = Categorical::uniform(2).unwrap();
        let expected = entropy_oracle(&[0.25, 0.75]) + entropy_oracle(&[0.5, 0.5]);
        assert!((expected - 1.255_482_325).abs() < 1e-9);
        assert!((joint_entropy(&[&a, &b]).unwrap() - expected).abs() < 1e-15);

        assert_eq!(joint_entropy(&[]), Err(ProbError::EmptyList));
    }

    #[test]
    fn table_validation_and_apply() {
        // Rows: p(o|c). Column 1 deliberately sums to 0.9.
        let bad = ConditionalTable::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.8]]);
        assert!(matches!(bad, Err(ProbError::ColumnNotNormalized { column: 1, .. })));

        let t = ConditionalTable::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert_eq!(t.prob(0, 0), 0.9);
        assert_eq!(t.prob(0, 1), 0.1);
        let out = t.apply(&Categorical::uniform(2).unwrap()).unwrap();
        assert!((out.get(0) - 0.5).abs() < 1e-15);

        let id = ConditionalTable::identity(3).unwrap();
        let d = Categorical::delta(3, 2).unwrap();
        assert_eq!(id.apply(&d).unwrap().probs(), d.probs());
    }

    #[test]
    fn argmax_lowest_index_tie_break() {
        let c = Categorical::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(c.argmax(), 0);
        let c = Categorical::new(vec![0.2, 0.6, 0.2]).unwrap();
        assert_eq!(c.argmax(), 1);
    }
}
