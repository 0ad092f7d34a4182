//! Finite-depth surrogates for posterior consistency.
//!
//! Singularity of conditionals on disjoint parameter cylinders is read off a
//! total-variation matrix at a fixed sample depth; recovery of the parameter
//! from sampled data is measured with the MAP estimator; concentration of
//! the posterior is tracked along sampled sequences. The two statements
//! quantified over random sets are not finitely checkable and are only
//! noted in the report.

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::Serialize;

use crate::bayes::{conditional, map_estimate, map_with_mass, marginal_y};
use crate::budget::DepthBudget;
use crate::error::{Error, Result};
use crate::joint::JointMeasure;
use crate::measure::{sample_with, total_variation_at_depth, CylinderMeasure, ExactSampler};
use crate::rational::{ratio, Exact, Rational};
use crate::words::{partition, Word};

pub const SCHEMA_VERSION: &str = "1";

/// TV at depth `n` between the conditionals on every pair of positive-mass
/// length-`k` parameter cylinders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SingularityMatrix {
    pub param_depth: usize,
    pub sample_depth: usize,
    pub params: Vec<Word>,
    /// Zero-prior cylinders, for which conditioning is undefined.
    pub excluded: Vec<Word>,
    pub entries: Vec<Vec<Exact>>,
}

impl SingularityMatrix {
    pub fn off_diagonal(&self) -> impl Iterator<Item = &Rational> {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, e)| &e.0))
    }

    pub fn min_offdiagonal(&self) -> Option<Rational> {
        self.off_diagonal().min().cloned()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.entries.len();
        (0..n).all(|i| {
            self.entries[i][i].0 == Rational::default() && (0..n).all(|j| self.entries[i][j] == self.entries[j][i])
        })
    }

    /// Pairs `(i, j)`, `i < j`, whose TV is at least `1 − ε`.
    pub fn singular_pairs(&self, epsilon: &Rational) -> Vec<(usize, usize)> {
        let bar = Rational::one() - epsilon;
        let n = self.entries.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| self.entries[i][j].0 >= bar).collect()
    }
}

pub fn singularity_matrix<J: JointMeasure + ?Sized>(
    joint: &J,
    k: usize,
    n: usize,
    budget: DepthBudget,
) -> Result<SingularityMatrix> {
    let prior = marginal_y(joint);
    let mut params = Vec::new();
    let mut excluded = Vec::new();
    for y in partition(k, budget)? {
        if prior.mass(&y)?.is_positive() {
            params.push(y);
        } else {
            excluded.push(y);
        }
    }
    let slices = params.iter().map(|y| conditional(joint, y)).collect::<Result<Vec<_>>>()?;
    let size = params.len();
    let mut entries = vec![vec![Exact::zero(); size]; size];
    for i in 0..size {
        for j in i + 1..size {
            let tv = total_variation_at_depth(&slices[i], &slices[j], n, budget)?;
            entries[i][j] = Exact(tv.clone());
            entries[j][i] = Exact(tv);
        }
    }
    Ok(SingularityMatrix { param_depth: k, sample_depth: n, params, excluded, entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecoveryTrial {
    pub trial: u64,
    pub y: Word,
    pub x: Word,
    pub estimate: Word,
    pub recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecoveryTable {
    pub param_depth: usize,
    pub sample_depth: usize,
    pub seed: u64,
    pub rows: Vec<RecoveryTrial>,
    pub recovered: usize,
    pub rate: Exact,
}

/// Per trial: draw `y` of length `k` from `P_Y`, then `x` of length `n` from
/// `P(·|y)`, and check whether the MAP estimate from `x` returns `y`.
///
/// Trial `t` uses its own stream `(seed, t)`.
pub fn recovery_experiment<J: JointMeasure + ?Sized>(
    joint: &J,
    k: usize,
    n: usize,
    trials: u64,
    seed: u64,
    budget: DepthBudget,
) -> Result<RecoveryTable> {
    if trials == 0 {
        return Err(Error::Precondition("recovery experiment needs at least one trial".into()));
    }
    let prior = marginal_y(joint);
    let mut rows = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut rng = ExactSampler::with_stream(seed, trial);
        let y = sample_with(&prior, k, &mut rng)?;
        let x = sample_with(&conditional(joint, &y)?, n, &mut rng)?;
        let estimate = map_estimate(joint, &x, k, budget)?;
        let recovered = estimate == y;
        rows.push(RecoveryTrial { trial, y, x, estimate, recovered });
    }
    let recovered = rows.iter().filter(|r| r.recovered).count();
    let rate = Rational::new(BigInt::from(recovered), BigInt::from(trials));
    Ok(RecoveryTable { param_depth: k, sample_depth: n, seed, rows, recovered, rate: Exact(rate) })
}

/// `sup_{|y|=k} P(y | x[..l])` for `l = 0..=l(x)`.
pub fn concentration_curve<J: JointMeasure + ?Sized>(
    joint: &J,
    x: &Word,
    k: usize,
    budget: DepthBudget,
) -> Result<Vec<Rational>> {
    (0..=x.len()).map(|l| Ok(map_with_mass(joint, &x.prefix(l), k, budget)?.1)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcentrationCurve {
    pub y: Word,
    pub x: Word,
    pub sup_posterior: Vec<Exact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentAtDepth,
    InconsistentAtDepth,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentAtDepth => "consistent-at-depth",
            Verdict::InconsistentAtDepth => "inconsistent-at-depth",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyConfig {
    pub param_depth: usize,
    pub sample_depth: usize,
    pub epsilon: Exact,
    pub recovery_threshold: Exact,
    pub trials: u64,
    pub seed: u64,
    /// Number of recovery trials whose `x` also gets a concentration curve.
    pub curves: usize,
}

impl ConsistencyConfig {
    pub fn new(param_depth: usize, sample_depth: usize) -> Self {
        ConsistencyConfig {
            param_depth,
            sample_depth,
            epsilon: Exact(ratio(1, 100)),
            recovery_threshold: Exact(ratio(9, 10)),
            trials: 200,
            seed: 0,
            curves: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub schema_version: &'static str,
    pub config: ConsistencyConfig,
    pub singularity_matrix: SingularityMatrix,
    pub min_offdiagonal: Option<Exact>,
    pub concentration_curves: Vec<ConcentrationCurve>,
    pub recovery_table: RecoveryTable,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Combines the surrogates:
///
/// * consistent when every off-diagonal TV is at least `1 − ε` and the
///   recovery rate reaches the threshold;
/// * inconsistent when some pair of conditionals is within `ε` in TV, or
///   when both surrogates fail;
/// * indeterminate otherwise, including when fewer than two parameter
///   cylinders carry mass.
pub fn verdict_rule(
    min_offdiagonal: Option<&Rational>,
    rate: &Rational,
    epsilon: &Rational,
    threshold: &Rational,
) -> Verdict {
    let Some(min) = min_offdiagonal else {
        return Verdict::Indeterminate;
    };
    let singular = min >= &(Rational::one() - epsilon);
    let recovers = rate >= threshold;
    if singular && recovers {
        Verdict::ConsistentAtDepth
    } else if min <= epsilon || (!singular && !recovers) {
        Verdict::InconsistentAtDepth
    } else {
        Verdict::Indeterminate
    }
}

pub fn consistency_verdict<J: JointMeasure + ?Sized>(
    joint: &J,
    config: &ConsistencyConfig,
    budget: DepthBudget,
) -> Result<ConsistencyReport> {
    let (k, n) = (config.param_depth, config.sample_depth);
    let matrix = singularity_matrix(joint, k, n, budget)?;
    let recovery = recovery_experiment(joint, k, n, config.trials, config.seed, budget)?;
    let curves = recovery
        .rows
        .iter()
        .take(config.curves)
        .map(|row| {
            let sup = concentration_curve(joint, &row.x, k, budget)?;
            Ok(ConcentrationCurve {
                y: row.y.clone(),
                x: row.x.clone(),
                sup_posterior: sup.into_iter().map(Exact).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min = matrix.min_offdiagonal();
    let verdict = verdict_rule(min.as_ref(), &recovery.rate.0, &config.epsilon.0, &config.recovery_threshold.0);
    let notes = vec![
        format!("verdict is a finite-depth diagnostic at parameter depth {k} and sample depth {n}, not a proof"),
        format!(
            "singularity surrogate: TV_{n} >= 1 - {}; recovery threshold: rate >= {}",
            config.epsilon, config.recovery_threshold
        ),
        "conditions quantified over Martin-Löf random sets are implied by equivalence and not tested".into(),
    ];
    Ok(ConsistencyReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        singularity_matrix: matrix,
        min_offdiagonal: min.map(Exact),
        concentration_curves: curves,
        recovery_table: recovery,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::{CounterexampleSpec, Joint, JointSpec};
    use crate::rational::int;

    const B: DepthBudget = DepthBudget::DEFAULT;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn counterexample() -> Joint {
        Joint::new(&JointSpec::Counterexample(CounterexampleSpec::alternating(5))).unwrap()
    }

    #[test]
    fn beta_bernoulli_depth_one_matrix() {
        let m = singularity_matrix(&Joint::BetaBernoulli, 1, 1, B).unwrap();
        assert_eq!(m.params, vec![w("0"), w("1")]);
        assert_eq!(m.entries[0][1].0, ratio(1, 2));
        assert!(m.is_symmetric());
    }

    #[test]
    fn product_matrix_is_zero() {
        for (k, n) in [(1, 4), (2, 3), (3, 1)] {
            let m = singularity_matrix(&Joint::uniform_product(), k, n, B).unwrap();
            assert!(m.off_diagonal().all(|e| e == &int(0)));
            assert_eq!(m.params.len(), 1 << k);
        }
    }

    #[test]
    fn counterexample_matrix_excludes_null_parameters() {
        let m = singularity_matrix(&counterexample(), 2, 10, B).unwrap();
        assert_eq!(m.params, vec![w("10"), w("11")]);
        assert_eq!(m.excluded, vec![w("00"), w("01")]);
        assert_eq!(m.entries[0][1].0, int(1));
    }

    #[test]
    fn recovery_at_chance_for_product() {
        let t = recovery_experiment(&Joint::uniform_product(), 1, 6, 64, 3, B).unwrap();
        // Posterior equals the prior, so the tie-break always answers "0".
        assert!(t.rows.iter().all(|r| r.estimate == w("0")));
        assert_eq!(t.recovered, t.rows.iter().filter(|r| r.y == w("0")).count());
    }

    #[test]
    fn recovery_exact_for_counterexample() {
        let t = recovery_experiment(&counterexample(), 2, 8, 50, 9, B).unwrap();
        assert_eq!(t.rate.0, int(1));
        assert!(t.rows.iter().any(|r| r.y == w("10")) && t.rows.iter().any(|r| r.y == w("11")));
    }

    #[test]
    fn recovery_is_deterministic() {
        let a = recovery_experiment(&Joint::BetaBernoulli, 1, 20, 10, 42, B).unwrap();
        let b = recovery_experiment(&Joint::BetaBernoulli, 1, 20, 10, 42, B).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn verdict_rule_cases() {
        let eps = ratio(1, 100);
        let thr = ratio(9, 10);
        assert_eq!(verdict_rule(Some(&int(1)), &int(1), &eps, &thr), Verdict::ConsistentAtDepth);
        assert_eq!(verdict_rule(Some(&int(0)), &int(1), &eps, &thr), Verdict::InconsistentAtDepth);
        assert_eq!(verdict_rule(Some(&ratio(1, 2)), &ratio(1, 2), &eps, &thr), Verdict::InconsistentAtDepth);
        assert_eq!(verdict_rule(Some(&ratio(9, 10)), &int(1), &eps, &thr), Verdict::Indeterminate);
        assert_eq!(verdict_rule(Some(&int(1)), &ratio(1, 2), &eps, &thr), Verdict::Indeterminate);
        assert_eq!(verdict_rule(None, &int(1), &eps, &thr), Verdict::Indeterminate);
    }

    #[test]
    fn concentration_curve_starts_at_prior() {
        let curve = concentration_curve(&Joint::BetaBernoulli, &w("1111"), 1, B).unwrap();
        assert_eq!(curve[0], ratio(1, 2));
        assert!(curve.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn report_serializes_verdict() {
        let mut cfg = ConsistencyConfig::new(1, 4);
        cfg.trials = 8;
        let r = consistency_verdict(&Joint::uniform_product(), &cfg, B).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["verdict"], "inconsistent-at-depth");
        assert_eq!(json["schema_version"], "1");
        assert_eq!(json["min_offdiagonal"], "0/1");
    }
}
