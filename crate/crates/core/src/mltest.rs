//! Finite Martin-Löf test certificates.
//!
//! A [`FiniteTest`] is a finite family of levels `U_1, …, U_N` of words; it
//! is valid for a measure `P` when the cylinder unions are nested and
//! `P(Ũ_n) < 2^{-n}` at every level. Everything here is checked exactly.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bayes::{conditional, marginal_x};
use crate::budget::DepthBudget;
use crate::error::{Error, Result};
use crate::joint::{Counterexample, JointMeasure};
use crate::measure::CylinderMeasure;
use crate::rational::{ceil_to_integer, inv_pow2, log2, micro_round, Exact, Rational};
use crate::words::{binary_prefix, covered_by, cylinder_union_normalize, dyadic_value, partition, Word};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteTest {
    pub levels: BTreeMap<usize, Vec<Word>>,
}

impl FiniteTest {
    /// Levels are numbered `1..=N` without gaps.
    pub fn new(levels: BTreeMap<usize, Vec<Word>>) -> Result<Self> {
        let t = FiniteTest { levels };
        t.check_numbering()?;
        Ok(t)
    }

    pub fn from_levels(levels: Vec<Vec<Word>>) -> Self {
        FiniteTest { levels: levels.into_iter().enumerate().map(|(i, ws)| (i + 1, ws)).collect() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: FiniteTest = serde_json::from_str(text).map_err(|e| Error::spec(e.to_string()))?;
        t.check_numbering()?;
        Ok(t)
    }

    fn check_numbering(&self) -> Result<()> {
        if self.levels.keys().copied().eq(1..=self.levels.len()) {
            Ok(())
        } else {
            Err(Error::spec("test levels must be numbered 1..=N"))
        }
    }

    pub fn max_level(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &[Word] {
        self.levels.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn max_word_len(&self) -> usize {
        self.levels.values().flatten().map(Word::len).max().unwrap_or(0)
    }

    /// Canonical antichain of level `n`.
    pub fn canonical(&self, n: usize) -> Vec<Word> {
        cylinder_union_normalize(self.level(n))
    }
}

/// `P(∪_{w ∈ ws} Δ(w))`.
pub fn union_mass<M: CylinderMeasure + ?Sized>(m: &M, ws: &[Word]) -> Result<Rational> {
    let mut total = Rational::zero();
    for w in cylinder_union_normalize(ws) {
        total += m.mass(&w)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Mass,
    Nesting,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelCheck {
    pub level: usize,
    pub mass: Exact,
    pub bound: Exact,
    pub mass_ok: bool,
    /// Whether `Ũ_level ⊆ Ũ_{level−1}`; always true for level 1.
    pub nested_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestViolation {
    pub level: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestReport {
    pub max_level: usize,
    pub levels: Vec<LevelCheck>,
    pub first_violation: Option<TestViolation>,
    pub valid: bool,
}

impl TestReport {
    fn from_levels(levels: Vec<LevelCheck>) -> Self {
        let first_violation = levels.iter().find_map(|c| {
            if !c.nested_ok {
                Some(TestViolation { level: c.level, kind: ViolationKind::Nesting })
            } else if !c.mass_ok {
                Some(TestViolation { level: c.level, kind: ViolationKind::Mass })
            } else {
                None
            }
        });
        TestReport { max_level: levels.len(), valid: first_violation.is_none(), levels, first_violation }
    }
}

/// Exact check of nesting and of the strict bounds `P(Ũ_n) < 2^{-n}`.
pub fn validate_test<M: CylinderMeasure + ?Sized>(test: &FiniteTest, m: &M) -> Result<TestReport> {
    let mut checks = Vec::with_capacity(test.max_level());
    let mut previous: Option<Vec<Word>> = None;
    for n in 1..=test.max_level() {
        let canon = test.canonical(n);
        let mut mass = Rational::zero();
        for w in &canon {
            mass += m.mass(w)?;
        }
        let bound = inv_pow2(n);
        let nested_ok = previous.as_ref().is_none_or(|prev| canon.iter().all(|w| covered_by(w, prev)));
        checks.push(LevelCheck { level: n, mass_ok: mass < bound, mass: Exact(mass), bound: Exact(bound), nested_ok });
        previous = Some(canon);
    }
    Ok(TestReport::from_levels(checks))
}

/// Number of levels `n` with some `u ∈ U_n`, `u ⊑ x`. Needs `l(x)` at least
/// the longest word of the test so that membership is decided by `x`.
pub fn indicator_sum(test: &FiniteTest, x: &Word) -> Result<usize> {
    if x.len() < test.max_word_len() {
        return Err(Error::Precondition(format!(
            "membership undecided: l(x) = {} < longest test word {}",
            x.len(),
            test.max_word_len()
        )));
    }
    Ok(test.levels.values().filter(|ws| ws.iter().any(|u| u.is_prefix_of(x))).count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferLevel {
    pub level: usize,
    /// `M · 2^k`.
    pub threshold: u64,
    pub words: Vec<Word>,
    pub conditional_mass: Exact,
    /// `Σ_n P(Ũ_n | y) / (M 2^k)`.
    pub markov_bound: Exact,
    pub bound: Exact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferReport {
    pub given_y: Word,
    pub m: u64,
    pub depth: usize,
    pub hypothesis_sum: Exact,
    pub levels: Vec<TransferLevel>,
    pub test: FiniteTest,
}

/// Builds `Ṽ_k = {Σ_n 1_{Ũ_n} > M 2^k}`, `k = 1..=k_max`, from a test `U`
/// valid for the `X`-marginal, after checking `Σ_n P(Ũ_n | y) ≤ M` exactly.
///
/// The indicator sum is constant on cylinders of the longest test word's
/// depth, so each `Ṽ_k` is a finite union; it is returned as a canonical
/// antichain. By the Markov inequality `P(Ṽ_k | y) < 2^{-k}`.
pub fn transfer_test<J: JointMeasure + ?Sized>(
    test: &FiniteTest,
    joint: &J,
    y: &Word,
    m: u64,
    k_max: usize,
) -> Result<TransferReport> {
    if m == 0 {
        return Err(Error::Precondition("M must be a positive integer".into()));
    }
    let base = validate_test(test, &marginal_x(joint))?;
    if !base.valid {
        return Err(Error::HypothesisViolation(format!(
            "base test is not valid for the X-marginal (first violation at level {})",
            base.first_violation.map(|v| v.level).unwrap_or(0)
        )));
    }
    let slice = conditional(joint, y)?;
    let mut sum = Rational::zero();
    for n in 1..=test.max_level() {
        sum += union_mass(&slice, test.level(n))?;
    }
    let big_m = Rational::from_integer(BigInt::from(m));
    if sum > big_m {
        return Err(Error::HypothesisViolation(format!("Σ_n P(Ũ_n | {y}) = {} exceeds M = {m}", Exact(sum))));
    }

    let counts = cylinder_counts(test);
    let mut levels = Vec::with_capacity(k_max);
    let mut out = BTreeMap::new();
    for k in 1..=k_max {
        let threshold = m.checked_shl(k as u32).filter(|t| t >> k == m).unwrap_or(u64::MAX);
        let members: Vec<Word> =
            counts.iter().filter(|(_, c)| (*c as u64) > threshold).map(|(w, _)| w.clone()).collect();
        let words = cylinder_union_normalize(&members);
        let mut mass = Rational::zero();
        for w in &words {
            mass += slice.mass(w)?;
        }
        let markov_bound = &sum / (&big_m * Rational::from_integer(BigInt::one() << k));
        out.insert(k, words.clone());
        levels.push(TransferLevel {
            level: k,
            threshold,
            words,
            conditional_mass: Exact(mass),
            markov_bound: Exact(markov_bound),
            bound: Exact(inv_pow2(k)),
        });
    }
    Ok(TransferReport {
        given_y: y.clone(),
        m,
        depth: test.max_word_len(),
        hypothesis_sum: Exact(sum),
        levels,
        test: FiniteTest { levels: out },
    })
}

/// Partition of `{0,1}^∞` into cylinders on which the indicator sum is
/// constant, with that sum. Cylinders are only split where some test word
/// continues below them.
fn cylinder_counts(test: &FiniteTest) -> Vec<(Word, usize)> {
    let level_sets: Vec<HashSet<&Word>> = test.levels.values().map(|ws| ws.iter().collect()).collect();
    let mut inner: HashSet<Word> = HashSet::new();
    for w in test.levels.values().flatten() {
        for i in 0..w.len() {
            inner.insert(w.prefix(i));
        }
    }
    let mut out = Vec::new();
    let mut stack = vec![(Word::empty(), vec![false; level_sets.len()])];
    while let Some((w, mut hit)) = stack.pop() {
        for (i, set) in level_sets.iter().enumerate() {
            if set.contains(&w) {
                hit[i] = true;
            }
        }
        if inner.contains(&w) {
            stack.push((w.child(true), hit.clone()));
            stack.push((w.child(false), hit));
        } else {
            out.push((w, hit.iter().filter(|&&h| h).count()));
        }
    }
    out
}

/// A finite test on the product space: levels of product cylinders
/// `Δ(x) × Δ(y)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductFiniteTest {
    pub levels: BTreeMap<usize, Vec<(Word, Word)>>,
}

impl ProductFiniteTest {
    pub fn max_level(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &[(Word, Word)] {
        self.levels.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The `x`-section through `Δ(y)`: `x`-words of pairs whose `y`-cylinder
    /// contains `Δ(y)`.
    pub fn section(&self, y: &Word) -> FiniteTest {
        FiniteTest {
            levels: self
                .levels
                .iter()
                .map(|(&n, pairs)| {
                    (n, pairs.iter().filter(|(_, v)| v.is_prefix_of(y)).map(|(u, _)| u.clone()).collect())
                })
                .collect(),
        }
    }
}

fn pair_within(inner: &(Word, Word), outer: &(Word, Word)) -> bool {
    outer.0.is_prefix_of(&inner.0) && outer.1.is_prefix_of(&inner.1)
}

/// Refines every pair to cylinders of depth `(dx, dy)`.
fn product_grid(pairs: &[(Word, Word)], dx: usize, dy: usize, budget: DepthBudget) -> Result<BTreeSet<(Word, Word)>> {
    let mut cells = BTreeSet::new();
    for (u, v) in pairs {
        budget.check((dx - u.len()) + (dy - v.len()))?;
        let xs = partition(dx - u.len(), budget)?;
        let ys = partition(dy - v.len(), budget)?;
        for a in &xs {
            for b in &ys {
                cells.insert((u.concat(a), v.concat(b)));
            }
        }
    }
    Ok(cells)
}

/// `P(∪ Δ(u) × Δ(v))`, exact.
pub fn product_union_mass<J: JointMeasure + ?Sized>(
    joint: &J,
    pairs: &[(Word, Word)],
    budget: DepthBudget,
) -> Result<Rational> {
    let unique: BTreeSet<&(Word, Word)> = pairs.iter().collect();
    let kept: Vec<(Word, Word)> =
        unique.iter().filter(|p| !unique.iter().any(|q| q != *p && pair_within(p, q))).map(|p| (*p).clone()).collect();
    let uniform_shape = kept.windows(2).all(|w| w[0].0.len() == w[1].0.len() && w[0].1.len() == w[1].1.len());
    let cells: Vec<(Word, Word)> = if uniform_shape {
        kept
    } else {
        let dx = kept.iter().map(|p| p.0.len()).max().unwrap_or(0);
        let dy = kept.iter().map(|p| p.1.len()).max().unwrap_or(0);
        product_grid(&kept, dx, dy, budget)?.into_iter().collect()
    };
    let mut total = Rational::zero();
    for (u, v) in &cells {
        total += joint.mass2(u, v)?;
    }
    Ok(total)
}

fn product_nested(inner: &[(Word, Word)], outer: &[(Word, Word)], budget: DepthBudget) -> Result<bool> {
    let outer_set: HashSet<&(Word, Word)> = outer.iter().collect();
    let single_cover = |p: &(Word, Word)| {
        (0..=p.0.len()).any(|i| (0..=p.1.len()).any(|j| outer_set.contains(&(p.0.prefix(i), p.1.prefix(j)))))
    };
    let dx = outer.iter().map(|p| p.0.len()).max().unwrap_or(0);
    let dy = outer.iter().map(|p| p.1.len()).max().unwrap_or(0);
    for p in inner {
        if single_cover(p) {
            continue;
        }
        // On the grid at least as fine as every outer pair, a cell meets the
        // union only inside a single outer pair.
        let (ex, ey) = (dx.max(p.0.len()), dy.max(p.1.len()));
        let cells = product_grid(std::slice::from_ref(p), ex, ey, budget)?;
        if !cells.iter().all(&single_cover) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn validate_product_test<J: JointMeasure + ?Sized>(
    test: &ProductFiniteTest,
    joint: &J,
    budget: DepthBudget,
) -> Result<TestReport> {
    let mut checks = Vec::with_capacity(test.max_level());
    for n in 1..=test.max_level() {
        let mass = product_union_mass(joint, test.level(n), budget)?;
        let nested_ok = n == 1 || product_nested(test.level(n), test.level(n - 1), budget)?;
        let bound = inv_pow2(n);
        checks.push(LevelCheck { level: n, mass_ok: mass < bound, mass: Exact(mass), bound: Exact(bound), nested_ok });
    }
    Ok(TestReport::from_levels(checks))
}

/// Level `n` of the test covering the diagonal `{(x^∞, x^∞)}`: all pairs
/// `(x, x)` with `|x| = n`.
pub fn diagonal_test(n: usize, budget: DepthBudget) -> Result<Vec<(Word, Word)>> {
    Ok(partition(n, budget)?.into_iter().map(|x| (x.clone(), x)).collect())
}

/// Levels `1..=max_level` of the diagonal test.
pub fn diagonal_product_test(max_level: usize, budget: DepthBudget) -> Result<ProductFiniteTest> {
    let levels = (1..=max_level).map(|n| Ok((n, diagonal_test(n, budget)?))).collect::<Result<_>>()?;
    Ok(ProductFiniteTest { levels })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CounterexampleLevel {
    pub level: usize,
    pub depth: usize,
    /// `r(a_I) + 1/n`.
    pub threshold: Exact,
    pub words: Vec<Word>,
    /// Right end of the covered interval `[0, |U_n| 2^{-m})`.
    pub cover_upper: Exact,
    /// Whether the depth-`m` prefix of alpha's expansion is in `U_n`.
    pub alpha_prefix_member: bool,
    /// Mass of `Ũ_n` under the limit conditional given `1^∞`.
    pub limit_conditional_mass: Exact,
    /// `max(0, r(a_I) + 1/n − alpha) / (1 − alpha)`, the mass without depth rounding.
    pub unrounded_mass: Exact,
    /// `(1/n + 2^{-m}) / (1 − alpha)`.
    pub bound: Exact,
    pub bound_holds: bool,
}

/// `U_n = {s : l(s) = m, r(s) < r(a_I) + 1/n}`, the level of the test that
/// covers alpha, truncated to the supplied approximants.
pub fn counterexample_test_level(
    c: &Counterexample,
    n: usize,
    m: usize,
    budget: DepthBudget,
) -> Result<CounterexampleLevel> {
    if n == 0 {
        return Err(Error::Precondition("test level n must be at least 1".into()));
    }
    if m < c.max_approximant_len() {
        return Err(Error::Precondition(format!(
            "depth {m} is below the longest approximant ({})",
            c.max_approximant_len()
        )));
    }
    budget.check(m)?;
    let one = Rational::one();
    let threshold = c.cut(c.len()) + Rational::new(BigInt::one(), BigInt::from(n));
    let scale = Rational::from_integer(BigInt::one() << m);
    let full = BigInt::one() << m;
    let count = ceil_to_integer(&(&threshold * &scale)).min(full.clone());
    let cover_upper = Rational::new(count.clone(), full);
    let words: Vec<Word> = partition(m, budget)?.into_iter().filter(|s| dyadic_value(s) < threshold).collect();
    debug_assert_eq!(BigInt::from(words.len()), count);

    let alpha = c.alpha();
    let tail_len = &one - alpha;
    let over = |upper: &Rational| if upper > alpha { (upper - alpha) / &tail_len } else { Rational::zero() };
    let limit_conditional_mass = over(&cover_upper);
    let unrounded_mass = over(&threshold);
    let bound = (Rational::new(BigInt::one(), BigInt::from(n)) + inv_pow2(m)) / &tail_len;
    let prefix = binary_prefix(alpha, m);
    Ok(CounterexampleLevel {
        level: n,
        depth: m,
        alpha_prefix_member: words.binary_search(&prefix).is_ok(),
        bound_holds: limit_conditional_mass <= bound,
        threshold: Exact(threshold),
        words,
        cover_upper: Exact(cover_upper),
        limit_conditional_mass: Exact(limit_conditional_mass),
        unrounded_mass: Exact(unrounded_mass),
        bound: Exact(bound),
    })
}

/// `log2(Σ w_i Q_i(x) / P(x))`, or infinite when `P(x) = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Deficiency {
    Finite {
        /// The mixture-to-model likelihood ratio, exact.
        ratio: Exact,
        /// `log2(ratio)` rounded to `10^-6`.
        log2: Exact,
    },
    Infinite,
}

impl Deficiency {
    pub fn log2(&self) -> Option<&Rational> {
        match self {
            Deficiency::Finite { log2, .. } => Some(&log2.0),
            Deficiency::Infinite => None,
        }
    }

    pub fn ratio(&self) -> Option<&Rational> {
        match self {
            Deficiency::Finite { ratio, .. } => Some(&ratio.0),
            Deficiency::Infinite => None,
        }
    }
}

/// Likelihood-ratio deficiency of `x` under `model` against a finite
/// weighted reference pool. Large values say `x` looks non-random for
/// `model` relative to the pool at this depth; nothing more.
pub fn deficiency<P, Q>(x: &Word, model: &P, pool: &[(Rational, Q)]) -> Result<Deficiency>
where
    P: CylinderMeasure + ?Sized,
    Q: CylinderMeasure,
{
    if pool.is_empty() || pool.iter().any(|(w, _)| !w.is_positive()) {
        return Err(Error::spec("pool weights must be positive"));
    }
    let total: Rational = pool.iter().map(|(w, _)| w.clone()).sum();
    if !total.is_one() {
        return Err(Error::spec(format!("pool weights sum to {}, not 1", Exact(total))));
    }
    let px = model.mass(x)?;
    if !px.is_positive() {
        return Ok(Deficiency::Infinite);
    }
    let mut mix = Rational::zero();
    for (w, q) in pool {
        mix += w * q.mass(x)?;
    }
    if mix.is_zero() {
        return Err(Error::Precondition(format!("every pool model gives {x} mass 0")));
    }
    let ratio = mix / px;
    let log = if ratio.is_one() { Rational::zero() } else { micro_round(log2(&ratio)) };
    Ok(Deficiency::Finite { ratio: Exact(ratio), log2: Exact(log) })
}
