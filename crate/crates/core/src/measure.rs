//! Probability measures on `{0,1}^∞` evaluated exactly on cylinders.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Signed, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::DepthBudget;
use crate::error::{Error, Result};
use crate::rational::{pow, ratio, Exact, Rational};
use crate::words::{partition, PeriodicSequence, Word};

/// Longest sample [`sample`] will draw.
pub const MAX_SAMPLE_LENGTH: usize = 1 << 20;

/// Longest depth for count-of-ones aggregated total variation.
pub const MAX_EXCHANGEABLE_DEPTH: usize = 1 << 16;

/// A probability on `{0,1}^∞` given by its cylinder masses.
///
/// Implementations must satisfy `mass(λ) = 1`, `mass(x) ≥ 0` and
/// `mass(x) = mass(x0) + mass(x1)`.
pub trait CylinderMeasure {
    fn mass(&self, x: &Word) -> Result<Rational>;

    /// For exchangeable measures, the mass of any word of length `len` with
    /// `ones` ones. `None` when the measure is not known to be exchangeable.
    fn count_mass(&self, _ones: usize, _len: usize) -> Option<Result<Rational>> {
        None
    }

    /// Probability that the bit after `prefix` is 1, given `mass(prefix) > 0`.
    fn next_one_probability(&self, prefix: &Word, prefix_mass: &Rational) -> Result<Rational> {
        Ok(self.mass(&prefix.child(true))? / prefix_mass)
    }
}

impl<T: CylinderMeasure + ?Sized> CylinderMeasure for &T {
    fn mass(&self, x: &Word) -> Result<Rational> {
        (**self).mass(x)
    }
    fn count_mass(&self, ones: usize, len: usize) -> Option<Result<Rational>> {
        (**self).count_mass(ones, len)
    }
    fn next_one_probability(&self, prefix: &Word, prefix_mass: &Rational) -> Result<Rational> {
        (**self).next_one_probability(prefix, prefix_mass)
    }
}

impl<T: CylinderMeasure + ?Sized> CylinderMeasure for Box<T> {
    fn mass(&self, x: &Word) -> Result<Rational> {
        (**self).mass(x)
    }
    fn count_mass(&self, ones: usize, len: usize) -> Option<Result<Rational>> {
        (**self).count_mass(ones, len)
    }
    fn next_one_probability(&self, prefix: &Word, prefix_mass: &Rational) -> Result<Rational> {
        (**self).next_one_probability(prefix, prefix_mass)
    }
}

/// JSON description of a concrete model family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Bernoulli {
        theta: Exact,
    },
    Uniform,
    /// `initial` is the probability that the first bit is 1;
    /// `transitions[a][b]` is the probability of bit `b` after bit `a`.
    Markov {
        initial: Exact,
        transitions: Box<[[Exact; 2]; 2]>,
    },
    #[serde(rename = "pointmass")]
    PointMass {
        head: Word,
        repeat: Word,
    },
    Mixture {
        weights: Vec<Exact>,
        components: Vec<ModelSpec>,
    },
}

impl ModelSpec {
    pub fn bernoulli(theta: Rational) -> Self {
        ModelSpec::Bernoulli { theta: Exact(theta) }
    }

    pub fn point_mass(seq: &PeriodicSequence) -> Self {
        ModelSpec::PointMass { head: seq.head.clone(), repeat: seq.repeat.clone() }
    }

    pub fn mixture(weights: Vec<Rational>, components: Vec<ModelSpec>) -> Self {
        ModelSpec::Mixture { weights: weights.into_iter().map(Exact).collect(), components }
    }
}

/// A validated [`ModelSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Bernoulli(Rational),
    Markov { initial: Rational, transitions: Box<[[Rational; 2]; 2]> },
    PointMass(PeriodicSequence),
    Mixture(Vec<(Rational, Model)>),
}

fn check_unit(q: &Rational, what: &str) -> Result<()> {
    if q.is_negative() || q > &Rational::one() {
        Err(Error::spec(format!("{what} = {} is outside [0, 1]", Exact(q.clone()))))
    } else {
        Ok(())
    }
}

impl Model {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Bernoulli { theta } => {
                check_unit(&theta.0, "theta")?;
                Ok(Model::Bernoulli(theta.0.clone()))
            }
            ModelSpec::Uniform => Ok(Model::uniform()),
            ModelSpec::Markov { initial, transitions } => {
                check_unit(&initial.0, "initial")?;
                for row in transitions.iter() {
                    check_unit(&row[0].0, "transition")?;
                    check_unit(&row[1].0, "transition")?;
                    if &row[0].0 + &row[1].0 != Rational::one() {
                        return Err(Error::spec("markov transition rows must sum to 1"));
                    }
                }
                Ok(Model::Markov {
                    initial: initial.0.clone(),
                    transitions: Box::new((**transitions).clone().map(|row| row.map(|e| e.0))),
                })
            }
            ModelSpec::PointMass { head, repeat } => {
                Ok(Model::PointMass(PeriodicSequence::new(head.clone(), repeat.clone())?))
            }
            ModelSpec::Mixture { weights, components } => {
                if weights.len() != components.len() || weights.is_empty() {
                    return Err(Error::spec("mixture needs one weight per component"));
                }
                if weights.iter().any(|w| !w.0.is_positive()) {
                    return Err(Error::spec("mixture weights must be positive"));
                }
                let total: Rational = weights.iter().map(|w| w.0.clone()).sum();
                if total != Rational::one() {
                    return Err(Error::spec(format!("mixture weights sum to {}, not 1", Exact(total))));
                }
                let parts = weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| Ok((w.0.clone(), Model::new(c)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Model::Mixture(parts))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| Error::spec(e.to_string()))?;
        Model::new(&spec)
    }

    pub fn uniform() -> Self {
        Model::Bernoulli(ratio(1, 2))
    }

    pub fn bernoulli(theta: Rational) -> Self {
        Model::new(&ModelSpec::bernoulli(theta)).expect("theta in [0, 1]")
    }

    pub fn spec(&self) -> ModelSpec {
        match self {
            Model::Bernoulli(t) => ModelSpec::bernoulli(t.clone()),
            Model::Markov { initial, transitions } => ModelSpec::Markov {
                initial: Exact(initial.clone()),
                transitions: Box::new((**transitions).clone().map(|row| row.map(Exact))),
            },
            Model::PointMass(seq) => ModelSpec::point_mass(seq),
            Model::Mixture(parts) => ModelSpec::Mixture {
                weights: parts.iter().map(|(w, _)| Exact(w.clone())).collect(),
                components: parts.iter().map(|(_, m)| m.spec()).collect(),
            },
        }
    }
}

fn bernoulli_mass(theta: &Rational, ones: usize, zeros: usize) -> Rational {
    pow(theta, ones) * pow(&(Rational::one() - theta), zeros)
}

impl CylinderMeasure for Model {
    fn mass(&self, x: &Word) -> Result<Rational> {
        Ok(match self {
            Model::Bernoulli(theta) => bernoulli_mass(theta, x.ones(), x.zeros()),
            Model::Markov { initial, transitions } => {
                let mut bits = x.bits().iter();
                let Some(&first) = bits.next() else {
                    return Ok(Rational::one());
                };
                let mut m = if first { initial.clone() } else { Rational::one() - initial };
                let mut prev = first;
                for &b in bits {
                    m *= &transitions[prev as usize][b as usize];
                    prev = b;
                }
                m
            }
            Model::PointMass(seq) => {
                if seq.in_cylinder(x) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Model::Mixture(parts) => {
                let mut total = Rational::zero();
                for (w, m) in parts {
                    total += w * m.mass(x)?;
                }
                total
            }
        })
    }

    fn count_mass(&self, ones: usize, len: usize) -> Option<Result<Rational>> {
        match self {
            Model::Bernoulli(theta) => Some(Ok(bernoulli_mass(theta, ones, len - ones))),
            Model::Mixture(parts) => {
                let mut total = Rational::zero();
                for (w, m) in parts {
                    match m.count_mass(ones, len)? {
                        Ok(v) => total += w * v,
                        Err(e) => return Some(Err(e)),
                    }
                }
                Some(Ok(total))
            }
            _ => None,
        }
    }

    fn next_one_probability(&self, prefix: &Word, prefix_mass: &Rational) -> Result<Rational> {
        match self {
            Model::Bernoulli(theta) => Ok(theta.clone()),
            Model::Markov { initial, transitions } => Ok(match prefix.bits().last() {
                None => initial.clone(),
                Some(&b) => transitions[b as usize][1].clone(),
            }),
            Model::PointMass(seq) => Ok(if seq.bit(prefix.len()) { Rational::one() } else { Rational::zero() }),
            Model::Mixture(_) => Ok(self.mass(&prefix.child(true))? / prefix_mass),
        }
    }
}

/// A measure given by an explicit table of cylinder masses; words missing
/// from the table have mass 0. Nothing enforces additivity, which makes it
/// the negative control for [`validate_additivity`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableMeasure {
    pub masses: BTreeMap<Word, Rational>,
}

impl TableMeasure {
    /// Tabulates `m` on every word of length at most `depth`.
    pub fn tabulate<M: CylinderMeasure>(m: &M, depth: usize, budget: DepthBudget) -> Result<Self> {
        let mut masses = BTreeMap::new();
        for n in 0..=depth {
            for x in partition(n, budget)? {
                let v = m.mass(&x)?;
                masses.insert(x, v);
            }
        }
        Ok(TableMeasure { masses })
    }
}

impl CylinderMeasure for TableMeasure {
    fn mass(&self, x: &Word) -> Result<Rational> {
        Ok(self.masses.get(x).cloned().unwrap_or_else(Rational::zero))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdditivityViolation {
    pub word: Word,
    pub mass: Exact,
    pub children_sum: Exact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdditivityReport {
    pub depth: usize,
    pub root_mass: Exact,
    pub checked: usize,
    pub negative: Vec<Word>,
    pub violations: Vec<AdditivityViolation>,
}

impl AdditivityReport {
    pub fn is_valid(&self) -> bool {
        self.root_mass.0.is_one() && self.negative.is_empty() && self.violations.is_empty()
    }
}

/// Checks `mass(x) = mass(x0) + mass(x1)` exactly for all `|x| < depth`,
/// plus `mass(λ) = 1` and nonnegativity down to `depth`.
pub fn validate_additivity<M: CylinderMeasure + ?Sized>(
    m: &M,
    depth: usize,
    budget: DepthBudget,
) -> Result<AdditivityReport> {
    budget.check(depth)?;
    let root = m.mass(&Word::empty())?;
    let mut negative = Vec::new();
    let mut violations = Vec::new();
    let mut checked = 0;
    if root.is_negative() {
        negative.push(Word::empty());
    }
    for n in 0..depth {
        for x in partition(n, budget)? {
            let parent = m.mass(&x)?;
            let (c0, c1) = (m.mass(&x.child(false))?, m.mass(&x.child(true))?);
            for (c, v) in [(x.child(false), &c0), (x.child(true), &c1)] {
                if v.is_negative() {
                    negative.push(c);
                }
            }
            let sum = c0 + c1;
            if sum != parent {
                violations.push(AdditivityViolation { word: x, mass: Exact(parent), children_sum: Exact(sum) });
            }
            checked += 1;
        }
    }
    Ok(AdditivityReport { depth, root_mass: Exact(root), checked, negative, violations })
}

/// `TV_n(p, q) = ½ Σ_{|x|=n} |p(x) − q(x)|`.
///
/// Exchangeable pairs are aggregated by count of ones in `O(n)` terms;
/// other pairs are summed over all `2^n` words and must fit the budget.
pub fn total_variation_at_depth<P, Q>(p: &P, q: &Q, n: usize, budget: DepthBudget) -> Result<Rational>
where
    P: CylinderMeasure + ?Sized,
    Q: CylinderMeasure + ?Sized,
{
    if p.count_mass(0, n).is_some() && q.count_mass(0, n).is_some() {
        total_variation_exchangeable(p, q, n)
    } else {
        total_variation_brute_force(p, q, n, budget)
    }
}

pub fn total_variation_brute_force<P, Q>(p: &P, q: &Q, n: usize, budget: DepthBudget) -> Result<Rational>
where
    P: CylinderMeasure + ?Sized,
    Q: CylinderMeasure + ?Sized,
{
    let mut sum = Rational::zero();
    for x in partition(n, budget)? {
        sum += (p.mass(&x)? - q.mass(&x)?).abs();
    }
    Ok(sum / Rational::from_integer(BigInt::from(2)))
}

/// Count-of-ones aggregation; errors if either measure is not exchangeable.
pub fn total_variation_exchangeable<P, Q>(p: &P, q: &Q, n: usize) -> Result<Rational>
where
    P: CylinderMeasure + ?Sized,
    Q: CylinderMeasure + ?Sized,
{
    if n > MAX_EXCHANGEABLE_DEPTH {
        return Err(Error::DepthOverflow { requested: n, budget: MAX_EXCHANGEABLE_DEPTH });
    }
    let not_exch = || Error::Precondition("count-of-ones aggregation needs exchangeable measures".into());
    let mut sum = Rational::zero();
    for k in 0..=n {
        let pk = p.count_mass(k, n).ok_or_else(not_exch)??;
        let qk = q.count_mass(k, n).ok_or_else(not_exch)??;
        let diff = (pk - qk).abs();
        if !diff.is_zero() {
            sum += diff * Rational::from_integer(binomial(BigInt::from(n), BigInt::from(k)));
        }
    }
    Ok(sum / Rational::from_integer(BigInt::from(2)))
}

/// Uniform bits from a seeded ChaCha8 stream, consumed to decide exact
/// rational thresholds.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    rng: ChaCha8Rng,
}

impl ExactSampler {
    pub fn new(seed: u64) -> Self {
        ExactSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// An independent stream for `(seed, stream)`; used to give every trial
    /// its own generator regardless of execution order.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        ExactSampler { rng }
    }

    /// Returns `true` with probability exactly `p`: a uniform `u ∈ [0,1)` is
    /// revealed 64 bits at a time until `u < p` or `u ≥ p` is decided.
    pub fn bernoulli(&mut self, p: &Rational) -> bool {
        if !p.is_positive() {
            return false;
        }
        if p >= &Rational::one() {
            return true;
        }
        let den = p.denom().clone();
        let mut num = p.numer().clone();
        loop {
            let draw = BigInt::from(self.rng.next_u64());
            let scaled = &num << 64usize;
            let (q, r) = (&scaled / &den, &scaled % &den);
            if draw < q {
                return true;
            }
            if draw > q {
                return false;
            }
            num = r;
        }
    }
}

/// Draws a word of length `length` from `m`, bit by bit with the exact
/// conditional probabilities.
pub fn sample<M: CylinderMeasure + ?Sized>(m: &M, length: usize, seed: u64) -> Result<Word> {
    sample_with(m, length, &mut ExactSampler::new(seed))
}

pub fn sample_with<M: CylinderMeasure + ?Sized>(m: &M, length: usize, rng: &mut ExactSampler) -> Result<Word> {
    if length > MAX_SAMPLE_LENGTH {
        return Err(Error::Precondition(format!("sample length {length} exceeds {MAX_SAMPLE_LENGTH}")));
    }
    let mut prefix = Word::empty();
    let mut prefix_mass = m.mass(&prefix)?;
    for _ in 0..length {
        if !prefix_mass.is_positive() {
            return Err(Error::Precondition(format!("sampling reached zero-mass prefix {prefix}")));
        }
        let p1 = m.next_one_probability(&prefix, &prefix_mass)?;
        let bit = rng.bernoulli(&p1);
        let branch = if bit { p1 } else { Rational::one() - p1 };
        prefix_mass *= branch;
        prefix = prefix.child(bit);
    }
    Ok(prefix)
}
