//! Joint measures on `X × Y = {0,1}^∞ × {0,1}^∞`, evaluated on product
//! cylinders `Δ(x) × Δ(y)`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::budget::DepthBudget;
use crate::error::{Axis, Error, Result};
use crate::measure::{CylinderMeasure, Model, ModelSpec};
use crate::rational::{biguint_to_int, pow, Exact, Rational};
use crate::words::{dyadic_value, partition, DyadicInterval, PeriodicSequence, Word};

pub trait JointMeasure {
    /// `P(Δ(x) × Δ(y))`.
    fn mass2(&self, x: &Word, y: &Word) -> Result<Rational>;

    /// When `x ↦ mass2(x, y)` is exchangeable: the mass of any `x` of length
    /// `len` with `ones` ones.
    fn count_mass2(&self, _ones: usize, _len: usize, _y: &Word) -> Option<Result<Rational>> {
        None
    }

    /// The limit `P(x | y^∞)` of the conditional martingale, where a closed
    /// form is known.
    fn limit_conditional(&self, _x: &Word, _y: &PeriodicSequence) -> Option<Result<Rational>> {
        None
    }

    /// `mass2(prefix·1, y) / mass2(prefix, y)` given `prefix_mass2 =
    /// mass2(prefix, y) > 0`.
    fn next_x_one_probability(&self, prefix: &Word, y: &Word, prefix_mass2: &Rational) -> Result<Rational> {
        Ok(self.mass2(&prefix.child(true), y)? / prefix_mass2)
    }
}

impl<T: JointMeasure + ?Sized> JointMeasure for &T {
    fn mass2(&self, x: &Word, y: &Word) -> Result<Rational> {
        (**self).mass2(x, y)
    }
    fn count_mass2(&self, ones: usize, len: usize, y: &Word) -> Option<Result<Rational>> {
        (**self).count_mass2(ones, len, y)
    }
    fn limit_conditional(&self, x: &Word, y: &PeriodicSequence) -> Option<Result<Rational>> {
        (**self).limit_conditional(x, y)
    }
    fn next_x_one_probability(&self, prefix: &Word, y: &Word, prefix_mass2: &Rational) -> Result<Rational> {
        (**self).next_x_one_probability(prefix, y, prefix_mass2)
    }
}

impl<T: JointMeasure + ?Sized> JointMeasure for Box<T> {
    fn mass2(&self, x: &Word, y: &Word) -> Result<Rational> {
        (**self).mass2(x, y)
    }
    fn count_mass2(&self, ones: usize, len: usize, y: &Word) -> Option<Result<Rational>> {
        (**self).count_mass2(ones, len, y)
    }
    fn limit_conditional(&self, x: &Word, y: &PeriodicSequence) -> Option<Result<Rational>> {
        (**self).limit_conditional(x, y)
    }
    fn next_x_one_probability(&self, prefix: &Word, y: &Word, prefix_mass2: &Rational) -> Result<Rational> {
        (**self).next_x_one_probability(prefix, y, prefix_mass2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JointSpec {
    Product { x: ModelSpec, y: ModelSpec },
    BetaBernoulli,
    Counterexample(CounterexampleSpec),
}

/// Increasing approximants `r(a_1) < … < r(a_I)` of `alpha` from below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSpec {
    pub approximants: Vec<Word>,
    pub alpha: Exact,
}

impl CounterexampleSpec {
    /// Approximants `a_i = (10)^i`, `i = 1..=count`, of `alpha = 2/3`.
    pub fn alternating(count: usize) -> Self {
        let approximants = (1..=count).map(|i| (0..i).fold(Word::empty(), |w, _| w.child(true).child(false))).collect();
        CounterexampleSpec { approximants, alpha: Exact(Rational::new(2.into(), 3.into())) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Joint {
    Product(Model, Model),
    /// Uniform prior on `θ ∈ [0,1]` encoded by the dyadic value of the
    /// `y`-bits, with a Bernoulli(θ) kernel on `x`.
    BetaBernoulli,
    Counterexample(Counterexample),
}

impl Joint {
    pub fn new(spec: &JointSpec) -> Result<Self> {
        match spec {
            JointSpec::Product { x, y } => Ok(Joint::Product(Model::new(x)?, Model::new(y)?)),
            JointSpec::BetaBernoulli => Ok(Joint::BetaBernoulli),
            JointSpec::Counterexample(c) => Ok(Joint::Counterexample(Counterexample::new(c.clone())?)),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: JointSpec = serde_json::from_str(text).map_err(|e| Error::spec(e.to_string()))?;
        Joint::new(&spec)
    }

    pub fn uniform_product() -> Self {
        Joint::Product(Model::uniform(), Model::uniform())
    }

    pub fn spec(&self) -> JointSpec {
        match self {
            Joint::Product(p, q) => JointSpec::Product { x: p.spec(), y: q.spec() },
            Joint::BetaBernoulli => JointSpec::BetaBernoulli,
            Joint::Counterexample(c) => JointSpec::Counterexample(c.spec.clone()),
        }
    }
}

impl JointMeasure for Joint {
    fn mass2(&self, x: &Word, y: &Word) -> Result<Rational> {
        match self {
            Joint::Product(p, q) => Ok(p.mass(x)? * q.mass(y)?),
            Joint::BetaBernoulli => Ok(beta_bernoulli_mass(x.ones(), x.len(), y)),
            Joint::Counterexample(c) => c.mass2(x, y),
        }
    }

    fn count_mass2(&self, ones: usize, len: usize, y: &Word) -> Option<Result<Rational>> {
        match self {
            Joint::Product(p, q) => {
                let px = p.count_mass(ones, len)?;
                Some(px.and_then(|px| Ok(px * q.mass(y)?)))
            }
            Joint::BetaBernoulli => Some(Ok(beta_bernoulli_mass(ones, len, y))),
            Joint::Counterexample(_) => None,
        }
    }

    fn limit_conditional(&self, x: &Word, y: &PeriodicSequence) -> Option<Result<Rational>> {
        match self {
            Joint::Product(p, _) => Some(p.mass(x)),
            Joint::BetaBernoulli => {
                let theta = y.value();
                Some(Ok(pow(&theta, x.ones()) * pow(&(Rational::one() - &theta), x.zeros())))
            }
            Joint::Counterexample(c) => Some(c.limit_conditional(x, y)),
        }
    }

    fn next_x_one_probability(&self, prefix: &Word, y: &Word, prefix_mass2: &Rational) -> Result<Rational> {
        match self {
            Joint::BetaBernoulli => {
                let next = beta_bernoulli_step(prefix.ones(), prefix.zeros(), y, prefix_mass2);
                Ok(next / prefix_mass2)
            }
            _ => Ok(self.mass2(&prefix.child(true), y)? / prefix_mass2),
        }
    }
}

/// Given `J(a, b) = ∫ θ^a (1−θ)^b` over `Δ(y)`'s interval, returns `J(a+1, b)`
/// via `(a+b+2) J(a+1,b) = (a+1) J(a,b) − [θ^{a+1}(1−θ)^{b+1}]_lo^hi`.
fn beta_bernoulli_step(a: usize, b: usize, y: &Word, current: &Rational) -> Rational {
    let interval = y.interval();
    let boundary = |t: &Rational| pow(t, a + 1) * pow(&(Rational::one() - t), b + 1);
    let d = boundary(&interval.upper) - boundary(&interval.lower);
    (current * Rational::from_integer(BigInt::from(a + 1)) - d) / Rational::from_integer(BigInt::from(a + b + 2))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JointAdditivityViolation {
    pub x: Word,
    pub y: Word,
    pub axis: String,
    pub mass: Exact,
    pub children_sum: Exact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JointAdditivityReport {
    pub depth: usize,
    pub root_mass: Exact,
    pub checked: usize,
    pub negative: Vec<(Word, Word)>,
    pub violations: Vec<JointAdditivityViolation>,
}

impl JointAdditivityReport {
    pub fn is_valid(&self) -> bool {
        self.root_mass.0.is_one() && self.negative.is_empty() && self.violations.is_empty()
    }
}

/// Checks additivity in each coordinate for all `|x|, |y| < depth`, plus
/// `mass2(λ, λ) = 1` and nonnegativity on all `|x|, |y| ≤ depth`.
pub fn validate_joint_additivity<J: JointMeasure + ?Sized>(
    joint: &J,
    depth: usize,
    budget: DepthBudget,
) -> Result<JointAdditivityReport> {
    budget.check(depth)?;
    let words: Vec<Word> = (0..=depth).map(|n| partition(n, budget)).collect::<Result<Vec<_>>>()?.concat();
    let mut table = HashMap::with_capacity(words.len() * words.len());
    for x in &words {
        for y in &words {
            table.insert((x.clone(), y.clone()), joint.mass2(x, y)?);
        }
    }
    let get = |x: &Word, y: &Word| &table[&(x.clone(), y.clone())];
    let mut negative = Vec::new();
    let mut violations = Vec::new();
    let mut checked = 0;
    for x in &words {
        for y in &words {
            let m = get(x, y);
            if m.is_negative() {
                negative.push((x.clone(), y.clone()));
            }
            if x.len() < depth {
                let sum = get(&x.child(false), y) + get(&x.child(true), y);
                checked += 1;
                if &sum != m {
                    violations.push(JointAdditivityViolation {
                        x: x.clone(),
                        y: y.clone(),
                        axis: "x".into(),
                        mass: Exact(m.clone()),
                        children_sum: Exact(sum),
                    });
                }
            }
            if y.len() < depth {
                let sum = get(x, &y.child(false)) + get(x, &y.child(true));
                checked += 1;
                if &sum != m {
                    violations.push(JointAdditivityViolation {
                        x: x.clone(),
                        y: y.clone(),
                        axis: "y".into(),
                        mass: Exact(m.clone()),
                        children_sum: Exact(sum),
                    });
                }
            }
        }
    }
    let root = get(&Word::empty(), &Word::empty()).clone();
    Ok(JointAdditivityReport { depth, root_mass: Exact(root), checked, negative, violations })
}

/// `∫_{r(y)}^{r(y)+2^{-l(y)}} θ^a (1−θ)^{n−a} dθ` for `a = ones`, `n = len`.
///
/// Uses the binomial-tail form of the incomplete Beta integral,
/// `∫_0^t θ^a(1−θ)^{n−a} dθ = Σ_{k=a+1}^{n+1} C(n+1,k) t^k (1−t)^{n+1−k} / ((n+1) C(n,a))`,
/// evaluated with integer numerators over the shared denominator `2^{l(y)(n+1)}`.
pub fn beta_bernoulli_mass(ones: usize, len: usize, y: &Word) -> Rational {
    assert!(ones <= len);
    let depth = y.len();
    let scale = BigInt::one() << depth;
    let lo = biguint_to_int(y.index());
    let hi = &lo + 1;
    let m = len + 1;

    // C(m, k) for k = 0..=m.
    let mut binom = Vec::with_capacity(m + 1);
    binom.push(BigInt::one());
    for k in 1..=m {
        let next = &binom[k - 1] * BigInt::from(m - k + 1) / BigInt::from(k);
        binom.push(next);
    }

    let tail = |t: &BigInt| -> BigInt {
        if t.is_zero() {
            return BigInt::zero();
        }
        let u = &scale - t;
        let mut t_pow = vec![BigInt::one(); m + 1];
        let mut u_pow = vec![BigInt::one(); m + 1];
        for k in 1..=m {
            t_pow[k] = &t_pow[k - 1] * t;
            u_pow[k] = &u_pow[k - 1] * &u;
        }
        (ones + 1..=m).map(|k| &binom[k] * &t_pow[k] * &u_pow[m - k]).sum()
    };

    let numer = tail(&hi) - tail(&lo);
    // (n+1) C(n, a) = (a+1) C(n+1, a+1)
    let denom = (BigInt::one() << (depth * m)) * &binom[ones + 1] * BigInt::from(ones + 1);
    Rational::new(numer, denom)
}

/// The two-dimensional measure built from the approximants: the atom
/// `1^i 0^∞` carries the uniform measure on `B_i = [r(a_{i−1}), r(a_i))`
/// (with `r(a_0) = 0`) and the atom `1^∞` carries the uniform measure on
/// `[alpha, 1)`. The `X`-marginal is uniform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    spec: CounterexampleSpec,
    /// `r(a_0) = 0, r(a_1), …, r(a_I)`.
    cuts: Vec<Rational>,
    alpha: Rational,
}

impl Counterexample {
    pub fn new(spec: CounterexampleSpec) -> Result<Self> {
        if spec.approximants.is_empty() {
            return Err(Error::spec("counterexample needs at least one approximant"));
        }
        let mut cuts = vec![Rational::zero()];
        for (i, a) in spec.approximants.iter().enumerate() {
            let r = dyadic_value(a);
            if i > 0 && &r <= cuts.last().unwrap() {
                return Err(Error::spec(format!("approximant {a} does not increase r(a_i)")));
            }
            cuts.push(r);
        }
        let alpha = spec.alpha.0.clone();
        if &alpha <= cuts.last().unwrap() || alpha >= Rational::one() {
            return Err(Error::spec("alpha must satisfy r(a_I) < alpha < 1"));
        }
        Ok(Counterexample { spec, cuts, alpha })
    }

    pub fn spec(&self) -> &CounterexampleSpec {
        &self.spec
    }

    /// Number of approximants `I`.
    pub fn len(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    /// `r(a_i)` for `i ∈ 0..=I`, with `r(a_0) = 0`.
    pub fn cut(&self, i: usize) -> &Rational {
        &self.cuts[i]
    }

    pub fn max_approximant_len(&self) -> usize {
        self.spec.approximants.iter().map(Word::len).max().unwrap_or(0)
    }

    /// `B_i` for `1 ≤ i ≤ I`.
    pub fn piece(&self, i: usize) -> DyadicInterval {
        assert!((1..=self.len()).contains(&i));
        DyadicInterval::new(self.cuts[i - 1].clone(), self.cuts[i].clone())
    }

    /// X-support `[alpha, 1)` of the atom `1^∞`.
    pub fn tail(&self) -> DyadicInterval {
        DyadicInterval::new(self.alpha.clone(), Rational::one())
    }

    fn last_cut(&self) -> &Rational {
        self.cuts.last().unwrap()
    }

    fn unresolved(&self, x: &DyadicInterval) -> bool {
        x.meets(self.last_cut(), &self.alpha)
    }

    fn insufficient(&self, x: &Word, y: &Word) -> Error {
        Error::InsufficientApproximants(format!(
            "mass of Δ({x})×Δ({y}) depends on approximants beyond index {}",
            self.len()
        ))
    }

    pub fn mass2(&self, x: &Word, y: &Word) -> Result<Rational> {
        let xi = x.interval();
        let one = Rational::one();
        if y.is_all_ones() {
            // Atoms 1^i 0^∞ for i ≥ m together with 1^∞: X-support [r(a_{m−1}), 1).
            let m = y.len();
            if m == 0 {
                return Ok(xi.length());
            }
            if m - 1 <= self.len() {
                return Ok(xi.overlap(&self.cuts[m - 1], &one));
            }
            if self.unresolved(&xi) {
                return Err(self.insufficient(x, y));
            }
            return Ok(xi.overlap(&self.alpha, &one));
        }
        let lead = y.bits().iter().take_while(|&&b| b).count();
        if lead == 0 || y.bits()[lead..].iter().any(|&b| b) {
            return Ok(Rational::zero());
        }
        // y = 1^lead 0^+: only the atom 1^lead 0^∞ lies in Δ(y).
        if lead <= self.len() {
            return Ok(xi.overlap(&self.cuts[lead - 1], &self.cuts[lead]));
        }
        if self.unresolved(&xi) {
            return Err(self.insufficient(x, y));
        }
        Ok(Rational::zero())
    }

    /// `P_Y(Δ(1^k)) = 1 − r(a_{k−1})`, for `0 ≤ k ≤ I + 1`.
    pub fn y_tail_mass(&self, k: usize) -> Result<Rational> {
        match k {
            0 => Ok(Rational::one()),
            k if k - 1 <= self.len() => Ok(Rational::one() - &self.cuts[k - 1]),
            _ => Err(Error::Precondition(format!("k = {k} is outside 0..={}", self.len() + 1))),
        }
    }

    /// `P_Y({1^∞}) = 1 − alpha`.
    pub fn y_limit_mass(&self) -> Rational {
        Rational::one() - &self.alpha
    }

    /// `P(x | y^∞)` for the atoms of `P_Y`: uniform on `B_i` given `1^i0^∞`,
    /// uniform on `[alpha, 1)` given `1^∞`.
    pub fn limit_conditional(&self, x: &Word, y: &PeriodicSequence) -> Result<Rational> {
        let xi = x.interval();
        let head_ones = |w: &Word| w.bits().iter().take_while(|&&b| b).count();
        if y.head.is_all_ones() && y.repeat.is_all_ones() {
            let tail = self.tail();
            return Ok(xi.overlap(&tail.lower, &tail.upper) / tail.length());
        }
        let lead = head_ones(&y.head);
        let rest_zero = y.head.bits()[lead..].iter().all(|&b| !b) && y.repeat.bits().iter().all(|&b| !b);
        if lead == 0 || !rest_zero {
            return Err(Error::NullConditioning { axis: Axis::Y, word: y.prefix(y.head.len() + y.repeat.len()) });
        }
        if lead > self.len() {
            return Err(Error::InsufficientApproximants(format!("atom 1^{lead}0^∞ needs approximant {lead}")));
        }
        let piece = self.piece(lead);
        if !piece.length().is_positive() {
            return Err(Error::NullConditioning { axis: Axis::Y, word: y.prefix(lead + 1) });
        }
        Ok(xi.overlap(&piece.lower, &piece.upper) / piece.length())
    }
}
