//! Finite binary words, their cylinders, and the dyadic intervals the
//! cylinders occupy in `[0, 1)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::budget::DepthBudget;
use crate::error::{Error, Result};
use crate::rational::{biguint_to_int, inv_pow2, Rational};

/// A finite binary word `s = s_1 … s_k`, the index of the cylinder `Δ(s)`.
///
/// Words are kept as explicit bit sequences: `"1"` and `"10"` share the
/// same dyadic value but are different cylinders.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<bool>);

impl Word {
    /// The empty word λ.
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Word(bits)
    }

    /// `bit` repeated `n` times.
    pub fn repeat(bit: bool, n: usize) -> Self {
        Word(vec![bit; n])
    }

    /// The length-`len` word whose bits are the binary digits of `value`
    /// (most significant first). `value` must be `< 2^len`.
    pub fn from_index(value: &BigUint, len: usize) -> Self {
        Word((0..len).map(|i| value.bit((len - 1 - i) as u64)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn zeros(&self) -> usize {
        self.len() - self.ones()
    }

    /// `self · bit`.
    pub fn child(&self, bit: bool) -> Word {
        let mut bits = Vec::with_capacity(self.len() + 1);
        bits.extend_from_slice(&self.0);
        bits.push(bit);
        Word(bits)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        Word(bits)
    }

    pub fn parent(&self) -> Option<Word> {
        if self.is_empty() {
            None
        } else {
            Some(Word(self.0[..self.len() - 1].to_vec()))
        }
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    /// `self ⊑ other`.
    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Two cylinders intersect iff one word is a prefix of the other.
    pub fn comparable(&self, other: &Word) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn is_all_ones(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    /// `r(s) · 2^{l(s)}` as an integer.
    pub fn index(&self) -> BigUint {
        let mut n = BigUint::zero();
        for &b in &self.0 {
            n <<= 1;
            if b {
                n += 1u32;
            }
        }
        n
    }

    pub fn interval(&self) -> DyadicInterval {
        let lower = dyadic_value(self);
        let upper = &lower + inv_pow2(self.len());
        DyadicInterval { lower, upper }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::spec(format!("{s:?} is not a binary word"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Half-open interval `[lower, upper)` of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicInterval {
    pub lower: Rational,
    pub upper: Rational,
}

impl DyadicInterval {
    pub fn new(lower: Rational, upper: Rational) -> Self {
        debug_assert!(lower <= upper);
        DyadicInterval { lower, upper }
    }

    pub fn length(&self) -> Rational {
        &self.upper - &self.lower
    }

    pub fn is_empty(&self) -> bool {
        self.lower >= self.upper
    }

    /// Length of the intersection with `[lower, upper)`.
    pub fn overlap(&self, lower: &Rational, upper: &Rational) -> Rational {
        let lo = if &self.lower > lower { &self.lower } else { lower };
        let hi = if &self.upper < upper { &self.upper } else { upper };
        if lo < hi {
            hi - lo
        } else {
            Rational::zero()
        }
    }

    pub fn meets(&self, lower: &Rational, upper: &Rational) -> bool {
        &self.upper > lower && &self.lower < upper
    }
}

/// `r(s) = Σ 2^{-i} s_i`.
pub fn dyadic_value(s: &Word) -> Rational {
    Rational::new(biguint_to_int(s.index()), BigInt::one() << s.len())
}

/// All words of the same length as `a` whose dyadic value is below `r(a)`.
/// Their cylinders tile `[0, r(a))`.
pub fn strict_below(a: &Word, budget: DepthBudget) -> Result<Vec<Word>> {
    if a.is_empty() {
        return Err(Error::Precondition("strict_below needs a nonempty word".into()));
    }
    budget.check(a.len())?;
    let top = a.index();
    let mut out = Vec::new();
    let mut i = BigUint::zero();
    while i < top {
        out.push(Word::from_index(&i, a.len()));
        i += 1u32;
    }
    Ok(out)
}

/// All `2^n` words of length `n` in lexicographic order.
pub fn partition(n: usize, budget: DepthBudget) -> Result<Vec<Word>> {
    budget.check(n)?;
    let count = 1usize << n;
    Ok((0..count).map(|i| Word((0..n).map(|b| (i >> (n - 1 - b)) & 1 == 1).collect())).collect())
}

/// The canonical antichain with the same cylinder union: dominated words are
/// dropped and complete sibling pairs are merged into their parent until no
/// pair remains. Output is sorted.
pub fn cylinder_union_normalize<'a, I>(ws: I) -> Vec<Word>
where
    I: IntoIterator<Item = &'a Word>,
{
    let sorted: BTreeSet<&Word> = ws.into_iter().collect();
    let mut antichain: Vec<Word> = Vec::new();
    for w in sorted {
        match antichain.last() {
            Some(last) if last.is_prefix_of(w) => {}
            _ => antichain.push(w.clone()),
        }
    }

    let max_len = antichain.iter().map(Word::len).max().unwrap_or(0);
    let mut by_len: Vec<BTreeSet<Word>> = vec![BTreeSet::new(); max_len + 1];
    for w in antichain {
        by_len[w.len()].insert(w);
    }
    for len in (1..=max_len).rev() {
        let level = std::mem::take(&mut by_len[len]);
        let mut kept = BTreeSet::new();
        for w in &level {
            let sibling = {
                let mut bits = w.0.clone();
                let last = bits.len() - 1;
                bits[last] = !bits[last];
                Word(bits)
            };
            if level.contains(&sibling) {
                by_len[len - 1].insert(w.parent().expect("nonempty"));
            } else {
                kept.insert(w.clone());
            }
        }
        by_len[len] = kept;
    }
    by_len.into_iter().flatten().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Whether `Δ(w)` lies inside the union of the cylinders of a canonical
/// antichain (as produced by [`cylinder_union_normalize`]).
pub fn covered_by(w: &Word, canonical: &[Word]) -> bool {
    canonical.iter().any(|u| u.is_prefix_of(w))
}

/// The first `m` bits of the binary expansion of `q ∈ [0, 1)`.
pub fn binary_prefix(q: &Rational, m: usize) -> Word {
    let scaled = (q * Rational::from_integer(BigInt::one() << m)).floor().to_integer();
    let index = scaled.to_biguint().expect("q is nonnegative");
    Word::from_index(&index, m)
}

/// An eventually periodic infinite sequence `head · repeat^∞`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PeriodicSequence {
    pub head: Word,
    pub repeat: Word,
}

impl PeriodicSequence {
    pub fn new(head: Word, repeat: Word) -> Result<Self> {
        if repeat.is_empty() {
            return Err(Error::spec("periodic sequence needs a nonempty repeating part"));
        }
        Ok(PeriodicSequence { head, repeat })
    }

    /// `1^∞` or `0^∞`.
    pub fn constant(bit: bool) -> Self {
        PeriodicSequence { head: Word::empty(), repeat: Word::repeat(bit, 1) }
    }

    /// `1^i 0^∞`.
    pub fn ones_then_zeros(i: usize) -> Self {
        PeriodicSequence { head: Word::repeat(true, i), repeat: Word::repeat(false, 1) }
    }

    pub fn bit(&self, i: usize) -> bool {
        if i < self.head.len() {
            self.head.0[i]
        } else {
            let j = (i - self.head.len()) % self.repeat.len();
            self.repeat.0[j]
        }
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word((0..n).map(|i| self.bit(i)).collect())
    }

    /// Whether the sequence lies in `Δ(x)`.
    pub fn in_cylinder(&self, x: &Word) -> bool {
        x.0.iter().enumerate().all(|(i, &b)| self.bit(i) == b)
    }

    /// The point of `[0, 1]` with this binary expansion.
    pub fn value(&self) -> Rational {
        let period = self.repeat.len();
        let cycle = dyadic_value(&self.repeat) / (Rational::one() - inv_pow2(period));
        dyadic_value(&self.head) + cycle * inv_pow2(self.head.len())
    }
}

impl fmt::Display for PeriodicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.head, self.repeat)
    }
}

/// Parses `HEAD(REPEAT)`, e.g. `"(1)"` for `1^∞` or `"11(0)"` for `110^∞`.
impl FromStr for PeriodicSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::spec(format!("{s:?} is not of the form HEAD(REPEAT)"));
        let (head, rest) = s.trim().split_once('(').ok_or_else(bad)?;
        let repeat = rest.strip_suffix(')').ok_or_else(bad)?;
        PeriodicSequence::new(head.parse()?, repeat.parse()?)
    }
}
