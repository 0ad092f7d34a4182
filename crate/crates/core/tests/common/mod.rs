//! Independent oracles shared by the integration tests. Nothing here calls
//! the evaluation paths it is used to check.

#![allow(dead_code)]

use cantor_bayes::rational::{inv_pow2, Rational};
use cantor_bayes::words::{dyadic_value, partition, strict_below};
use cantor_bayes::{DepthBudget, Word};
use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Zero};

pub const B: DepthBudget = DepthBudget::DEFAULT;

pub fn w(s: &str) -> Word {
    s.parse().unwrap()
}

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn pow(x: &Rational, e: usize) -> Rational {
    num_traits::pow(x.clone(), e)
}

/// `∫_lo^hi θ^a (1−θ)^b dθ` by expanding `(1−θ)^b` and evaluating the
/// antiderivative `Σ_j C(b,j) (−1)^j θ^{a+j+1}/(a+j+1)` at both ends.
pub fn beta_integral(a: usize, b: usize, lo: &Rational, hi: &Rational) -> Rational {
    let mut total = Rational::zero();
    for j in 0..=b {
        let e = a + j + 1;
        let c = Rational::from_integer(binomial(BigInt::from(b), BigInt::from(j)));
        let term = c * (pow(hi, e) - pow(lo, e)) / q(e as i64);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Beta-Bernoulli joint mass by the expanded-polynomial route.
pub fn beta_bernoulli_oracle(x: &Word, y: &Word) -> Rational {
    let lo = dyadic_value(y);
    let hi = &lo + inv_pow2(y.len());
    beta_integral(x.ones(), x.zeros(), &lo, &hi)
}

/// `r(a_i)` values of `a_i = (10)^i`, from the closed form `(2/3)(1 − 4^{-i})`.
pub fn alternating_cut(i: usize) -> Rational {
    Rational::new(BigInt::from(2), BigInt::from(3)) * (Rational::one() - inv_pow2(2 * i))
}

/// `Ã_i` as the word set `A_i` of the construction.
pub fn a_set(approximants: &[Word], i: usize) -> Vec<Word> {
    if i == 0 {
        Vec::new()
    } else {
        strict_below(&approximants[i - 1], B).unwrap()
    }
}

fn in_union(s: &Word, set: &[Word]) -> bool {
    set.iter().any(|a| a.is_prefix_of(s))
}

/// Depth-`d` words `s ⊒ x` inside `B_i = Ã_i \ Ã_{i−1}`.
pub fn b_piece_words(approximants: &[Word], i: usize, x: &Word, d: usize) -> Vec<Word> {
    let (ai, prev) = (a_set(approximants, i), a_set(approximants, i - 1));
    partition(d, B)
        .unwrap()
        .into_iter()
        .filter(|s| x.is_prefix_of(s) && in_union(s, &ai) && !in_union(s, &prev))
        .collect()
}

/// Depth-`d` words `s ⊒ x` inside `(Ã_i)^c`.
pub fn outside_words(approximants: &[Word], i: usize, x: &Word, d: usize) -> Vec<Word> {
    let ai = a_set(approximants, i);
    partition(d, B).unwrap().into_iter().filter(|s| x.is_prefix_of(s) && !in_union(s, &ai)).collect()
}

pub fn report(id: &str, name: &str, ok: bool, detail: &str) {
    println!("[{}] criterion {id}: {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}
