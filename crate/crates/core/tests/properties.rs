mod common;

use cantor_bayes::bayes::map_estimate;
use cantor_bayes::measure::{total_variation_at_depth, validate_additivity, Model, ModelSpec};
use cantor_bayes::mltest::deficiency;
use cantor_bayes::rational::{inv_pow2, log2, ratio, Rational};
use cantor_bayes::words::{cylinder_union_normalize, dyadic_value, partition, strict_below};
use cantor_bayes::{CylinderMeasure, Joint, JointMeasure, Result, Word};
use common::*;
use num_traits::Zero;
use proptest::prelude::*;

fn rational_unit() -> impl Strategy<Value = Rational> {
    (1i64..64).prop_flat_map(|den| (0..=den).prop_map(move |num| ratio(num, den)))
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(any::<bool>(), 0..=max_len).prop_map(Word::from_bits)
}

fn markov() -> impl Strategy<Value = Model> {
    (rational_unit(), rational_unit(), rational_unit()).prop_map(|(init, p0, p1)| {
        let one = Rational::from_integer(1.into());
        Model::Markov { initial: init, transitions: Box::new([[&one - &p0, p0.clone()], [&one - &p1, p1.clone()]]) }
    })
}

/// Brute-force mass of a cylinder union: count covered depth-`d` cells.
fn union_mass_by_cells<M: CylinderMeasure>(m: &M, ws: &[Word], d: usize) -> Rational {
    partition(d, B)
        .unwrap()
        .into_iter()
        .filter(|s| ws.iter().any(|u| u.is_prefix_of(s)))
        .map(|s| m.mass(&s).unwrap())
        .sum()
}

struct Scaled<J> {
    inner: J,
    factor: Rational,
}

impl<J: JointMeasure> JointMeasure for Scaled<J> {
    fn mass2(&self, x: &Word, y: &Word) -> Result<Rational> {
        Ok(self.inner.mass2(x, y)? * &self.factor)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn tv_monotone_and_bounded(p in rational_unit(), q in rational_unit(), n in 0usize..12, extra in 1usize..6) {
        let (p, q) = (Model::bernoulli(p), Model::bernoulli(q));
        let m = (n + extra).min(12);
        let a = total_variation_at_depth(&p, &q, n, B).unwrap();
        let b = total_variation_at_depth(&p, &q, m, B).unwrap();
        prop_assert!(a <= b);
        prop_assert!(a >= Rational::zero() && b <= ratio(1, 1));
        prop_assert_eq!(b.clone(), total_variation_at_depth(&q, &p, m, B).unwrap());
    }

    #[test]
    fn tv_monotone_non_exchangeable(p in markov(), q in rational_unit(), n in 0usize..7) {
        let q = Model::bernoulli(q);
        let a = total_variation_at_depth(&p, &q, n, B).unwrap();
        let b = total_variation_at_depth(&p, &q, n + 1, B).unwrap();
        prop_assert!(a <= b);
        prop_assert_eq!(total_variation_at_depth(&p, &p, n, B).unwrap(), Rational::zero());
    }

    #[test]
    fn shipped_families_are_additive(theta in rational_unit(), m in markov(), w1 in 1i64..10, head in word(3), repeat in word(3)) {
        let repeat = if repeat.is_empty() { Word::repeat(true, 1) } else { repeat };
        let spec = ModelSpec::mixture(
            vec![ratio(w1, 10), ratio(10 - w1, 10)].into_iter().filter(|w| !w.is_zero()).collect(),
            vec![ModelSpec::bernoulli(theta.clone()), m.spec()].into_iter().take(if w1 == 10 { 1 } else { 2 }).collect(),
        );
        for model in [Model::bernoulli(theta), m, Model::new(&spec).unwrap(),
                      Model::new(&ModelSpec::PointMass { head, repeat }).unwrap()] {
            prop_assert!(validate_additivity(&model, 6, B).unwrap().is_valid());
        }
    }

    #[test]
    fn dyadic_children(s in word(20)) {
        prop_assert_eq!(dyadic_value(&s.child(false)), dyadic_value(&s));
        prop_assert_eq!(dyadic_value(&s.child(true)), dyadic_value(&s) + inv_pow2(s.len() + 1));
    }

    #[test]
    fn strict_below_tiles_prefix_interval(a in word(9).prop_filter("nonempty", |a| !a.is_empty())) {
        let below = strict_below(&a, B).unwrap();
        prop_assert_eq!(Rational::from_integer(below.len().into()), dyadic_value(&a) * Rational::from_integer((1u64 << a.len()).into()));
        let mut edge = Rational::zero();
        for s in &below {
            let iv = s.interval();
            prop_assert_eq!(&iv.lower, &edge);
            edge = iv.upper;
        }
        prop_assert_eq!(edge, dyadic_value(&a));
    }

    #[test]
    fn normalize_idempotent_and_measure_preserving(ws in prop::collection::vec(word(8), 0..12), m in markov()) {
        let once = cylinder_union_normalize(&ws);
        prop_assert_eq!(&cylinder_union_normalize(&once), &once);
        for (i, a) in once.iter().enumerate() {
            for b in &once[i + 1..] {
                prop_assert!(!a.comparable(b));
            }
        }
        let direct: Rational = once.iter().map(|w| m.mass(w).unwrap()).sum();
        prop_assert_eq!(direct, union_mass_by_cells(&m, &ws, 8));
    }

    #[test]
    fn map_invariant_under_scaling(x in word(10), num in 1i64..50, den in 1i64..50, k in 0usize..4) {
        let scaled = Scaled { inner: Joint::BetaBernoulli, factor: ratio(num, den) };
        prop_assert_eq!(map_estimate(&Joint::BetaBernoulli, &x, k, B).unwrap(), map_estimate(&scaled, &x, k, B).unwrap());
    }

    #[test]
    fn deficiency_lower_bound(x in word(40), theta in rational_unit(), wp in 1i64..16) {
        let p = Model::uniform();
        let pool = vec![(ratio(wp, 16), p.clone()), (ratio(16 - wp, 16), Model::bernoulli(theta))];
        let pool: Vec<_> = pool.into_iter().filter(|(w, _)| !w.is_zero()).collect();
        let d = deficiency(&x, &p, &pool).unwrap();
        prop_assert!(d.ratio().unwrap() >= &ratio(wp, 16));
        prop_assert!(d.log2().unwrap() >= &(cantor_bayes::rational::micro_round(log2(&ratio(wp, 16))) - ratio(1, 1_000_000)));
    }

    #[test]
    fn deficiency_zero_identity(x in word(60), m in markov()) {
        prop_assume!(m.mass(&x).unwrap() > Rational::zero());
        let d = deficiency(&x, &m, &[(ratio(1, 1), m.clone())]).unwrap();
        prop_assert_eq!(d.log2().unwrap(), &Rational::zero());
    }
}
