//! Marginals, conditioning on cylinders, posteriors, and the finite-depth
//! form of the Bayesian mixture identity `P_X = ∫ P(·|y^∞) dP_Y`.

use num_traits::{Signed, Zero};

use crate::budget::DepthBudget;
use crate::error::{Axis, Error, Result};
use crate::joint::JointMeasure;
use crate::measure::CylinderMeasure;
use crate::rational::Rational;
use crate::words::{partition, PeriodicSequence, Word};

/// `x ↦ P(Δ(x) × Ω)`.
#[derive(Debug, Clone, Copy)]
pub struct MarginalX<'a, J: ?Sized>(pub &'a J);

/// `y ↦ P(Ω × Δ(y))`.
#[derive(Debug, Clone, Copy)]
pub struct MarginalY<'a, J: ?Sized>(pub &'a J);

pub fn marginal_x<J: JointMeasure + ?Sized>(joint: &J) -> MarginalX<'_, J> {
    MarginalX(joint)
}

pub fn marginal_y<J: JointMeasure + ?Sized>(joint: &J) -> MarginalY<'_, J> {
    MarginalY(joint)
}

impl<J: JointMeasure + ?Sized> CylinderMeasure for MarginalX<'_, J> {
    fn mass(&self, x: &Word) -> Result<Rational> {
        self.0.mass2(x, &Word::empty())
    }

    fn count_mass(&self, ones: usize, len: usize) -> Option<Result<Rational>> {
        self.0.count_mass2(ones, len, &Word::empty())
    }
}

impl<J: JointMeasure + ?Sized> CylinderMeasure for MarginalY<'_, J> {
    fn mass(&self, y: &Word) -> Result<Rational> {
        self.0.mass2(&Word::empty(), y)
    }
}

/// `P(· | y) = P(· × Δ(y)) / P_Y(y)` as a measure on `X`.
#[derive(Debug, Clone)]
pub struct ConditionalSlice<'a, J: ?Sized> {
    base: &'a J,
    given_y: Word,
    norm: Rational,
}

impl<'a, J: JointMeasure + ?Sized> ConditionalSlice<'a, J> {
    pub fn given(&self) -> &Word {
        &self.given_y
    }

    /// `P_Y(y)`.
    pub fn normalizer(&self) -> &Rational {
        &self.norm
    }

    pub fn base(&self) -> &'a J {
        self.base
    }
}

impl<J: JointMeasure + ?Sized> CylinderMeasure for ConditionalSlice<'_, J> {
    fn mass(&self, x: &Word) -> Result<Rational> {
        Ok(self.base.mass2(x, &self.given_y)? / &self.norm)
    }

    fn count_mass(&self, ones: usize, len: usize) -> Option<Result<Rational>> {
        let m = self.base.count_mass2(ones, len, &self.given_y)?;
        Some(m.map(|m| m / &self.norm))
    }

    fn next_one_probability(&self, prefix: &Word, prefix_mass: &Rational) -> Result<Rational> {
        self.base.next_x_one_probability(prefix, &self.given_y, &(prefix_mass * &self.norm))
    }
}

/// `P(· | x)` as a measure on the parameter space `Y`.
#[derive(Debug, Clone)]
pub struct PosteriorSlice<'a, J: ?Sized> {
    base: &'a J,
    given_x: Word,
    norm: Rational,
}

impl<J: JointMeasure + ?Sized> PosteriorSlice<'_, J> {
    pub fn given(&self) -> &Word {
        &self.given_x
    }
}

impl<J: JointMeasure + ?Sized> CylinderMeasure for PosteriorSlice<'_, J> {
    fn mass(&self, y: &Word) -> Result<Rational> {
        Ok(self.base.mass2(&self.given_x, y)? / &self.norm)
    }
}

pub fn conditional<'a, J: JointMeasure + ?Sized>(joint: &'a J, y: &Word) -> Result<ConditionalSlice<'a, J>> {
    let norm = joint.mass2(&Word::empty(), y)?;
    if !norm.is_positive() {
        return Err(Error::NullConditioning { axis: Axis::Y, word: y.clone() });
    }
    Ok(ConditionalSlice { base: joint, given_y: y.clone(), norm })
}

pub fn posterior<'a, J: JointMeasure + ?Sized>(joint: &'a J, x: &Word) -> Result<PosteriorSlice<'a, J>> {
    let norm = joint.mass2(x, &Word::empty())?;
    if !norm.is_positive() {
        return Err(Error::NullConditioning { axis: Axis::X, word: x.clone() });
    }
    Ok(PosteriorSlice { base: joint, given_x: x.clone(), norm })
}

/// Posterior masses of all length-`k` parameter cylinders, in lexicographic
/// order of `y`.
pub fn posterior_table<J: JointMeasure + ?Sized>(
    joint: &J,
    x: &Word,
    k: usize,
    budget: DepthBudget,
) -> Result<Vec<(Word, Rational)>> {
    let post = posterior(joint, x)?;
    partition(k, budget)?
        .into_iter()
        .map(|y| {
            let m = post.mass(&y)?;
            Ok((y, m))
        })
        .collect()
}

/// Maximum-a-posteriori length-`k` parameter cylinder; ties go to the
/// lexicographically least word.
pub fn map_estimate<J: JointMeasure + ?Sized>(joint: &J, x: &Word, k: usize, budget: DepthBudget) -> Result<Word> {
    Ok(map_with_mass(joint, x, k, budget)?.0)
}

/// [`map_estimate`] together with its posterior mass, i.e. the
/// concentration `sup_{|y|=k} P(y | x)`.
pub fn map_with_mass<J: JointMeasure + ?Sized>(
    joint: &J,
    x: &Word,
    k: usize,
    budget: DepthBudget,
) -> Result<(Word, Rational)> {
    let mut best: Option<(Word, Rational)> = None;
    for (y, m) in posterior_table(joint, x, k, budget)? {
        match &best {
            Some((_, b)) if &m <= b => {}
            _ => best = Some((y, m)),
        }
    }
    Ok(best.expect("partition is never empty"))
}

/// `P(x | y_target[..i])` for `i = 0..=n_max`.
pub fn martingale_sequence<J: JointMeasure + ?Sized>(
    joint: &J,
    x: &Word,
    y_target: &PeriodicSequence,
    n_max: usize,
) -> Result<Vec<Rational>> {
    (0..=n_max).map(|i| conditional(joint, &y_target.prefix(i))?.mass(x)).collect()
}

/// `P_X(x) − Σ_{|y|=n} P(Δ(x) × Δ(y))`; zero for every valid joint.
pub fn mixture_residual<J: JointMeasure + ?Sized>(
    joint: &J,
    x: &Word,
    n: usize,
    budget: DepthBudget,
) -> Result<Rational> {
    let mut total = Rational::zero();
    for y in partition(n, budget)? {
        total += joint.mass2(x, &y)?;
    }
    Ok(marginal_x(joint).mass(x)? - total)
}
