//! Exact-rational probability on Cantor space.
//!
//! Measures on `{0,1}^∞` and on the product space are evaluated exactly on
//! cylinders. On top of that the crate builds conditioning along prefixes,
//! the finite-depth law of total probability, posterior-consistency
//! diagnostics, and finite Martin-Löf test certificates.

pub mod bayes;
pub mod budget;
pub mod consistency;
pub mod error;
pub mod joint;
pub mod measure;
pub mod mltest;
pub mod rational;
pub mod words;

pub use budget::DepthBudget;
pub use error::{Error, Result};
pub use joint::{CounterexampleSpec, Joint, JointMeasure, JointSpec};
pub use measure::{CylinderMeasure, Model, ModelSpec};
pub use rational::{Exact, Rational};
pub use words::{PeriodicSequence, Word};
