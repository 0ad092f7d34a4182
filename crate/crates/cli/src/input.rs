use std::fs;
use std::path::Path;

use cantor_bayes::joint::CounterexampleSpec;
use cantor_bayes::rational::parse_rational;
use cantor_bayes::{Exact, Joint, Model, PeriodicSequence, Rational, Word};

use crate::Failure;

/// Inline JSON is recognised by its first character; anything else that is
/// not a builtin name is read as a file.
fn json_text(arg: &str) -> Result<String, Failure> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(Path::new(arg)).map_err(|e| Failure::Schema(format!("cannot read {arg}: {e}")))
}

pub fn measure(arg: &str) -> Result<Model, Failure> {
    match arg {
        "uniform" => Ok(Model::uniform()),
        _ => Ok(Model::from_json(&json_text(arg)?)?),
    }
}

pub fn joint(arg: &str) -> Result<Joint, Failure> {
    match arg {
        "beta_bernoulli" => Ok(Joint::BetaBernoulli),
        "product_uniform" => Ok(Joint::uniform_product()),
        "counterexample" => {
            Ok(Joint::new(&cantor_bayes::JointSpec::Counterexample(CounterexampleSpec::alternating(5)))?)
        }
        _ => Ok(Joint::from_json(&json_text(arg)?)?),
    }
}

pub fn test_json(arg: &str) -> Result<String, Failure> {
    json_text(arg)
}

/// `""` and `"λ"` both denote the empty word.
pub fn word(arg: &str) -> Result<Word, Failure> {
    match arg {
        "" | "λ" => Ok(Word::empty()),
        _ => Ok(arg.parse()?),
    }
}

pub fn sequence(arg: &str) -> Result<PeriodicSequence, Failure> {
    Ok(arg.parse()?)
}

pub fn rational(arg: &str) -> Result<Rational, Failure> {
    Ok(parse_rational(arg)?)
}

pub fn counterexample_spec(alpha: &str, approximants: &str) -> Result<CounterexampleSpec, Failure> {
    let approximants = approximants.split(',').map(|s| word(s.trim())).collect::<Result<Vec<_>, _>>()?;
    Ok(CounterexampleSpec { approximants, alpha: Exact(rational(alpha)?) })
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolEntry {
    weight: Exact,
    model: cantor_bayes::ModelSpec,
}

pub fn pool(arg: &str) -> Result<Vec<(Rational, Model)>, Failure> {
    let entries: Vec<PoolEntry> =
        serde_json::from_str(&json_text(arg)?).map_err(|e| Failure::Schema(format!("pool: {e}")))?;
    entries.into_iter().map(|e| Ok((e.weight.0, Model::new(&e.model)?))).collect()
}
