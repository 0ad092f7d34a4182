use cantor_bayes::bayes::{
    conditional, map_with_mass, marginal_x, marginal_y, martingale_sequence, mixture_residual, posterior_table,
};
use cantor_bayes::consistency::{consistency_verdict, ConsistencyConfig};
use cantor_bayes::joint::{validate_joint_additivity, Counterexample};
use cantor_bayes::measure::{sample, total_variation_at_depth, validate_additivity, CylinderMeasure};
use cantor_bayes::mltest::{
    counterexample_test_level, deficiency, diagonal_product_test, product_union_mass, transfer_test,
    validate_product_test, validate_test, FiniteTest,
};
use cantor_bayes::rational::{int, inv_pow2};
use cantor_bayes::words::{dyadic_value, partition};
use cantor_bayes::{DepthBudget, Exact, JointMeasure, Rational, Word};

use crate::args::*;
use crate::input;
use crate::output::{dec, emit, exact, value, Report, Table};
use crate::Failure;

type Out = Result<Report, Failure>;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let budget = DepthBudget::from_env()?;
    let report = match &cli.command {
        Command::Model(ModelCommand::Validate(a)) => model_validate(a, budget),
        Command::Eval(a) => eval(a),
        Command::Marginal(a) => marginal(a),
        Command::Conditional(a) => conditional_cmd(a),
        Command::Martingale(a) => martingale(a),
        Command::MixtureCheck(a) => mixture_check(a, budget),
        Command::TvCurve(a) => tv_curve(a, budget),
        Command::Posterior(a) => posterior(a, budget),
        Command::ConsistencyReport(a) => consistency(a, budget),
        Command::Sample(a) => sample_cmd(a),
        Command::Test(TestCommand::Validate(a)) => test_validate(a),
        Command::Test(TestCommand::Transfer(a)) => test_transfer(a),
        Command::Test(TestCommand::Counterexample(a)) => test_counterexample(a, budget),
        Command::Test(TestCommand::Diagonal(a)) => test_diagonal(a, budget),
        Command::Test(TestCommand::Deficiency(a)) => test_deficiency(a),
        Command::Counterexample(CounterexampleCommand::Verify(a)) => counterexample_verify(a),
    }?;
    emit(report, cli.format, cli.out.as_deref())
}

/// One row per prefix length of `word`: depth, prefix, exact, decimal.
fn prefix_table(word: &Word, mut f: impl FnMut(&Word) -> Result<Rational, Failure>) -> Result<Table, Failure> {
    let mut table = Table::new(&["depth", "word", "exact", "decimal"]);
    for d in 0..=word.len() {
        let p = word.prefix(d);
        let m = f(&p)?;
        table.push(vec![d.to_string(), p.to_string(), exact(&m), dec(&m)]);
    }
    Ok(table)
}

fn model_validate(a: &ModelValidateArgs, budget: DepthBudget) -> Out {
    let mut r = Report::new("model validate");
    let (valid, depth, root, checked, violations) = match (&a.measure, &a.joint) {
        (Some(m), _) => {
            let model = input::measure(m)?;
            let rep = validate_additivity(&model, a.depth, budget)?;
            r.set("spec", model.spec());
            let row = (
                rep.is_valid(),
                rep.depth,
                rep.root_mass.clone(),
                rep.checked,
                rep.violations.len() + rep.negative.len(),
            );
            r.set("report", &rep);
            row
        }
        (None, Some(j)) => {
            let joint = input::joint(j)?;
            let rep = validate_joint_additivity(&joint, a.depth, budget)?;
            r.set("spec", joint.spec());
            let row = (
                rep.is_valid(),
                rep.depth,
                rep.root_mass.clone(),
                rep.checked,
                rep.violations.len() + rep.negative.len(),
            );
            r.set("report", &rep);
            row
        }
        (None, None) => unreachable!("clap requires one of --measure, --joint"),
    };
    r.set("valid", valid);
    let mut t = Table::new(&["depth", "root_mass", "checked", "violations", "valid"]);
    t.push(vec![depth.to_string(), root.to_string(), checked.to_string(), violations.to_string(), valid.to_string()]);
    r.table(t);
    Ok(r)
}

fn eval(a: &EvalArgs) -> Out {
    let x = input::word(&a.x)?;
    let mut r = Report::new("eval");
    r.set("x", &x);
    let (mass, table) = match (&a.measure, &a.joint) {
        (Some(m), _) => {
            let model = input::measure(m)?;
            (model.mass(&x)?, prefix_table(&x, |p| Ok(model.mass(p)?))?)
        }
        (None, Some(j)) => {
            let joint = input::joint(j)?;
            let y = input::word(a.y.as_deref().unwrap_or(""))?;
            r.set("y", &y);
            (joint.mass2(&x, &y)?, prefix_table(&x, |p| Ok(joint.mass2(p, &y)?))?)
        }
        (None, None) => unreachable!("clap requires one of --measure, --joint"),
    };
    r.set("mass", value(&mass)).table(table);
    Ok(r)
}

fn marginal(a: &MarginalArgs) -> Out {
    let joint = input::joint(&a.joint.joint)?;
    let w = input::word(&a.word)?;
    let (axis, table) = match a.axis {
        AxisArg::X => ("x", prefix_table(&w, |p| Ok(marginal_x(&joint).mass(p)?))?),
        AxisArg::Y => ("y", prefix_table(&w, |p| Ok(marginal_y(&joint).mass(p)?))?),
    };
    let mass = match a.axis {
        AxisArg::X => marginal_x(&joint).mass(&w)?,
        AxisArg::Y => marginal_y(&joint).mass(&w)?,
    };
    let mut r = Report::new("marginal");
    r.set("axis", axis).set("word", &w).set("mass", value(&mass)).table(table);
    Ok(r)
}

fn conditional_cmd(a: &ConditionalArgs) -> Out {
    let joint = input::joint(&a.joint.joint)?;
    let (x, y) = (input::word(&a.x)?, input::word(&a.y)?);
    let slice = conditional(&joint, &y)?;
    let mass = slice.mass(&x)?;
    let table = prefix_table(&x, |p| Ok(slice.mass(p)?))?;
    let mut r = Report::new("conditional");
    r.set("x", &x).set("y", &y).set("mass", value(&mass)).table(table);
    Ok(r)
}

fn martingale(a: &MartingaleArgs) -> Out {
    let joint = input::joint(&a.joint.joint)?;
    let x = input::word(&a.x)?;
    let target = input::sequence(&a.y_target)?;
    let seq = martingale_sequence(&joint, &x, &target, a.n_max)?;
    let mut table = Table::new(&["n", "y_prefix", "exact", "decimal"]);
    let mut entries = Vec::with_capacity(seq.len());
    for (n, v) in seq.iter().enumerate() {
        table.push(vec![n.to_string(), target.prefix(n).to_string(), exact(v), dec(v)]);
        entries.push(value(v));
    }
    let mut r = Report::new("martingale");
    r.set("x", &x).set("y_target", target.to_string()).set("entries", entries);
    match joint.limit_conditional(&x, &target) {
        Some(Ok(limit)) => {
            r.set("limit_conditional", value(&limit));
        }
        Some(Err(e)) => {
            r.set("limit_conditional", serde_json::Value::Null).set("limit_note", e.to_string());
        }
        None => {
            r.set("limit_conditional", serde_json::Value::Null)
                .set("limit_note", "no closed-form limit for this joint");
        }
    }
    r.table(table);
    Ok(r)
}

fn mixture_check(a: &MixtureCheckArgs, budget: DepthBudget) -> Out {
    let joint = input::joint(&a.joint.joint)?;
    let x = input::word(&a.x)?;
    let mut table = Table::new(&["n", "exact", "decimal"]);
    let mut residual = Rational::default();
    for n in 0..=a.n {
        residual = mixture_residual(&joint, &x, n, budget)?;
        table.push(vec![n.to_string(), exact(&residual), dec(&residual)]);
    }
    let mut r = Report::new("mixture-check");
    r.set("x", &x)
        .set("n", a.n)
        .set("marginal_x", value(&marginal_x(&joint).mass(&x)?))
        .set("residual", exact(&residual))
        .table(table);
    Ok(r)
}

fn tv_curve(a: &TvCurveArgs, budget: DepthBudget) -> Out {
    let p = input::measure(&a.measure.measure)?;
    let q = input::measure(&a.against)?;
    let mut table = Table::new(&["depth", "exact", "decimal"]);
    let mut curve = Vec::new();
    for n in 0..=a.max_depth {
        let tv = total_variation_at_depth(&p, &q, n, budget)?;
        table.push(vec![n.to_string(), exact(&tv), dec(&tv)]);
        curve.push(value(&tv));
    }
    let mut r = Report::new("tv-curve");
    r.set("measure", p.spec()).set("against", q.spec()).set("tv", curve).table(table);
    Ok(r)
}

fn posterior(a: &PosteriorArgs, budget: DepthBudget) -> Out {
    let joint = input::joint(&a.joint.joint)?;
    let x = input::word(&a.x)?;
    let rows = posterior_table(&joint, &x, a.k, budget)?;
    let (map, map_mass) = map_with_mass(&joint, &x, a.k, budget)?;
    let mut table = Table::new(&["y", "exact", "decimal"]);
    let mut entries = Vec::with_capacity(rows.len());
    for (y, m) in &rows {
        table.push(vec![y.to_string(), exact(m), dec(m)]);
        entries.push(serde_json::json!({ "y": y, "mass": value(m) }));
    }
    let mut r = Report::new("posterior");
    r.set("x", &x)
        .set("k", a.k)
        .set("posterior", entries)
        .set("map_estimate", &map)
        .set("map_mass", value(&map_mass))
        .set("tie_break", "lexicographically least")
        .table(table);
    Ok(r)
}

fn consistency(a: &ConsistencyArgs, budget: DepthBudget) -> Out {
    let joint = input::joint(&a.joint.joint)?;
    let mut config = ConsistencyConfig::new(a.param_depth, a.sample_depth);
    config.epsilon = Exact(input::rational(&a.epsilon)?);
    config.recovery_threshold = Exact(input::rational(&a.threshold)?);
    config.trials = a.trials;
    config.seed = a.seed;
    config.curves = a.curves;
    let report = consistency_verdict(&joint, &config, budget)?;

    let m = &report.singularity_matrix;
    let mut headers = vec!["y".to_string()];
    headers.extend(m.params.iter().map(Word::to_string));
    let mut table = Table { headers, rows: Vec::new() };
    for (y, row) in m.params.iter().zip(&m.entries) {
        let mut cells = vec![y.to_string()];
        cells.extend(row.iter().map(|e| exact(&e.0)));
        table.push(cells);
    }

    let mut r = Report::new("consistency-report");
    r.set("joint", joint.spec());
    let serde_json::Value::Object(fields) = serde_json::to_value(&report).expect("report serializes") else {
        unreachable!("reports are objects")
    };
    for (k, v) in fields {
        if k != "schema_version" {
            r.json.insert(k, v);
        }
    }
    r.table(table);
    Ok(r)
}

fn sample_cmd(a: &SampleArgs) -> Out {
    let model = input::measure(&a.measure.measure)?;
    let s = sample(&model, a.length, a.seed)?;
    let mut r = Report::new("sample");
    r.set("measure", model.spec()).set("length", a.length).set("seed", a.seed).set("sample", &s);
    let mut t = Table::new(&["seed", "length", "sample"]);
    t.push(vec![a.seed.to_string(), a.length.to_string(), s.to_string()]);
    r.table(t);
    Ok(r)
}

fn level_table(report: &cantor_bayes::mltest::TestReport) -> Table {
    let mut t = Table::new(&["level", "mass", "decimal", "bound", "mass_ok", "nested_ok"]);
    for l in &report.levels {
        t.push(vec![
            l.level.to_string(),
            l.mass.to_string(),
            dec(&l.mass.0),
            l.bound.to_string(),
            l.mass_ok.to_string(),
            l.nested_ok.to_string(),
        ]);
    }
    t
}

fn test_validate(a: &TestValidateArgs) -> Out {
    let test = FiniteTest::from_json(&input::test_json(&a.test)?)?;
    let mut r = Report::new("test validate");
    let report = match (&a.measure, &a.joint) {
        (Some(m), _) => {
            let model = input::measure(m)?;
            r.set("measure", model.spec());
            validate_test(&test, &model)?
        }
        (None, Some(j)) => {
            let joint = input::joint(j)?;
            let y = input::word(&a.y)?;
            r.set("joint", joint.spec()).set("given_y", &y);
            validate_test(&test, &conditional(&joint, &y)?)?
        }
        (None, None) => unreachable!("clap requires one of --measure, --joint"),
    };
    r.set("valid", report.valid).set("report", &report).table(level_table(&report));
    Ok(r)
}

fn test_transfer(a: &TestTransferArgs) -> Out {
    let test = FiniteTest::from_json(&input::test_json(&a.test)?)?;
    let joint = input::joint(&a.joint.joint)?;
    let y = input::word(&a.y)?;
    let report = transfer_test(&test, &joint, &y, a.m, a.k_max)?;
    let check = validate_test(&report.test, &conditional(&joint, &y)?)?;
    let mut t = Table::new(&["level", "threshold", "words", "conditional_mass", "decimal", "markov_bound", "bound"]);
    for l in &report.levels {
        t.push(vec![
            l.level.to_string(),
            l.threshold.to_string(),
            l.words.len().to_string(),
            l.conditional_mass.to_string(),
            dec(&l.conditional_mass.0),
            l.markov_bound.to_string(),
            l.bound.to_string(),
        ]);
    }
    let mut r = Report::new("test transfer");
    r.set("joint", joint.spec()).set("transfer", &report).set("validation", &check).set("valid", check.valid).table(t);
    Ok(r)
}

fn test_counterexample(a: &TestCounterexampleArgs, budget: DepthBudget) -> Out {
    let c = Counterexample::new(input::counterexample_spec(&a.spec.alpha, &a.spec.approximants)?)?;
    let level = counterexample_test_level(&c, a.n, a.depth, budget)?;
    let mut t = Table::new(&[
        "level",
        "depth",
        "words",
        "cover_upper",
        "limit_conditional_mass",
        "decimal",
        "bound",
        "bound_holds",
    ]);
    t.push(vec![
        level.level.to_string(),
        level.depth.to_string(),
        level.words.len().to_string(),
        level.cover_upper.to_string(),
        level.limit_conditional_mass.to_string(),
        dec(&level.limit_conditional_mass.0),
        level.bound.to_string(),
        level.bound_holds.to_string(),
    ]);
    let mut r = Report::new("test counterexample");
    r.set("spec", c.spec()).set("level", &level).table(t);
    Ok(r)
}

fn test_diagonal(a: &TestDiagonalArgs, budget: DepthBudget) -> Out {
    let joint = input::joint(&a.joint)?;
    let test = diagonal_product_test(a.levels, budget)?;
    let report = validate_product_test(&test, &joint, budget)?;
    let mut r = Report::new("test diagonal");
    let masses = (1..=a.levels)
        .map(|n| Ok(value(&product_union_mass(&joint, test.level(n), budget)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    r.set("joint", joint.spec())
        .set("levels", a.levels)
        .set("level_masses", masses)
        .set("valid", report.valid)
        .set("report", &report)
        .set(
            "note",
            "level n carries mass exactly 2^-n under the uniform product, so the strict bound fails at every level; \
             reading level n+1 as level n gives a valid test",
        )
        .table(level_table(&report));
    Ok(r)
}

fn test_deficiency(a: &TestDeficiencyArgs) -> Out {
    let model = input::measure(&a.measure.measure)?;
    let x = input::word(&a.x)?;
    let pool = input::pool(&a.pool)?;
    let d = deficiency(&x, &model, &pool)?;
    let (ratio, log2) = match (d.ratio(), d.log2()) {
        (Some(q), Some(l)) => (exact(q), exact(l)),
        _ => ("inf".to_string(), "inf".to_string()),
    };
    let mut t = Table::new(&["x", "depth", "ratio", "log2"]);
    t.push(vec![x.to_string(), x.len().to_string(), ratio, log2]);
    let mut r = Report::new("test deficiency");
    r.set("measure", model.spec())
        .set("x", &x)
        .set("depth", x.len())
        .set("pool_size", pool.len())
        .set("deficiency", &d)
        .set("note", format!("likelihood ratio at depth {} against the supplied pool only", x.len()))
        .table(t);
    Ok(r)
}

fn counterexample_verify(a: &CounterexampleSpecArgs) -> Out {
    let spec = input::counterexample_spec(&a.alpha, &a.approximants)?;
    let joint = cantor_bayes::Joint::new(&cantor_bayes::JointSpec::Counterexample(spec.clone()))?;
    let py = marginal_y(&joint);
    let mut t = Table::new(&["k", "y", "mass", "expected", "decimal", "match"]);
    let mut rows = Vec::new();
    let mut all = true;
    for k in 1..=spec.approximants.len() + 1 {
        let y = Word::repeat(true, k);
        let mass = py.mass(&y)?;
        let cut = if k == 1 { Rational::default() } else { dyadic_value(&spec.approximants[k - 2]) };
        let expected = int(1) - cut;
        let ok = mass == expected;
        all &= ok;
        t.push(vec![k.to_string(), y.to_string(), exact(&mass), exact(&expected), dec(&mass), ok.to_string()]);
        rows.push(
            serde_json::json!({ "k": k, "y": y, "mass": exact(&mass), "expected": exact(&expected), "match": ok }),
        );
    }
    let limit = int(1) - &spec.alpha.0;
    let x_uniform = (0..=8usize).all(|d| {
        partition(d, DepthBudget::DEFAULT)
            .map(|ws| ws.iter().all(|x| marginal_x(&joint).mass(x).ok() == Some(inv_pow2(d))))
            .unwrap_or(false)
    });
    let mut r = Report::new("counterexample verify");
    r.set("spec", &spec)
        .set("p_y_table", rows)
        .set("limit", value(&limit))
        .set("x_marginal_uniform_depth_8", x_uniform)
        .set("all_match", all)
        .table(t);
    Ok(r)
}
