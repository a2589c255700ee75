use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use onevar::calibrate::{calibrate_variants, differential_suite, CorpusSpec, BASE_FORMULAS};
use onevar::eval::{sat_set, Evaluator};
use onevar::lemma::{check_b_exact, check_star, check_sublemma, extract_countermodel, transfer_countermodel};
use onevar::product::ModelJson;
use onevar::search::{search_countermodel, FactorClass, SearchBudget, SearchOutcome};
use onevar::syntax::{parse, render, render_with};
use onevar::translation::{Translation, TranslationContext};
use onevar::{Error, Formula, FormulaStore, ProductModel, Regime, VariantConfig};

#[derive(Parser, Debug)]
#[command(name = "onevar", version, about = "Single-variable translation and countermodel oracle for modal products")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format for the result object.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Write the result to FILE instead of standard output.
    #[arg(long, value_name = "FILE", global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the single-variable translation of a formula with its metrics.
    Translate {
        formula: String,
        #[command(flatten)]
        tr: TrArgs,
        /// Print the fully expanded formula instead of the named, shared form.
        #[arg(long)]
        expand: bool,
    },
    /// Evaluate a formula on a model file. Exit 0 if true at the point, 1 if false.
    Check {
        /// Model in JSON.
        model: PathBuf,
        formula: String,
        /// Include the set of worlds where the formula holds.
        #[arg(long)]
        sat_set: bool,
    },
    /// Search for a countermodel. Exit 0 if found, 1 if not.
    Search {
        formula: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Transfer a countermodel of a formula to one of its translation.
    Transfer {
        /// Base countermodel in JSON.
        model: PathBuf,
        formula: String,
        #[command(flatten)]
        tr: TrArgs,
    },
    /// Extract a countermodel of a formula from one of its translation.
    Extract {
        /// Countermodel of the translation in JSON.
        model: PathBuf,
        formula: String,
        #[command(flatten)]
        tr: TrArgs,
    },
    /// Score every variant on a corpus and select the default.
    Calibrate {
        /// Corpus description in JSON; defaults to the built-in corpus.
        #[arg(long, value_name = "FILE")]
        corpus: Option<PathBuf>,
        /// Use the K-regime corpus and constructions.
        #[arg(long)]
        k_mode: bool,
        #[arg(long, value_name = "N")]
        max_worlds: Option<usize>,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Run the differential suite. Exit 0 if every produced witness verifies.
    Suite {
        /// Formulas to test; defaults to the built-in corpus.
        formulas: Vec<String>,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        k_mode: bool,
        /// Size bound for countermodels of the translations.
        #[arg(long, value_name = "N", default_value_t = 4)]
        reduction_max_worlds: usize,
        /// Candidate cap per size tuple for countermodels of the translations.
        #[arg(long, value_name = "N", default_value_t = 100_000)]
        reduction_candidates: u64,
    },
    /// Emit guard sizes and timings as CSV for growing modal depth.
    Bench {
        #[arg(long, default_value_t = 2)]
        arity: u32,
        /// Number of source variables.
        #[arg(long, default_value_t = 1)]
        vars: u32,
        #[arg(long, default_value_t = 5)]
        max_depth: u32,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        k_mode: bool,
        /// Leave out timing columns, making the output deterministic.
        #[arg(long)]
        sizes_only: bool,
    },
}

#[derive(Args, Debug)]
struct TrArgs {
    /// Number of modalities; defaults to the model's factor count or 2.
    #[arg(long)]
    arity: Option<u32>,
    /// Variant name such as composite-w0-guard; defaults to the calibrated one.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    k_mode: bool,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Frame class per modality, e.g. T,S5.
    #[arg(long, value_delimiter = ',', default_value = "T,T")]
    classes: Vec<FactorClass>,
    #[arg(long, default_value_t = 3)]
    max_worlds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on candidates examined.
    #[arg(long)]
    max_candidates: Option<u64>,
    /// Random valuations per frame when exhaustive enumeration is too large.
    #[arg(long, default_value_t = 4096)]
    max_valuations: u64,
    /// Refuse to fall back to sampling: fail unless every valuation is enumerated.
    #[arg(long)]
    exhaustive: bool,
}

impl SearchArgs {
    fn budget(&self) -> Result<SearchBudget, Failure> {
        if self.max_worlds == 0 || self.max_candidates == Some(0) || self.max_valuations == 0 {
            return Err(Failure::Usage(anyhow!("the search budget must be positive")));
        }
        Ok(SearchBudget {
            max_worlds_per_factor: self.max_worlds,
            max_valuations: self.max_valuations,
            max_candidates: self.max_candidates,
            time_limit: None,
            seed: self.seed,
            descending: false,
        })
    }
}

/// Why a command did not succeed, mapped onto the exit status.
#[derive(Debug)]
enum Failure {
    Negative(Value, String),
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_)
            | Error::PreconditionFailed(_)
            | Error::UnknownVariant(_)
            | Error::InvalidModel(_)
            | Error::ReservedVariable
            | Error::ModalityOutOfRange { .. }
            | Error::IndexOutOfRange { .. }
            | Error::EmptyFrame
            | Error::NoFactors
            | Error::UnknownWorld { .. }
            | Error::Json(_) => Failure::Usage(e.into()),
            _ => Failure::Internal(e.into()),
        }
    }
}

fn regime(k_mode: bool) -> Regime {
    if k_mode {
        Regime::K
    } else {
        Regime::T
    }
}

fn variant(name: Option<&str>, regime: Regime) -> Result<VariantConfig, Failure> {
    match name {
        Some(n) => Ok(n.parse()?),
        None => Ok(VariantConfig::calibrated(regime)),
    }
}

fn read_model(path: &Path) -> Result<ProductModel, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)?;
    let json: ModelJson = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Usage)?;
    Ok(ProductModel::from_json(&json)?)
}

fn metrics(store: &FormulaStore, f: Formula) -> Value {
    let (tree, dag) = store.sizes(f);
    json!({
        "tree_size": tree,
        "dag_size": dag,
        "modal_depth": store.modal_depth(f),
        "variables": store.variables(f),
    })
}

/// Renders `reduction` with `A`, `B` and `betaK` kept as names, plus their
/// definitions in terms of each other.
fn shared_form(store: &FormulaStore, tr: &Translation) -> (String, Vec<(String, String)>) {
    let ctx = &tr.ctx;
    let mut names: Vec<(Formula, String)> = vec![(ctx.guard(), "A".into()), (ctx.big_b(), "B".into())];
    for k in 1..=ctx.vars() + 1 {
        let beta = ctx.beta(k).expect("in range");
        if beta != ctx.big_b() {
            names.push((beta, format!("beta{k}")));
        }
    }
    let table: HashMap<Formula, String> = names.iter().cloned().collect();
    let defs = names
        .iter()
        .map(|(f, name)| {
            let mut others = table.clone();
            others.remove(f);
            (name.clone(), render_with(store, *f, &others))
        })
        .collect();
    (render_with(store, tr.reduction, &table), defs)
}

fn run(cli: &Cli) -> Result<(Value, String), Failure> {
    let mut store = FormulaStore::new();
    match &cli.command {
        Command::Translate { formula, tr, expand } => {
            let regime = regime(tr.k_mode);
            let arity = tr.arity.unwrap_or(2);
            let f = parse(&mut store, formula, arity).map_err(Error::from)?;
            let v = variant(tr.variant.as_deref(), regime)?;
            let t = Translation::new(&mut store, f, arity, v)?;
            let (shared, defs) = shared_form(&store, &t);
            let text = if *expand { render(&store, t.reduction) } else { shared.clone() };
            let mut human = format!("{text}\n");
            if !expand {
                for (name, def) in &defs {
                    human.push_str(&format!("  {name} = {def}\n"));
                }
            }
            let mut out = json!({
                "source": render(&store, f),
                "variant": v.to_string(),
                "arity": arity,
                "vars": t.ctx.vars(),
                "depth": t.ctx.depth(),
                "reduction": text,
                "metrics": {
                    "reduction": metrics(&store, t.reduction),
                    "guard": metrics(&store, t.ctx.guard()),
                    "big_b": metrics(&store, t.ctx.big_b()),
                },
            });
            if !expand {
                out["definitions"] = defs.into_iter().map(|(n, d)| (n, Value::String(d))).collect();
            }
            let m = &out["metrics"]["reduction"];
            human.push_str(&format!(
                "tree size {}, dag size {}, modal depth {}\n",
                m["tree_size"], m["dag_size"], m["modal_depth"]
            ));
            Ok((out, human))
        }
        Command::Check { model, formula, sat_set: dump } => {
            let m = read_model(model)?;
            let f = parse(&mut store, formula, m.arity() as u32).map_err(Error::from)?;
            let set = sat_set(&store, m.frame(), m.valuation(), f)?;
            let holds = set.contains(m.point());
            let mut out = json!({
                "formula": render(&store, f),
                "point": m.coords(m.point()),
                "holds": holds,
            });
            if *dump {
                out["sat_set"] = set.ones().map(|w| json!(m.coords(w))).collect();
            }
            let human = format!("{}\n", if holds { "true" } else { "false" });
            if holds {
                Ok((out, human))
            } else {
                Err(Failure::Negative(out, human))
            }
        }
        Command::Search { formula, search } => {
            let budget = search.budget()?;
            let arity = search.classes.len() as u32;
            let f = parse(&mut store, formula, arity).map_err(Error::from)?;
            let outcome = search_countermodel(&store, f, &search.classes, &budget)?;
            let (out, human) = search_json(&store, f, &search.classes, &outcome);
            if let SearchOutcome::NotFound { certified: false, .. } = outcome {
                if search.exhaustive {
                    return Err(Failure::Usage(anyhow!(
                        "valuations could not be enumerated exhaustively within the bound"
                    )));
                }
            }
            match outcome {
                SearchOutcome::Found(_) => Ok((out, human)),
                _ => Err(Failure::Negative(out, human)),
            }
        }
        Command::Transfer { model, formula, tr } => {
            let base = read_model(model)?;
            let arity = tr.arity.unwrap_or(base.arity() as u32);
            let regime = regime(tr.k_mode);
            let f = parse(&mut store, formula, arity).map_err(Error::from)?;
            let v = variant(tr.variant.as_deref(), regime)?;
            let t = Translation::new(&mut store, f, arity, v)?;
            let res = transfer_countermodel(&store, &base, &t, regime)?;
            let star = check_star(&store, &res, &base, &t)?;
            let exact = check_b_exact(&store, &res, &t)?;
            let out = json!({
                "variant": v.to_string(),
                "verification": res.verification,
                "star": star,
                "b_exact": exact,
                "model": res.model.to_json(),
            });
            let human = format!(
                "transferred to {} worlds; reduction refuted at {:?}\n",
                res.model.worlds(),
                res.model.coords(res.point())
            );
            Ok((out, human))
        }
        Command::Extract { model, formula, tr } => {
            let counter = read_model(model)?;
            let arity = tr.arity.unwrap_or(counter.arity() as u32);
            let regime = regime(tr.k_mode);
            let f = parse(&mut store, formula, arity).map_err(Error::from)?;
            let v = variant(tr.variant.as_deref(), regime)?;
            let t = Translation::new(&mut store, f, arity, v)?;
            let ext = extract_countermodel(&store, &counter, &t, regime)?;
            let sub = check_sublemma(&store, &counter, &ext, &t, true)?;
            let out = json!({
                "variant": v.to_string(),
                "verification": ext.verification,
                "kept_first": ext.kept_first,
                "sublemma": sub,
                "model": ext.model.to_json(),
            });
            let human = format!(
                "extracted {} worlds; source refuted at {:?}\n",
                ext.model.worlds(),
                ext.model.coords(ext.point())
            );
            Ok((out, human))
        }
        Command::Calibrate { corpus, k_mode, max_worlds, seed } => {
            let mut spec = match corpus {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))
                        .map_err(Failure::Usage)?;
                    serde_json::from_str(&text).map_err(|e| Failure::Usage(e.into()))?
                }
                None if *k_mode => CorpusSpec::k_mode(),
                None => CorpusSpec::default(),
            };
            if *k_mode {
                spec.regime = Regime::K;
            }
            if let Some(n) = max_worlds {
                spec.max_worlds = *n;
            }
            if let Some(s) = seed {
                spec.seed = *s;
            }
            if spec.max_worlds == 0 {
                return Err(Failure::Usage(anyhow!("--max-worlds must be positive")));
            }
            match calibrate_variants(&spec, &VariantConfig::grid()) {
                Ok(report) => {
                    let human = format!("selected {}\n", report.selected.as_deref().unwrap_or("-"));
                    Ok((serde_json::to_value(&report).expect("serializes"), human))
                }
                Err(Error::NoPassingVariant(report)) => {
                    let human = "no variant passed every family\n".to_string();
                    Err(Failure::Negative(serde_json::to_value(&*report).expect("serializes"), human))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Suite {
            formulas,
            search,
            variant: name,
            k_mode,
            reduction_max_worlds,
            reduction_candidates,
        } => {
            let regime = regime(*k_mode);
            let v = variant(name.as_deref(), regime)?;
            let budget = search.budget()?;
            if *reduction_max_worlds == 0 || *reduction_candidates == 0 {
                return Err(Failure::Usage(anyhow!("the reduction budget must be positive")));
            }
            let reduction = SearchBudget {
                max_worlds_per_factor: *reduction_max_worlds,
                ..budget.clone()
            }
            .with_candidates(*reduction_candidates);
            let arity = search.classes.len() as u32;
            let texts: Vec<String> = if formulas.is_empty() {
                BASE_FORMULAS.iter().map(|s| s.to_string()).collect()
            } else {
                formulas.clone()
            };
            let fs = texts
                .iter()
                .map(|t| parse(&mut store, t, arity))
                .collect::<Result<Vec<_>, _>>()
                .map_err(Error::from)?;
            let report = differential_suite(&mut store, &fs, &search.classes, regime, v, &budget, &reduction)?;
            let human = format!(
                "transfer {}/{}, extraction {}/{}\n",
                report.transfer.passed, report.transfer.total, report.extraction.passed, report.extraction.total
            );
            let out = serde_json::to_value(&report).expect("serializes");
            if report.passed() {
                Ok((out, human))
            } else {
                Err(Failure::Internal(anyhow!("a produced witness failed verification: {out}")))
            }
        }
        Command::Bench {
            arity,
            vars,
            max_depth,
            variant: name,
            k_mode,
            sizes_only,
        } => {
            if *arity == 0 {
                return Err(Failure::Usage(anyhow!("--arity must be positive")));
            }
            let v = variant(name.as_deref(), regime(*k_mode))?;
            let mut csv = String::from("depth,guard_tree_size,guard_dag_size,guard_modal_depth");
            if !sizes_only {
                csv.push_str(",build_us,eval_us");
            }
            csv.push('\n');
            let probe = probe_model(*arity as usize);
            for d in 0..=*max_depth {
                let started = Instant::now();
                let ctx = TranslationContext::new(&mut store, *arity, *vars, d, v);
                let built = started.elapsed();
                let (tree, dag) = store.sizes(ctx.guard());
                csv.push_str(&format!("{d},{tree},{dag},{}", store.modal_depth(ctx.guard())));
                if !sizes_only {
                    let started = Instant::now();
                    Evaluator::for_model(&store, &probe).sat_set(ctx.guard())?;
                    csv.push_str(&format!(",{},{}", built.as_micros(), started.elapsed().as_micros()));
                }
                csv.push('\n');
            }
            Ok((Value::String(csv.clone()), csv))
        }
    }
}

/// A fixed product of reflexive 3-chains with `p` on a checkerboard, used to
/// time guard evaluation.
fn probe_model(arity: usize) -> ProductModel {
    let chain = onevar::Frame1::reflexive_chain(3).expect("non-empty");
    let factors = vec![chain; arity];
    let worlds = 3usize.pow(arity as u32);
    let mut val = onevar::Valuation::new(worlds);
    for w in (0..worlds).step_by(2) {
        val.set(0, w, true);
    }
    ProductModel::new(factors, val, 0).expect("valid model")
}

fn search_json(store: &FormulaStore, f: Formula, classes: &[FactorClass], outcome: &SearchOutcome) -> (Value, String) {
    let classes: Vec<String> = classes.iter().map(ToString::to_string).collect();
    let (status, model, tuples, certified) = match outcome {
        SearchOutcome::Found(c) => ("found", Some(c.model.to_json()), c.frame_tuples, None),
        SearchOutcome::NotFound { certified, frame_tuples } => ("none", None, *frame_tuples, Some(*certified)),
        SearchOutcome::BudgetExhausted { frame_tuples } => ("budget-exhausted", None, *frame_tuples, None),
    };
    let mut out = json!({
        "formula": render(store, f),
        "classes": classes,
        "outcome": status,
        "frame_tuples": tuples,
    });
    if let Some(m) = model {
        out["model"] = serde_json::to_value(m).expect("serializes");
    }
    if let Some(c) = certified {
        out["certified"] = json!(c);
    }
    let human = match outcome {
        SearchOutcome::Found(c) => format!("countermodel at {:?}\n", c.model.coords(c.model.point())),
        SearchOutcome::NotFound { certified: true, .. } => "no countermodel within the bound\n".into(),
        SearchOutcome::NotFound { certified: false, .. } => "no countermodel among sampled valuations\n".into(),
        SearchOutcome::BudgetExhausted { .. } => "budget exhausted\n".into(),
    };
    (out, human)
}

fn emit(cli: &Cli, value: &Value, human: &str) -> anyhow::Result<()> {
    let body = match (cli.format, value) {
        (Format::Text, _) => human.to_string(),
        (Format::Json, Value::String(s)) => s.clone(),
        (Format::Json, v) => {
            let mut s = serde_json::to_string_pretty(v)?;
            s.push('\n');
            s
        }
    };
    match &cli.out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let (value, human, code) = match run(&cli) {
        Ok((v, h)) => (v, h, 0),
        Err(Failure::Negative(v, h)) => (v, h, 1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal check failed: {e:#}");
            return ExitCode::from(3);
        }
    };
    if let Err(e) = emit(&cli, &value, &human) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if cli.format == Format::Json && !value.is_string() {
        eprint!("{human}");
    }
    ExitCode::from(code)
}
