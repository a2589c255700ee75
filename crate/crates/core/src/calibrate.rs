//! Variant calibration and the differential suite.
//!
//! Calibration runs every variant in a grid over a corpus of (formula,
//! countermodel) instances and scores five check families: transfer
//! verification, `beta(k)`/`pk` agreement on base points, exactness of `B`,
//! extraction from searched countermodels of the translation, and the
//! transfer-then-extract round trip. The selected variant passes all of them
//! on every instance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Formula, FormulaStore};
use crate::frame::Regime;
use crate::gen::{random_formula, Shape};
use crate::lemma::{
    build_extraction, ExtractionResult, TransferResult, build_transfer, check_b_exact, check_star, check_sublemma,
    extract_countermodel, transfer_countermodel,
};
use crate::product::ProductModel;
use crate::eval::bounded_reach;
use crate::search::{
    countermodels_per_size, search_countermodel, search_in_sizes, size_tuples, FactorClass, SearchBudget,
    SearchOutcome,
};
use crate::syntax::{parse, render};
use crate::translation::{Translation, VariantConfig};

/// Formulas over `p1, p2` with modal depth at most 2 used by the shipped
/// corpora.
pub const BASE_FORMULAS: &[&str] = &[
    "F",
    "p1",
    "~p1",
    "p1 -> p2",
    "p1 | p2",
    "p1 & ~p2",
    "[1]p1",
    "[2]p1",
    "<1>p1",
    "<2>p1",
    "~[1]p1",
    "[1]p1 -> p1",
    "p1 -> [1]p1",
    "p1 -> [2]p1",
    "p1 -> <1>p1",
    "[1]p1 -> [2]p1",
    "[1]p1 -> [1][1]p1",
    "p1 -> [1]<1>p1",
    "<1>p1 -> [1]<1>p1",
    "[1][2]p1 -> [2][1]p1",
    "<1>[2]p1 -> [2]<1>p1",
    "<1>p1 & <1>p2 -> <1>(p1 & p2)",
    "[1](p1 -> p2) -> [1]p1 -> [1]p2",
    "[2]p1 | [2]~p1",
    "<2>(p1 & [1]p2) -> [1]<2>p2",
    "[1](p1 | p2) -> [1]p1 | [1]p2",
];

/// What to calibrate on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub arity: u32,
    pub regime: Regime,
    pub class_tuples: Vec<Vec<FactorClass>>,
    pub max_worlds: usize,
    pub formulas: Vec<String>,
    /// Extra random formulas drawn with `seed`.
    pub random_formulas: usize,
    pub max_vars: u32,
    pub max_depth: u32,
    pub seed: u64,
    /// Candidate cap per size tuple when looking for base countermodels.
    pub per_tuple_candidates: u64,
    /// Candidate cap when searching countermodels of translations.
    pub reduction_candidates: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            arity: 2,
            regime: Regime::T,
            class_tuples: vec![
                vec![FactorClass::T, FactorClass::T],
                vec![FactorClass::T, FactorClass::S5],
            ],
            max_worlds: 3,
            formulas: BASE_FORMULAS.iter().map(|s| s.to_string()).collect(),
            random_formulas: 14,
            max_vars: 2,
            max_depth: 2,
            seed: 2024,
            per_tuple_candidates: 50_000,
            reduction_candidates: 50_000,
        }
    }
}

impl CorpusSpec {
    /// The K-regime counterpart: K x K frames, no reflexivity anywhere.
    pub fn k_mode() -> Self {
        Self {
            regime: Regime::K,
            class_tuples: vec![vec![FactorClass::K, FactorClass::K]],
            ..Self::default()
        }
    }
}

/// One base countermodel of one corpus formula.
#[derive(Debug, Clone)]
pub struct Instance {
    pub formula: usize,
    pub classes: Vec<FactorClass>,
    pub base: ProductModel,
}

/// Formulas and their base countermodels, all in one store.
#[derive(Debug)]
pub struct Corpus {
    pub spec: CorpusSpec,
    pub store: FormulaStore,
    pub formulas: Vec<Formula>,
    pub instances: Vec<Instance>,
}

impl Corpus {
    pub fn build(spec: &CorpusSpec) -> Result<Self> {
        let mut store = FormulaStore::new();
        let mut formulas: Vec<Formula> = Vec::new();
        for text in &spec.formulas {
            let f = parse(&mut store, text, spec.arity)?;
            if !formulas.contains(&f) {
                formulas.push(f);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let shape = Shape {
            arity: spec.arity,
            max_var: spec.max_vars,
            max_depth: spec.max_depth,
            max_size: 6,
        };
        let wanted = formulas.len() + spec.random_formulas;
        let mut attempts = 0;
        while formulas.len() < wanted && attempts < 100 * wanted.max(1) {
            attempts += 1;
            let f = random_formula(&mut store, &mut rng, shape);
            if !formulas.contains(&f) {
                formulas.push(f);
            }
        }
        let mut instances = Vec::new();
        for (i, &f) in formulas.iter().enumerate() {
            for classes in &spec.class_tuples {
                let budget = SearchBudget {
                    seed: spec.seed,
                    ..SearchBudget::exhaustive(spec.max_worlds)
                };
                let cap = Some(spec.per_tuple_candidates);
                let mut found = countermodels_per_size(&store, f, None, classes, &budget, cap)?;
                found.extend(countermodels_per_size(&store, f, None, classes, &budget.descending(), cap)?);
                let mut seen: Vec<ProductModel> = Vec::new();
                for base in found {
                    if !seen.contains(&base) {
                        seen.push(base.clone());
                        instances.push(Instance {
                            formula: i,
                            classes: classes.clone(),
                            base,
                        });
                    }
                }
            }
        }
        Ok(Self {
            spec: spec.clone(),
            store,
            formulas,
            instances,
        })
    }

    pub fn text(&self, formula: usize) -> String {
        render(&self.store, self.formulas[formula])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassRate {
    pub passed: usize,
    pub total: usize,
}

impl PassRate {
    pub fn record(&mut self, ok: bool) {
        self.total += 1;
        self.passed += usize::from(ok);
    }

    /// Every recorded case passed and there was at least one.
    pub fn perfect(&self) -> bool {
        self.total > 0 && self.passed == self.total
    }
}

/// The first failing case of a check family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub family: String,
    pub formula: String,
    pub classes: Vec<FactorClass>,
    pub point: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantVerdict {
    pub variant: String,
    pub transfer: PassRate,
    pub star: PassRate,
    pub b_exact: PassRate,
    pub extraction: PassRate,
    pub round_trip: PassRate,
    pub sublemma: PassRate,
    pub witnesses: Vec<Witness>,
}

impl VariantVerdict {
    fn new(variant: VariantConfig) -> Self {
        Self {
            variant: variant.to_string(),
            transfer: PassRate::default(),
            star: PassRate::default(),
            b_exact: PassRate::default(),
            extraction: PassRate::default(),
            round_trip: PassRate::default(),
            sublemma: PassRate::default(),
            witnesses: Vec::new(),
        }
    }

    /// All five families perfect. The sublemma family is reported alongside
    /// but does not decide between variants.
    pub fn passed(&self) -> bool {
        [self.transfer, self.star, self.b_exact, self.extraction, self.round_trip]
            .iter()
            .all(PassRate::perfect)
    }

    fn witness(&mut self, family: &str, formula: String, classes: &[FactorClass], point: Vec<usize>, detail: String) {
        if self.witnesses.iter().any(|w| w.family == family) {
            return;
        }
        self.witnesses.push(Witness {
            family: family.to_string(),
            formula,
            classes: classes.to_vec(),
            point,
            detail,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub regime: Regime,
    pub formulas: usize,
    pub instances: usize,
    pub verdicts: Vec<VariantVerdict>,
    /// Every variant that passed, in grid order.
    pub passing: Vec<String>,
    /// The passing variant with the fewest departures from the literal
    /// reading; ties go to grid order and are listed in `tied`.
    pub selected: Option<String>,
    pub tied: Vec<String>,
}

impl CalibrationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn selected_variant(&self) -> Option<VariantConfig> {
        self.selected.as_deref().and_then(|s| s.parse().ok())
    }
}

/// Runs every variant of `grid` over the corpus described by `spec`.
/// Fails with [`Error::NoPassingVariant`] when nothing passes.
pub fn calibrate_variants(spec: &CorpusSpec, grid: &[VariantConfig]) -> Result<CalibrationReport> {
    let mut corpus = Corpus::build(spec)?;
    calibrate_on(&mut corpus, grid)
}

/// As [`calibrate_variants`] on an already built corpus.
pub fn calibrate_on(corpus: &mut Corpus, grid: &[VariantConfig]) -> Result<CalibrationReport> {
    let regime = corpus.spec.regime;
    let arity = corpus.spec.arity;
    let mut verdicts = Vec::new();
    for &variant in grid {
        let translations = corpus
            .formulas
            .iter()
            .map(|&f| Translation::new(&mut corpus.store, f, arity, variant))
            .collect::<Result<Vec<_>>>()?;
        let store = &corpus.store;
        let mut v = VariantVerdict::new(variant);

        for inst in &corpus.instances {
            let tr = &translations[inst.formula];
            let text = render(store, tr.source);
            let point = inst.base.coords(inst.base.point());
            let res = match build_transfer(store, &inst.base, tr, regime) {
                Ok(r) => r,
                Err(e) => {
                    v.transfer.record(false);
                    v.witness("transfer", text, &inst.classes, point, e.to_string());
                    continue;
                }
            };
            let ok = res.verification.passed();
            v.transfer.record(ok);
            if !ok {
                v.witness("transfer", text.clone(), &inst.classes, point.clone(), format!("{:?}", res.verification));
            }

            let star = check_star(store, &res, &inst.base, tr)?;
            v.star.record(star.passed());
            if let Some(bad) = star.violations.first() {
                v.witness(
                    "star",
                    text.clone(),
                    &inst.classes,
                    bad.point.clone(),
                    format!("k = {}: p{} is {}, beta is {}", bad.k, bad.k, bad.expected, bad.actual),
                );
            }

            let bx = check_b_exact(store, &res, tr)?;
            v.b_exact.record(bx.passed());
            if !bx.passed() {
                let detail = match (bx.missing.first(), bx.extras.first()) {
                    (Some(m), _) => format!("B fails at base point {m:?}"),
                    (None, Some(e)) => format!("B holds at {} ({:?})", e.label, e.point),
                    _ => unreachable!(),
                };
                v.witness("b_exact", text.clone(), &inst.classes, point.clone(), detail);
            }

            if ok {
                match build_extraction(store, &res.model, tr, regime) {
                    Ok(ext) => {
                        v.extraction.record(ext.verification.passed());
                        if !ext.verification.passed() {
                            v.witness("extraction", text.clone(), &inst.classes, point.clone(), format!("{:?}", ext.verification));
                        }
                        let mismatch = round_trip_mismatch(&inst.base, &res, &ext, tr.ctx.depth());
                        v.round_trip.record(ext.verification.passed() && mismatch.is_none());
                        if let Some(w) = mismatch {
                            v.witness("round_trip", text.clone(), &inst.classes, w, "extracted valuation differs from the base".into());
                        }
                        let sub = check_sublemma(store, &res.model, &ext, tr, false)?;
                        v.sublemma.record(sub.passed());
                    }
                    Err(e) => {
                        v.extraction.record(false);
                        v.round_trip.record(false);
                        v.witness("round_trip", text.clone(), &inst.classes, point.clone(), e.to_string());
                    }
                }
            } else {
                v.extraction.record(false);
                v.round_trip.record(false);
            }
        }

        for tr in &translations {
            for classes in &corpus.spec.class_tuples {
                let budget = SearchBudget {
                    seed: corpus.spec.seed,
                    ..SearchBudget::exhaustive(corpus.spec.max_worlds)
                }
                .with_candidates(corpus.spec.reduction_candidates);
                let found = countermodels_per_size(store, tr.reduction, None, classes, &budget, budget.max_candidates)?;
                for counter in &found {
                let text = render(store, tr.source);
                let point = counter.coords(counter.point());
                match build_extraction(store, counter, tr, regime) {
                    Ok(ext) => {
                        v.extraction.record(ext.verification.passed());
                        if !ext.verification.passed() {
                            v.witness("extraction", text, classes, point, format!("{:?}", ext.verification));
                        }
                        let sub = check_sublemma(store, counter, &ext, tr, false)?;
                        v.sublemma.record(sub.passed());
                    }
                    Err(e) => {
                        v.extraction.record(false);
                        v.witness("extraction", text, classes, point, e.to_string());
                    }
                }
            }
                }
        }
        verdicts.push(v);
    }

    let passing: Vec<(usize, VariantConfig)> = grid
        .iter()
        .zip(&verdicts)
        .enumerate()
        .filter(|(_, (_, v))| v.passed())
        .map(|(i, (&cfg, _))| (i, cfg))
        .collect();
    let best = passing.iter().map(|(_, c)| c.deviations()).min();
    let tied: Vec<String> = passing
        .iter()
        .filter(|(_, c)| Some(c.deviations()) == best)
        .map(|(_, c)| c.to_string())
        .collect();
    let report = CalibrationReport {
        regime,
        formulas: corpus.formulas.len(),
        instances: corpus.instances.len(),
        verdicts,
        passing: passing.iter().map(|(_, c)| c.to_string()).collect(),
        selected: tied.first().cloned(),
        tied: if tied.len() > 1 { tied } else { Vec::new() },
    };
    if report.selected.is_none() {
        return Err(Error::NoPassingVariant(Box::new(report)));
    }
    Ok(report)
}

/// First base world within reach of the base point whose image after
/// transfer and extraction is missing or carries a different valuation.
fn round_trip_mismatch(
    base: &ProductModel,
    transfer: &TransferResult,
    ext: &ExtractionResult,
    depth: u32,
) -> Option<Vec<usize>> {
    let dims: Vec<u32> = (1..=base.arity() as u32).collect();
    if ext.project(&transfer.model, transfer.point()) != Some(ext.point()) {
        return Some(base.coords(base.point()));
    }
    let vars: Vec<u32> = base.valuation().vars().filter(|&v| v > 0).collect();
    bounded_reach(base.frame(), base.point(), depth, &dims)
        .ones()
        .find(|&b| match ext.project(&transfer.model, transfer.embed(base, b)) {
            None => true,
            Some(e) => vars.iter().any(|&k| base.valuation().holds(k, b) != ext.model.valuation().holds(k, e)),
        })
        .map(|b| base.coords(b))
}

/// Outcome of one formula in the differential suite. `None` means the
/// direction was not exercised because no countermodel was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub formula: String,
    pub classes: Vec<FactorClass>,
    pub source_search: String,
    /// Transfer of the source countermodel verified.
    pub transfer: Option<bool>,
    pub reduction_search: String,
    /// Extraction from the translation's countermodel verified.
    pub extraction: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub variant: String,
    pub regime: Regime,
    pub entries: Vec<SuiteEntry>,
    pub transfer: PassRate,
    pub extraction: PassRate,
}

impl SuiteReport {
    /// Every produced witness verified.
    pub fn passed(&self) -> bool {
        self.transfer.passed == self.transfer.total && self.extraction.passed == self.extraction.total
    }
}

fn outcome_name(o: &SearchOutcome) -> String {
    match o {
        SearchOutcome::Found(_) => "found".into(),
        SearchOutcome::NotFound { certified: true, .. } => "none (certified)".into(),
        SearchOutcome::NotFound { certified: false, .. } => "none (sampled)".into(),
        SearchOutcome::BudgetExhausted { .. } => "budget exhausted".into(),
    }
}

/// Searches size tuples one at a time, each with the full candidate cap, and
/// returns the first find. Countermodels of translations need large first
/// factors, which a single shared cap would rarely reach.
fn first_per_size(
    store: &FormulaStore,
    f: Formula,
    classes: &[FactorClass],
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    let mut last = None;
    let mut certified = true;
    let mut tuples = 0;
    for tuple in size_tuples(classes.len(), budget.max_worlds_per_factor) {
        let outcome = search_in_sizes(store, f, None, classes, &[tuple], budget)?;
        match outcome {
            SearchOutcome::Found(_) => return Ok(outcome),
            SearchOutcome::NotFound { certified: c, frame_tuples } => {
                certified &= c;
                tuples += frame_tuples;
            }
            SearchOutcome::BudgetExhausted { frame_tuples } => {
                tuples += frame_tuples;
                last = Some(SearchOutcome::BudgetExhausted { frame_tuples: tuples });
            }
        }
    }
    Ok(last.unwrap_or(SearchOutcome::NotFound {
        certified,
        frame_tuples: tuples,
    }))
}

/// For each formula: search a countermodel and transfer it; search a
/// countermodel of the translation and extract from it. Every witness either
/// direction produces is model-checked. The reduction budget applies per
/// size tuple.
pub fn differential_suite(
    store: &mut FormulaStore,
    formulas: &[Formula],
    classes: &[FactorClass],
    regime: Regime,
    variant: VariantConfig,
    source_budget: &SearchBudget,
    reduction_budget: &SearchBudget,
) -> Result<SuiteReport> {
    let arity = classes.len() as u32;
    let mut report = SuiteReport {
        variant: variant.to_string(),
        regime,
        entries: Vec::new(),
        transfer: PassRate::default(),
        extraction: PassRate::default(),
    };
    for &f in formulas {
        let tr = Translation::new(store, f, arity, variant)?;
        let store = &*store;
        let mut entry = SuiteEntry {
            formula: render(store, f),
            classes: classes.to_vec(),
            source_search: String::new(),
            transfer: None,
            reduction_search: String::new(),
            extraction: None,
            error: None,
        };
        let found = search_countermodel(store, f, classes, source_budget)?;
        entry.source_search = outcome_name(&found);
        if let Some(base) = found.found() {
            let ok = match transfer_countermodel(store, base, &tr, regime) {
                Ok(_) => true,
                Err(e) => {
                    entry.error = Some(e.to_string());
                    false
                }
            };
            entry.transfer = Some(ok);
            report.transfer.record(ok);
        }
        let found = first_per_size(store, tr.reduction, classes, reduction_budget)?;
        entry.reduction_search = outcome_name(&found);
        if let Some(counter) = found.found() {
            let ok = match extract_countermodel(store, counter, &tr, regime) {
                Ok(_) => true,
                Err(e) => {
                    entry.error.get_or_insert(e.to_string());
                    false
                }
            };
            entry.extraction = Some(ok);
            report.extraction.record(ok);
        }
        report.entries.push(entry);
    }
    Ok(report)
}
