//! The two model surgeries behind the embedding, with checkers for their
//! intermediate claims.
//!
//! *Transfer* turns a countermodel of a source formula into a countermodel of
//! its translation: every first-factor world gets one ladder per variable
//! index `1..=m+1` hung below it, and `p` marks the rungs of the ladders whose
//! variable holds at the column. *Extraction* goes the other way: it keeps
//! the first-factor worlds that carry a `B`-point within the formula's modal
//! depth and reads each `pk` off `beta(k)`.
//!
//! Both surgeries model-check their output and refuse to return a result
//! that does not refute its target formula.

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{bounded_reach, Evaluator};
use crate::formula::FormulaStore;
use crate::frame::{Frame1, Ladder, Regime, Relation, Rung};
use crate::naive;
use crate::product::{ProductModel, Valuation};
use crate::translation::Translation;

/// Where a world of an extended first factor comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Base(usize),
    /// Point `rung` of the `k`-ladder hanging below base world `column`.
    Gadget { k: u32, column: usize, rung: Rung },
}

/// A first factor with ladders `1..=m+1` attached below every world. Base
/// worlds keep their indices; ladder points follow, grouped by `k` then by
/// column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetFrame {
    frame: Frame1,
    base: usize,
    vars: u32,
    offsets: Vec<usize>,
}

impl GadgetFrame {
    /// Attaches the ladders. In the T regime the input must be reflexive and
    /// the whole relation is reflexively closed; in the K regime nothing is
    /// closed.
    pub fn attach(base: &Frame1, vars: u32, regime: Regime) -> Result<Self> {
        if regime == Regime::T && !base.is_reflexive() {
            return Err(Error::PreconditionFailed(
                "first factor must be reflexive in the T regime".into(),
            ));
        }
        let b = base.worlds();
        let mut offsets = Vec::with_capacity(vars as usize + 1);
        let mut next = b;
        for k in 1..=vars + 1 {
            offsets.push(next);
            next += b * Ladder::points(k);
        }
        let total = next;
        let mut edges: Vec<(usize, usize)> = base.relation().edges().collect();
        for k in 1..=vars + 1 {
            for x in 0..b {
                let root = offsets[k as usize - 1] + x * Ladder::points(k);
                edges.push((x, root));
                edges.extend(Ladder::chain_edges(k).map(|(s, t)| (root + s, root + t)));
            }
        }
        let rel = Relation::from_edges(total, edges)?;
        let rel = match regime {
            Regime::T => rel.reflexive_closure(),
            Regime::K => rel,
        };
        let mut labels = std::collections::BTreeMap::new();
        for x in 0..b {
            labels.insert(format!("base{x}"), x);
        }
        let mut out = Self {
            frame: Frame1::new(rel)?,
            base: b,
            vars,
            offsets,
        };
        for w in b..total {
            if let Site::Gadget { k, column, rung } = out.site(w) {
                labels.insert(format!("{rung}^{k}@{column}"), w);
            }
        }
        out.frame = out.frame.with_labels(labels)?;
        Ok(out)
    }

    pub fn frame(&self) -> &Frame1 {
        &self.frame
    }

    pub fn base_worlds(&self) -> usize {
        self.base
    }

    pub fn vars(&self) -> u32 {
        self.vars
    }

    /// The world for `rung` of the `k`-ladder below `column`.
    pub fn point(&self, k: u32, column: usize, rung: Rung) -> usize {
        assert!((1..=self.vars + 1).contains(&k) && column < self.base);
        self.offsets[k as usize - 1] + column * Ladder::points(k) + rung.offset()
    }

    pub fn site(&self, world: usize) -> Site {
        if world < self.base {
            return Site::Base(world);
        }
        let k = self.offsets.partition_point(|&o| o <= world) as u32;
        let local = world - self.offsets[k as usize - 1];
        let len = Ladder::points(k);
        Site::Gadget {
            k,
            column: local / len,
            rung: Rung::from_offset(local % len),
        }
    }
}

/// Checker outcomes recorded with a transfer result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransferVerification {
    /// The translation is false at the point (bottom-up checker).
    pub refutes_reduction: bool,
    /// The guard is true at the point (bottom-up checker).
    pub guard_holds: bool,
    /// The naive evaluator agrees on both.
    pub naive_agrees: bool,
}

impl TransferVerification {
    pub fn passed(&self) -> bool {
        self.refutes_reduction && self.guard_holds && self.naive_agrees
    }
}

#[derive(Debug, Clone)]
pub struct TransferResult {
    pub gadgets: GadgetFrame,
    /// The extended product with the valuation of `p`; its point is the
    /// image of the base point.
    pub model: ProductModel,
    /// Worlds of `model` whose first coordinate is a base world.
    pub base_points: FixedBitSet,
    pub verification: TransferVerification,
}

impl TransferResult {
    /// The world of the extended model with the same coordinates as
    /// `base_world` of the base model.
    pub fn embed(&self, base: &ProductModel, base_world: usize) -> usize {
        self.model
            .world(&base.coords(base_world))
            .expect("base coordinates embed")
    }

    pub fn point(&self) -> usize {
        self.model.point()
    }
}

/// The valuation of `p` on the extended product: over every column `z`, the
/// marked rungs of the `(m+1)`-ladder, and for `k <= m` the marked rungs of
/// the `k`-ladder when `pk` holds at `z`.
pub fn lift_valuation(
    base: &ProductModel,
    gadgets: &GadgetFrame,
    extended: &ProductModel,
    translation: &Translation,
) -> FixedBitSet {
    let m = translation.ctx.vars();
    let first = translation.ctx.variant().first_marked_rung();
    let mut ext = FixedBitSet::with_capacity(extended.worlds());
    for z in 0..base.worlds() {
        let mut c = base.coords(z);
        let column = c[0];
        for k in 1..=m + 1 {
            if k <= m && !base.valuation().holds(k, z) {
                continue;
            }
            for i in first..=k {
                c[0] = gadgets.point(k, column, Rung::W(i));
                ext.insert(extended.world(&c).expect("extended coordinates"));
            }
        }
    }
    ext
}

/// Builds the transferred model and records its verification without
/// judging it. Calibration uses this to score variants that do not verify.
pub fn build_transfer(
    store: &FormulaStore,
    base: &ProductModel,
    translation: &Translation,
    regime: Regime,
) -> Result<TransferResult> {
    let ctx = &translation.ctx;
    if base.arity() != ctx.arity() as usize {
        return Err(Error::PreconditionFailed(format!(
            "model has {} factors, translation expects {}",
            base.arity(),
            ctx.arity()
        )));
    }
    let mut ev = Evaluator::for_model(store, base);
    if ev.check(base.point(), translation.source)? {
        return Err(Error::PreconditionFailed(
            "base model does not refute the source formula at its point".into(),
        ));
    }
    let gadgets = GadgetFrame::attach(&base.factors()[0], ctx.vars(), regime)?;
    let mut factors = base.factors().to_vec();
    factors[0] = gadgets.frame().clone();
    let shape = ProductModel::new(
        factors.clone(),
        Valuation::new(base.worlds() / base.factors()[0].worlds() * gadgets.frame().worlds()),
        0,
    )?;
    let point = shape.world(&base.coords(base.point())).expect("point embeds");
    let mut valuation = Valuation::new(shape.worlds());
    valuation.insert(0, lift_valuation(base, &gadgets, &shape, translation));
    let model = ProductModel::new(factors, valuation, point)?;
    let mut base_points = FixedBitSet::with_capacity(model.worlds());
    for z in 0..base.worlds() {
        base_points.insert(model.world(&base.coords(z)).expect("embeds"));
    }

    let mut ev = Evaluator::for_model(store, &model);
    let refutes_reduction = !ev.check(point, translation.reduction)?;
    let guard_holds = ev.check(point, ctx.guard())?;
    let naive_reduction = naive::holds(store, model.frame(), model.valuation(), point, translation.reduction);
    let naive_guard = naive::holds(store, model.frame(), model.valuation(), point, ctx.guard());
    let verification = TransferVerification {
        refutes_reduction,
        guard_holds,
        naive_agrees: naive_reduction != refutes_reduction && naive_guard == guard_holds,
    };
    Ok(TransferResult {
        gadgets,
        model,
        base_points,
        verification,
    })
}

/// Transfers a countermodel of the source formula to a verified
/// countermodel of its translation.
pub fn transfer_countermodel(
    store: &FormulaStore,
    base: &ProductModel,
    translation: &Translation,
    regime: Regime,
) -> Result<TransferResult> {
    let result = build_transfer(store, base, translation, regime)?;
    let v = result.verification;
    if !v.passed() {
        return Err(Error::TransferFailed(format!(
            "variant {}: reduction refuted {}, guard holds {}, naive agrees {}",
            translation.ctx.variant(),
            v.refutes_reduction,
            v.guard_holds,
            v.naive_agrees
        )));
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StarViolation {
    pub point: Vec<usize>,
    pub k: u32,
    /// Truth of `pk` in the base model.
    pub expected: bool,
    /// Truth of `beta(k)` in the extended model.
    pub actual: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StarReport {
    pub checked: usize,
    pub violations: Vec<StarViolation>,
}

impl StarReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// On every base point and every `k <= m`, `beta(k)` in the extended model
/// must agree with `pk` in the base model.
pub fn check_star(
    store: &FormulaStore,
    result: &TransferResult,
    base: &ProductModel,
    translation: &Translation,
) -> Result<StarReport> {
    let mut ev = Evaluator::for_model(store, &result.model);
    let mut report = StarReport::default();
    for k in 1..=translation.ctx.vars() {
        let beta = ev.sat_set(translation.ctx.beta(k)?)?.clone();
        for z in 0..base.worlds() {
            let expected = base.valuation().holds(k, z);
            let actual = beta.contains(result.embed(base, z));
            report.checked += 1;
            if expected != actual {
                report.violations.push(StarViolation {
                    point: base.coords(z),
                    k,
                    expected,
                    actual,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtraPoint {
    pub point: Vec<usize>,
    /// Label of the first coordinate, e.g. `v0^3@1`.
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BExactReport {
    /// Base points where `B` fails.
    pub missing: Vec<Vec<usize>>,
    /// Non-base points where `B` holds.
    pub extras: Vec<ExtraPoint>,
}

impl BExactReport {
    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.extras.is_empty()
    }
}

/// Compares the truth set of `B` in the extended model with the base points.
pub fn check_b_exact(
    store: &FormulaStore,
    result: &TransferResult,
    translation: &Translation,
) -> Result<BExactReport> {
    let mut ev = Evaluator::for_model(store, &result.model);
    let b = ev.sat_set(translation.ctx.big_b())?;
    let mut report = BExactReport::default();
    for w in 0..result.model.worlds() {
        match (result.base_points.contains(w), b.contains(w)) {
            (true, false) => report.missing.push(result.model.coords(w)),
            (false, true) => {
                let coords = result.model.coords(w);
                let label = match result.gadgets.site(coords[0]) {
                    Site::Gadget { k, column, rung } => format!("{rung}^{k}@{column}"),
                    Site::Base(x) => format!("base{x}"),
                };
                report.extras.push(ExtraPoint {
                    point: coords,
                    label,
                });
            }
            _ => {}
        }
    }
    Ok(report)
}

/// Points of ladder `j` at rung `w0` that satisfy `p & alpha(k)` for some
/// `k != j`, as `(j, k, coordinates)`. Empty on a correctly marked model.
pub fn gadget_crosstalk(
    store: &mut FormulaStore,
    result: &TransferResult,
    translation: &Translation,
) -> Result<Vec<(u32, u32, Vec<usize>)>> {
    let m = translation.ctx.vars();
    let p = store.p();
    let marked: Vec<_> = (1..=m + 1)
        .map(|k| Ok(store.and(p, translation.ctx.alpha(k)?)))
        .collect::<Result<_>>()?;
    let mut ev = Evaluator::for_model(store, &result.model);
    let mut out = Vec::new();
    for k in 1..=m + 1 {
        let set = ev.sat_set(marked[k as usize - 1])?.clone();
        for w in set.ones() {
            let coords = result.model.coords(w);
            if let Site::Gadget {
                k: j,
                rung: Rung::W(0),
                ..
            } = result.gadgets.site(coords[0])
            {
                if j != k {
                    out.push((j, k, coords));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExtractionVerification {
    /// The source formula is false at the point (bottom-up checker).
    pub refutes_source: bool,
    pub naive_agrees: bool,
}

impl ExtractionVerification {
    pub fn passed(&self) -> bool {
        self.refutes_source && self.naive_agrees
    }
}

#[derive(Debug, Clone)]
pub struct ExtractionResult {
    /// Surviving first-factor worlds of the input, increasing.
    pub kept_first: Vec<usize>,
    /// The restricted product with `pk` read off `beta(k)`.
    pub model: ProductModel,
    pub verification: ExtractionVerification,
}

impl ExtractionResult {
    /// The world of `model` for input world `w`, if it survived.
    pub fn project(&self, counter: &ProductModel, w: usize) -> Option<usize> {
        let mut c = counter.coords(w);
        c[0] = self.kept_first.binary_search(&c[0]).ok()?;
        self.model.world(&c)
    }

    pub fn point(&self) -> usize {
        self.model.point()
    }
}

fn all_dims(arity: usize) -> Vec<u32> {
    (1..=arity as u32).collect()
}

fn rest_dims(arity: usize) -> Vec<u32> {
    (2..=arity as u32).collect()
}

/// Builds the extracted model without judging it.
pub fn build_extraction(
    store: &FormulaStore,
    counter: &ProductModel,
    translation: &Translation,
    regime: Regime,
) -> Result<ExtractionResult> {
    let ctx = &translation.ctx;
    if counter.arity() != ctx.arity() as usize {
        return Err(Error::PreconditionFailed(format!(
            "model has {} factors, translation expects {}",
            counter.arity(),
            ctx.arity()
        )));
    }
    if regime == Regime::T && !counter.factors()[0].is_reflexive() {
        return Err(Error::PreconditionFailed(
            "first factor must be reflexive in the T regime".into(),
        ));
    }
    let u = counter.point();
    let mut ev = Evaluator::for_model(store, counter);
    if !ev.check(u, ctx.guard())? {
        return Err(Error::PreconditionFailed("guard A fails at the point".into()));
    }
    if ev.check(u, translation.sigma)? {
        return Err(Error::PreconditionFailed(
            "translated formula holds at the point".into(),
        ));
    }
    let reach = bounded_reach(counter.frame(), u, ctx.depth(), &all_dims(counter.arity()));
    let b = ev.sat_set(ctx.big_b())?.clone();
    let mut kept: Vec<usize> = reach
        .ones()
        .filter(|&x| b.contains(x))
        .map(|x| counter.coords(x)[0])
        .collect();
    kept.sort_unstable();
    kept.dedup();

    let mut factors = counter.factors().to_vec();
    factors[0] = factors[0].restrict(&kept)?;
    let shape = ProductModel::new(
        factors.clone(),
        Valuation::new(counter.worlds() / counter.factors()[0].worlds() * kept.len()),
        0,
    )?;
    let lift = |w: usize| {
        let mut c = shape.coords(w);
        c[0] = kept[c[0]];
        counter.world(&c).expect("kept coordinates")
    };
    let mut valuation = Valuation::new(shape.worlds());
    for k in 1..=ctx.vars() {
        let beta = ev.sat_set(ctx.beta(k)?)?;
        let mut ext = FixedBitSet::with_capacity(shape.worlds());
        for w in 0..shape.worlds() {
            if beta.contains(lift(w)) {
                ext.insert(w);
            }
        }
        valuation.insert(k, ext);
    }
    let mut point_coords = counter.coords(u);
    point_coords[0] = kept
        .binary_search(&point_coords[0])
        .map_err(|_| Error::ExtractionFailed("first coordinate of the point was dropped".into()))?;
    let point = shape.world(&point_coords).expect("in range");
    let model = ProductModel::new(factors, valuation, point)?;

    let refutes_source = !Evaluator::for_model(store, &model).check(point, translation.source)?;
    let naive_holds = naive::holds(store, model.frame(), model.valuation(), point, translation.source);
    Ok(ExtractionResult {
        kept_first: kept,
        model,
        verification: ExtractionVerification {
            refutes_source,
            naive_agrees: naive_holds != refutes_source,
        },
    })
}

/// Extracts a verified countermodel of the source formula from a countermodel
/// of its translation.
pub fn extract_countermodel(
    store: &FormulaStore,
    counter: &ProductModel,
    translation: &Translation,
    regime: Regime,
) -> Result<ExtractionResult> {
    let result = build_extraction(store, counter, translation, regime)?;
    if !result.verification.passed() {
        return Err(Error::ExtractionFailed(format!(
            "variant {}: source refuted {}, naive agrees {}",
            translation.ctx.variant(),
            result.verification.refutes_source,
            result.verification.naive_agrees
        )));
    }
    Ok(result)
}

/// How a `B`-point `y` within reach is justified: `x` is a reachable
/// `B`-point with the same first coordinate; `common_successor` is a point
/// reachable from both along modalities `2..=n` within the depth bound;
/// `pivot` is `(x1, u2, ..., un)` when it reaches both `x` and `y` that way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SublemmaTrace {
    pub y: Vec<usize>,
    pub x: Vec<usize>,
    pub common_successor: Option<Vec<usize>>,
    pub pivot: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SublemmaReport {
    pub checked: usize,
    pub violations: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<SublemmaTrace>,
}

impl SublemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every point of the input that survives extraction and lies within the
/// depth bound of the point satisfies `B`.
pub fn check_sublemma(
    store: &FormulaStore,
    counter: &ProductModel,
    extraction: &ExtractionResult,
    translation: &Translation,
    trace: bool,
) -> Result<SublemmaReport> {
    let d = translation.ctx.depth();
    let u = counter.point();
    let frame = counter.frame();
    let all = all_dims(counter.arity());
    let rest = rest_dims(counter.arity());
    let reach = bounded_reach(frame, u, d, &all);
    let mut ev = Evaluator::for_model(store, counter);
    let b = ev.sat_set(translation.ctx.big_b())?.clone();
    let mut report = SublemmaReport::default();
    for y in reach.ones() {
        if extraction.project(counter, y).is_none() {
            continue;
        }
        report.checked += 1;
        if !b.contains(y) {
            report.violations.push(counter.coords(y));
            continue;
        }
        if !trace {
            continue;
        }
        let y1 = counter.coords(y)[0];
        let Some(x) = reach
            .ones()
            .find(|&x| b.contains(x) && counter.coords(x)[0] == y1)
        else {
            continue;
        };
        let from_x = bounded_reach(frame, x, d, &rest);
        let from_y = bounded_reach(frame, y, d, &rest);
        let common_successor = from_x
            .intersection(&from_y)
            .next()
            .map(|z| counter.coords(z));
        let mut pivot = counter.coords(u);
        pivot[0] = y1;
        let pivot_world = counter.world(&pivot).expect("in range");
        let from_pivot = bounded_reach(frame, pivot_world, d, &rest);
        let pivot = (from_pivot.contains(x) && from_pivot.contains(y)).then_some(pivot);
        report.traces.push(SublemmaTrace {
            y: counter.coords(y),
            x: counter.coords(x),
            common_successor,
            pivot,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;
    use crate::translation::VariantConfig;

    fn point() -> Frame1 {
        Frame1::from_edges(1, [(0, 0)]).unwrap()
    }

    #[test]
    fn attach_counts_and_sites() {
        let g = GadgetFrame::attach(&point(), 1, Regime::T).unwrap();
        assert_eq!(g.frame().worlds(), 11);
        assert!(g.frame().is_reflexive());
        for k in 1..=2 {
            let root = g.point(k, 0, Rung::V(0));
            assert!(g.frame().relation().contains(0, root));
            assert_eq!(g.site(root), Site::Gadget { k, column: 0, rung: Rung::V(0) });
        }
        assert_eq!(g.site(0), Site::Base(0));
        assert_eq!(g.frame().label("w2^2@0"), Some(g.point(2, 0, Rung::W(2))));
    }

    #[test]
    fn attach_restricts_back_to_base() {
        let base = Frame1::from_edges(3, [(0, 0), (1, 1), (2, 2), (0, 2), (2, 1)]).unwrap();
        let g = GadgetFrame::attach(&base, 2, Regime::T).unwrap();
        let back = g.frame().restrict(&[0, 1, 2]).unwrap();
        assert_eq!(back.relation(), base.relation());
        for x in 0..3 {
            for k in 1..=3 {
                let sub: Vec<usize> = (0..Ladder::points(k))
                    .map(|o| g.point(k, x, Rung::from_offset(o)))
                    .collect();
                let copy = g.frame().restrict(&sub).unwrap();
                assert_eq!(copy.relation(), Ladder::new(k).unwrap().frame().relation());
            }
        }
        assert!(GadgetFrame::attach(&Frame1::from_edges(1, []).unwrap(), 1, Regime::T).is_err());
        let k = GadgetFrame::attach(&Frame1::from_edges(1, []).unwrap(), 1, Regime::K).unwrap();
        assert!(!k.frame().relation().contains(0, 0));
    }

    fn one_by_one(p1: bool) -> ProductModel {
        let mut val = Valuation::new(1);
        val.set(1, 0, p1);
        ProductModel::new(vec![point(), point()], val, 0).unwrap()
    }

    #[test]
    fn transfer_single_variable() {
        let mut s = FormulaStore::new();
        let f = parse(&mut s, "p1", 2).unwrap();
        let tr = Translation::new(&mut s, f, 2, VariantConfig::default()).unwrap();
        let res = transfer_countermodel(&s, &one_by_one(false), &tr, Regime::T).unwrap();
        assert!(res.verification.passed());
        let p = res.model.valuation().get(0).unwrap();
        assert!(!p.contains(res.point()));
        assert!(matches!(
            build_transfer(&s, &one_by_one(true), &tr, Regime::T),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn literal_variant_fails_star() {
        let mut s = FormulaStore::new();
        let f = parse(&mut s, "p1", 2).unwrap();
        let tr = Translation::new(&mut s, f, 2, VariantConfig::LITERAL).unwrap();
        let mut val = Valuation::new(2);
        val.set(1, 1, true);
        let base = ProductModel::new(
            vec![Frame1::from_edges(2, [(0, 0), (1, 1)]).unwrap(), point()],
            val,
            0,
        )
        .unwrap();
        let res = build_transfer(&s, &base, &tr, Regime::T).unwrap();
        let star = check_star(&s, &res, &base, &tr).unwrap();
        assert_eq!(
            star.violations,
            vec![StarViolation {
                point: vec![1, 0],
                k: 1,
                expected: true,
                actual: false
            }]
        );
        let good = Translation::new(&mut s, f, 2, VariantConfig::default()).unwrap();
        let res = build_transfer(&s, &base, &good, Regime::T).unwrap();
        assert!(check_star(&s, &res, &base, &good).unwrap().passed());
        assert!(check_b_exact(&s, &res, &good).unwrap().passed());
    }

    #[test]
    fn extraction_keeps_the_point_column() {
        let mut s = FormulaStore::new();
        let f = parse(&mut s, "[1]p1", 2).unwrap();
        let tr = Translation::new(&mut s, f, 2, VariantConfig::default()).unwrap();
        let mut val = Valuation::new(2);
        val.set(1, 0, true);
        let base = ProductModel::new(
            vec![Frame1::reflexive_chain(2).unwrap(), point()],
            val,
            0,
        )
        .unwrap();
        let t = transfer_countermodel(&s, &base, &tr, Regime::T).unwrap();
        let e = extract_countermodel(&s, &t.model, &tr, Regime::T).unwrap();
        assert!(e.kept_first.contains(&t.model.coords(t.point())[0]));
        let sub = check_sublemma(&s, &t.model, &e, &tr, true).unwrap();
        assert!(sub.passed());
        assert!(sub.traces.iter().all(|t| t.pivot.is_some()));
    }
}
