//! Bounded countermodel search over products of small frames.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Compiled, MaskFrame};
use crate::formula::{Formula, FormulaStore};
use crate::frame::{Frame1, Relation};
use crate::naive;
use crate::product::{product, NFrame, ProductModel, Valuation};

/// Frame classes of the factor logics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FactorClass {
    K,
    T,
    S4,
    S5,
}

impl FactorClass {
    pub fn contains(&self, frame: &Frame1) -> bool {
        let r = frame.relation();
        match self {
            FactorClass::K => true,
            FactorClass::T => r.is_reflexive(),
            FactorClass::S4 => r.is_reflexive() && r.is_transitive(),
            FactorClass::S5 => r.is_reflexive() && r.is_transitive() && r.is_symmetric(),
        }
    }
}

impl fmt::Display for FactorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FactorClass::K => "K",
            FactorClass::T => "T",
            FactorClass::S4 => "S4",
            FactorClass::S5 => "S5",
        };
        f.write_str(s)
    }
}

impl FromStr for FactorClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "K" => Ok(FactorClass::K),
            "T" => Ok(FactorClass::T),
            "S4" => Ok(FactorClass::S4),
            "S5" => Ok(FactorClass::S5),
            other => Err(format!("unknown frame class `{other}`")),
        }
    }
}

/// All frames of `class` on `size` worlds, in increasing order of the
/// adjacency matrix read as a binary number (row-major, `(0,0)` least
/// significant). Isomorphic copies are not removed.
pub fn enumerate_frames(class: FactorClass, size: usize) -> impl Iterator<Item = Frame1> {
    assert!(size >= 1, "frames have at least one world");
    let cells = size * size;
    assert!(cells < 64, "frame too large to enumerate");
    let diagonal: u64 = (0..size).map(|i| 1u64 << (i * size + i)).sum();
    let reflexive = class != FactorClass::K;
    (0..1u64 << cells)
        .filter(move |bits| !reflexive || bits & diagonal == diagonal)
        .map(move |bits| {
            let edges = (0..cells)
                .filter(|c| bits >> c & 1 == 1)
                .map(|c| (c / size, c % size));
            Frame1::new(Relation::from_edges(size, edges).expect("in range")).expect("non-empty")
        })
        .filter(move |f| class.contains(f))
}

/// Limits for [`search_countermodel`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_worlds_per_factor: usize,
    /// Number of random valuations tried per frame when exhaustive
    /// enumeration is out of reach.
    pub max_valuations: u64,
    /// Cap on (frame tuple, valuation) candidates examined; `None` is
    /// unbounded.
    pub max_candidates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<Duration>,
    pub seed: u64,
    /// Enumerate exhaustive valuations from all-true down instead of from
    /// all-false up.
    #[serde(default)]
    pub descending: bool,
}

impl SearchBudget {
    /// Valuations are enumerated exhaustively up to this many bits
    /// (worlds times variables).
    pub const EXHAUSTIVE_BITS: usize = 18;

    pub fn exhaustive(max_worlds_per_factor: usize) -> Self {
        Self {
            max_worlds_per_factor,
            max_valuations: 4096,
            max_candidates: None,
            time_limit: None,
            seed: 0,
            descending: false,
        }
    }

    pub fn descending(mut self) -> Self {
        self.descending = true;
        self
    }

    pub fn with_candidates(mut self, cap: u64) -> Self {
        self.max_candidates = Some(cap);
        self
    }
}

/// A countermodel: a product model whose point refutes the formula.
#[derive(Debug, Clone)]
pub struct Countermodel {
    pub model: ProductModel,
    /// Frame tuples examined before this one, counting it.
    pub frame_tuples: u64,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(Countermodel),
    /// Every frame tuple within the size bound was examined. `certified` is
    /// true when every valuation was enumerated too, so no countermodel
    /// exists within the bound.
    NotFound { certified: bool, frame_tuples: u64 },
    /// The candidate cap or the time limit was hit first.
    BudgetExhausted { frame_tuples: u64 },
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&ProductModel> {
        match self {
            SearchOutcome::Found(c) => Some(&c.model),
            _ => None,
        }
    }

    pub fn into_found(self) -> Option<ProductModel> {
        match self {
            SearchOutcome::Found(c) => Some(c.model),
            _ => None,
        }
    }
}

/// Size tuples in search order: by largest factor, then lexicographically.
/// Raising the bound only appends tuples, so a countermodel found under a
/// smaller bound is found first under a larger one too.
pub fn size_tuples(arity: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (1..=max).map(move |s| {
                    let mut t = t.clone();
                    t.push(s);
                    t
                })
            })
            .collect();
    }
    out.sort_by_key(|t| (t.iter().copied().max().unwrap_or(0), t.clone()));
    out
}

/// Every valuation of `vars` over `worlds` (at most 64), or a seeded sample
/// when there are too many. Each item is one world mask per variable.
pub struct Valuations {
    vars: usize,
    worlds: usize,
    exhaustive: bool,
    descending: bool,
    next: u64,
    limit: u64,
    rng: ChaCha8Rng,
}

impl Valuations {
    pub fn new(vars: usize, worlds: usize, max_sampled: u64, seed: u64) -> Self {
        assert!(worlds <= 64, "valuations are enumerated over at most 64 worlds");
        let bits = vars * worlds;
        let exhaustive = bits <= SearchBudget::EXHAUSTIVE_BITS;
        let limit = if exhaustive { 1u64 << bits } else { max_sampled };
        Self {
            vars,
            worlds,
            exhaustive,
            descending: false,
            next: 0,
            limit,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    /// Walks exhaustive codes from the top down.
    pub fn descending(mut self, yes: bool) -> Self {
        self.descending = yes;
        self
    }

    /// Writes the next valuation into `masks`; false when done.
    pub fn next_into(&mut self, masks: &mut Vec<u64>) -> bool {
        if self.next >= self.limit {
            return false;
        }
        let code = if self.descending {
            self.limit - 1 - self.next
        } else {
            self.next
        };
        self.next += 1;
        let full = if self.worlds == 64 {
            u64::MAX
        } else {
            (1u64 << self.worlds) - 1
        };
        masks.clear();
        for vi in 0..self.vars {
            let m = if self.exhaustive {
                code >> (vi * self.worlds) & full
            } else {
                self.rng.gen::<u64>() & full
            };
            masks.push(m);
        }
        true
    }
}

impl Iterator for Valuations {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let mut masks = Vec::with_capacity(self.vars);
        self.next_into(&mut masks).then_some(masks)
    }
}

fn valuation_from_masks(vars: &[u32], masks: &[u64], worlds: usize) -> Valuation {
    let mut val = Valuation::new(worlds);
    for (&v, &m) in vars.iter().zip(masks) {
        for w in 0..worlds {
            val.set(v, w, m >> w & 1 == 1);
        }
    }
    val
}

/// Advances `idx` as a mixed-radix counter over `lens`, last digit fastest.
/// Returns false after the last combination.
fn odometer(idx: &mut [usize], lens: &[usize]) -> bool {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < lens[d] {
            return true;
        }
        idx[d] = 0;
    }
    false
}

/// Calls `visit` with each (factors, frame, masks) candidate in search order
/// until it returns `true` or the budget runs out.
fn scan<F>(
    vars: usize,
    classes: &[FactorClass],
    sizes: &[Vec<usize>],
    budget: &SearchBudget,
    mut visit: F,
) -> (ScanEnd, u64, bool)
where
    F: FnMut(&[Frame1], &NFrame, &MaskFrame, &[u64]) -> bool,
{
    let started = Instant::now();
    let mut candidates = 0u64;
    let mut tuples = 0u64;
    let mut exhaustive = true;
    let mut masks = Vec::with_capacity(vars);
    for tuple in sizes {
        let lists: Vec<Vec<Frame1>> = classes
            .iter()
            .zip(tuple)
            .map(|(&c, &s)| enumerate_frames(c, s).collect())
            .collect();
        let lens: Vec<usize> = lists.iter().map(Vec::len).collect();
        let mut idx = vec![0; lists.len()];
        let mut more = lens.iter().all(|&l| l > 0);
        while more {
            let factors: Vec<Frame1> = idx.iter().zip(&lists).map(|(&i, l)| l[i].clone()).collect();
            more = odometer(&mut idx, &lens);
            tuples += 1;
            let frame = product(&factors).expect("non-empty factors");
            let fast = MaskFrame::new(&frame).expect("size checked by caller");
            let seed = budget.seed ^ tuples.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut valuations = Valuations::new(vars, frame.worlds(), budget.max_valuations, seed)
                .descending(budget.descending);
            exhaustive &= valuations.is_exhaustive();
            while valuations.next_into(&mut masks) {
                if budget.max_candidates.is_some_and(|cap| candidates >= cap)
                    || budget.time_limit.is_some_and(|t| started.elapsed() >= t)
                {
                    return (ScanEnd::Budget, tuples, exhaustive);
                }
                candidates += 1;
                if visit(&factors, &frame, &fast, &masks) {
                    return (ScanEnd::Stopped, tuples, exhaustive);
                }
            }
        }
    }
    (ScanEnd::Done, tuples, exhaustive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScanEnd {
    Stopped,
    Budget,
    Done,
}

/// Searches products of frames from `classes` (one per modality) for a model
/// and point refuting `f`. The refuting point is the first world, in index
/// order, where `f` fails. Returned models are re-checked with the naive
/// evaluator.
pub fn search_countermodel(
    store: &FormulaStore,
    f: Formula,
    classes: &[FactorClass],
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    let sizes = size_tuples(classes.len(), budget.max_worlds_per_factor);
    search_in_sizes(store, f, None, classes, &sizes, budget)
}

/// As [`search_countermodel`], but the refuting point must also satisfy
/// `guard`: the first world where `guard` holds and `f` fails.
pub fn search_guarded(
    store: &FormulaStore,
    f: Formula,
    guard: Formula,
    classes: &[FactorClass],
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    let sizes = size_tuples(classes.len(), budget.max_worlds_per_factor);
    search_in_sizes(store, f, Some(guard), classes, &sizes, budget)
}

/// As [`search_countermodel`] or [`search_guarded`], restricted to the given
/// size tuples. Products may have at most 64 worlds.
pub fn search_in_sizes(
    store: &FormulaStore,
    f: Formula,
    guard: Option<Formula>,
    classes: &[FactorClass],
    sizes: &[Vec<usize>],
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    if classes.is_empty() {
        return Err(Error::NoFactors);
    }
    if budget.max_worlds_per_factor == 0 {
        return Err(Error::PreconditionFailed("search budget allows no worlds".into()));
    }
    let top = store.max_modality(f).max(guard.map_or(0, |g| store.max_modality(g)));
    if top as usize > classes.len() {
        return Err(Error::ModalityOutOfRange {
            index: top,
            arity: classes.len(),
        });
    }
    if sizes.iter().any(|t| t.iter().product::<usize>() > 64) {
        return Err(Error::PreconditionFailed(
            "search is limited to products of at most 64 worlds".into(),
        ));
    }
    let roots: Vec<Formula> = guard.into_iter().chain([f]).collect();
    let prog = Compiled::new(store, &roots);
    let vars = prog.vars().to_vec();
    let (mut scratch, mut out) = (Vec::new(), Vec::new());
    let mut found: Option<(Vec<Frame1>, Valuation, usize)> = None;
    let (end, tuples, exhaustive) = scan(vars.len(), classes, sizes, budget, |factors, frame, fast, masks| {
        let lookup = |v: u32| vars.binary_search(&v).map_or(0, |i| masks[i]);
        prog.eval(fast, lookup, &mut scratch, &mut out);
        // out = [guard?, f]; candidate points satisfy the guard and refute f
        let allowed = if guard.is_some() { out[0] } else { fast.full() };
        let bad = allowed & !out[out.len() - 1] & fast.full();
        if bad == 0 {
            return false;
        }
        let point = bad.trailing_zeros() as usize;
        let val = valuation_from_masks(&vars, masks, frame.worlds());
        assert!(
            !naive::holds(store, frame, &val, point, f),
            "evaluators disagree on a candidate countermodel"
        );
        if let Some(g) = guard {
            assert!(naive::holds(store, frame, &val, point, g), "evaluators disagree on the guard");
        }
        found = Some((factors.to_vec(), val, point));
        true
    });
    Ok(match end {
        ScanEnd::Stopped => {
            let (factors, val, point) = found.expect("stopped on a find");
            SearchOutcome::Found(Countermodel {
                model: ProductModel::new(factors, val, point)?,
                frame_tuples: tuples,
            })
        }
        ScanEnd::Budget => SearchOutcome::BudgetExhausted { frame_tuples: tuples },
        ScanEnd::Done => SearchOutcome::NotFound {
            certified: exhaustive,
            frame_tuples: tuples,
        },
    })
}

/// One countermodel per size tuple: for each tuple, the first refuting
/// candidate in search order (with the point satisfying `guard`, if given).
/// Tuples that yield nothing within `per_tuple_candidates` are skipped.
pub fn countermodels_per_size(
    store: &FormulaStore,
    f: Formula,
    guard: Option<Formula>,
    classes: &[FactorClass],
    budget: &SearchBudget,
    per_tuple_candidates: Option<u64>,
) -> Result<Vec<ProductModel>> {
    let mut out = Vec::new();
    for tuple in size_tuples(classes.len(), budget.max_worlds_per_factor) {
        let b = SearchBudget {
            max_candidates: per_tuple_candidates,
            ..budget.clone()
        };
        if let Some(m) = search_in_sizes(store, f, guard, classes, &[tuple], &b)?.into_found() {
            out.push(m);
        }
    }
    Ok(out)
}
