//! Bottom-up model checking over the shared formula DAG.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::formula::{Formula, FormulaStore, Node};
use crate::product::{NFrame, ProductModel, Valuation};

/// Computes truth sets on one model, memoizing every node it labels. Reuse an
/// evaluator to check several formulas that share subterms.
pub struct Evaluator<'a> {
    store: &'a FormulaStore,
    frame: &'a NFrame,
    valuation: &'a Valuation,
    memo: HashMap<Formula, FixedBitSet>,
}

impl<'a> Evaluator<'a> {
    pub fn new(store: &'a FormulaStore, frame: &'a NFrame, valuation: &'a Valuation) -> Self {
        Self {
            store,
            frame,
            valuation,
            memo: HashMap::new(),
        }
    }

    pub fn for_model(store: &'a FormulaStore, model: &'a ProductModel) -> Self {
        Self::new(store, model.frame(), model.valuation())
    }

    /// The set of worlds where `f` is true.
    pub fn sat_set(&mut self, f: Formula) -> Result<&FixedBitSet> {
        let top = self.store.max_modality(f);
        if top as usize > self.frame.arity() {
            return Err(Error::ModalityOutOfRange {
                index: top,
                arity: self.frame.arity(),
            });
        }
        if !self.memo.contains_key(&f) {
            for g in self.store.reachable(f) {
                if !self.memo.contains_key(&g) {
                    let set = self.label(g);
                    self.memo.insert(g, set);
                }
            }
        }
        Ok(&self.memo[&f])
    }

    pub fn check(&mut self, world: usize, f: Formula) -> Result<bool> {
        if world >= self.frame.worlds() {
            return Err(Error::UnknownWorld {
                world,
                worlds: self.frame.worlds(),
            });
        }
        Ok(self.sat_set(f)?.contains(world))
    }

    fn label(&self, g: Formula) -> FixedBitSet {
        let n = self.frame.worlds();
        match self.store.node(g) {
            Node::Bottom => FixedBitSet::with_capacity(n),
            Node::Var(v) => self
                .valuation
                .get(v)
                .cloned()
                .unwrap_or_else(|| FixedBitSet::with_capacity(n)),
            Node::And(l, r) => {
                let mut s = self.memo[&l].clone();
                s.intersect_with(&self.memo[&r]);
                s
            }
            Node::Or(l, r) => {
                let mut s = self.memo[&l].clone();
                s.union_with(&self.memo[&r]);
                s
            }
            Node::Imp(l, r) => {
                let mut s = self.memo[&l].clone();
                s.toggle_range(..);
                s.union_with(&self.memo[&r]);
                s
            }
            Node::Box(i, body) => {
                let inner = &self.memo[&body];
                let rel = self.frame.relation(i);
                let mut s = FixedBitSet::with_capacity(n);
                for x in 0..n {
                    if rel.successors(x).iter().all(|&y| inner.contains(y)) {
                        s.insert(x);
                    }
                }
                s
            }
        }
    }
}

/// Truth set of `f` on `(frame, valuation)`.
pub fn sat_set(
    store: &FormulaStore,
    frame: &NFrame,
    valuation: &Valuation,
    f: Formula,
) -> Result<FixedBitSet> {
    Evaluator::new(store, frame, valuation).sat_set(f).cloned()
}

/// Truth of `f` at `world`.
pub fn check(
    store: &FormulaStore,
    frame: &NFrame,
    valuation: &Valuation,
    world: usize,
    f: Formula,
) -> Result<bool> {
    Evaluator::new(store, frame, valuation).check(world, f)
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Bottom,
    Var(u32),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
    Box(usize, usize),
}

/// Formulas flattened into one instruction list and evaluated over world
/// masks. Only for frames of at most 64 worlds; this is the search hot path,
/// [`Evaluator`] covers everything else.
#[derive(Debug, Clone)]
pub struct Compiled {
    ops: Vec<Op>,
    roots: Vec<usize>,
    vars: Vec<u32>,
    arity: u32,
}

impl Compiled {
    /// Compiles `roots` together so shared subterms are evaluated once.
    pub fn new(store: &FormulaStore, roots: &[Formula]) -> Self {
        let mut slot: HashMap<Formula, usize> = HashMap::new();
        let mut ops = Vec::new();
        let mut vars = Vec::new();
        let mut arity = 0;
        for &root in roots {
            for g in store.reachable(root) {
                if slot.contains_key(&g) {
                    continue;
                }
                let op = match store.node(g) {
                    Node::Bottom => Op::Bottom,
                    Node::Var(v) => {
                        if !vars.contains(&v) {
                            vars.push(v);
                        }
                        Op::Var(v)
                    }
                    Node::And(l, r) => Op::And(slot[&l], slot[&r]),
                    Node::Or(l, r) => Op::Or(slot[&l], slot[&r]),
                    Node::Imp(l, r) => Op::Imp(slot[&l], slot[&r]),
                    Node::Box(i, b) => {
                        arity = arity.max(i);
                        Op::Box(i as usize - 1, slot[&b])
                    }
                };
                slot.insert(g, ops.len());
                ops.push(op);
            }
        }
        vars.sort_unstable();
        let roots = roots.iter().map(|r| slot[r]).collect();
        Self {
            ops,
            roots,
            vars,
            arity,
        }
    }

    /// Variables occurring in the roots, ascending.
    pub fn vars(&self) -> &[u32] {
        &self.vars
    }

    /// Evaluates every root. `val(v)` is the mask of worlds where `pv` holds;
    /// results land in `out` in root order.
    pub fn eval(&self, frame: &MaskFrame, val: impl Fn(u32) -> u64, scratch: &mut Vec<u64>, out: &mut Vec<u64>) {
        assert!(self.arity as usize <= frame.succ.len(), "modality out of range");
        let full = frame.full;
        scratch.clear();
        for op in &self.ops {
            let m = match *op {
                Op::Bottom => 0,
                Op::Var(v) => val(v) & full,
                Op::And(l, r) => scratch[l] & scratch[r],
                Op::Or(l, r) => scratch[l] | scratch[r],
                Op::Imp(l, r) => (!scratch[l] | scratch[r]) & full,
                Op::Box(i, b) => {
                    let outside = !scratch[b] & full;
                    let mut m = 0;
                    for (x, succ) in frame.succ[i].iter().enumerate() {
                        if succ & outside == 0 {
                            m |= 1 << x;
                        }
                    }
                    m
                }
            };
            scratch.push(m);
        }
        out.clear();
        out.extend(self.roots.iter().map(|&r| scratch[r]));
    }
}

/// Successor masks of a frame with at most 64 worlds.
#[derive(Debug, Clone)]
pub struct MaskFrame {
    succ: Vec<Vec<u64>>,
    full: u64,
}

impl MaskFrame {
    pub fn new(frame: &NFrame) -> Option<Self> {
        let n = frame.worlds();
        if n > 64 {
            return None;
        }
        let succ = (1..=frame.arity() as u32)
            .map(|i| {
                (0..n)
                    .map(|x| frame.successors(i, x).iter().fold(0u64, |m, &y| m | 1 << y))
                    .collect()
            })
            .collect();
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Some(Self { succ, full })
    }

    pub fn full(&self) -> u64 {
        self.full
    }
}

/// Worlds reachable from `start` in at most `k` steps along the relations in
/// `dims`. With `dims = 1..=n` this is the image of `start` under the bounded
/// reachability relation matching `BoxUpTo`; with `2..=n`, `BoxUpToSkipFirst`.
pub fn bounded_reach(frame: &NFrame, start: usize, k: u32, dims: &[u32]) -> FixedBitSet {
    let mut seen = FixedBitSet::with_capacity(frame.worlds());
    seen.insert(start);
    let mut frontier = vec![start];
    for _ in 0..k {
        let mut next = Vec::new();
        for &x in &frontier {
            for &i in dims {
                for &y in frame.successors(i, x) {
                    if !seen.put(y) {
                        next.push(y);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{Frame1, Ladder, Rung};
    use crate::product::product;
    use crate::syntax::parse;

    #[test]
    fn single_reflexive_world() {
        let mut s = FormulaStore::new();
        let frame = product(&[Frame1::from_edges(1, [(0, 0)]).unwrap()]).unwrap();
        let mut val = Valuation::new(1);
        val.set(0, 0, true);
        let f = parse(&mut s, "[1]p", 1).unwrap();
        assert!(check(&s, &frame, &val, 0, f).unwrap());
        let bot = s.bottom();
        assert!(!check(&s, &frame, &val, 0, bot).unwrap());
        assert!(matches!(
            check(&s, &frame, &val, 1, bot),
            Err(Error::UnknownWorld { .. })
        ));
    }

    #[test]
    fn box_p_on_active_ladder() {
        let mut s = FormulaStore::new();
        for k in 1..6u32 {
            let ladder = Ladder::new(k).unwrap();
            let frame = product(&[ladder.frame().clone()]).unwrap();
            let mut val = Valuation::new(frame.worlds());
            for i in 1..=k {
                val.set(0, ladder.world(Rung::W(i)), true);
            }
            let f = parse(&mut s, "[1]p", 1).unwrap();
            let set = sat_set(&s, &frame, &val, f).unwrap();
            assert_eq!(set.ones().collect::<Vec<_>>(), vec![ladder.world(Rung::W(k))]);
        }
    }

    #[test]
    fn excluded_middle_everywhere() {
        let mut s = FormulaStore::new();
        let c = Frame1::reflexive_chain(3).unwrap();
        let frame = product(&[c.clone(), c]).unwrap();
        let mut val = Valuation::new(9);
        val.set(1, 4, true);
        let f = parse(&mut s, "[2]p1 | ~[2]p1", 2).unwrap();
        assert_eq!(sat_set(&s, &frame, &val, f).unwrap().count_ones(..), 9);
    }

    #[test]
    fn modality_out_of_range() {
        let mut s = FormulaStore::new();
        let frame = product(&[Frame1::from_edges(1, [(0, 0)]).unwrap()]).unwrap();
        let f = parse(&mut s, "[2]p", 2).unwrap();
        assert!(matches!(
            sat_set(&s, &frame, &Valuation::new(1), f),
            Err(Error::ModalityOutOfRange { index: 2, arity: 1 })
        ));
    }

    #[test]
    fn bounded_reach_basics() {
        let c = Frame1::reflexive_chain(3).unwrap();
        let frame = product(&[c.clone(), c]).unwrap();
        assert_eq!(bounded_reach(&frame, 0, 0, &[1, 2]).ones().collect::<Vec<_>>(), vec![0]);
        let r1 = bounded_reach(&frame, 0, 1, &[1, 2]);
        assert_eq!(r1.ones().collect::<Vec<_>>(), vec![0, 1, 3]);
        let r2 = bounded_reach(&frame, 0, 2, &[2]);
        assert_eq!(r2.ones().collect::<Vec<_>>(), vec![0, 1, 2]);
        let mut prev = bounded_reach(&frame, 0, 0, &[1, 2]);
        for k in 1..6 {
            let next = bounded_reach(&frame, 0, k, &[1, 2]);
            assert!(prev.is_subset(&next));
            prev = next;
        }
        assert_eq!(prev.count_ones(..), 9);
    }

    #[test]
    fn compiled_matches_evaluator() {
        let mut s = FormulaStore::new();
        let c = Frame1::reflexive_chain(3).unwrap();
        let k = Frame1::from_edges(2, [(0, 1), (1, 0), (1, 1)]).unwrap();
        let frame = product(&[c, k]).unwrap();
        let mask = MaskFrame::new(&frame).unwrap();
        let fs: Vec<_> = ["[1]p1 -> [2]<1>p2", "<2>(p1 & ~[1]p2) | F", "[1][2]p1 -> [2][1]p1"]
            .iter()
            .map(|t| parse(&mut s, t, 2).unwrap())
            .collect();
        let prog = Compiled::new(&s, &fs);
        assert_eq!(prog.vars(), &[1, 2]);
        let (mut scratch, mut out) = (Vec::new(), Vec::new());
        for code in 0u64..1 << 12 {
            let mut val = Valuation::new(6);
            for w in 0..6 {
                val.set(1, w, code >> w & 1 == 1);
                val.set(2, w, code >> (6 + w) & 1 == 1);
            }
            prog.eval(&mask, |v| if v == 1 { code & 63 } else { code >> 6 }, &mut scratch, &mut out);
            for (f, &got) in fs.iter().zip(&out) {
                let want = sat_set(&s, &frame, &val, *f).unwrap();
                assert_eq!(got, want.ones().fold(0, |m, x| m | 1 << x));
            }
        }
    }
}
