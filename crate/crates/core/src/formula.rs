//! Hash-consed n-modal formulas.
//!
//! Every formula lives in a [`FormulaStore`], an append-only table of interned
//! nodes. Structurally equal formulas built in the same store receive the same
//! [`Formula`] handle, so equality checks are handle comparisons and shared
//! subterms are stored once. Metrics (modal depth, variable set, tree size,
//! highest modality) are computed at intern time from the children; the DAG size
//! is computed on first request and cached.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

/// Index of the reserved single variable `p`. Source variables `p1, p2, ...`
/// use their own index.
pub const RESERVED_VAR: u32 = 0;

/// Handle to an interned formula. Only meaningful together with the store that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Formula(u32);

impl Formula {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One interned node. Negation and diamonds are sugar and have no node of
/// their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Bottom,
    Var(u32),
    And(Formula, Formula),
    Or(Formula, Formula),
    Imp(Formula, Formula),
    /// `Box(i, f)` is `[i]f`; modalities are numbered from 1.
    Box(u32, Formula),
}

impl Node {
    pub fn children(&self) -> impl Iterator<Item = Formula> {
        let (a, b) = match *self {
            Node::Bottom | Node::Var(_) => (None, None),
            Node::And(l, r) | Node::Or(l, r) | Node::Imp(l, r) => (Some(l), Some(r)),
            Node::Box(_, body) => (Some(body), None),
        };
        a.into_iter().chain(b)
    }
}

#[derive(Debug)]
struct Metrics {
    depth: u32,
    max_modality: u32,
    tree_size: u64,
    vars: Box<[u32]>,
    dag_size: OnceLock<usize>,
}

/// The defined modalities built by [`FormulaStore::defined`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defined {
    /// `<1>(~p & <1>(p & f))`, the two-step diamond that alternates the
    /// polarity of `p`.
    CompositeDiamond,
    /// Conjunction of all boxed prefixes of length at most `k` over
    /// modalities `1..=n`.
    BoxUpTo { k: u32, arity: u32 },
    DiamondUpTo { k: u32, arity: u32 },
    /// As `BoxUpTo` but over modalities `2..=n` only.
    BoxUpToSkipFirst { k: u32, arity: u32 },
    DiamondUpToSkipFirst { k: u32, arity: u32 },
}

/// Append-only interning table for formulas.
#[derive(Debug, Default)]
pub struct FormulaStore {
    nodes: Vec<Node>,
    metrics: Vec<Metrics>,
    index: HashMap<Node, Formula>,
}

impl FormulaStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, f: Formula) -> Node {
        self.nodes[f.index()]
    }

    /// Interns `node`, returning the existing handle when an equal node is
    /// already present.
    pub fn intern(&mut self, node: Node) -> Formula {
        if let Some(&f) = self.index.get(&node) {
            return f;
        }
        let metrics = self.metrics_for(&node);
        let id = Formula(u32::try_from(self.nodes.len()).expect("formula store overflow"));
        self.nodes.push(node);
        self.metrics.push(metrics);
        self.index.insert(node, id);
        id
    }

    /// Looks a node up without interning it.
    pub fn find(&self, node: &Node) -> Option<Formula> {
        self.index.get(node).copied()
    }

    fn metrics_for(&self, node: &Node) -> Metrics {
        let m = |f: Formula| &self.metrics[f.index()];
        let (depth, max_modality, tree_size, vars) = match *node {
            Node::Bottom => (0, 0, 1, Vec::new()),
            Node::Var(v) => (0, 0, 1, vec![v]),
            Node::And(l, r) | Node::Or(l, r) | Node::Imp(l, r) => {
                let (a, b) = (m(l), m(r));
                let vars: BTreeSet<u32> = a.vars.iter().chain(b.vars.iter()).copied().collect();
                (
                    a.depth.max(b.depth),
                    a.max_modality.max(b.max_modality),
                    a.tree_size.saturating_add(b.tree_size).saturating_add(1),
                    vars.into_iter().collect(),
                )
            }
            Node::Box(i, body) => {
                let b = m(body);
                (
                    b.depth + 1,
                    b.max_modality.max(i),
                    b.tree_size.saturating_add(1),
                    b.vars.to_vec(),
                )
            }
        };
        Metrics {
            depth,
            max_modality,
            tree_size,
            vars: vars.into_boxed_slice(),
            dag_size: OnceLock::new(),
        }
    }

    pub fn bottom(&mut self) -> Formula {
        self.intern(Node::Bottom)
    }

    pub fn var(&mut self, index: u32) -> Formula {
        self.intern(Node::Var(index))
    }

    /// The reserved variable `p`.
    pub fn p(&mut self) -> Formula {
        self.var(RESERVED_VAR)
    }

    pub fn and(&mut self, l: Formula, r: Formula) -> Formula {
        self.intern(Node::And(l, r))
    }

    pub fn or(&mut self, l: Formula, r: Formula) -> Formula {
        self.intern(Node::Or(l, r))
    }

    pub fn imp(&mut self, l: Formula, r: Formula) -> Formula {
        self.intern(Node::Imp(l, r))
    }

    pub fn boxed(&mut self, modality: u32, body: Formula) -> Formula {
        assert!(modality >= 1, "modalities are numbered from 1");
        self.intern(Node::Box(modality, body))
    }

    /// `~f`, encoded as `f -> F`.
    pub fn not(&mut self, f: Formula) -> Formula {
        let bot = self.bottom();
        self.imp(f, bot)
    }

    /// `<i>f`, encoded as `~[i]~f`.
    pub fn dia(&mut self, modality: u32, f: Formula) -> Formula {
        let nf = self.not(f);
        let b = self.boxed(modality, nf);
        self.not(b)
    }

    /// Left-nested conjunction of `parts`. Panics on an empty slice.
    pub fn and_all(&mut self, parts: &[Formula]) -> Formula {
        let (&first, rest) = parts.split_first().expect("empty conjunction");
        rest.iter().fold(first, |acc, &f| self.and(acc, f))
    }

    /// Builds one of the defined modalities applied to `body`.
    pub fn defined(&mut self, kind: Defined, body: Formula) -> Formula {
        match kind {
            Defined::CompositeDiamond => {
                let p = self.p();
                let inner = self.and(p, body);
                let inner = self.dia(1, inner);
                let np = self.not(p);
                let outer = self.and(np, inner);
                self.dia(1, outer)
            }
            Defined::BoxUpTo { k, arity } => self.box_up_to(k, 1..=arity, body),
            Defined::BoxUpToSkipFirst { k, arity } => self.box_up_to(k, 2..=arity, body),
            Defined::DiamondUpTo { k, arity } => {
                let nb = self.not(body);
                let b = self.box_up_to(k, 1..=arity, nb);
                self.not(b)
            }
            Defined::DiamondUpToSkipFirst { k, arity } => {
                let nb = self.not(body);
                let b = self.box_up_to(k, 2..=arity, nb);
                self.not(b)
            }
        }
    }

    fn box_up_to(
        &mut self,
        k: u32,
        modalities: std::ops::RangeInclusive<u32>,
        body: Formula,
    ) -> Formula {
        let mut level = body;
        for _ in 0..k {
            let mut acc = level;
            for i in modalities.clone() {
                let b = self.boxed(i, level);
                acc = self.and(acc, b);
            }
            level = acc;
        }
        level
    }

    pub fn modal_depth(&self, f: Formula) -> u32 {
        self.metrics[f.index()].depth
    }

    /// Highest box index occurring in `f`, or 0 when `f` is modality-free.
    pub fn max_modality(&self, f: Formula) -> u32 {
        self.metrics[f.index()].max_modality
    }

    /// Sorted variable indices occurring in `f`.
    pub fn variables(&self, f: Formula) -> &[u32] {
        &self.metrics[f.index()].vars
    }

    /// Largest variable index in `f` (0 when there is none).
    pub fn max_var(&self, f: Formula) -> u32 {
        self.variables(f).last().copied().unwrap_or(0)
    }

    /// Node count of the fully expanded tree, saturating at `u64::MAX`.
    pub fn tree_size(&self, f: Formula) -> u64 {
        self.metrics[f.index()].tree_size
    }

    /// Number of distinct interned nodes reachable from `f`.
    pub fn dag_size(&self, f: Formula) -> usize {
        *self.metrics[f.index()]
            .dag_size
            .get_or_init(|| self.reachable(f).len())
    }

    /// `(tree size, DAG size)`.
    pub fn sizes(&self, f: Formula) -> (u64, usize) {
        (self.tree_size(f), self.dag_size(f))
    }

    /// All nodes reachable from `f`, children before parents.
    pub fn reachable(&self, f: Formula) -> Vec<Formula> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![(f, false)];
        while let Some((g, expanded)) = stack.pop() {
            if expanded {
                order.push(g);
                continue;
            }
            if seen[g.index()] {
                continue;
            }
            seen[g.index()] = true;
            stack.push((g, true));
            for c in self.node(g).children() {
                if !seen[c.index()] {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    /// Recomputes depth, variables and tree size by a walk over the DAG,
    /// ignoring the cached values. Used to audit the cache.
    pub fn recompute_metrics(&self, f: Formula) -> (u32, BTreeSet<u32>, u64) {
        let mut memo: HashMap<Formula, (u32, BTreeSet<u32>, u64)> = HashMap::new();
        for g in self.reachable(f) {
            let entry = match self.node(g) {
                Node::Bottom => (0, BTreeSet::new(), 1),
                Node::Var(v) => (0, BTreeSet::from([v]), 1),
                Node::And(l, r) | Node::Or(l, r) | Node::Imp(l, r) => {
                    let (dl, vl, tl) = &memo[&l];
                    let (dr, vr, tr) = &memo[&r];
                    (
                        (*dl).max(*dr),
                        vl.union(vr).copied().collect(),
                        tl.saturating_add(*tr).saturating_add(1),
                    )
                }
                Node::Box(_, body) => {
                    let (d, v, t) = &memo[&body];
                    (d + 1, v.clone(), t.saturating_add(1))
                }
            };
            memo.insert(g, entry);
        }
        memo.remove(&f).expect("root is reachable")
    }

    /// All subformulas of `f` (including `f`), children first.
    pub fn subformulas(&self, f: Formula) -> Vec<Formula> {
        self.reachable(f)
    }
}
