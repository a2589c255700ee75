//! Finite unimodal frames and the ladder gadget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary relation over `0..size`, kept as sorted, duplicate-free successor
/// lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    succ: Vec<Vec<usize>>,
}

impl Relation {
    pub fn empty(size: usize) -> Self {
        Self {
            succ: vec![Vec::new(); size],
        }
    }

    pub fn identity(size: usize) -> Self {
        Self {
            succ: (0..size).map(|x| vec![x]).collect(),
        }
    }

    /// Builds a relation from an edge list. Edges leaving `0..size` are an
    /// error.
    pub fn from_edges(size: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut rel = Self::empty(size);
        for (a, b) in edges {
            for w in [a, b] {
                if w >= size {
                    return Err(Error::UnknownWorld {
                        world: w,
                        worlds: size,
                    });
                }
            }
            rel.succ[a].push(b);
        }
        for s in &mut rel.succ {
            s.sort_unstable();
            s.dedup();
        }
        Ok(rel)
    }

    pub fn size(&self) -> usize {
        self.succ.len()
    }

    pub fn successors(&self, x: usize) -> &[usize] {
        &self.succ[x]
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.succ[a].binary_search(&b).is_ok()
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(a, s)| s.iter().map(move |&b| (a, b)))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.size()).all(|x| self.contains(x, x))
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(a, b)| self.contains(b, a))
    }

    pub fn is_transitive(&self) -> bool {
        self.edges()
            .all(|(a, b)| self.succ[b].iter().all(|&c| self.contains(a, c)))
    }

    /// `self ∪ identity`.
    pub fn reflexive_closure(&self) -> Self {
        let mut out = self.clone();
        for (x, s) in out.succ.iter_mut().enumerate() {
            if let Err(at) = s.binary_search(&x) {
                s.insert(at, x);
            }
        }
        out
    }

    /// Restriction to `keep` (sorted, in range), renumbered `0..keep.len()` in
    /// the order of `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.size()];
        for (i, &w) in keep.iter().enumerate() {
            new_index[w] = i;
        }
        let succ = keep
            .iter()
            .map(|&w| {
                self.succ[w]
                    .iter()
                    .filter_map(|&v| (new_index[v] != usize::MAX).then_some(new_index[v]))
                    .collect()
            })
            .collect();
        Self { succ }
    }
}

/// A finite Kripke 1-frame with optional point labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame1 {
    relation: Relation,
    labels: BTreeMap<String, usize>,
}

impl Frame1 {
    pub fn new(relation: Relation) -> Result<Self> {
        if relation.size() == 0 {
            return Err(Error::EmptyFrame);
        }
        Ok(Self {
            relation,
            labels: BTreeMap::new(),
        })
    }

    pub fn from_edges(worlds: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(Relation::from_edges(worlds, edges)?)
    }

    /// A reflexive chain `0 -> 1 -> ... -> worlds-1`.
    pub fn reflexive_chain(worlds: usize) -> Result<Self> {
        Self::from_edges(worlds, (0..worlds).flat_map(|i| [(i, i), (i, i + 1)]).filter(|&(_, b)| b < worlds))
    }

    pub fn with_labels(mut self, labels: BTreeMap<String, usize>) -> Result<Self> {
        if let Some((_, &w)) = labels.iter().find(|(_, &w)| w >= self.worlds()) {
            return Err(Error::UnknownWorld {
                world: w,
                worlds: self.worlds(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn worlds(&self) -> usize {
        self.relation.size()
    }

    pub fn relation(&self) -> &Relation {
        &self.relation
    }

    pub fn labels(&self) -> &BTreeMap<String, usize> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<usize> {
        self.labels.get(name).copied()
    }

    pub fn is_reflexive(&self) -> bool {
        self.relation.is_reflexive()
    }

    pub fn reflexive_closure(&self) -> Self {
        Self {
            relation: self.relation.reflexive_closure(),
            labels: self.labels.clone(),
        }
    }

    /// The subframe on `keep`. Worlds are renumbered in increasing order of
    /// their old index; labels of dropped worlds are dropped.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let keep = normalize_keep(keep, self.worlds())?;
        let relation = self.relation.restrict(&keep);
        let labels = self
            .labels
            .iter()
            .filter_map(|(name, w)| keep.binary_search(w).ok().map(|i| (name.clone(), i)))
            .collect();
        Ok(Self { relation, labels })
    }

    pub fn to_json(&self) -> FrameJson {
        FrameJson {
            worlds: self.worlds(),
            edges: self.relation.edges().map(|(a, b)| [a, b]).collect(),
            labels: (!self.labels.is_empty()).then(|| self.labels.clone()),
        }
    }

    pub fn from_json(json: &FrameJson) -> Result<Self> {
        let frame = Self::from_edges(json.worlds, json.edges.iter().map(|&[a, b]| (a, b)))?;
        match &json.labels {
            Some(labels) => frame.with_labels(labels.clone()),
            None => Ok(frame),
        }
    }
}

pub(crate) fn normalize_keep(keep: &[usize], worlds: usize) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&w) = keep.last().filter(|&&w| w >= worlds) {
        return Err(Error::UnknownWorld { world: w, worlds });
    }
    Ok(keep)
}

/// Wire form of a [`Frame1`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameJson {
    pub worlds: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, usize>>,
}

/// Whether constructions take reflexive closures (the T regime) or leave
/// relations as generated (the K regime).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Regime {
    #[default]
    T,
    K,
}

/// A point of a ladder: `v_i` or `w_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rung {
    V(u32),
    W(u32),
}

impl Rung {
    /// Position along the chain `v0, w0, v1, w1, ...`.
    pub fn offset(self) -> usize {
        match self {
            Rung::V(i) => 2 * i as usize,
            Rung::W(i) => 2 * i as usize + 1,
        }
    }

    pub fn from_offset(offset: usize) -> Self {
        let i = (offset / 2) as u32;
        if offset % 2 == 0 {
            Rung::V(i)
        } else {
            Rung::W(i)
        }
    }
}

impl std::fmt::Display for Rung {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rung::V(i) => write!(f, "v{i}"),
            Rung::W(i) => write!(f, "w{i}"),
        }
    }
}

/// The chain `v0 -> w0 -> v1 -> ... -> vk -> wk` on `2(k+1)` labeled points,
/// reflexively closed in the T regime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ladder {
    k: u32,
    frame: Frame1,
}

impl Ladder {
    pub fn new(k: u32) -> Result<Self> {
        Self::with_regime(k, Regime::T)
    }

    pub fn with_regime(k: u32, regime: Regime) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroLadder);
        }
        let points = Self::points(k);
        let rel = Relation::from_edges(points, Self::chain_edges(k))?;
        let rel = match regime {
            Regime::T => rel.reflexive_closure(),
            Regime::K => rel,
        };
        let labels = (0..points)
            .map(|o| (Rung::from_offset(o).to_string(), o))
            .collect();
        let frame = Frame1::new(rel)?.with_labels(labels)?;
        Ok(Self { k, frame })
    }

    /// `2(k+1)`.
    pub fn points(k: u32) -> usize {
        2 * (k as usize + 1)
    }

    /// The non-loop edges `v_i -> w_i` and `w_i -> v_{i+1}`, as offsets.
    pub fn chain_edges(k: u32) -> impl Iterator<Item = (usize, usize)> {
        (0..Self::points(k) - 1).map(|o| (o, o + 1))
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn frame(&self) -> &Frame1 {
        &self.frame
    }

    pub fn world(&self, rung: Rung) -> usize {
        rung.offset()
    }
}
