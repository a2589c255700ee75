//! n-frames, products of 1-frames, valuations and product models.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{normalize_keep, Frame1, FrameJson, Relation};

/// A finite Kripke n-frame. Worlds of a product carry their coordinate tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NFrame {
    worlds: usize,
    relations: Vec<Relation>,
    coords: Option<Vec<Vec<usize>>>,
}

impl NFrame {
    /// A frame with one relation per modality, in order `1..=n`.
    pub fn new(relations: Vec<Relation>) -> Result<Self> {
        let worlds = relations.first().ok_or(Error::NoFactors)?.size();
        if worlds == 0 {
            return Err(Error::EmptyFrame);
        }
        if relations.iter().any(|r| r.size() != worlds) {
            return Err(Error::InvalidModel("relations over different world sets".into()));
        }
        Ok(Self {
            worlds,
            relations,
            coords: None,
        })
    }

    pub fn arity(&self) -> usize {
        self.relations.len()
    }

    pub fn worlds(&self) -> usize {
        self.worlds
    }

    /// Relation of modality `i` (numbered from 1).
    pub fn relation(&self, i: u32) -> &Relation {
        &self.relations[i as usize - 1]
    }

    pub fn successors(&self, i: u32, x: usize) -> &[usize] {
        self.relation(i).successors(x)
    }

    pub fn coords(&self, x: usize) -> Option<&[usize]> {
        self.coords.as_ref().map(|c| c[x].as_slice())
    }

    /// The subframe on `keep`, renumbered in increasing order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let keep = normalize_keep(keep, self.worlds)?;
        Ok(Self {
            worlds: keep.len(),
            relations: self.relations.iter().map(|r| r.restrict(&keep)).collect(),
            coords: self
                .coords
                .as_ref()
                .map(|c| keep.iter().map(|&w| c[w].clone()).collect()),
        })
    }
}

/// Mixed-radix addressing for product worlds; the last coordinate varies
/// fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    dims: Vec<usize>,
}

impl Grid {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.dims.len() {
            return None;
        }
        let mut idx = 0;
        for (&c, &d) in coords.iter().zip(&self.dims) {
            if c >= d {
                return None;
            }
            idx = idx * d + c;
        }
        Some(idx)
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }
}

/// Materializes `F_1 x ... x F_n`: relation `i` moves coordinate `i` along the
/// `i`-th factor and fixes the rest.
pub fn product(factors: &[Frame1]) -> Result<NFrame> {
    if factors.is_empty() {
        return Err(Error::NoFactors);
    }
    let grid = Grid::new(factors.iter().map(Frame1::worlds).collect());
    let worlds = grid.len();
    let coords: Vec<Vec<usize>> = (0..worlds).map(|x| grid.coords(x)).collect();
    let relations = factors
        .iter()
        .enumerate()
        .map(|(i, factor)| {
            let edges = coords.iter().enumerate().flat_map(|(x, c)| {
                let grid = &grid;
                factor.relation().successors(c[i]).iter().map(move |&y| {
                    let mut d = c.clone();
                    d[i] = y;
                    (x, grid.index(&d).expect("in range"))
                })
            });
            Relation::from_edges(worlds, edges)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NFrame {
        worlds,
        relations,
        coords: Some(coords),
    })
}

/// Extensions of variables. Variables without an entry are false everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation {
    worlds: usize,
    sets: BTreeMap<u32, FixedBitSet>,
}

impl Valuation {
    pub fn new(worlds: usize) -> Self {
        Self {
            worlds,
            sets: BTreeMap::new(),
        }
    }

    pub fn worlds(&self) -> usize {
        self.worlds
    }

    pub fn get(&self, var: u32) -> Option<&FixedBitSet> {
        self.sets.get(&var)
    }

    pub fn holds(&self, var: u32, world: usize) -> bool {
        self.sets.get(&var).is_some_and(|s| s.contains(world))
    }

    pub fn set(&mut self, var: u32, world: usize, value: bool) {
        let worlds = self.worlds;
        self.sets
            .entry(var)
            .or_insert_with(|| FixedBitSet::with_capacity(worlds))
            .set(world, value);
    }

    pub fn insert(&mut self, var: u32, extension: FixedBitSet) {
        assert_eq!(extension.len(), self.worlds);
        self.sets.insert(var, extension);
    }

    pub fn vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.sets.keys().copied()
    }
}

/// A product frame together with its factors, a valuation and a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductModel {
    factors: Vec<Frame1>,
    grid: Grid,
    frame: NFrame,
    valuation: Valuation,
    point: usize,
}

impl ProductModel {
    pub fn new(factors: Vec<Frame1>, valuation: Valuation, point: usize) -> Result<Self> {
        let frame = product(&factors)?;
        if valuation.worlds() != frame.worlds() {
            return Err(Error::InvalidModel("valuation sized for a different frame".into()));
        }
        if point >= frame.worlds() {
            return Err(Error::UnknownWorld {
                world: point,
                worlds: frame.worlds(),
            });
        }
        let grid = Grid::new(factors.iter().map(Frame1::worlds).collect());
        Ok(Self {
            factors,
            grid,
            frame,
            valuation,
            point,
        })
    }

    pub fn factors(&self) -> &[Frame1] {
        &self.factors
    }

    pub fn frame(&self) -> &NFrame {
        &self.frame
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn point(&self) -> usize {
        self.point
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn worlds(&self) -> usize {
        self.frame.worlds()
    }

    pub fn world(&self, coords: &[usize]) -> Option<usize> {
        self.grid.index(coords)
    }

    pub fn coords(&self, world: usize) -> Vec<usize> {
        self.grid.coords(world)
    }

    pub fn to_json(&self) -> ModelJson {
        let mut valuation = BTreeMap::new();
        for var in self.valuation.vars() {
            let ext = self.valuation.get(var).expect("listed var");
            valuation.insert(var_name(var), ext.ones().map(|w| self.coords(w)).collect());
        }
        ModelJson {
            factors: self.factors.iter().map(Frame1::to_json).collect(),
            valuation,
            point: self.coords(self.point),
        }
    }

    pub fn from_json(json: &ModelJson) -> Result<Self> {
        let factors = json
            .factors
            .iter()
            .map(Frame1::from_json)
            .collect::<Result<Vec<_>>>()?;
        let grid = Grid::new(factors.iter().map(Frame1::worlds).collect());
        let locate = |c: &[usize]| {
            grid.index(c)
                .ok_or_else(|| Error::InvalidModel(format!("coordinates {c:?} outside the product")))
        };
        let mut valuation = Valuation::new(grid.len());
        for (name, points) in &json.valuation {
            let var = parse_var_name(name)
                .ok_or_else(|| Error::InvalidModel(format!("bad variable name `{name}`")))?;
            let mut ext = FixedBitSet::with_capacity(grid.len());
            for c in points {
                ext.insert(locate(c)?);
            }
            valuation.insert(var, ext);
        }
        let point = locate(&json.point)?;
        Self::new(factors, valuation, point)
    }
}

/// `p` for the reserved variable, `pK` otherwise.
pub fn var_name(var: u32) -> String {
    if var == 0 {
        "p".to_string()
    } else {
        format!("p{var}")
    }
}

pub fn parse_var_name(name: &str) -> Option<u32> {
    let rest = name.strip_prefix('p')?;
    if rest.is_empty() {
        return Some(0);
    }
    if rest.starts_with('0') || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Wire form of a [`ProductModel`]. Product worlds are coordinate tuples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelJson {
    pub factors: Vec<FrameJson>,
    pub valuation: BTreeMap<String, Vec<Vec<usize>>>,
    pub point: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loop1() -> Frame1 {
        Frame1::from_edges(1, [(0, 0)]).unwrap()
    }

    #[test]
    fn single_point_product() {
        let f = product(&[loop1(), loop1()]).unwrap();
        assert_eq!(f.worlds(), 1);
        assert_eq!(f.relation(1).edges().collect::<Vec<_>>(), vec![(0, 0)]);
        assert_eq!(f.relation(2).edges().collect::<Vec<_>>(), vec![(0, 0)]);
    }

    #[test]
    fn product_edge_counts() {
        let a = Frame1::from_edges(2, [(0, 1), (1, 1)]).unwrap();
        let b = Frame1::from_edges(3, [(0, 1), (1, 2), (2, 0), (2, 2)]).unwrap();
        let f = product(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(f.worlds(), 6);
        assert_eq!(f.relation(1).len(), a.relation().len() * 3);
        assert_eq!(f.relation(2).len(), 2 * b.relation().len());
    }

    #[test]
    fn reflexive_chain_square_is_a_grid() {
        let c = Frame1::reflexive_chain(2).unwrap();
        let f = product(&[c.clone(), c]).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let (cx, cy) = (f.coords(x).unwrap(), f.coords(y).unwrap());
                let moves1 = cx[1] == cy[1] && cy[0] >= cx[0];
                let moves2 = cx[0] == cy[0] && cy[1] >= cx[1];
                assert_eq!(f.relation(1).contains(x, y), moves1, "{cx:?} {cy:?}");
                assert_eq!(f.relation(2).contains(x, y), moves2, "{cx:?} {cy:?}");
            }
        }
    }

    #[test]
    fn grid_round_trip() {
        let g = Grid::new(vec![2, 3, 4]);
        for i in 0..g.len() {
            assert_eq!(g.index(&g.coords(i)), Some(i));
        }
        assert_eq!(g.index(&[2, 0, 0]), None);
        assert_eq!(g.index(&[0, 0]), None);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(product(&[]), Err(Error::NoFactors)));
        let f = product(&[loop1()]).unwrap();
        assert!(matches!(f.restrict(&[]), Err(Error::EmptyRestriction)));
    }

    #[test]
    fn model_json_round_trip() {
        let a = Frame1::reflexive_chain(2).unwrap();
        let mut val = Valuation::new(4);
        val.set(1, 3, true);
        val.set(0, 1, true);
        let m = ProductModel::new(vec![a.clone(), a], val, 2).unwrap();
        let text = serde_json::to_string(&m.to_json()).unwrap();
        let back = ProductModel::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(text.contains("\"p1\":[[1,1]]"));
        assert!(text.contains("\"point\":[1,0]"));
    }

    #[test]
    fn var_names() {
        assert_eq!(parse_var_name("p"), Some(0));
        assert_eq!(parse_var_name("p12"), Some(12));
        assert_eq!(parse_var_name("p0"), None);
        assert_eq!(parse_var_name("q1"), None);
        assert_eq!(var_name(3), "p3");
    }
}
