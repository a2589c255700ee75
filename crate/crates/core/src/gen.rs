//! Seeded random formulas for corpora and benchmarks.

use rand::Rng;

use crate::formula::{Formula, FormulaStore};

/// Shape limits for [`random_formula`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub arity: u32,
    /// Variables are drawn from `p1..=p{max_var}`; with 0 only `F` occurs.
    pub max_var: u32,
    pub max_depth: u32,
    /// Upper bound on the number of connectives.
    pub max_size: u32,
}

/// A random formula within `shape`. Uses only source variables.
pub fn random_formula<R: Rng>(store: &mut FormulaStore, rng: &mut R, shape: Shape) -> Formula {
    let mut budget = shape.max_size;
    build(store, rng, &shape, shape.max_depth, &mut budget)
}

fn build<R: Rng>(
    store: &mut FormulaStore,
    rng: &mut R,
    shape: &Shape,
    depth: u32,
    budget: &mut u32,
) -> Formula {
    if *budget == 0 || rng.gen_bool(0.25) {
        return leaf(store, rng, shape);
    }
    *budget -= 1;
    let choice = rng.gen_range(0..if depth > 0 { 5 } else { 3 });
    match choice {
        0 | 1 | 2 => {
            let l = build(store, rng, shape, depth, budget);
            let r = build(store, rng, shape, depth, budget);
            match choice {
                0 => store.and(l, r),
                1 => store.or(l, r),
                _ => store.imp(l, r),
            }
        }
        _ => {
            let i = rng.gen_range(1..=shape.arity);
            let body = build(store, rng, shape, depth - 1, budget);
            store.boxed(i, body)
        }
    }
}

fn leaf<R: Rng>(store: &mut FormulaStore, rng: &mut R, shape: &Shape) -> Formula {
    if shape.max_var == 0 || rng.gen_bool(0.1) {
        store.bottom()
    } else {
        let k = rng.gen_range(1..=shape.max_var);
        store.var(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_shape() {
        let mut s = FormulaStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shape = Shape {
            arity: 2,
            max_var: 3,
            max_depth: 2,
            max_size: 8,
        };
        for _ in 0..300 {
            let f = random_formula(&mut s, &mut rng, shape);
            assert!(s.modal_depth(f) <= 2);
            assert!(s.max_var(f) <= 3);
            assert!(s.max_modality(f) <= 2);
            assert!(!s.variables(f).contains(&0));
        }
    }
}
