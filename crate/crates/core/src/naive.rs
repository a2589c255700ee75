//! Reference evaluator: the textbook recursive truth definition, one world at
//! a time, with no memoization and no use of sharing. It exists to cross-check
//! [`crate::eval`] and is exponential in modal depth on dense frames.

use crate::formula::{Formula, FormulaStore, Node};
use crate::product::{NFrame, Valuation};

/// Truth of `f` at `world`. Modalities beyond the frame's arity panic.
pub fn holds(
    store: &FormulaStore,
    frame: &NFrame,
    valuation: &Valuation,
    world: usize,
    f: Formula,
) -> bool {
    match store.node(f) {
        Node::Bottom => false,
        Node::Var(v) => valuation.holds(v, world),
        Node::And(l, r) => {
            holds(store, frame, valuation, world, l) && holds(store, frame, valuation, world, r)
        }
        Node::Or(l, r) => {
            holds(store, frame, valuation, world, l) || holds(store, frame, valuation, world, r)
        }
        Node::Imp(l, r) => {
            !holds(store, frame, valuation, world, l) || holds(store, frame, valuation, world, r)
        }
        Node::Box(i, body) => frame
            .successors(i, world)
            .iter()
            .all(|&y| holds(store, frame, valuation, y, body)),
    }
}
