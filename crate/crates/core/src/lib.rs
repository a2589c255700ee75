//! Embedding products of modal logics with a reflexive first factor into
//! their single-variable fragments.
//!
//! The crate provides hash-consed n-modal formulas ([`formula`], [`syntax`]),
//! finite Kripke frames and products with a model checker ([`frame`],
//! [`product`], [`eval`], [`naive`]), the translation to one variable
//! ([`translation`]), the model surgeries that move countermodels across the
//! translation ([`lemma`]), and a bounded search oracle that ties them
//! together ([`search`], [`calibrate`]).

pub mod calibrate;
pub mod error;
pub mod eval;
pub mod formula;
pub mod frame;
pub mod gen;
pub mod lemma;
pub mod naive;
pub mod product;
pub mod search;
pub mod syntax;
pub mod translation;

pub use error::{Error, ParseError, Result};
pub use formula::{Defined, Formula, FormulaStore, Node};
pub use frame::{Frame1, Ladder, Regime, Relation, Rung};
pub use product::{product, NFrame, ProductModel, Valuation};
pub use translation::{BetaDiamond, Translation, TranslationContext, VariantConfig};
