//! The single-variable translation.
//!
//! A source formula over `p1..pm` is lowered to a formula over the reserved
//! variable `p` alone. Each `pk` becomes a formula `beta(k)` that is true at a
//! point exactly when a ladder of length `k` hangs below it with `p` marking
//! its rungs, boxes are relativized to `B = beta(m+1)`, and the guard `A` forces
//! `B` to behave uniformly within the reach of the source formula's modal
//! depth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Defined, Formula, FormulaStore, Node, RESERVED_VAR};
use crate::frame::Regime;

/// Which diamond wraps `p & alpha(k)` inside `beta(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaDiamond {
    /// `<1>`.
    Plain,
    /// `<1>(~p & <1>(p & _))`.
    Composite,
}

/// One reading of the gadget encoding. The translation consumes
/// `beta_diamond` and `guard_box_not_p`; the countermodel transfer consumes
/// `w0_carries_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VariantConfig {
    pub beta_diamond: BetaDiamond,
    /// Active ladders mark `w0..wk` with `p` instead of `w1..wk`.
    pub w0_carries_p: bool,
    /// Conjoin `[1]~p` to `B`.
    pub guard_box_not_p: bool,
}

impl VariantConfig {
    /// The reading that follows the printed definitions most literally.
    pub const LITERAL: VariantConfig = VariantConfig {
        beta_diamond: BetaDiamond::Plain,
        w0_carries_p: false,
        guard_box_not_p: false,
    };

    /// Every combination of the three switches, in a fixed order.
    pub fn grid() -> Vec<VariantConfig> {
        let mut out = Vec::new();
        for beta_diamond in [BetaDiamond::Plain, BetaDiamond::Composite] {
            for w0_carries_p in [false, true] {
                for guard_box_not_p in [false, true] {
                    out.push(VariantConfig {
                        beta_diamond,
                        w0_carries_p,
                        guard_box_not_p,
                    });
                }
            }
        }
        out
    }

    /// The variant selected by calibration for `regime`; see the committed
    /// calibration reports under `crates/core/tests/fixtures`.
    pub fn calibrated(regime: Regime) -> VariantConfig {
        match regime {
            Regime::T => VariantConfig {
                beta_diamond: BetaDiamond::Composite,
                w0_carries_p: true,
                guard_box_not_p: true,
            },
            Regime::K => VariantConfig {
                beta_diamond: BetaDiamond::Composite,
                w0_carries_p: true,
                guard_box_not_p: false,
            },
        }
    }

    /// How many switches differ from [`VariantConfig::LITERAL`].
    pub fn deviations(&self) -> usize {
        usize::from(self.beta_diamond != Self::LITERAL.beta_diamond)
            + usize::from(self.w0_carries_p != Self::LITERAL.w0_carries_p)
            + usize::from(self.guard_box_not_p != Self::LITERAL.guard_box_not_p)
    }

    /// First rung index carrying `p` on an active ladder.
    pub fn first_marked_rung(&self) -> u32 {
        if self.w0_carries_p {
            0
        } else {
            1
        }
    }
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self::calibrated(Regime::T)
    }
}

impl fmt::Display for VariantConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.beta_diamond {
            BetaDiamond::Plain => "plain",
            BetaDiamond::Composite => "composite",
        };
        let w = if self.w0_carries_p { "w0" } else { "w1" };
        let g = if self.guard_box_not_p { "guard" } else { "bare" };
        write!(f, "{d}-{w}-{g}")
    }
}

impl FromStr for VariantConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownVariant(s.to_string());
        let mut parts = s.split('-');
        let beta_diamond = match parts.next() {
            Some("plain") => BetaDiamond::Plain,
            Some("composite") => BetaDiamond::Composite,
            _ => return Err(bad()),
        };
        let w0_carries_p = match parts.next() {
            Some("w0") => true,
            Some("w1") => false,
            _ => return Err(bad()),
        };
        let guard_box_not_p = match parts.next() {
            Some("guard") => true,
            Some("bare") => false,
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Self {
            beta_diamond,
            w0_carries_p,
            guard_box_not_p,
        })
    }
}

/// Everything the translation of one source formula needs: arity, the number
/// of source variables `m` (largest index), the modal depth `d`, and the
/// variant. `alpha(1..=m+1)`, `beta(1..=m+1)`, `B` and `A` are built once at
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationContext {
    arity: u32,
    vars: u32,
    depth: u32,
    variant: VariantConfig,
    alphas: Vec<Formula>,
    betas: Vec<Formula>,
    big_b: Formula,
    guard: Formula,
}

impl TranslationContext {
    pub fn new(
        store: &mut FormulaStore,
        arity: u32,
        vars: u32,
        depth: u32,
        variant: VariantConfig,
    ) -> Self {
        assert!(arity >= 1, "arity must be at least 1");
        let p = store.p();
        let np = store.not(p);
        let top = store.boxed(1, p);
        let mut alphas = Vec::with_capacity(vars as usize + 1);
        let mut acc = top;
        for _ in 0..=vars {
            acc = store.defined(Defined::CompositeDiamond, acc);
            alphas.push(acc);
        }
        let betas: Vec<Formula> = alphas
            .iter()
            .map(|&alpha| {
                let marked = store.and(p, alpha);
                let reach = match variant.beta_diamond {
                    BetaDiamond::Plain => store.dia(1, marked),
                    BetaDiamond::Composite => store.defined(Defined::CompositeDiamond, marked),
                };
                store.and(np, reach)
            })
            .collect();
        let mut big_b = *betas.last().expect("m+1 >= 1");
        if variant.guard_box_not_p {
            let g = store.boxed(1, np);
            big_b = store.and(big_b, g);
        }
        let guard = build_guard(store, arity, depth, big_b);
        Self {
            arity,
            vars,
            depth,
            variant,
            alphas,
            betas,
            big_b,
            guard,
        }
    }

    /// Context for translating `f`: `m` is its largest variable index and `d`
    /// its modal depth. Fails if `f` mentions `p` or a modality above `arity`.
    pub fn for_formula(
        store: &mut FormulaStore,
        f: Formula,
        arity: u32,
        variant: VariantConfig,
    ) -> Result<Self> {
        validate_source(store, f, arity)?;
        let (m, d) = (store.max_var(f), store.modal_depth(f));
        Ok(Self::new(store, arity, m, d, variant))
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    /// `m`.
    pub fn vars(&self) -> u32 {
        self.vars
    }

    /// `d`, the modal depth of the source formula.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn variant(&self) -> VariantConfig {
        self.variant
    }

    /// `alpha(k)`: `k` composite diamonds in front of `[1]p`, for `k` in
    /// `1..=m+1`.
    pub fn alpha(&self, k: u32) -> Result<Formula> {
        self.check_index(k)?;
        Ok(self.alphas[k as usize - 1])
    }

    /// `beta(k) = ~p & D(p & alpha(k))` with `D` chosen by the variant.
    pub fn beta(&self, k: u32) -> Result<Formula> {
        self.check_index(k)?;
        Ok(self.betas[k as usize - 1])
    }

    /// `B`, i.e. `beta(m+1)` plus any variant extras.
    pub fn big_b(&self) -> Formula {
        self.big_b
    }

    /// `A = B & BoxUpTo_d(B -> BoxUpToSkipFirst_d B) & BoxUpTo_d(DiamondUpToSkipFirst_d B -> B)`.
    pub fn guard(&self) -> Formula {
        self.guard
    }

    fn check_index(&self, k: u32) -> Result<()> {
        if k == 0 || k > self.vars + 1 {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.vars + 1,
            });
        }
        Ok(())
    }

    /// Replaces each `pk` by `beta(k)` and each `[i]g` by `[i](B -> g')`.
    pub fn sigma(&self, store: &mut FormulaStore, f: Formula) -> Result<Formula> {
        validate_source(store, f, self.arity)?;
        if store.max_var(f) > self.vars {
            return Err(Error::IndexOutOfRange {
                index: store.max_var(f),
                max: self.vars,
            });
        }
        let mut memo = std::collections::HashMap::new();
        for g in store.reachable(f) {
            let out = match store.node(g) {
                Node::Bottom => g,
                Node::Var(k) => self.betas[k as usize - 1],
                Node::And(l, r) => store.and(memo[&l], memo[&r]),
                Node::Or(l, r) => store.or(memo[&l], memo[&r]),
                Node::Imp(l, r) => store.imp(memo[&l], memo[&r]),
                Node::Box(i, body) => {
                    let rel = store.imp(self.big_b, memo[&body]);
                    store.boxed(i, rel)
                }
            };
            memo.insert(g, out);
        }
        Ok(memo[&f])
    }

    /// `A -> sigma(f)`.
    pub fn reduce(&self, store: &mut FormulaStore, f: Formula) -> Result<Formula> {
        let s = self.sigma(store, f)?;
        Ok(store.imp(self.guard, s))
    }
}

fn validate_source(store: &FormulaStore, f: Formula, arity: u32) -> Result<()> {
    if store.variables(f).first() == Some(&RESERVED_VAR) {
        return Err(Error::ReservedVariable);
    }
    let top = store.max_modality(f);
    if top > arity {
        return Err(Error::ModalityOutOfRange {
            index: top,
            arity: arity as usize,
        });
    }
    Ok(())
}

fn build_guard(store: &mut FormulaStore, arity: u32, depth: u32, big_b: Formula) -> Formula {
    let all = |k| Defined::BoxUpTo { k, arity };
    let rest_box = store.defined(Defined::BoxUpToSkipFirst { k: depth, arity }, big_b);
    let rest_dia = store.defined(Defined::DiamondUpToSkipFirst { k: depth, arity }, big_b);
    let spread = store.imp(big_b, rest_box);
    let spread = store.defined(all(depth), spread);
    let gather = store.imp(rest_dia, big_b);
    let gather = store.defined(all(depth), gather);
    store.and_all(&[big_b, spread, gather])
}

/// A source formula with its translation, built once so that model surgery can
/// work on a shared, read-only store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub source: Formula,
    pub sigma: Formula,
    pub reduction: Formula,
    pub ctx: TranslationContext,
}

impl Translation {
    pub fn new(
        store: &mut FormulaStore,
        source: Formula,
        arity: u32,
        variant: VariantConfig,
    ) -> Result<Self> {
        let ctx = TranslationContext::for_formula(store, source, arity, variant)?;
        let sigma = ctx.sigma(store, source)?;
        let reduction = store.imp(ctx.guard(), sigma);
        Ok(Self {
            source,
            sigma,
            reduction,
            ctx,
        })
    }
}

/// Translates `f` with a fresh context: `A -> sigma(f)` together with the
/// context that produced it.
pub fn reduce(
    store: &mut FormulaStore,
    f: Formula,
    arity: u32,
    variant: VariantConfig,
) -> Result<(Formula, TranslationContext)> {
    let ctx = TranslationContext::for_formula(store, f, arity, variant)?;
    let r = ctx.reduce(store, f)?;
    Ok((r, ctx))
}
