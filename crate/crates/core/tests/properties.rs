use onevar::eval::{bounded_reach, sat_set};
use onevar::formula::{Defined, Formula, FormulaStore, Node};
use onevar::frame::{Frame1, Relation};
use onevar::naive;
use onevar::product::{product, NFrame, Valuation};
use onevar::syntax::{parse, render};
use onevar::translation::{reduce, TranslationContext, VariantConfig};
use onevar::Regime;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Formula trees independent of the store, so equality here is plain
/// structural equality.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Tree {
    Bot,
    Var(u32),
    And(Box<Tree>, Box<Tree>),
    Or(Box<Tree>, Box<Tree>),
    Imp(Box<Tree>, Box<Tree>),
    Box(u32, Box<Tree>),
}

impl Tree {
    fn intern(&self, s: &mut FormulaStore) -> Formula {
        match self {
            Tree::Bot => s.bottom(),
            Tree::Var(v) => s.var(*v),
            Tree::And(l, r) => {
                let (l, r) = (l.intern(s), r.intern(s));
                s.and(l, r)
            }
            Tree::Or(l, r) => {
                let (l, r) = (l.intern(s), r.intern(s));
                s.or(l, r)
            }
            Tree::Imp(l, r) => {
                let (l, r) = (l.intern(s), r.intern(s));
                s.imp(l, r)
            }
            Tree::Box(i, b) => {
                let b = b.intern(s);
                s.boxed(*i, b)
            }
        }
    }

    fn depth(&self) -> u32 {
        match self {
            Tree::Bot | Tree::Var(_) => 0,
            Tree::And(l, r) | Tree::Or(l, r) | Tree::Imp(l, r) => l.depth().max(r.depth()),
            Tree::Box(_, b) => 1 + b.depth(),
        }
    }
}

fn tree(min_var: u32, max_var: u32, arity: u32) -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![Just(Tree::Bot), (min_var..=max_var).prop_map(Tree::Var)];
    leaf.prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Tree::And(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Tree::Or(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Tree::Imp(Box::new(l), Box::new(r))),
            (1..=arity, inner).prop_map(|(i, b)| Tree::Box(i, Box::new(b))),
        ]
    })
}

fn random_frame(rng: &mut ChaCha8Rng, size: usize, reflexive: bool) -> Frame1 {
    let mut edges = Vec::new();
    for a in 0..size {
        for b in 0..size {
            if (reflexive && a == b) || rng.gen_bool(0.35) {
                edges.push((a, b));
            }
        }
    }
    Frame1::from_edges(size, edges).unwrap()
}

fn random_valuation(rng: &mut ChaCha8Rng, worlds: usize, vars: &[u32]) -> Valuation {
    let mut val = Valuation::new(worlds);
    for &v in vars {
        for w in 0..worlds {
            val.set(v, w, rng.gen_bool(0.5));
        }
    }
    val
}

fn random_product(rng: &mut ChaCha8Rng, arity: usize, reflexive: bool) -> NFrame {
    let factors: Vec<Frame1> = (0..arity)
        .map(|_| {
            let size = rng.gen_range(1..=3);
            random_frame(rng, size, reflexive)
        })
        .collect();
    product(&factors).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn interning_identifies_exactly_equal_trees(a in tree(0, 2, 2), b in tree(0, 2, 2)) {
        let mut s = FormulaStore::new();
        let fa = a.intern(&mut s);
        let fb = b.intern(&mut s);
        prop_assert_eq!(a == b, fa == fb);
        let again = a.clone().intern(&mut s);
        prop_assert_eq!(fa, again);
    }

    #[test]
    fn boxes_up_to_depth(t in tree(1, 2, 2), k in 0u32..=6, n in 1u32..=3) {
        let mut s = FormulaStore::new();
        let psi = t.intern(&mut s);
        let f = s.defined(Defined::BoxUpTo { k, arity: n }, psi);
        prop_assert_eq!(s.modal_depth(f), k + t.depth());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parse_render_round_trip(t in tree(0, 4, 3)) {
        let mut s = FormulaStore::new();
        let f = t.intern(&mut s);
        let text = render(&s, f);
        let back = parse(&mut s, &text, 3).unwrap();
        prop_assert_eq!(f, back, "{}", text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sigma_structure(t in tree(1, 3, 2)) {
        let variant = VariantConfig::calibrated(Regime::T);
        let mut s = FormulaStore::new();
        let f = t.intern(&mut s);
        let ctx = TranslationContext::for_formula(&mut s, f, 2, variant).unwrap();
        let sigma = ctx.sigma(&mut s, f).unwrap();
        let b = ctx.big_b();
        // node-by-node homomorphism
        let mut pairs = vec![(f, sigma)];
        while let Some((g, h)) = pairs.pop() {
            match (s.node(g), s.node(h)) {
                (Node::Bottom, Node::Bottom) => {}
                (Node::Var(k), _) => prop_assert_eq!(h, ctx.beta(k).unwrap()),
                (Node::And(a, c), Node::And(x, y))
                | (Node::Or(a, c), Node::Or(x, y))
                | (Node::Imp(a, c), Node::Imp(x, y)) => {
                    pairs.push((a, x));
                    pairs.push((c, y));
                }
                (Node::Box(i, a), Node::Box(j, body)) => {
                    prop_assert_eq!(i, j);
                    let Node::Imp(guard, rest) = s.node(body) else {
                        return Err(TestCaseError::fail("box body is not an implication"));
                    };
                    prop_assert_eq!(guard, b);
                    pairs.push((a, rest));
                }
                (x, y) => return Err(TestCaseError::fail(format!("{x:?} became {y:?}"))),
            }
        }
        prop_assert!(s.variables(sigma).iter().all(|&v| v == 0));
        // deterministic, also in a fresh store
        let (r1, _) = reduce(&mut s, f, 2, variant).unwrap();
        let (r2, _) = reduce(&mut s, f, 2, variant).unwrap();
        prop_assert_eq!(r1, r2);
        let mut fresh = FormulaStore::new();
        let g = t.intern(&mut fresh);
        let (r3, _) = reduce(&mut fresh, g, 2, variant).unwrap();
        prop_assert_eq!(render(&s, r1), render(&fresh, r3));
        // every box contributes B beneath it, and B is deeper than each beta(k)
        let md_f = s.modal_depth(f);
        let md_b = s.modal_depth(b);
        if md_f >= 1 {
            prop_assert_eq!(s.modal_depth(sigma), md_f + md_b);
        } else {
            let deepest = s.variables(f).iter().map(|&k| s.modal_depth(ctx.beta(k).unwrap())).max().unwrap_or(0);
            prop_assert_eq!(s.modal_depth(sigma), deepest);
            prop_assert!(deepest < md_b);
        }
    }
}

#[test]
fn boxes_up_to_sizes_on_a_leaf() {
    let mut s = FormulaStore::new();
    let leaf = s.var(1);
    for n in 1..=3u32 {
        for k in 0..=6u32 {
            let f = s.defined(Defined::BoxUpTo { k, arity: n }, leaf);
            let (tree, dag) = s.sizes(f);
            assert!(tree >= u64::from(n + 1).pow(k), "n = {n}, k = {k}");
            // each level adds n boxes and n conjunctions
            assert_eq!(dag, 1 + 2 * (n * k) as usize);
            if n <= 2 {
                assert!(dag <= 1 + ((n + 1) * k + k) as usize);
            }
        }
    }
}

#[test]
fn sat_set_matches_naive_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut s = FormulaStore::new();
    let shape = onevar::gen::Shape {
        arity: 2,
        max_var: 2,
        max_depth: 3,
        max_size: 9,
    };
    for _ in 0..200 {
        let reflexive = rng.gen_bool(0.5);
        let frame = random_product(&mut rng, 2, reflexive);
        let f = onevar::gen::random_formula(&mut s, &mut rng, shape);
        let val = random_valuation(&mut rng, frame.worlds(), &[1, 2]);
        let set = sat_set(&s, &frame, &val, f).unwrap();
        for w in 0..frame.worlds() {
            assert_eq!(set.contains(w), naive::holds(&s, &frame, &val, w, f), "{}", render(&s, f));
        }
    }
}

#[test]
fn product_edges_move_one_coordinate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let arity = rng.gen_range(1..=3);
        let factors: Vec<Frame1> = (0..arity)
            .map(|_| {
                let size = rng.gen_range(1..=3);
                random_frame(&mut rng, size, false)
            })
            .collect();
        let frame = product(&factors).unwrap();
        for i in 1..=arity as u32 {
            let mut count = 0;
            for x in 0..frame.worlds() {
                let cx = frame.coords(x).unwrap().to_vec();
                for &y in frame.successors(i, x) {
                    let cy = frame.coords(y).unwrap();
                    count += 1;
                    for d in 0..arity {
                        if d + 1 != i as usize {
                            assert_eq!(cx[d], cy[d]);
                        }
                    }
                    let ii = i as usize - 1;
                    assert!(factors[ii].relation().contains(cx[ii], cy[ii]));
                }
            }
            let others: usize = factors
                .iter()
                .enumerate()
                .filter(|(d, _)| *d + 1 != i as usize)
                .map(|(_, f)| f.worlds())
                .product();
            assert_eq!(count, factors[i as usize - 1].relation().len() * others);
        }
    }
}

#[test]
fn bounded_reach_matches_defined_boxes() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut s = FormulaStore::new();
    let p1 = s.var(1);
    for _ in 0..50 {
        let reflexive = rng.gen_bool(0.5);
        let frame = random_product(&mut rng, 2, reflexive);
        let val = random_valuation(&mut rng, frame.worlds(), &[1]);
        for k in 0..=3 {
            for (kind, dims) in [
                (Defined::BoxUpTo { k, arity: 2 }, vec![1, 2]),
                (Defined::BoxUpToSkipFirst { k, arity: 2 }, vec![2]),
            ] {
                let f = s.defined(kind, p1);
                for x in 0..frame.worlds() {
                    let reach = bounded_reach(&frame, x, k, &dims);
                    let all = reach.ones().all(|y| naive::holds(&s, &frame, &val, y, p1));
                    assert_eq!(naive::holds(&s, &frame, &val, x, f), all);
                }
            }
        }
    }
}

#[test]
fn restriction_keeps_reflexivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let size = rng.gen_range(1..=6);
        let f = random_frame(&mut rng, size, true);
        let keep: Vec<usize> = (0..size).filter(|_| rng.gen_bool(0.6)).collect();
        if keep.is_empty() {
            continue;
        }
        assert!(f.restrict(&keep).unwrap().is_reflexive());
        let r = Relation::from_edges(size, f.relation().edges()).unwrap();
        assert!(r.restrict(&keep).is_reflexive());
        let frame = product(&[f.clone(), f]).unwrap();
        let kept: Vec<usize> = (0..frame.worlds()).filter(|_| rng.gen_bool(0.5)).collect();
        if !kept.is_empty() {
            let sub = frame.restrict(&kept).unwrap();
            assert!(sub.relation(1).is_reflexive() && sub.relation(2).is_reflexive());
        }
    }
}
