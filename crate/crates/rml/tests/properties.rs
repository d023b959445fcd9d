//! Randomized structural properties over the whole frontend/evaluator stack:
//! printing round-trips, leaf collection, closure laws, and quantifier
//! semantics, all driven by generated formulas and instances.

use proptest::prelude::*;
use rml::ast::{leaf_rel_subexprs, rel_names, rel_names_rel, Formula, FormulaKind, Model};
use rml::enumerate::enumerate_instances;
use rml::eval::{eval_formula, eval_rel, Binding, TupleSet};
use rml::frontend::load_model;
use rml::instance::Instance;
use std::collections::BTreeSet;

/// The fixed context every generated formula is resolved against.
const DECLS: &str = "sig A {\n  f: set A\n}\nsig B {\n  g: set A\n}\n";

/// Arity-1 expression strings, optionally using the bound variable `x`.
fn rel1(depth: u32, with_var: bool) -> BoxedStrategy<String> {
    let mut leaves: Vec<&'static str> = vec!["A", "B", "none", "univ"];
    if with_var {
        leaves.push("x");
    }
    let leaf = proptest::sample::select(leaves).prop_map(str::to_string);
    if depth == 0 {
        return leaf.boxed();
    }
    let sub1 = rel1(depth - 1, with_var);
    let sub2 = rel2(depth - 1);
    prop_oneof![
        4 => leaf,
        1 => (rel1(depth - 1, with_var), sub2.clone())
            .prop_map(|(a, b)| format!("({a}.{b})")),
        1 => (sub2, rel1(depth - 1, with_var)).prop_map(|(a, b)| format!("({a}.{b})")),
        2 => (rel1(depth - 1, with_var), sub1, proptest::sample::select(vec!["+", "&", "-"]))
            .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
    ]
    .boxed()
}

/// Arity-2 expression strings.
fn rel2(depth: u32) -> BoxedStrategy<String> {
    let leaf = proptest::sample::select(vec!["f", "g", "iden"]).prop_map(str::to_string);
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![
        3 => leaf,
        1 => rel2(depth - 1).prop_map(|a| format!("(~{a})")),
        1 => proptest::sample::select(vec!["^", "*"])
            .prop_flat_map(move |cl| rel2(depth - 1).prop_map(move |a| format!("({cl}{a})"))),
        1 => (rel1(depth - 1, false), rel1(depth - 1, false))
            .prop_map(|(a, b)| format!("({a} -> {b})")),
        1 => (rel2(depth - 1), rel2(depth - 1), proptest::sample::select(vec!["+", "&", "-"]))
            .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
    ]
    .boxed()
}

/// Formula strings over the fixed context.
fn formula(depth: u32, with_var: bool) -> BoxedStrategy<String> {
    let atomic = prop_oneof![
        (rel1(1, with_var), rel1(1, with_var), proptest::sample::select(vec!["in", "!in", "=", "!="]))
            .prop_map(|(a, b, op)| format!("{a} {op} {b}")),
        (rel2(1), rel2(1), proptest::sample::select(vec!["in", "=", "!="]))
            .prop_map(|(a, b, op)| format!("{a} {op} {b}")),
        (proptest::sample::select(vec!["no", "some", "lone", "one"]), rel1(1, with_var))
            .prop_map(|(k, e)| format!("{k} {e}")),
    ];
    if depth == 0 {
        return atomic.boxed();
    }
    let sub = formula(depth - 1, with_var);
    prop_oneof![
        3 => atomic,
        2 => (formula(depth - 1, with_var), sub, proptest::sample::select(vec!["&&", "||", "=>", "<=>"]))
            .prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
        1 => formula(depth - 1, with_var).prop_map(|a| format!("!({a})")),
        1 => (proptest::sample::select(vec!["all", "some", "no"]), formula(depth - 1, true))
            .prop_map(|(q, body)| format!("{q} x: A | {body}")),
    ]
    .boxed()
}

fn parse_formula(body: &str) -> Option<Formula> {
    let src = format!("{DECLS}fact F {{\n  {body}\n}}\n");
    load_model("gen", &src).ok().map(|m| m.facts[0].formula.clone())
}

fn context_instances() -> &'static [Instance] {
    static CACHE: std::sync::OnceLock<Vec<Instance>> = std::sync::OnceLock::new();
    CACHE.get_or_init(|| {
        let m: Model = load_model("gen", DECLS).unwrap();
        enumerate_instances(&m, 2, None).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Pretty-printed formulas parse back, and printing is a fixed point:
    /// print(parse(print(f))) == print(f).
    #[test]
    fn printing_round_trips(body in formula(3, false)) {
        let f = parse_formula(&body).expect("generated formula must parse");
        let printed = f.to_string();
        let f2 = parse_formula(&printed)
            .unwrap_or_else(|| panic!("printed form does not reparse: {printed}"));
        prop_assert_eq!(printed, f2.to_string());
    }

    /// Every relation name in a formula occurs in one of its relational
    /// leaves, and vice versa: the leaves partition the relational content.
    #[test]
    fn leaves_cover_all_relation_names(body in formula(3, false)) {
        let f = parse_formula(&body).expect("generated formula must parse");
        let mut from_leaves = BTreeSet::new();
        for leaf in leaf_rel_subexprs(&f) {
            rel_names_rel(leaf, &mut from_leaves);
        }
        prop_assert_eq!(rel_names(&f), from_leaves);
    }

    /// Transitive closure laws on arbitrary instances: ^f contains f, is
    /// transitive, and is the least such relation; *f adds the diagonal.
    #[test]
    fn closure_laws(e in rel2(2), seed in 0usize..64) {
        let instances = context_instances();
        let inst = &instances[seed % instances.len()];
        let b = Binding::new();
        let base = eval_expr(&format!("{e} in {e}"), inst, &b, true);
        let closed = eval_expr(&format!("(^{e}) in (^{e})"), inst, &b, true);
        // containment
        prop_assert!(base.is_subset(&closed));
        // transitivity and minimality against an independent fixpoint
        let fix = fixpoint(&base);
        prop_assert_eq!(tuples(&closed), fix.clone());
        // reflexive closure = closure + diagonal over the whole universe
        let reflexive = eval_expr(&format!("(*{e}) in (*{e})"), inst, &b, true);
        let mut with_diag = fix;
        for atom in &inst.universe {
            with_diag.insert((atom.name.clone(), atom.name.clone()));
        }
        prop_assert_eq!(tuples(&reflexive), with_diag);
    }

    /// Quantifiers agree with explicit expansion over the bound's contents.
    #[test]
    fn quantifiers_match_expansion(body in formula(2, true), seed in 0usize..64) {
        let quantified: Vec<(&str, Box<dyn Fn(usize, usize) -> bool>)> = vec![
            ("all", Box::new(|holds, n| holds == n)),
            ("some", Box::new(|holds, _| holds > 0)),
            ("no", Box::new(|holds, _| holds == 0)),
        ];
        let instances = context_instances();
        let inst = &instances[seed % instances.len()];
        let f_body = parse_formula(&format!("all x: A | {body}")).expect("must parse");
        let FormulaKind::Quant(_, var, bound, inner) = &f_body.kind else { unreachable!() };
        let empty = Binding::new();
        let pool = eval_rel(bound, inst, &empty);
        for (kw, agg) in &quantified {
            let full = parse_formula(&format!("{kw} x: A | {body}")).unwrap();
            let want = {
                let mut holds = 0;
                for t in tuples1(&pool) {
                    let mut b = Binding::new();
                    b.insert(var.clone(), t);
                    if eval_formula(inner, inst, &b) {
                        holds += 1;
                    }
                }
                agg(holds, pool.len())
            };
            prop_assert_eq!(eval_formula(&full, inst, &empty), want, "{} x: A | {}", kw, &body);
        }
    }
}

/// Evaluate the left side of a generated comparison string. Building a tiny
/// `l in l` formula reuses the full parser instead of a second expression
/// grammar.
fn eval_expr(cmp: &str, inst: &Instance, b: &Binding, left: bool) -> TupleSet {
    let f = parse_formula(cmp).expect("expression wrapper must parse");
    let (FormulaKind::Subset(l, r) | FormulaKind::Equal(l, r)) = &f.kind else {
        panic!("wrapper is a comparison")
    };
    eval_rel(if left { l } else { r }, inst, b)
}

fn tuples(ts: &TupleSet) -> BTreeSet<(String, String)> {
    ts.tuples.iter().map(|t| (t[0].clone(), t[1].clone())).collect()
}

fn tuples1(ts: &TupleSet) -> Vec<String> {
    ts.tuples.iter().map(|t| t[0].clone()).collect()
}

fn fixpoint(base: &TupleSet) -> BTreeSet<(String, String)> {
    let mut rel = tuples(base);
    loop {
        let mut next = rel.clone();
        for (a, b) in &rel {
            for (c, d) in &rel {
                if b == c {
                    next.insert((a.clone(), d.clone()));
                }
            }
        }
        if next == rel {
            return rel;
        }
        rel = next;
    }
}
