//! Ground evaluation of relational expressions and formulas against a
//! concrete [`Instance`] under a variable binding.

use crate::ast::{
    free_vars, free_vars_rel, leaf_rel_subexprs, Conjunct, Formula, FormulaKind, Model,
    MultTestKind, QuantKind, RelExpr, RelExprKind, RelTarget,
};
use crate::instance::Instance;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Map from quantifier-variable name to a bound atom.
pub type Binding = BTreeMap<String, String>;

pub type Tuple = Vec<String>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleSet {
    pub arity: u32,
    pub tuples: BTreeSet<Tuple>,
}

impl TupleSet {
    pub fn empty(arity: u32) -> Self {
        TupleSet { arity, tuples: BTreeSet::new() }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn is_subset(&self, other: &TupleSet) -> bool {
        self.tuples.is_subset(&other.tuples)
    }

    /// All atoms occurring in any member tuple.
    pub fn atoms(&self) -> BTreeSet<String> {
        self.tuples.iter().flatten().cloned().collect()
    }
}

/// Standard relational semantics. Panics on an unbound variable; callers must
/// establish `free_vars(e) ⊆ keys of b`.
pub fn eval_rel(e: &RelExpr, inst: &Instance, b: &Binding) -> TupleSet {
    match &e.kind {
        RelExprKind::Name(n) => panic!("eval of unresolved name `{n}`"),
        RelExprKind::Rel(name, RelTarget::Sig) => TupleSet {
            arity: 1,
            tuples: inst
                .sig_contents
                .get(name)
                .map(|s| s.iter().map(|a| vec![a.clone()]).collect())
                .unwrap_or_default(),
        },
        RelExprKind::Rel(name, RelTarget::Field) => TupleSet {
            arity: 2,
            tuples: inst
                .field_contents
                .get(name)
                .map(|s| s.iter().map(|(a, c)| vec![a.clone(), c.clone()]).collect())
                .unwrap_or_default(),
        },
        RelExprKind::Var(v) => {
            let atom = b.get(v).unwrap_or_else(|| panic!("unbound variable `{v}`"));
            TupleSet { arity: 1, tuples: BTreeSet::from([vec![atom.clone()]]) }
        }
        RelExprKind::NoneConst => TupleSet::empty(1),
        RelExprKind::UnivConst => TupleSet {
            arity: 1,
            tuples: inst.universe.iter().map(|a| vec![a.name.clone()]).collect(),
        },
        RelExprKind::IdenConst => TupleSet {
            arity: 2,
            tuples: inst.universe.iter().map(|a| vec![a.name.clone(), a.name.clone()]).collect(),
        },
        RelExprKind::Union(l, r) => {
            let (ls, rs) = (eval_rel(l, inst, b), eval_rel(r, inst, b));
            TupleSet { arity: ls.arity, tuples: ls.tuples.union(&rs.tuples).cloned().collect() }
        }
        RelExprKind::Difference(l, r) => {
            let (ls, rs) = (eval_rel(l, inst, b), eval_rel(r, inst, b));
            TupleSet { arity: ls.arity, tuples: ls.tuples.difference(&rs.tuples).cloned().collect() }
        }
        RelExprKind::Intersect(l, r) => {
            let (ls, rs) = (eval_rel(l, inst, b), eval_rel(r, inst, b));
            TupleSet {
                arity: ls.arity,
                tuples: ls.tuples.intersection(&rs.tuples).cloned().collect(),
            }
        }
        RelExprKind::Join(l, r) => {
            let (ls, rs) = (eval_rel(l, inst, b), eval_rel(r, inst, b));
            let arity = ls.arity + rs.arity - 2;
            let mut tuples = BTreeSet::new();
            for lt in &ls.tuples {
                for rt in &rs.tuples {
                    if lt.last() == rt.first() {
                        let mut t = lt[..lt.len() - 1].to_vec();
                        t.extend_from_slice(&rt[1..]);
                        tuples.insert(t);
                    }
                }
            }
            TupleSet { arity, tuples }
        }
        RelExprKind::Product(l, r) => {
            let (ls, rs) = (eval_rel(l, inst, b), eval_rel(r, inst, b));
            let arity = ls.arity + rs.arity;
            let mut tuples = BTreeSet::new();
            for lt in &ls.tuples {
                for rt in &rs.tuples {
                    let mut t = lt.clone();
                    t.extend_from_slice(rt);
                    tuples.insert(t);
                }
            }
            TupleSet { arity, tuples }
        }
        RelExprKind::Transpose(x) => {
            let xs = eval_rel(x, inst, b);
            TupleSet {
                arity: 2,
                tuples: xs.tuples.iter().map(|t| vec![t[1].clone(), t[0].clone()]).collect(),
            }
        }
        RelExprKind::TClosure(x) => {
            let xs = eval_rel(x, inst, b);
            TupleSet { arity: 2, tuples: transitive_closure(&xs.tuples) }
        }
        RelExprKind::RTClosure(x) => {
            let xs = eval_rel(x, inst, b);
            let mut tuples = transitive_closure(&xs.tuples);
            for a in &inst.universe {
                tuples.insert(vec![a.name.clone(), a.name.clone()]);
            }
            TupleSet { arity: 2, tuples }
        }
    }
}

/// Least transitive superset, by iterating relational composition to a
/// fixpoint.
fn transitive_closure(base: &BTreeSet<Tuple>) -> BTreeSet<Tuple> {
    let mut closure = base.clone();
    loop {
        let mut next = closure.clone();
        for a in &closure {
            for b in &closure {
                if a[1] == b[0] {
                    next.insert(vec![a[0].clone(), b[1].clone()]);
                }
            }
        }
        if next.len() == closure.len() {
            return closure;
        }
        closure = next;
    }
}

pub fn eval_formula(f: &Formula, inst: &Instance, b: &Binding) -> bool {
    match &f.kind {
        FormulaKind::Subset(l, r) => eval_rel(l, inst, b).is_subset(&eval_rel(r, inst, b)),
        FormulaKind::NotSubset(l, r) => !eval_rel(l, inst, b).is_subset(&eval_rel(r, inst, b)),
        FormulaKind::Equal(l, r) => eval_rel(l, inst, b).tuples == eval_rel(r, inst, b).tuples,
        FormulaKind::NotEqual(l, r) => eval_rel(l, inst, b).tuples != eval_rel(r, inst, b).tuples,
        FormulaKind::MultTest(kind, e) => {
            let n = eval_rel(e, inst, b).len();
            match kind {
                MultTestKind::No => n == 0,
                MultTestKind::Some => n >= 1,
                MultTestKind::Lone => n <= 1,
                MultTestKind::One => n == 1,
            }
        }
        FormulaKind::Quant(kind, var, bound, body) => {
            let pool = eval_rel(bound, inst, b);
            let mut results = pool.tuples.iter().map(|t| {
                let mut b2 = b.clone();
                b2.insert(var.clone(), t[0].clone());
                eval_formula(body, inst, &b2)
            });
            match kind {
                QuantKind::All => results.all(|x| x),
                QuantKind::Some => results.any(|x| x),
                QuantKind::No => !results.any(|x| x),
            }
        }
        FormulaKind::Not(x) => !eval_formula(x, inst, b),
        FormulaKind::And(l, r) => eval_formula(l, inst, b) && eval_formula(r, inst, b),
        FormulaKind::Or(l, r) => eval_formula(l, inst, b) || eval_formula(r, inst, b),
        FormulaKind::Implies(l, r) => !eval_formula(l, inst, b) || eval_formula(r, inst, b),
        FormulaKind::Iff(l, r) => eval_formula(l, inst, b) == eval_formula(r, inst, b),
    }
}

/// Atoms a node touches under a binding: the binding's values for the node's
/// free variables plus every atom in the evaluations of its relational
/// leaves.
pub fn involved_atoms(f: &Formula, inst: &Instance, b: &Binding) -> BTreeSet<String> {
    let mut out: BTreeSet<String> =
        free_vars(f).iter().filter_map(|v| b.get(v).cloned()).collect();
    for leaf in leaf_rel_subexprs(f) {
        // leaves under a nested quantifier mention variables the binding
        // does not cover; their contribution is not well-defined, so skip
        if free_vars_rel(leaf).iter().all(|v| b.contains_key(v)) {
            out.extend(eval_rel(leaf, inst, b).atoms());
        }
    }
    out
}

/// [`involved_atoms`] for a relational leaf.
pub fn involved_atoms_rel(e: &RelExpr, inst: &Instance, b: &Binding) -> BTreeSet<String> {
    let mut out: BTreeSet<String> =
        free_vars_rel(e).iter().filter_map(|v| b.get(v).cloned()).collect();
    out.extend(eval_rel(e, inst, b).atoms());
    out
}

/// One variable stripped from a conjunct's outer quantifier chain, together
/// with its membership guard.
#[derive(Clone, Debug)]
pub struct StrippedVar<'a> {
    pub kind: QuantKind,
    pub name: String,
    pub bound: &'a RelExpr,
}

/// The maximal outer chain of quantifiers of a conjunct, plus the remaining
/// body.
pub fn stripped_quantifiers(c: &Conjunct) -> (Vec<StrippedVar<'_>>, &Formula) {
    let mut vars = Vec::new();
    let mut f = &c.formula;
    while let FormulaKind::Quant(kind, name, bound, body) = &f.kind {
        vars.push(StrippedVar { kind: *kind, name: name.clone(), bound });
        f = body;
    }
    (vars, f)
}

/// Statically possible signatures for each column of an expression.
/// Over-approximate; used to reject type-incompatible atom/variable
/// combinations before instantiating.
pub fn col_sigs(
    e: &RelExpr,
    model: &Model,
    var_sigs: &HashMap<String, BTreeSet<String>>,
) -> Vec<BTreeSet<String>> {
    let all_sigs = || model.sigs.iter().map(|s| s.name.clone()).collect::<BTreeSet<_>>();
    match &e.kind {
        RelExprKind::Name(_) => vec![all_sigs()],
        RelExprKind::Rel(name, RelTarget::Sig) => vec![BTreeSet::from([name.clone()])],
        RelExprKind::Rel(name, RelTarget::Field) => {
            let field = model.field(name).expect("resolved field");
            vec![
                BTreeSet::from([field.owner.clone()]),
                BTreeSet::from([field.target.clone()]),
            ]
        }
        RelExprKind::Var(v) => vec![var_sigs.get(v).cloned().unwrap_or_else(all_sigs)],
        RelExprKind::NoneConst => vec![BTreeSet::new()],
        RelExprKind::UnivConst => vec![all_sigs()],
        RelExprKind::IdenConst => vec![all_sigs(), all_sigs()],
        RelExprKind::Union(l, r) | RelExprKind::Intersect(l, r) => {
            let (ls, rs) = (col_sigs(l, model, var_sigs), col_sigs(r, model, var_sigs));
            ls.iter()
                .zip(rs.iter())
                .map(|(a, b)| a.union(b).cloned().collect())
                .collect()
        }
        RelExprKind::Difference(l, _) => col_sigs(l, model, var_sigs),
        RelExprKind::Join(l, r) => {
            let (ls, rs) = (col_sigs(l, model, var_sigs), col_sigs(r, model, var_sigs));
            let mut out = ls[..ls.len() - 1].to_vec();
            out.extend_from_slice(&rs[1..]);
            out
        }
        RelExprKind::Product(l, r) => {
            let mut out = col_sigs(l, model, var_sigs);
            out.extend(col_sigs(r, model, var_sigs));
            out
        }
        RelExprKind::Transpose(x) => {
            let mut cs = col_sigs(x, model, var_sigs);
            cs.reverse();
            cs
        }
        RelExprKind::TClosure(x) | RelExprKind::RTClosure(x) => {
            let cs = col_sigs(x, model, var_sigs);
            let merged: BTreeSet<String> = cs[0].union(&cs[1]).cloned().collect();
            // the reflexive closure's identity part spans the universe
            if matches!(e.kind, RelExprKind::RTClosure(_)) {
                vec![all_sigs(), all_sigs()]
            } else {
                vec![merged.clone(), merged]
            }
        }
    }
}

/// Strip the outer quantifier chain of a conjunct and bind its variables
/// positionally to `atoms`. Returns the binding, the remaining body and the
/// membership guards `(var, bound)` to be checked per-instance. A
/// statically type-incompatible combination returns `None` (the caller drops
/// that combination).
pub fn guarded_instantiate<'a>(
    c: &'a Conjunct,
    atoms: &[(String, String)], // (atom name, sig)
    model: &Model,
) -> Option<(Binding, &'a Formula, Vec<StrippedVar<'a>>)> {
    let (vars, body) = stripped_quantifiers(c);
    assert_eq!(vars.len(), atoms.len(), "atom count must match stripped variable count");
    let mut binding = Binding::new();
    let mut var_sigs: HashMap<String, BTreeSet<String>> = HashMap::new();
    for (v, (atom, sig)) in vars.iter().zip(atoms) {
        let cols = col_sigs(v.bound, model, &var_sigs);
        if !cols[0].contains(sig) {
            return None;
        }
        var_sigs.insert(v.name.clone(), BTreeSet::from([sig.clone()]));
        binding.insert(v.name.clone(), atom.clone());
    }
    Some((binding, body, vars))
}
