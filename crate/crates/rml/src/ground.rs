//! Translation of a model plus a property to CNF over relation-tuple
//! variables.
//!
//! Every tuple in a relation's pool gets a boolean variable; relational
//! operators become sparse matrices of circuit nodes; transitive closure
//! unrolls by iterative squaring. Clauses are kept in groups (one per
//! declaration, fact conjunct, and property) with no auxiliary-variable
//! sharing across groups, so deleting a group's clauses is exactly the same
//! as removing that constraint from the model.

use crate::ast::{
    Conjunct, Formula, FormulaKind, Model, MultTestKind, Multiplicity, QuantKind, RelExpr,
    RelExprKind, RelTarget, SourceSpan,
};
use crate::bounds::{build_bounds, Bounds};
use crate::circuit::{tseitin, Circuit, NodeRef};
use crate::instance::Instance;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

/// Bijection between relation tuples and boolean variables 1..=len.
#[derive(Clone, Debug, Default)]
pub struct VarMap {
    by_tuple: HashMap<(String, Vec<String>), u32>,
    by_id: Vec<(String, Vec<String>)>,
}

impl VarMap {
    pub fn build(bounds: &Bounds) -> VarMap {
        let mut vm = VarMap::default();
        for (name, pool, fixed) in &bounds.sig_pools {
            if *fixed {
                continue;
            }
            for atom in pool {
                vm.push(name, vec![atom.name.clone()]);
            }
        }
        for (name, pool) in &bounds.field_pools {
            for (a, b) in pool {
                vm.push(name, vec![a.name.clone(), b.name.clone()]);
            }
        }
        vm
    }

    fn push(&mut self, rel: &str, tuple: Vec<String>) {
        let id = self.by_id.len() as u32 + 1;
        self.by_id.push((rel.to_string(), tuple.clone()));
        self.by_tuple.insert((rel.to_string(), tuple), id);
    }

    pub fn var(&self, rel: &str, tuple: &[String]) -> Option<u32> {
        self.by_tuple.get(&(rel.to_string(), tuple.to_vec())).copied()
    }

    pub fn tuple(&self, id: u32) -> &(String, Vec<String>) {
        &self.by_id[id as usize - 1]
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    /// Multiplicity or column-typing constraint from a sig or field decl.
    Declaration,
    /// Fact conjunct, by index into `model.facts`.
    FactConjunct(usize),
    /// The checked property (possibly negated).
    Property,
}

impl GroupKind {
    pub fn label(&self) -> &'static str {
        match self {
            GroupKind::Declaration => "declaration",
            GroupKind::FactConjunct(_) => "fact-conjunct",
            GroupKind::Property => "property",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Group {
    pub id: usize,
    pub kind: GroupKind,
    pub label: String,
    pub span: SourceSpan,
    pub clauses: Vec<Vec<i32>>,
    /// Circuit root the clauses were generated from.
    root: NodeRef,
}

pub struct GroundProblem {
    pub bounds: Bounds,
    pub var_map: VarMap,
    pub groups: Vec<Group>,
    /// Highest variable id in use (relation vars plus Tseitin auxiliaries).
    pub num_vars: u32,
    circuit: Circuit,
}

impl GroundProblem {
    pub fn all_clauses(&self) -> impl Iterator<Item = &Vec<i32>> {
        self.groups.iter().flat_map(|g| g.clauses.iter())
    }

    /// Rebuild an instance from a satisfying assignment (1-indexed,
    /// auxiliaries ignored).
    pub fn decode(&self, assignment: &[bool]) -> Instance {
        let mut sig_contents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut field_contents: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        for (name, pool, fixed) in &self.bounds.sig_pools {
            let entry = sig_contents.entry(name.clone()).or_default();
            if *fixed {
                entry.extend(pool.iter().map(|a| a.name.clone()));
            }
        }
        for (name, _) in &self.bounds.field_pools {
            field_contents.entry(name.clone()).or_default();
        }
        for id in 1..=self.var_map.len() as u32 {
            if !assignment[id as usize] {
                continue;
            }
            let (rel, tuple) = self.var_map.tuple(id);
            match tuple.len() {
                1 => {
                    sig_contents.entry(rel.clone()).or_default().insert(tuple[0].clone());
                }
                2 => {
                    field_contents
                        .entry(rel.clone())
                        .or_default()
                        .insert((tuple[0].clone(), tuple[1].clone()));
                }
                n => panic!("unexpected tuple arity {n}"),
            }
        }
        Instance { universe: self.bounds.universe.clone(), sig_contents, field_contents }
    }

    /// Relation-variable assignment (1-indexed; index 0 unused) encoding an
    /// instance. Inverse of `decode` on the relation variables.
    pub fn encode(&self, inst: &Instance) -> Vec<bool> {
        let mut assignment = vec![false; self.var_map.len() + 1];
        for id in 1..=self.var_map.len() as u32 {
            let (rel, tuple) = self.var_map.tuple(id);
            let present = match tuple.len() {
                1 => inst.sig_contents.get(rel).is_some_and(|s| s.contains(&tuple[0])),
                2 => inst
                    .field_contents
                    .get(rel)
                    .is_some_and(|s| s.contains(&(tuple[0].clone(), tuple[1].clone()))),
                n => panic!("unexpected tuple arity {n}"),
            };
            assignment[id as usize] = present;
        }
        assignment
    }

    /// Evaluate each group's circuit root under a relation-variable
    /// assignment (1-indexed). Bypasses the CNF, so it is usable as a
    /// semantic check without solving for auxiliaries.
    pub fn eval_groups(&self, rel_assignment: &[bool]) -> Vec<bool> {
        let assign = |v: u32| rel_assignment[v as usize];
        self.groups.iter().map(|g| self.circuit.eval(g.root, &assign)).collect()
    }

    /// DIMACS CNF with group provenance comments.
    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        let n_clauses: usize = self.groups.iter().map(|g| g.clauses.len()).sum();
        let _ = writeln!(s, "p cnf {} {}", self.num_vars, n_clauses);
        for g in &self.groups {
            let _ = writeln!(
                s,
                "c group {} {} {}:{}-{}",
                g.id,
                g.kind.label(),
                g.span.file,
                g.span.start_line,
                g.span.end_line
            );
            for clause in &g.clauses {
                for lit in clause {
                    let _ = write!(s, "{lit} ");
                }
                let _ = writeln!(s, "0");
            }
        }
        s
    }
}

struct Ctx<'a> {
    circuit: &'a mut Circuit,
    bounds: &'a Bounds,
    var_map: &'a VarMap,
}

/// Sparse matrix of circuit nodes; tuples not present are false.
#[derive(Clone, Debug)]
struct Matrix {
    arity: u32,
    entries: BTreeMap<Vec<String>, NodeRef>,
}

impl Matrix {
    fn empty(arity: u32) -> Matrix {
        Matrix { arity, entries: BTreeMap::new() }
    }

    fn insert(&mut self, tuple: Vec<String>, node: NodeRef) {
        if node != Circuit::FALSE {
            self.entries.insert(tuple, node);
        }
    }
}

type Env = HashMap<String, String>;

fn sig_membership(ctx: &mut Ctx, name: &str) -> Matrix {
    let mut m = Matrix::empty(1);
    let (_, pool, fixed) = ctx
        .bounds
        .sig_pools
        .iter()
        .find(|(n, _, _)| n == name)
        .expect("sig in bounds");
    for atom in pool {
        let node = if *fixed {
            Circuit::TRUE
        } else {
            let v = ctx.var_map.var(name, &[atom.name.clone()]).expect("sig var");
            ctx.circuit.var(v)
        };
        m.insert(vec![atom.name.clone()], node);
    }
    m
}

fn translate_rel(ctx: &mut Ctx, e: &RelExpr, env: &Env) -> Matrix {
    match &e.kind {
        RelExprKind::Name(n) => panic!("unresolved name {n} reached grounder"),
        RelExprKind::Rel(name, RelTarget::Sig) => sig_membership(ctx, name),
        RelExprKind::Rel(name, RelTarget::Field) => {
            let mut m = Matrix::empty(2);
            let (_, pool) = ctx
                .bounds
                .field_pools
                .iter()
                .find(|(n, _)| n == name)
                .expect("field in bounds");
            for (a, b) in pool {
                let v = ctx
                    .var_map
                    .var(name, &[a.name.clone(), b.name.clone()])
                    .expect("field var");
                let node = ctx.circuit.var(v);
                m.insert(vec![a.name.clone(), b.name.clone()], node);
            }
            m
        }
        RelExprKind::Var(name) => {
            let atom = env.get(name).unwrap_or_else(|| panic!("unbound var {name}"));
            let mut m = Matrix::empty(1);
            m.insert(vec![atom.clone()], Circuit::TRUE);
            m
        }
        RelExprKind::NoneConst => Matrix::empty(1),
        RelExprKind::UnivConst => {
            let mut m = Matrix::empty(1);
            for atom in &ctx.bounds.universe {
                m.insert(vec![atom.name.clone()], Circuit::TRUE);
            }
            m
        }
        RelExprKind::IdenConst => {
            let mut m = Matrix::empty(2);
            for atom in &ctx.bounds.universe {
                m.insert(vec![atom.name.clone(), atom.name.clone()], Circuit::TRUE);
            }
            m
        }
        RelExprKind::Union(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            let mut m = Matrix::empty(lm.arity);
            let keys: BTreeSet<_> =
                lm.entries.keys().chain(rm.entries.keys()).cloned().collect();
            for t in keys {
                let a = lm.entries.get(&t).copied().unwrap_or(Circuit::FALSE);
                let b = rm.entries.get(&t).copied().unwrap_or(Circuit::FALSE);
                let node = ctx.circuit.or([a, b]);
                m.insert(t, node);
            }
            m
        }
        RelExprKind::Difference(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            let mut m = Matrix::empty(lm.arity);
            for (t, &a) in &lm.entries {
                let b = rm.entries.get(t).copied().unwrap_or(Circuit::FALSE);
                let nb = ctx.circuit.not(b);
                let node = ctx.circuit.and([a, nb]);
                m.insert(t.clone(), node);
            }
            m
        }
        RelExprKind::Intersect(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            let mut m = Matrix::empty(lm.arity);
            for (t, &a) in &lm.entries {
                if let Some(&b) = rm.entries.get(t) {
                    let node = ctx.circuit.and([a, b]);
                    m.insert(t.clone(), node);
                }
            }
            m
        }
        RelExprKind::Join(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            join(ctx, &lm, &rm)
        }
        RelExprKind::Product(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            let mut m = Matrix::empty(lm.arity + rm.arity);
            for (lt, &a) in &lm.entries {
                for (rt, &b) in &rm.entries {
                    let mut t = lt.clone();
                    t.extend(rt.iter().cloned());
                    let node = ctx.circuit.and([a, b]);
                    m.insert(t, node);
                }
            }
            m
        }
        RelExprKind::Transpose(x) => {
            let xm = translate_rel(ctx, x, env);
            let mut m = Matrix::empty(2);
            for (t, &node) in &xm.entries {
                m.insert(vec![t[1].clone(), t[0].clone()], node);
            }
            m
        }
        RelExprKind::TClosure(x) => {
            let xm = translate_rel(ctx, x, env);
            tclosure(ctx, &xm)
        }
        RelExprKind::RTClosure(x) => {
            let xm = translate_rel(ctx, x, env);
            let tc = tclosure(ctx, &xm);
            let mut m = tc;
            for atom in &ctx.bounds.universe {
                let t = vec![atom.name.clone(), atom.name.clone()];
                let prev = m.entries.get(&t).copied().unwrap_or(Circuit::FALSE);
                let node = ctx.circuit.or([prev, Circuit::TRUE]);
                m.insert(t, node);
            }
            m
        }
    }
}

fn join(ctx: &mut Ctx, lm: &Matrix, rm: &Matrix) -> Matrix {
    let arity = lm.arity + rm.arity - 2;
    let mut acc: BTreeMap<Vec<String>, Vec<NodeRef>> = BTreeMap::new();
    for (lt, &a) in &lm.entries {
        let mid = lt.last().expect("nonempty tuple");
        for (rt, &b) in &rm.entries {
            if &rt[0] != mid {
                continue;
            }
            let mut t = lt[..lt.len() - 1].to_vec();
            t.extend(rt[1..].iter().cloned());
            let node = ctx.circuit.and([a, b]);
            if node != Circuit::FALSE {
                acc.entry(t).or_default().push(node);
            }
        }
    }
    let mut m = Matrix::empty(arity);
    for (t, nodes) in acc {
        let node = ctx.circuit.or(nodes);
        m.insert(t, node);
    }
    m
}

/// Transitive closure by iterative squaring: ceil(log2 |universe|) rounds of
/// R := R + R.R.
fn tclosure(ctx: &mut Ctx, base: &Matrix) -> Matrix {
    let n = ctx.bounds.universe.len().max(2);
    let rounds = usize::BITS - (n - 1).leading_zeros();
    let mut r = base.clone();
    for _ in 0..rounds {
        let sq = join(ctx, &r, &r);
        let mut next = Matrix::empty(2);
        let keys: BTreeSet<_> = r.entries.keys().chain(sq.entries.keys()).cloned().collect();
        for t in keys {
            let a = r.entries.get(&t).copied().unwrap_or(Circuit::FALSE);
            let b = sq.entries.get(&t).copied().unwrap_or(Circuit::FALSE);
            let node = ctx.circuit.or([a, b]);
            next.insert(t, node);
        }
        r = next;
    }
    r
}

fn translate_formula(ctx: &mut Ctx, f: &Formula, env: &Env) -> NodeRef {
    match &f.kind {
        FormulaKind::Subset(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            subset(ctx, &lm, &rm)
        }
        FormulaKind::NotSubset(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            let s = subset(ctx, &lm, &rm);
            ctx.circuit.not(s)
        }
        FormulaKind::Equal(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            let fwd = subset(ctx, &lm, &rm);
            let bwd = subset(ctx, &rm, &lm);
            ctx.circuit.and([fwd, bwd])
        }
        FormulaKind::NotEqual(l, r) => {
            let lm = translate_rel(ctx, l, env);
            let rm = translate_rel(ctx, r, env);
            let fwd = subset(ctx, &lm, &rm);
            let bwd = subset(ctx, &rm, &lm);
            let eq = ctx.circuit.and([fwd, bwd]);
            ctx.circuit.not(eq)
        }
        FormulaKind::MultTest(kind, e) => {
            let m = translate_rel(ctx, e, env);
            let entries: Vec<NodeRef> = m.entries.values().copied().collect();
            mult_test(ctx, *kind, &entries)
        }
        FormulaKind::Quant(kind, var, bound, body) => {
            let bm = translate_rel(ctx, bound, env);
            debug_assert_eq!(bm.arity, 1, "quantifier bound must be unary");
            let mut parts = Vec::with_capacity(bm.entries.len());
            for (t, &guard) in &bm.entries {
                let mut inner = env.clone();
                inner.insert(var.clone(), t[0].clone());
                let b = translate_formula(ctx, body, &inner);
                let part = match kind {
                    QuantKind::All => ctx.circuit.implies(guard, b),
                    QuantKind::Some | QuantKind::No => ctx.circuit.and([guard, b]),
                };
                parts.push(part);
            }
            match kind {
                QuantKind::All => ctx.circuit.and(parts),
                QuantKind::Some => ctx.circuit.or(parts),
                QuantKind::No => {
                    let some = ctx.circuit.or(parts);
                    ctx.circuit.not(some)
                }
            }
        }
        FormulaKind::Not(x) => {
            let n = translate_formula(ctx, x, env);
            ctx.circuit.not(n)
        }
        FormulaKind::And(a, b) => {
            let na = translate_formula(ctx, a, env);
            let nb = translate_formula(ctx, b, env);
            ctx.circuit.and([na, nb])
        }
        FormulaKind::Or(a, b) => {
            let na = translate_formula(ctx, a, env);
            let nb = translate_formula(ctx, b, env);
            ctx.circuit.or([na, nb])
        }
        FormulaKind::Implies(a, b) => {
            let na = translate_formula(ctx, a, env);
            let nb = translate_formula(ctx, b, env);
            ctx.circuit.implies(na, nb)
        }
        FormulaKind::Iff(a, b) => {
            let na = translate_formula(ctx, a, env);
            let nb = translate_formula(ctx, b, env);
            ctx.circuit.iff(na, nb)
        }
    }
}

fn subset(ctx: &mut Ctx, lm: &Matrix, rm: &Matrix) -> NodeRef {
    let mut parts = Vec::with_capacity(lm.entries.len());
    for (t, &a) in &lm.entries {
        let b = rm.entries.get(t).copied().unwrap_or(Circuit::FALSE);
        parts.push(ctx.circuit.implies(a, b));
    }
    ctx.circuit.and(parts)
}

fn mult_test(ctx: &mut Ctx, kind: MultTestKind, entries: &[NodeRef]) -> NodeRef {
    match kind {
        MultTestKind::No => {
            let parts: Vec<NodeRef> = entries.iter().map(|&e| ctx.circuit.not(e)).collect();
            ctx.circuit.and(parts)
        }
        MultTestKind::Some => ctx.circuit.or(entries.iter().copied()),
        MultTestKind::Lone => {
            let mut parts = Vec::new();
            for i in 0..entries.len() {
                for j in i + 1..entries.len() {
                    let both = ctx.circuit.and([entries[i], entries[j]]);
                    parts.push(ctx.circuit.not(both));
                }
            }
            ctx.circuit.and(parts)
        }
        MultTestKind::One => {
            let some = mult_test(ctx, MultTestKind::Some, entries);
            let lone = mult_test(ctx, MultTestKind::Lone, entries);
            ctx.circuit.and([some, lone])
        }
    }
}

/// Ground the full model plus an optional property.
pub fn ground(
    model: &Model,
    property: Option<&Formula>,
    negate_property: bool,
    scope: u32,
) -> GroundProblem {
    ground_filtered(model, |_| true, property, negate_property, scope)
}

/// Ground with a subset of the fact conjuncts, selected by index. Used to
/// slice the model when analyzing unsat cores.
pub fn ground_filtered(
    model: &Model,
    keep_fact: impl Fn(usize) -> bool,
    property: Option<&Formula>,
    negate_property: bool,
    scope: u32,
) -> GroundProblem {
    let bounds = build_bounds(model, scope);
    let var_map = VarMap::build(&bounds);
    let mut circuit = Circuit::new();
    let mut next_aux = var_map.len() as u32 + 1;
    let mut groups: Vec<Group> = Vec::new();

    let push_group = |circuit: &mut Circuit,
                          next_aux: &mut u32,
                          groups: &mut Vec<Group>,
                          root: NodeRef,
                          kind: GroupKind,
                          label: String,
                          span: SourceSpan| {
        let clauses = tseitin(circuit, root, next_aux);
        let id = groups.len();
        groups.push(Group { id, kind, label, span, clauses, root });
    };

    {
        let mut ctx = Ctx { circuit: &mut circuit, bounds: &bounds, var_map: &var_map };

        // declaration groups: sig multiplicities, then field typing +
        // per-owner multiplicity, one group per declaration
        for sig in &model.sigs {
            if sig.mult == Multiplicity::One || sig.mult == Multiplicity::Set {
                // ONE is baked into the bounds; SET is unconstrained
                continue;
            }
            let m = sig_membership(&mut ctx, &sig.name);
            let entries: Vec<NodeRef> = m.entries.values().copied().collect();
            let kind = match sig.mult {
                Multiplicity::Lone => MultTestKind::Lone,
                Multiplicity::Some => MultTestKind::Some,
                _ => unreachable!(),
            };
            let root = mult_test(&mut ctx, kind, &entries);
            push_group(
                ctx.circuit,
                &mut next_aux,
                &mut groups,
                root,
                GroupKind::Declaration,
                format!("sig {}", sig.name),
                sig.span.clone(),
            );
        }
        for field in model.fields() {
            let owner_m = sig_membership(&mut ctx, &field.owner);
            let target_m = sig_membership(&mut ctx, &field.target);
            let (_, pool) = ctx
                .bounds
                .field_pools
                .iter()
                .find(|(n, _)| n == &field.name)
                .expect("field pool")
                .clone();
            let mut parts = Vec::new();
            // column typing: a tuple forces both endpoints into their sigs
            for (a, b) in &pool {
                let v = ctx.var_map.var(&field.name, &[a.name.clone(), b.name.clone()]).unwrap();
                let t = ctx.circuit.var(v);
                let oa = owner_m
                    .entries
                    .get(&vec![a.name.clone()])
                    .copied()
                    .unwrap_or(Circuit::FALSE);
                let tb = target_m
                    .entries
                    .get(&vec![b.name.clone()])
                    .copied()
                    .unwrap_or(Circuit::FALSE);
                let cols = ctx.circuit.and([oa, tb]);
                parts.push(ctx.circuit.implies(t, cols));
            }
            // per-owner multiplicity on the target column, guarded by the
            // owner atom actually being in its sig
            if field.mult != Multiplicity::Set {
                let mkind = match field.mult {
                    Multiplicity::One => MultTestKind::One,
                    Multiplicity::Lone => MultTestKind::Lone,
                    Multiplicity::Some => MultTestKind::Some,
                    Multiplicity::Set => unreachable!(),
                };
                for owner_atom in ctx.bounds.sig_pool(&field.owner).to_vec() {
                    let row: Vec<NodeRef> = pool
                        .iter()
                        .filter(|(a, _)| a.name == owner_atom.name)
                        .map(|(a, b)| {
                            let v = ctx
                                .var_map
                                .var(&field.name, &[a.name.clone(), b.name.clone()])
                                .unwrap();
                            ctx.circuit.var(v)
                        })
                        .collect();
                    let test = mult_test(&mut ctx, mkind, &row);
                    let guard = owner_m
                        .entries
                        .get(&vec![owner_atom.name.clone()])
                        .copied()
                        .unwrap_or(Circuit::FALSE);
                    parts.push(ctx.circuit.implies(guard, test));
                }
            }
            let root = ctx.circuit.and(parts);
            push_group(
                ctx.circuit,
                &mut next_aux,
                &mut groups,
                root,
                GroupKind::Declaration,
                format!("field {}", field.name),
                field.span.clone(),
            );
        }

        // fact conjunct groups
        let env = Env::new();
        for (i, conjunct) in model.facts.iter().enumerate() {
            if !keep_fact(i) {
                continue;
            }
            let root = translate_formula(&mut ctx, &conjunct.formula, &env);
            push_group(
                ctx.circuit,
                &mut next_aux,
                &mut groups,
                root,
                GroupKind::FactConjunct(i),
                conjunct_label(conjunct),
                conjunct.span.clone(),
            );
        }

        // property group
        if let Some(p) = property {
            let mut root = translate_formula(&mut ctx, p, &env);
            if negate_property {
                root = ctx.circuit.not(root);
            }
            push_group(
                ctx.circuit,
                &mut next_aux,
                &mut groups,
                root,
                GroupKind::Property,
                "property".to_string(),
                p.span.clone(),
            );
        }
    }

    GroundProblem { bounds, var_map, groups, num_vars: next_aux - 1, circuit }
}

pub fn conjunct_label(c: &Conjunct) -> String {
    format!("{} #{}", c.owner, c.index)
}
