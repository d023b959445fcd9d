//! Fault localization: generate counterexample / nearest-satisfying-instance
//! pairs, diff them, slice the suspicious conjuncts and score their
//! sub-expressions. When no satisfying instance exists at all, fall back to
//! evaluating the unsat core's conjuncts against a relaxed model's instance.

use crate::ast::{
    rel_names, Conjunct, Formula, FormulaKind, Model, QuantKind, SourceSpan,
};
use crate::eval::{
    eval_formula, eval_rel, guarded_instantiate, involved_atoms, involved_atoms_rel,
    stripped_quantifiers, Binding,
};
use crate::ground::{ground, ground_filtered};
use crate::instance::Instance;
use crate::maxsat::{solve_pmax, PmaxResult};
use crate::solve::{core_fact_conjuncts, GroundResult, GroundSolver};
use num_rational::Ratio;
use std::collections::{BTreeMap, BTreeSet};

pub type Score = Ratio<i64>;

pub const DEFAULT_MAX_PAIRS: usize = 5;

#[derive(Clone, Debug)]
pub struct Pair {
    pub cex: Instance,
    pub sat: Instance,
    pub distance: usize,
}

#[derive(Debug)]
pub enum PairOutcome {
    Pairs(Vec<Pair>),
    /// The model conjoined with the property is unsatisfiable: minimized
    /// fact-conjunct core plus the counterexample that triggered the check.
    Unsat { core_conjuncts: Vec<usize>, cex: Instance },
    NoCex,
}

/// The pair loop: find counterexamples of `m` against `p`, each
/// paired with a nearest `p`-satisfying instance.
pub fn generate_pairs(
    m: &Model,
    p: &Formula,
    scope: u32,
    max_pairs: usize,
    seed: Option<u64>,
) -> PairOutcome {
    let gp_neg = ground(m, Some(p), true, scope);
    let gp_pos = ground(m, Some(p), false, scope);
    let mut gs = GroundSolver::new(&gp_neg, seed);
    let mut pairs = Vec::new();
    for _ in 0..max_pairs {
        let cex = match gs.solve() {
            GroundResult::Sat(inst) => inst,
            GroundResult::Unsat(_) => break,
        };
        gs.block(&cex);
        match solve_pmax(&gp_pos, &cex, seed) {
            PmaxResult::Optimal { instance, distance } => {
                pairs.push(Pair { cex, sat: instance, distance });
            }
            PmaxResult::HardUnsat { core_groups } => {
                let core_conjuncts = core_fact_conjuncts(&gp_pos, &core_groups);
                return PairOutcome::Unsat { core_conjuncts, cex };
            }
        }
    }
    if pairs.is_empty() {
        PairOutcome::NoCex
    } else {
        PairOutcome::Pairs(pairs)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Diff {
    /// Per pair: relation name -> differing tuples (symmetric difference).
    pub per_pair: Vec<BTreeMap<String, BTreeSet<Vec<String>>>>,
    /// Suspicious relations, common across pairs.
    pub relations: BTreeSet<String>,
    /// Suspicious atoms, common across pairs.
    pub atoms: BTreeSet<String>,
    /// True when an empty intersection forced falling back to the union.
    pub union_fallback: bool,
}

fn relation_tuples(inst: &Instance) -> BTreeMap<String, BTreeSet<Vec<String>>> {
    let mut out = BTreeMap::new();
    for (name, contents) in &inst.sig_contents {
        out.insert(name.clone(), contents.iter().map(|a| vec![a.clone()]).collect());
    }
    for (name, contents) in &inst.field_contents {
        out.insert(
            name.clone(),
            contents.iter().map(|(a, b)| vec![a.clone(), b.clone()]).collect(),
        );
    }
    out
}

/// Diff each pair and combine: differing tuples per relation, their atoms,
/// plus inferred fields that contain any tuple touching a differing atom.
pub fn compare(model: &Model, pairs: &[Pair]) -> Diff {
    let mut per_pair = Vec::new();
    let mut rel_sets: Vec<BTreeSet<String>> = Vec::new();
    let mut atom_sets: Vec<BTreeSet<String>> = Vec::new();
    let field_names: BTreeSet<String> = model.fields().map(|f| f.name.clone()).collect();
    for pair in pairs {
        let cex_rels = relation_tuples(&pair.cex);
        let sat_rels = relation_tuples(&pair.sat);
        let names: BTreeSet<&String> = cex_rels.keys().chain(sat_rels.keys()).collect();
        let mut diffs: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
        let mut atoms: BTreeSet<String> = BTreeSet::new();
        let mut relations: BTreeSet<String> = BTreeSet::new();
        for name in names {
            let empty = BTreeSet::new();
            let a = cex_rels.get(name).unwrap_or(&empty);
            let b = sat_rels.get(name).unwrap_or(&empty);
            let d: BTreeSet<Vec<String>> = a.symmetric_difference(b).cloned().collect();
            if !d.is_empty() {
                relations.insert(name.clone());
                for t in &d {
                    atoms.extend(t.iter().cloned());
                }
                diffs.insert(name.clone(), d);
            }
        }
        // inferred relations: fields with any tuple (in either instance)
        // touching a differing atom
        for field in &field_names {
            if relations.contains(field) {
                continue;
            }
            let touches = [&pair.cex, &pair.sat].iter().any(|inst| {
                inst.field_contents.get(field).is_some_and(|ts| {
                    ts.iter().any(|(a, b)| atoms.contains(a) || atoms.contains(b))
                })
            });
            if touches {
                relations.insert(field.clone());
            }
        }
        per_pair.push(diffs);
        rel_sets.push(relations);
        atom_sets.push(atoms);
    }
    let intersect = |sets: &[BTreeSet<String>]| -> BTreeSet<String> {
        sets.iter()
            .skip(1)
            .fold(sets[0].clone(), |acc, s| acc.intersection(s).cloned().collect())
    };
    let union = |sets: &[BTreeSet<String>]| -> BTreeSet<String> {
        sets.iter().flat_map(|s| s.iter().cloned()).collect()
    };
    let mut relations = intersect(&rel_sets);
    let mut atoms = intersect(&atom_sets);
    let mut union_fallback = false;
    if relations.is_empty() || atoms.is_empty() {
        relations = union(&rel_sets);
        atoms = union(&atom_sets);
        union_fallback = true;
    }
    Diff { per_pair, relations, atoms, union_fallback }
}

/// Fact conjuncts referencing every suspicious relation; when none do, relax
/// to conjuncts referencing any of them. Declarations and the assertion are
/// never candidates.
pub fn get_susp_exprs<'a>(m: &'a Model, d: &Diff) -> Vec<&'a Conjunct> {
    let all: Vec<&Conjunct> = m
        .facts
        .iter()
        .filter(|c| {
            let refs = rel_names(&c.formula);
            d.relations.iter().all(|r| refs.contains(r))
        })
        .collect();
    if !all.is_empty() {
        return all;
    }
    m.facts
        .iter()
        .filter(|c| {
            let refs = rel_names(&c.formula);
            d.relations.iter().any(|r| refs.contains(r))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ScoredNode {
    pub text: String,
    pub span: SourceSpan,
    pub boolean: Score,
    pub relational: Score,
    pub total: Score,
    pub operator_hint: Option<String>,
    pub is_leaf: bool,
}

/// All type-compatible assignments of suspicious atoms to the conjunct's
/// stripped quantifier variables (Cartesian, repetition allowed). A
/// quantifier-free conjunct gets the single empty binding.
fn bindings_for(c: &Conjunct, d: &Diff, model: &Model, sample: &Instance) -> Vec<Binding> {
    let (vars, _) = stripped_quantifiers(c);
    if vars.is_empty() {
        return vec![Binding::new()];
    }
    let atoms: Vec<(String, String)> = d
        .atoms
        .iter()
        .filter_map(|a| sample.sig_of_atom(a).map(|s| (a.clone(), s.to_string())))
        .collect();
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for _ in 0..vars.len() {
        combos = combos
            .iter()
            .flat_map(|prefix| {
                atoms.iter().map(move |a| {
                    let mut c = prefix.clone();
                    c.push(a.clone());
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .filter_map(|combo| guarded_instantiate(c, &combo, model).map(|(b, _, _)| b))
        .collect()
}

struct ScoreCtx<'a> {
    pairs: &'a [Pair],
    bindings: &'a [Binding],
    d_atoms: &'a BTreeSet<String>,
    /// span used for the conjunct's root node, so the whole conjunct (with
    /// its quantifier prefix) wins position tie-breaks over its sub-nodes
    root_span: SourceSpan,
    out: Vec<ScoredNode>,
}

fn side_score(inv: &BTreeSet<String>, d: &BTreeSet<String>) -> Score {
    if d.is_subset(inv) {
        Ratio::new(d.len() as i64, inv.len() as i64)
    } else {
        Ratio::from_integer(0)
    }
}

/// Averaging order: bindings, then the two instance sides, then pairs.
fn relational_mean(
    pairs: &[Pair],
    bindings: &[Binding],
    d_atoms: &BTreeSet<String>,
    mut involved: impl FnMut(&Instance, &Binding) -> BTreeSet<String>,
) -> Score {
    if bindings.is_empty() || pairs.is_empty() {
        return Ratio::from_integer(0);
    }
    let mut total = Ratio::from_integer(0);
    for pair in pairs {
        let mut per_pair = Ratio::from_integer(0);
        for b in bindings {
            let cex_side = side_score(&involved(&pair.cex, b), d_atoms);
            let sat_side = side_score(&involved(&pair.sat, b), d_atoms);
            per_pair += (cex_side + sat_side) / Ratio::from_integer(2);
        }
        total += per_pair / Ratio::from_integer(bindings.len() as i64);
    }
    total / Ratio::from_integer(pairs.len() as i64)
}

/// Score a formula node and its sub-nodes. Returns (total, boolean diff
/// count summed over this node's boolean subtree, pairs and bindings).
/// Nested quantifiers are treated as atomic: their inner structure is not
/// scored separately because its variables are not bound by the outer
/// instantiation.
fn score_formula(ctx: &mut ScoreCtx, f: &Formula, depth: usize) -> (Score, i64) {
    let connective_children: Option<(&Formula, &Formula, &'static str)> = match &f.kind {
        FormulaKind::And(l, r) => Some((l, r, "&&")),
        FormulaKind::Or(l, r) => Some((l, r, "||")),
        FormulaKind::Implies(l, r) => Some((l, r, "=>")),
        FormulaKind::Iff(l, r) => Some((l, r, "<=>")),
        _ => None,
    };
    let child_results: Vec<(Score, i64, &'static str)> = match (&f.kind, connective_children) {
        (_, Some((l, r, op))) => {
            let lr = score_formula(ctx, l, depth + 1);
            let rr = score_formula(ctx, r, depth + 1);
            vec![(lr.0, lr.1, op), (rr.0, rr.1, op)]
        }
        (FormulaKind::Not(x), _) => {
            let xr = score_formula(ctx, x, depth + 1);
            vec![(xr.0, xr.1, "!")]
        }
        _ => Vec::new(),
    };

    // this node's own evaluation differences
    let mut own_diffs = 0i64;
    for pair in ctx.pairs {
        for b in ctx.bindings {
            if eval_formula(f, &pair.cex, b) != eval_formula(f, &pair.sat, b) {
                own_diffs += 1;
            }
        }
    }
    let subtree_diffs = own_diffs + child_results.iter().map(|(_, d, _)| d).sum::<i64>();
    let boolean = if ctx.pairs.is_empty() {
        Ratio::from_integer(0)
    } else {
        Ratio::new(subtree_diffs, ctx.pairs.len() as i64)
    };
    let relational = relational_mean(ctx.pairs, ctx.bindings, ctx.d_atoms, |inst, b| {
        involved_atoms(f, inst, b)
    });
    let total = boolean + relational;

    let operator_hint = match child_results.as_slice() {
        [(lt, _, op), (rt, _, _)] if lt != rt => Some(op.to_string()),
        _ => None,
    };

    ctx.out.push(ScoredNode {
        text: f.to_string(),
        span: if depth == 0 { ctx.root_span.clone() } else { f.span.clone() },
        boolean,
        relational,
        total,
        operator_hint,
        is_leaf: false,
    });

    // relational leaves directly under comparisons, tests and quantifier
    // bounds of this node
    match &f.kind {
        FormulaKind::Subset(l, r)
        | FormulaKind::NotSubset(l, r)
        | FormulaKind::Equal(l, r)
        | FormulaKind::NotEqual(l, r) => {
            score_leaf(ctx, l);
            score_leaf(ctx, r);
        }
        FormulaKind::MultTest(_, e) => score_leaf(ctx, e),
        FormulaKind::Quant(_, _, bound, _) => score_leaf(ctx, bound),
        _ => {}
    }

    (total, subtree_diffs)
}

fn score_leaf(ctx: &mut ScoreCtx, e: &crate::ast::RelExpr) {
    let relational = relational_mean(ctx.pairs, ctx.bindings, ctx.d_atoms, |inst, b| {
        involved_atoms_rel(e, inst, b)
    });
    ctx.out.push(ScoredNode {
        text: e.to_string(),
        span: e.span.clone(),
        boolean: Ratio::from_integer(0),
        relational,
        total: relational,
        operator_hint: None,
        is_leaf: true,
    });
}

/// Score every candidate conjunct's stripped body, boolean sub-nodes and
/// relational leaves.
pub fn compute_scores(
    model: &Model,
    exprs: &[&Conjunct],
    d: &Diff,
    pairs: &[Pair],
) -> Vec<ScoredNode> {
    let sample = &pairs[0].cex;
    let mut out = Vec::new();
    for c in exprs {
        let bindings = bindings_for(c, d, model, sample);
        let (_, body) = stripped_quantifiers(c);
        let mut ctx = ScoreCtx {
            pairs,
            bindings: &bindings,
            d_atoms: &d.atoms,
            root_span: c.span.clone(),
            out: Vec::new(),
        };
        score_formula(&mut ctx, body, 0);
        out.extend(ctx.out);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Localized,
    UnsatConflicts,
    NoCounterexample,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Localized => "localized",
            Status::UnsatConflicts => "unsat-conflicts",
            Status::NoCounterexample => "no-counterexample",
        }
    }
}

#[derive(Debug)]
pub struct RankedReport {
    pub status: Status,
    pub pairs_used: usize,
    pub diff: Diff,
    pub nodes: Vec<ScoredNode>,
}

/// Sort descending by total; ties broken by earlier source position.
pub fn rank(mut nodes: Vec<ScoredNode>, diff: Diff, pairs_used: usize) -> RankedReport {
    nodes.sort_by(|a, b| {
        b.total
            .cmp(&a.total)
            .then_with(|| (a.span.start_line, a.span.start_col).cmp(&(b.span.start_line, b.span.start_col)))
            .then_with(|| a.text.cmp(&b.text))
    });
    RankedReport { status: Status::Localized, pairs_used, diff, nodes }
}

#[derive(Debug)]
pub enum LocalizeError {
    /// The relaxed model is still unsatisfiable with the property; the
    /// residual core (fact conjunct indices) explains why.
    ResidualUnsat(Vec<usize>),
}

impl std::fmt::Display for LocalizeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LocalizeError::ResidualUnsat(core) => write!(
                f,
                "model remains unsatisfiable with the property after removing the core (residual conjuncts {core:?})"
            ),
        }
    }
}

/// Unsat fallback: remove the core conjuncts, find a nearest satisfying
/// instance of the relaxed model, and flag the core conjuncts that evaluate
/// to false on it under suspicious-atom instantiations.
pub fn unsat_localize(
    m: &Model,
    p: &Formula,
    core_conjuncts: &[usize],
    cex: &Instance,
    scope: u32,
    seed: Option<u64>,
) -> Result<RankedReport, LocalizeError> {
    let gp = ground_filtered(m, |i| !core_conjuncts.contains(&i), Some(p), false, scope);
    let sat = match solve_pmax(&gp, cex, seed) {
        PmaxResult::Optimal { instance, .. } => instance,
        PmaxResult::HardUnsat { core_groups } => {
            return Err(LocalizeError::ResidualUnsat(core_fact_conjuncts(&gp, &core_groups)));
        }
    };
    let pair = Pair { cex: cex.clone(), sat: sat.clone(), distance: 0 };
    let diff = compare(m, std::slice::from_ref(&pair));
    let mut nodes = Vec::new();
    for &i in core_conjuncts {
        let c = &m.facts[i];
        if conjunct_conflicts(m, c, &diff, &sat) {
            nodes.push(ScoredNode {
                text: c.formula.to_string(),
                span: c.span.clone(),
                boolean: Ratio::from_integer(0),
                relational: Ratio::from_integer(1),
                total: Ratio::from_integer(1),
                operator_hint: None,
                is_leaf: false,
            });
        }
    }
    nodes.sort_by(|a, b| (a.span.start_line, a.span.start_col).cmp(&(b.span.start_line, b.span.start_col)));
    Ok(RankedReport { status: Status::UnsatConflicts, pairs_used: 1, diff, nodes })
}

/// A core conjunct conflicts when some suspicious-atom instantiation makes
/// it false on the relaxed model's satisfying instance. Universal guards
/// that fail make the instantiation vacuously true. Conjuncts whose outer
/// quantifiers are not all universal are evaluated whole.
fn conjunct_conflicts(model: &Model, c: &Conjunct, diff: &Diff, sat: &Instance) -> bool {
    let (vars, _) = stripped_quantifiers(c);
    if vars.is_empty() || vars.iter().any(|v| v.kind != QuantKind::All) {
        return !eval_formula(&c.formula, sat, &Binding::new());
    }
    let atoms: Vec<(String, String)> = diff
        .atoms
        .iter()
        .filter_map(|a| sat.sig_of_atom(a).map(|s| (a.clone(), s.to_string())))
        .collect();
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for _ in 0..vars.len() {
        combos = combos
            .iter()
            .flat_map(|prefix| {
                atoms.iter().map(move |a| {
                    let mut combo = prefix.clone();
                    combo.push(a.clone());
                    combo
                })
            })
            .collect();
    }
    for combo in combos {
        let Some((binding, body, vars)) = guarded_instantiate(c, &combo, model) else {
            continue;
        };
        // all guards must hold for the instantiation to be non-vacuous
        let guards_hold = vars.iter().all(|v| {
            let pool = eval_rel(v.bound, sat, &binding);
            pool.tuples.contains(&vec![binding[&v.name].clone()])
        });
        if guards_hold && !eval_formula(body, sat, &binding) {
            return true;
        }
    }
    false
}

/// End-to-end localization of a checked assertion.
pub fn localize(
    m: &Model,
    p: &Formula,
    scope: u32,
    max_pairs: usize,
    seed: Option<u64>,
) -> Result<RankedReport, LocalizeError> {
    match generate_pairs(m, p, scope, max_pairs, seed) {
        PairOutcome::NoCex => Ok(RankedReport {
            status: Status::NoCounterexample,
            pairs_used: 0,
            diff: Diff::default(),
            nodes: Vec::new(),
        }),
        PairOutcome::Unsat { core_conjuncts, cex } => {
            unsat_localize(m, p, &core_conjuncts, &cex, scope, seed)
        }
        PairOutcome::Pairs(pairs) => Ok(localize_pairs(m, &pairs)),
    }
}

/// Localization from already-built pairs (also the fixture path).
pub fn localize_pairs(m: &Model, pairs: &[Pair]) -> RankedReport {
    let diff = compare(m, pairs);
    let exprs = get_susp_exprs(m, &diff);
    let nodes = compute_scores(m, &exprs, &diff, pairs);
    rank(nodes, diff, pairs.len())
}

/// Convenience wrapper used by tests and the CLI fixture mode.
pub fn localize_fixture(m: &Model, cex: Instance, sat: Instance) -> RankedReport {
    let distance = crate::enumerate::hamming_distance(&cex, &sat);
    localize_pairs(m, &[Pair { cex, sat, distance }])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_model;
    use crate::testutil::{fsm_cex, fsm_model, fsm_sat};

    fn fixture_report() -> RankedReport {
        let m = fsm_model();
        let cex = fsm_cex(&m);
        let sat = fsm_sat(&m);
        localize_fixture(&m, cex, sat)
    }

    fn node<'a>(r: &'a RankedReport, text: &str) -> &'a ScoredNode {
        r.nodes
            .iter()
            .find(|n| n.text == text)
            .unwrap_or_else(|| panic!("no node `{text}` in {:?}", r.nodes.iter().map(|n| &n.text).collect::<Vec<_>>()))
    }

    #[test]
    fn fsm_diff_relations_and_atoms() {
        let m = fsm_model();
        let pair = Pair { cex: fsm_cex(&m), sat: fsm_sat(&m), distance: 1 };
        let d = compare(&m, &[pair]);
        assert_eq!(
            d.relations,
            ["transition", "stop"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(
            d.atoms,
            ["State1", "State3"].iter().map(|s| s.to_string()).collect()
        );
        assert!(!d.union_fallback);
    }

    #[test]
    fn fsm_susp_exprs_are_lines_19_and_25() {
        let m = fsm_model();
        let pair = Pair { cex: fsm_cex(&m), sat: fsm_sat(&m), distance: 1 };
        let d = compare(&m, &[pair]);
        let exprs = get_susp_exprs(&m, &d);
        let lines: Vec<u32> = exprs.iter().map(|c| c.span.start_line).collect();
        assert_eq!(lines, vec![19, 25]);
    }

    /// The published scores for the four boolean nodes, as exact rationals.
    #[test]
    fn fsm_fixture_scores() {
        let r = fixture_report();
        let d = node(&r, "s.transition = none => s in FSM.stop");
        assert_eq!(d.total, Ratio::new(19, 12));
        assert_eq!(d.boolean, Ratio::from_integer(1));
        assert_eq!(d.relational, Ratio::new(7, 12));
        assert_eq!(d.operator_hint.as_deref(), Some("=>"));

        let b = node(&r, "s.transition = none");
        assert_eq!(b.total, Ratio::new(5, 4));
        assert_eq!(b.boolean, Ratio::from_integer(1));
        assert_eq!(b.relational, Ratio::new(1, 4));

        let a = node(&r, "FSM.stop in s.*transition");
        assert_eq!(a.total, Ratio::new(1, 2));
        assert_eq!(a.boolean, Ratio::from_integer(0));
        assert_eq!(a.relational, Ratio::new(1, 2));

        let c = node(&r, "s in FSM.stop");
        assert_eq!(c.total, Ratio::new(1, 2));
        assert_eq!(c.boolean, Ratio::from_integer(0));
        assert_eq!(c.relational, Ratio::new(1, 2));
    }

    #[test]
    fn fsm_fixture_leaf_scores() {
        let r = fixture_report();
        let st = node(&r, "s.transition");
        assert!(st.is_leaf);
        assert_eq!(st.total, Ratio::new(1, 4));
        let rt = node(&r, "s.*transition");
        assert_eq!(rt.total, Ratio::new(1, 2));
    }

    #[test]
    fn fsm_fixture_ranking_order() {
        let r = fixture_report();
        assert_eq!(r.status, Status::Localized);
        assert_eq!(r.nodes[0].text, "s.transition = none => s in FSM.stop");
        assert_eq!(r.nodes[1].text, "s.transition = none");
        // descending totals throughout
        for w in r.nodes.windows(2) {
            assert!(w[0].total >= w[1].total);
        }
        // ties broken by source position
        for w in r.nodes.windows(2) {
            if w[0].total == w[1].total {
                assert!(
                    (w[0].span.start_line, w[0].span.start_col)
                        <= (w[1].span.start_line, w[1].span.start_col)
                );
            }
        }
    }

    #[test]
    fn end_to_end_ranks_the_bug_first() {
        let m = fsm_model();
        let (_, p) = &m.asserts[0];
        let report = localize(&m, p, 5, DEFAULT_MAX_PAIRS, None).unwrap();
        assert_eq!(report.status, Status::Localized);
        assert!(report.pairs_used >= 1);
        assert_eq!(report.nodes[0].text, "s.transition = none => s in FSM.stop");
        assert_eq!(report.nodes[0].span.start_line, 19);
        assert_eq!(report.nodes[0].operator_hint.as_deref(), Some("=>"));
    }

    #[test]
    fn corrected_model_has_no_counterexample() {
        let src = crate::testutil::FSM_SRC.replace(
            "all s: State | s.transition = none => s in FSM.stop",
            "all s: State | s.transition = none <=> s in FSM.stop",
        );
        let m = load_model("fsm.rml", &src).unwrap();
        let (_, p) = &m.asserts[0];
        let report = localize(&m, p, 3, DEFAULT_MAX_PAIRS, None).unwrap();
        assert_eq!(report.status, Status::NoCounterexample);
        assert!(report.nodes.is_empty());
    }

    /// The unsat path: replacing line 17 so no satisfying instance exists
    /// makes the modified conjunct the sole conflict.
    #[test]
    fn unsat_path_flags_the_modified_conjunct() {
        let src = crate::testutil::FSM_SRC.replace(
            "all s: State | FSM.start !in s.transition",
            "all s: State | s.transition !in FSM.start",
        );
        let m = load_model("fsm.rml", &src).unwrap();
        let (_, p) = &m.asserts[0];
        let report = localize(&m, p, 5, DEFAULT_MAX_PAIRS, None).unwrap();
        assert_eq!(report.status, Status::UnsatConflicts);
        assert_eq!(report.nodes.len(), 1);
        assert_eq!(report.nodes[0].text, "all s: State | s.transition !in FSM.start");
        assert_eq!(report.nodes[0].total, Ratio::from_integer(1));
    }

    #[test]
    fn unsat_core_conjunct_flagged_directly() {
        // core of one conjunct directly contradicting the property
        let src = "sig A {}\nfact F {\n  no A\n}\npred P {\n  some A\n}\nrun P for 2\n";
        let m = load_model("t", src).unwrap();
        let p = &m.preds[0].1[0].formula;
        match generate_pairs(&m, p, 2, 5, None) {
            PairOutcome::Unsat { core_conjuncts, cex } => {
                assert_eq!(core_conjuncts, vec![0]);
                let report = unsat_localize(&m, p, &core_conjuncts, &cex, 2, None).unwrap();
                assert_eq!(report.status, Status::UnsatConflicts);
                assert_eq!(report.nodes.len(), 1);
                assert_eq!(report.nodes[0].text, "no A");
            }
            other => panic!("expected the unsat signal, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_reports() {
        let m = fsm_model();
        let (_, p) = &m.asserts[0];
        let r1 = localize(&m, p, 4, 3, None).unwrap();
        let r2 = localize(&m, p, 4, 3, None).unwrap();
        let fmt = |r: &RankedReport| {
            r.nodes
                .iter()
                .map(|n| format!("{} {} {}", n.text, n.total, n.boolean))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(fmt(&r1), fmt(&r2));
    }
}
