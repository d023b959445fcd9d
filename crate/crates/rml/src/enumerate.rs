//! Exhaustive instance enumeration within bounds. This is the independent
//! oracle the solver pipeline is tested against; it never goes through CNF.

use crate::ast::{Formula, Model};
use crate::bounds::build_bounds;
use crate::eval::{eval_formula, Binding};
use crate::instance::{Atom, Instance};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Relation-variable budget above which enumeration refuses to run.
pub const ENUMERATION_BUDGET: usize = 24;

#[derive(Debug, Error)]
pub enum EnumerateError {
    #[error("enumeration budget exceeded: {0} relation variables (limit {ENUMERATION_BUDGET})")]
    BudgetExceeded(usize),
}

/// Enumerate every instance within bounds that satisfies the declaration
/// multiplicities, every fact conjunct, and `filter` when given.
///
/// Order is deterministic: relations are filled in declaration order (sigs
/// first, then fields) and each relation's contents are enumerated in
/// ascending bitmask order over its pool.
pub fn enumerate_instances(
    model: &Model,
    scope: u32,
    filter: Option<&Formula>,
) -> Result<Vec<Instance>, EnumerateError> {
    let bounds = build_bounds(model, scope);
    let var_count = bounds.relation_var_count();
    if var_count > ENUMERATION_BUDGET {
        return Err(EnumerateError::BudgetExceeded(var_count));
    }

    let mut out = Vec::new();
    let universe = bounds.universe.clone();
    let mut sig_contents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    enumerate_sigs(model, &bounds, 0, &universe, &mut sig_contents, &mut out, filter);
    Ok(out)
}

fn subsets(pool_len: usize) -> impl Iterator<Item = u32> {
    0..(1u32 << pool_len)
}

fn enumerate_sigs(
    model: &Model,
    bounds: &crate::bounds::Bounds,
    idx: usize,
    universe: &[Atom],
    sig_contents: &mut BTreeMap<String, BTreeSet<String>>,
    out: &mut Vec<Instance>,
    filter: Option<&Formula>,
) {
    if idx == bounds.sig_pools.len() {
        let mut field_contents: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        enumerate_fields(model, bounds, 0, universe, sig_contents, &mut field_contents, out, filter);
        return;
    }
    let (name, pool, fixed) = &bounds.sig_pools[idx];
    let sig = model.sig(name).expect("sig in bounds");
    if *fixed {
        let contents: BTreeSet<String> = pool.iter().map(|a| a.name.clone()).collect();
        sig_contents.insert(name.clone(), contents);
        enumerate_sigs(model, bounds, idx + 1, universe, sig_contents, out, filter);
        sig_contents.remove(name);
        return;
    }
    for mask in subsets(pool.len()) {
        let contents: BTreeSet<String> = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| a.name.clone())
            .collect();
        let n = contents.len();
        let ok = match sig.mult {
            crate::ast::Multiplicity::One => n == 1,
            crate::ast::Multiplicity::Lone => n <= 1,
            crate::ast::Multiplicity::Some => n >= 1,
            crate::ast::Multiplicity::Set => true,
        };
        if !ok {
            continue;
        }
        sig_contents.insert(name.clone(), contents);
        enumerate_sigs(model, bounds, idx + 1, universe, sig_contents, out, filter);
        sig_contents.remove(name);
    }
}

#[allow(clippy::too_many_arguments)]
fn enumerate_fields(
    model: &Model,
    bounds: &crate::bounds::Bounds,
    idx: usize,
    universe: &[Atom],
    sig_contents: &BTreeMap<String, BTreeSet<String>>,
    field_contents: &mut BTreeMap<String, BTreeSet<(String, String)>>,
    out: &mut Vec<Instance>,
    filter: Option<&Formula>,
) {
    if idx == bounds.field_pools.len() {
        let inst = Instance {
            universe: universe.to_vec(),
            sig_contents: sig_contents.clone(),
            field_contents: field_contents.clone(),
        };
        let b = Binding::new();
        if model.facts.iter().all(|c| eval_formula(&c.formula, &inst, &b))
            && filter.map_or(true, |f| eval_formula(f, &inst, &b))
        {
            out.push(inst);
        }
        return;
    }
    let (name, pool) = &bounds.field_pools[idx];
    let field = model.field(name).expect("field in bounds");
    // Tuples with an absent column atom are always false; enumerate only the
    // live part of the pool.
    let live: Vec<&(Atom, Atom)> = pool
        .iter()
        .filter(|(a, b)| {
            sig_contents.get(&field.owner).is_some_and(|s| s.contains(&a.name))
                && sig_contents.get(&field.target).is_some_and(|s| s.contains(&b.name))
        })
        .collect();
    for mask in subsets(live.len()) {
        let contents: BTreeSet<(String, String)> = live
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, (a, b))| (a.name.clone(), b.name.clone()))
            .collect();
        if field.mult != crate::ast::Multiplicity::Set {
            let owners = sig_contents.get(&field.owner).cloned().unwrap_or_default();
            let ok = owners.iter().all(|a| {
                let n = contents.iter().filter(|(x, _)| x == a).count();
                match field.mult {
                    crate::ast::Multiplicity::One => n == 1,
                    crate::ast::Multiplicity::Lone => n <= 1,
                    crate::ast::Multiplicity::Some => n >= 1,
                    crate::ast::Multiplicity::Set => true,
                }
            });
            if !ok {
                continue;
            }
        }
        field_contents.insert(name.clone(), contents);
        enumerate_fields(model, bounds, idx + 1, universe, sig_contents, field_contents, out, filter);
        field_contents.remove(name);
    }
}

/// Hamming distance between two instances over the relation variables of a
/// shared bounds: the total size of the per-relation symmetric differences.
pub fn hamming_distance(a: &Instance, b: &Instance) -> usize {
    let mut d = 0;
    for (name, ca) in &a.sig_contents {
        let cb = b.sig_contents.get(name).cloned().unwrap_or_default();
        d += ca.symmetric_difference(&cb).count();
    }
    for (name, ca) in &a.field_contents {
        let cb = b.field_contents.get(name).cloned().unwrap_or_default();
        d += ca.symmetric_difference(&cb).count();
    }
    d
}
