//! Atom universes and relation tuple pools for a model at a given scope.

use crate::ast::{Model, Multiplicity};
use crate::instance::Atom;

/// The universe plus per-relation tuple pools. Signatures with `one`
/// multiplicity get a pool of exactly one atom whose membership is a
/// compile-time constant rather than a solver variable.
#[derive(Clone, Debug)]
pub struct Bounds {
    pub universe: Vec<Atom>,
    /// (sig name, pool of atoms, fixed) in declaration order; `fixed` marks
    /// ONE sigs whose membership is constant true.
    pub sig_pools: Vec<(String, Vec<Atom>, bool)>,
    /// (field name, owner pool x target pool) in declaration order.
    pub field_pools: Vec<(String, Vec<(Atom, Atom)>)>,
}

impl Bounds {
    pub fn sig_pool(&self, name: &str) -> &[Atom] {
        self.sig_pools
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, pool, _)| pool.as_slice())
            .unwrap_or(&[])
    }

    /// Count of boolean variables needed for relation memberships
    /// (fixed ONE-sig memberships excluded).
    pub fn relation_var_count(&self) -> usize {
        let sig_vars: usize = self
            .sig_pools
            .iter()
            .filter(|(_, _, fixed)| !fixed)
            .map(|(_, pool, _)| pool.len())
            .sum();
        let field_vars: usize = self.field_pools.iter().map(|(_, pool)| pool.len()).sum();
        sig_vars + field_vars
    }
}

/// Each non-ONE sig gets `scope` atoms named `SigName0..`; ONE sigs get one.
/// Field pools are the product of the owner and target pools.
pub fn build_bounds(model: &Model, scope: u32) -> Bounds {
    assert!(scope >= 1, "scope must be at least 1");
    let mut universe = Vec::new();
    let mut sig_pools = Vec::new();
    for sig in &model.sigs {
        let fixed = sig.mult == Multiplicity::One;
        let n = if fixed { 1 } else { scope };
        let pool: Vec<Atom> = (0..n).map(|i| Atom::new(&sig.name, i)).collect();
        universe.extend(pool.iter().cloned());
        sig_pools.push((sig.name.clone(), pool, fixed));
    }
    let mut field_pools = Vec::new();
    for field in model.fields() {
        let owner: Vec<Atom> = sig_pools
            .iter()
            .find(|(n, _, _)| n == &field.owner)
            .map(|(_, p, _)| p.clone())
            .unwrap_or_default();
        let target: Vec<Atom> = sig_pools
            .iter()
            .find(|(n, _, _)| n == &field.target)
            .map(|(_, p, _)| p.clone())
            .unwrap_or_default();
        let mut pool = Vec::new();
        for a in &owner {
            for b in &target {
                pool.push((a.clone(), b.clone()));
            }
        }
        field_pools.push((field.name.clone(), pool));
    }
    Bounds { universe, sig_pools, field_pools }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_model;

    const FSM_SRC: &str = include_str!("../tests/fixtures/fsm.rml");

    #[test]
    fn fsm_scope_5() {
        let m = load_model("fsm.rml", FSM_SRC).unwrap();
        let b = build_bounds(&m, 5);
        assert_eq!(b.universe.len(), 6); // FSM0 plus State0..State4
        let transition = b.field_pools.iter().find(|(n, _)| n == "transition").unwrap();
        assert_eq!(transition.1.len(), 25);
        let start = b.field_pools.iter().find(|(n, _)| n == "start").unwrap();
        assert_eq!(start.1.len(), 5);
        // 5 State membership vars + 5 + 5 + 25 field vars; FSM is fixed
        assert_eq!(b.relation_var_count(), 40);
    }

    #[test]
    fn fsm_scope_1() {
        let m = load_model("fsm.rml", FSM_SRC).unwrap();
        let b = build_bounds(&m, 1);
        assert_eq!(b.sig_pool("State").len(), 1);
        let transition = b.field_pools.iter().find(|(n, _)| n == "transition").unwrap();
        assert_eq!(transition.1.len(), 1);
    }

    #[test]
    fn disjoint_pools() {
        let m = load_model("t", "sig A {}\nsig B {}\n").unwrap();
        let b = build_bounds(&m, 3);
        assert_eq!(b.sig_pool("A").len(), 3);
        assert_eq!(b.sig_pool("B").len(), 3);
        let names: std::collections::BTreeSet<_> =
            b.universe.iter().map(|a| a.name.clone()).collect();
        assert_eq!(names.len(), 6);
    }
}
