//! Solving a ground problem: clause groups are loaded behind selector
//! variables so an unsatisfiable outcome comes back as a set of groups
//! rather than a bare "no".

use crate::ground::{GroundProblem, GroupKind};
use crate::instance::Instance;
use crate::sat::{minimize_core, SolveResult, Solver};

pub enum GroundResult {
    Sat(Instance),
    /// Group ids whose constraints are jointly unsatisfiable.
    Unsat(Vec<usize>),
}

pub struct GroundSolver<'a> {
    pub gp: &'a GroundProblem,
    solver: Solver,
    /// selector literal per group, parallel to `gp.groups`.
    selectors: Vec<i32>,
}

impl<'a> GroundSolver<'a> {
    pub fn new(gp: &'a GroundProblem, seed: Option<u64>) -> GroundSolver<'a> {
        let mut solver = Solver::new(gp.num_vars);
        if let Some(seed) = seed {
            solver.set_seed(seed);
        }
        let mut selectors = Vec::with_capacity(gp.groups.len());
        for g in &gp.groups {
            let sel = solver.new_var() as i32;
            selectors.push(sel);
            for clause in &g.clauses {
                let mut c = clause.clone();
                c.push(-sel);
                solver.add_clause(&c);
            }
        }
        GroundSolver { gp, solver, selectors }
    }

    pub fn solve(&mut self) -> GroundResult {
        match self.solver.solve(&self.selectors) {
            SolveResult::Sat(model) => GroundResult::Sat(self.gp.decode(&model)),
            SolveResult::Unsat(core) => GroundResult::Unsat(self.groups_of(&core)),
        }
    }

    fn groups_of(&self, core: &[i32]) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .selectors
            .iter()
            .enumerate()
            .filter(|(_, sel)| core.contains(sel))
            .map(|(i, _)| i)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Permanently exclude an instance's relation-variable assignment.
    pub fn block(&mut self, inst: &Instance) {
        let assignment = self.gp.encode(inst);
        let clause: Vec<i32> = (1..=self.gp.var_map.len() as i32)
            .map(|v| if assignment[v as usize] { -v } else { v })
            .collect();
        self.solver.add_clause(&clause);
    }

    /// Deletion-minimize a group core: a group stays only if the rest is
    /// satisfiable without it.
    pub fn minimize_groups(&mut self, groups: &[usize]) -> Vec<usize> {
        let lits: Vec<i32> = groups.iter().map(|&g| self.selectors[g]).collect();
        let min = minimize_core(&mut self.solver, &lits);
        self.groups_of(&min)
    }
}

/// Find a counterexample: an instance satisfying declarations and facts but
/// violating the property. `property` must have been grounded with
/// `negate_property = true`.
pub fn find_counterexample(gp: &GroundProblem, seed: Option<u64>) -> GroundResult {
    GroundSolver::new(gp, seed).solve()
}

/// Ids of the fact-conjunct groups in a core, mapped to conjunct indices.
pub fn core_fact_conjuncts(gp: &GroundProblem, groups: &[usize]) -> Vec<usize> {
    groups
        .iter()
        .filter_map(|&g| match gp.groups[g].kind {
            GroupKind::FactConjunct(i) => Some(i),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_instances;
    use crate::eval::{eval_formula, Binding};
    use crate::frontend::load_model;
    use crate::ground::ground;
    use crate::testutil::fsm_model;

    /// The solver's solution set over blocking-clause iteration equals the
    /// enumeration oracle's, for models small enough to brute force.
    #[test]
    fn iterated_solving_matches_oracle() {
        for (src, scope) in [
            ("one sig A {\n  f: lone B\n}\nsome sig B {}\nfact F {\n  some A.f\n}\n", 2),
            ("sig N {\n  next: lone N\n}\nfact F {\n  all n: N | n !in n.^next\n}\n", 2),
            ("sig A {\n  r: A\n}\nfact F {\n  no r & ~r\n  some A => some r\n}\n", 2),
        ] {
            let m = load_model("t", src).unwrap();
            let gp = ground(&m, None, false, scope);
            let mut gs = GroundSolver::new(&gp, None);
            let mut found = std::collections::BTreeSet::new();
            loop {
                match gs.solve() {
                    GroundResult::Sat(inst) => {
                        gs.block(&inst);
                        assert!(found.insert(inst.to_string()), "duplicate instance");
                    }
                    GroundResult::Unsat(_) => break,
                }
            }
            let oracle: std::collections::BTreeSet<String> =
                enumerate_instances(&m, scope, None)
                    .unwrap()
                    .iter()
                    .map(|i| i.to_string())
                    .collect();
            assert_eq!(found, oracle, "model: {src}");
        }
    }

    #[test]
    fn fsm_counterexample_found_and_valid() {
        let m = fsm_model();
        let (_, p) = &m.asserts[0];
        let gp = ground(&m, Some(p), true, 5);
        match find_counterexample(&gp, None) {
            GroundResult::Sat(inst) => {
                inst.check_wellformed(&m).unwrap();
                let b = Binding::new();
                for c in &m.facts {
                    assert!(eval_formula(&c.formula, &inst, &b), "fact holds on cex");
                }
                assert!(!eval_formula(p, &inst, &b), "property violated on cex");
            }
            GroundResult::Unsat(_) => panic!("the buggy model must have a counterexample"),
        }
    }

    #[test]
    fn unsat_core_names_conflicting_conjuncts() {
        // start must be empty and nonempty at once
        let src = "one sig A {\n  f: B\n}\nsig B {}\nfact F {\n  some A.f\n  no A.f\n}\n";
        let m = load_model("t", src).unwrap();
        let gp = ground(&m, None, false, 2);
        let mut gs = GroundSolver::new(&gp, None);
        match gs.solve() {
            GroundResult::Unsat(groups) => {
                let min = gs.minimize_groups(&groups);
                let facts = core_fact_conjuncts(&gp, &min);
                assert_eq!(facts, vec![0, 1], "exactly the two clashing conjuncts");
            }
            GroundResult::Sat(_) => panic!("expected unsat"),
        }
    }

    #[test]
    fn seeds_change_search_not_soundness() {
        let m = fsm_model();
        let (_, p) = &m.asserts[0];
        let gp = ground(&m, Some(p), true, 4);
        let b = Binding::new();
        for seed in 0..5u64 {
            match find_counterexample(&gp, Some(seed)) {
                GroundResult::Sat(inst) => {
                    for c in &m.facts {
                        assert!(eval_formula(&c.formula, &inst, &b));
                    }
                    assert!(!eval_formula(p, &inst, &b));
                }
                GroundResult::Unsat(_) => panic!("seed {seed}: expected a counterexample"),
            }
        }
    }
}
