//! Partial MaxSAT by linear search: hard clauses are the ground problem,
//! soft units pin each relation variable to its value in a reference
//! instance, and we ascend k = 0, 1, ... until the hard clauses are
//! satisfiable with at most k soft violations. The first satisfiable k is
//! the minimum Hamming distance from the reference instance.

use crate::ground::GroundProblem;
use crate::instance::Instance;
use crate::solve::{GroundResult, GroundSolver};
use crate::sat::{SolveResult, Solver};

pub enum PmaxResult {
    /// A satisfying instance at minimum distance from the reference.
    Optimal { instance: Instance, distance: usize },
    /// The hard clauses alone are unsatisfiable; the minimized set of group
    /// ids explains why.
    HardUnsat { core_groups: Vec<usize> },
}

/// Soft unit literals: one per relation variable, with the polarity the
/// reference instance assigns it.
pub fn soft_from_instance(gp: &GroundProblem, reference: &Instance) -> Vec<i32> {
    let assignment = gp.encode(reference);
    (1..=gp.var_map.len() as i32)
        .map(|v| if assignment[v as usize] { v } else { -v })
        .collect()
}

/// Sinz sequential-counter encoding of "at most k of `lits` are true".
/// Fresh counter variables are allocated from `solver`.
pub fn encode_at_most_k(solver: &mut Solver, lits: &[i32], k: usize) {
    let n = lits.len();
    if k >= n {
        return;
    }
    if k == 0 {
        for &l in lits {
            solver.add_clause(&[-l]);
        }
        return;
    }
    // s[i][j] (i in 0..n-1, j in 0..k): "at least j+1 of the first i+1 true"
    let mut s = vec![vec![0i32; k]; n - 1];
    for row in s.iter_mut() {
        for cell in row.iter_mut() {
            *cell = solver.new_var() as i32;
        }
    }
    solver.add_clause(&[-lits[0], s[0][0]]);
    for j in 1..k {
        solver.add_clause(&[-s[0][j]]);
    }
    for i in 1..n - 1 {
        solver.add_clause(&[-lits[i], s[i][0]]);
        solver.add_clause(&[-s[i - 1][0], s[i][0]]);
        for j in 1..k {
            solver.add_clause(&[-lits[i], -s[i - 1][j - 1], s[i][j]]);
            solver.add_clause(&[-s[i - 1][j], s[i][j]]);
        }
        solver.add_clause(&[-lits[i], -s[i - 1][k - 1]]);
    }
    solver.add_clause(&[-lits[n - 1], -s[n - 2][k - 1]]);
}

/// Minimize the number of violated soft units subject to the ground
/// problem's clauses. `gp` must include every constraint intended as hard
/// (declarations, facts, and the property).
pub fn solve_pmax(gp: &GroundProblem, reference: &Instance, seed: Option<u64>) -> PmaxResult {
    // feasibility first, so infeasibility comes back as a group core
    let mut gs = GroundSolver::new(gp, seed);
    match gs.solve() {
        GroundResult::Sat(_) => {}
        GroundResult::Unsat(groups) => {
            let core_groups = gs.minimize_groups(&groups);
            return PmaxResult::HardUnsat { core_groups };
        }
    }
    let soft = soft_from_instance(gp, reference);
    for k in 0..=soft.len() {
        // a fresh solver per k keeps the counter encoding simple
        let mut solver = Solver::new(gp.num_vars);
        if let Some(seed) = seed {
            solver.set_seed(seed);
        }
        for clause in gp.all_clauses() {
            solver.add_clause(clause);
        }
        // violation indicator per soft unit
        let violated: Vec<i32> = soft
            .iter()
            .map(|&l| {
                let t = solver.new_var() as i32;
                solver.add_clause(&[l, t]);
                t
            })
            .collect();
        encode_at_most_k(&mut solver, &violated, k);
        if let SolveResult::Sat(model) = solver.solve(&[]) {
            let instance = gp.decode(&model);
            return PmaxResult::Optimal { instance, distance: k };
        }
    }
    unreachable!("with k = #softs every assignment is admissible");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_instances, hamming_distance};
    use crate::eval::{eval_formula, Binding};
    use crate::frontend::load_model;
    use crate::ground::ground;
    use crate::testutil::{fsm_cex, fsm_model, fsm_sat};

    /// Exhaustive check of the counter encoding: for 4 literals and every k,
    /// the admissible assignments are exactly those with <= k bits set.
    #[test]
    fn at_most_k_truth_table() {
        for k in 0..=4usize {
            for mask in 0u32..16 {
                let mut solver = Solver::new(4);
                for v in 1..=4i32 {
                    let bit = mask & (1 << (v - 1)) != 0;
                    solver.add_clause(&[if bit { v } else { -v }]);
                }
                encode_at_most_k(&mut solver, &[1, 2, 3, 4], k);
                let want = (mask.count_ones() as usize) <= k;
                assert_eq!(solver.solve(&[]).is_sat(), want, "k={k} mask={mask:04b}");
            }
        }
    }

    /// PMAX optimality against the enumeration oracle on small models: the
    /// returned distance must equal the minimum Hamming distance over all
    /// instances satisfying the model and the property.
    #[test]
    fn pmax_distance_is_optimal() {
        let src = "sig N {\n  next: lone N\n}\nfact F {\n  some N\n}\n";
        let m = load_model("t", src).unwrap();
        let psrc = "sig N {\n  next: lone N\n}\nfact F {\n  all n: N | n !in n.^next\n}\n";
        let pm = load_model("t", psrc).unwrap();
        let p = &pm.facts[0].formula;
        // references: every instance of the unrestricted model
        let references = enumerate_instances(&m, 2, None).unwrap();
        let admissible = enumerate_instances(&m, 2, Some(p)).unwrap();
        assert!(!admissible.is_empty());
        let gp = ground(&m, Some(p), false, 2);
        for reference in references.iter().take(40) {
            match solve_pmax(&gp, reference, None) {
                PmaxResult::Optimal { instance, distance } => {
                    let best = admissible
                        .iter()
                        .map(|i| hamming_distance(reference, i))
                        .min()
                        .unwrap();
                    assert_eq!(distance, best);
                    assert_eq!(hamming_distance(reference, &instance), distance);
                    let b = Binding::new();
                    assert!(eval_formula(p, &instance, &b));
                }
                PmaxResult::HardUnsat { .. } => panic!("hard clauses are satisfiable"),
            }
        }
    }

    /// The FSM counterexample's nearest property-satisfying instance drops
    /// exactly the stop state's outgoing transition.
    #[test]
    fn fsm_nearest_instance_removes_one_edge() {
        let m = fsm_model();
        let (_, p) = &m.asserts[0];
        let gp = ground(&m, Some(p), false, 5);
        let cex = fsm_cex(&m);
        match solve_pmax(&gp, &cex, None) {
            PmaxResult::Optimal { instance, distance } => {
                assert_eq!(distance, 1);
                assert_eq!(instance, fsm_sat(&m));
            }
            PmaxResult::HardUnsat { .. } => panic!("expected an optimum"),
        }
    }

    #[test]
    fn contradictory_hard_clauses_reported_as_core() {
        let src = "one sig A {\n  f: B\n}\nsig B {}\nfact F {\n  some A.f\n  no A.f\n}\n";
        let m = load_model("t", src).unwrap();
        let gp = ground(&m, None, false, 2);
        let reference = {
            // any well-formed instance shape will do as a reference
            let m2 = load_model("t", "one sig A {\n  f: B\n}\nsig B {}\n").unwrap();
            enumerate_instances(&m2, 2, None).unwrap().into_iter().next().unwrap()
        };
        match solve_pmax(&gp, &reference, None) {
            PmaxResult::HardUnsat { core_groups } => {
                let facts = crate::solve::core_fact_conjuncts(&gp, &core_groups);
                assert_eq!(facts, vec![0, 1]);
            }
            PmaxResult::Optimal { .. } => panic!("expected hard-unsat"),
        }
    }
}
