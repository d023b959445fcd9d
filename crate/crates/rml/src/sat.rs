//! A small CDCL SAT solver: watched literals, activity-based decisions,
//! assumption solving with unsat cores, Luby restarts. Fully deterministic
//! for a fixed seed; the default seed is 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VAR_DECAY: f64 = 0.95;
const RESCALE_LIMIT: f64 = 1e100;
const RESTART_BASE: u64 = 100;

#[derive(Clone, Debug, PartialEq)]
pub enum SolveResult {
    /// Satisfying assignment, 1-indexed by variable (index 0 unused).
    Sat(Vec<bool>),
    /// Subset of the assumptions that is already unsatisfiable together
    /// with the clauses. Empty when the clauses alone are unsatisfiable.
    Unsat(Vec<i32>),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

type ClauseRef = usize;

pub struct Solver {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
    /// watches[lit_index(l)] = clauses currently watching literal l.
    watches: Vec<Vec<ClauseRef>>,
    /// 0 unassigned, 1 true, -1 false.
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<ClauseRef>>,
    trail: Vec<i32>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    conflicts: u64,
}

fn lit_index(l: i32) -> usize {
    let v = l.unsigned_abs() as usize;
    2 * v + usize::from(l < 0)
}

fn luby(i: u64) -> u64 {
    // the i-th term of the Luby restart sequence 1,1,2,1,1,2,4,...
    let mut k = 1u32;
    while (1u64 << k) - 1 < i + 1 {
        k += 1;
    }
    let mut i = i;
    let mut k = k;
    while (1u64 << k) - 1 != i + 1 {
        k -= 1;
        i -= (1u64 << k) - 1;
        while (1u64 << k) - 1 < i + 1 {
            k += 1;
        }
    }
    1u64 << (k - 1)
}

impl Solver {
    pub fn new(num_vars: u32) -> Solver {
        let n = num_vars as usize;
        Solver {
            num_vars: n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * (n + 1)],
            assign: vec![0; n + 1],
            level: vec![0; n + 1],
            reason: vec![None; n + 1],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n + 1],
            var_inc: 1.0,
            phase: vec![false; n + 1],
            seen: vec![false; n + 1],
            ok: true,
            conflicts: 0,
        }
    }

    /// Perturb initial variable activities so repeated runs with different
    /// seeds explore different parts of the search space while each run
    /// stays deterministic.
    pub fn set_seed(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for a in self.activity.iter_mut().skip(1) {
            *a += rng.gen::<f64>() * 1e-6;
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars as u32
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    /// Allocate a fresh variable (used for group selectors).
    pub fn new_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.assign.push(0);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.num_vars as u32
    }

    fn value(&self, l: i32) -> i8 {
        let v = self.assign[l.unsigned_abs() as usize];
        if l > 0 {
            v
        } else {
            -v
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Add a clause; duplicates are removed and tautologies dropped. Must be
    /// called at decision level 0 (i.e. between `solve` calls).
    pub fn add_clause(&mut self, lits: &[i32]) {
        debug_assert_eq!(self.decision_level(), 0);
        if !self.ok {
            return;
        }
        let mut c: Vec<i32> = Vec::with_capacity(lits.len());
        for &l in lits {
            debug_assert!(l != 0 && l.unsigned_abs() as usize <= self.num_vars);
            if c.contains(&-l) {
                return; // tautology
            }
            if self.value(l) == 1 && self.level[l.unsigned_abs() as usize] == 0 {
                return; // already satisfied at the root
            }
            if self.value(l) == -1 && self.level[l.unsigned_abs() as usize] == 0 {
                continue; // root-false literal
            }
            if !c.contains(&l) {
                c.push(l);
            }
        }
        match c.len() {
            0 => self.ok = false,
            1 => {
                if !self.enqueue(c[0], None) {
                    self.ok = false;
                } else if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let ci = self.clauses.len();
                self.watches[lit_index(c[0])].push(ci);
                self.watches[lit_index(c[1])].push(ci);
                self.clauses.push(c);
            }
        }
    }

    fn enqueue(&mut self, l: i32, from: Option<ClauseRef>) -> bool {
        match self.value(l) {
            1 => true,
            -1 => false,
            _ => {
                let v = l.unsigned_abs() as usize;
                self.assign[v] = if l > 0 { 1 } else { -1 };
                self.level[v] = self.decision_level();
                self.reason[v] = from;
                self.phase[v] = l > 0;
                self.trail.push(l);
                true
            }
        }
    }

    fn propagate(&mut self) -> Option<ClauseRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = -p;
            let mut ws = std::mem::take(&mut self.watches[lit_index(false_lit)]);
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                // make sure the false literal is at position 1
                if self.clauses[ci][0] == false_lit {
                    self.clauses[ci].swap(0, 1);
                }
                debug_assert_eq!(self.clauses[ci][1], false_lit);
                let first = self.clauses[ci][0];
                if self.value(first) == 1 {
                    i += 1;
                    continue;
                }
                // look for a non-false literal to watch instead
                let mut moved = false;
                for k in 2..self.clauses[ci].len() {
                    if self.value(self.clauses[ci][k]) != -1 {
                        self.clauses[ci].swap(1, k);
                        let new_watch = self.clauses[ci][1];
                        self.watches[lit_index(new_watch)].push(ci);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                // unit or conflicting
                if !self.enqueue(first, Some(ci)) {
                    self.watches[lit_index(false_lit)] = ws;
                    self.qhead = self.trail.len();
                    return Some(ci);
                }
                i += 1;
            }
            self.watches[lit_index(false_lit)] = ws;
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > RESCALE_LIMIT {
            for a in self.activity.iter_mut() {
                *a *= 1.0 / RESCALE_LIMIT;
            }
            self.var_inc *= 1.0 / RESCALE_LIMIT;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, confl: ClauseRef) -> (Vec<i32>, u32) {
        let mut learnt: Vec<i32> = vec![0];
        let mut counter = 0usize;
        let mut p: Option<i32> = None;
        let mut confl = Some(confl);
        let mut index = self.trail.len();
        loop {
            let c = confl.expect("reason clause during analysis");
            let start = usize::from(p.is_some());
            for k in start..self.clauses[c].len() {
                let q = self.clauses[c][k];
                let v = q.unsigned_abs() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] == self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].unsigned_abs() as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            let v = lit.unsigned_abs() as usize;
            p = Some(lit);
            confl = self.reason[v];
            self.seen[v] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
        }
        learnt[0] = -p.unwrap();
        for &l in &learnt[1..] {
            self.seen[l.unsigned_abs() as usize] = false;
        }
        let backjump = if learnt.len() == 1 {
            0
        } else {
            // move the second-highest-level literal into watch position 1
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].unsigned_abs() as usize]
                    > self.level[learnt[max_i].unsigned_abs() as usize]
                {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].unsigned_abs() as usize]
        };
        (learnt, backjump)
    }

    fn cancel_until(&mut self, target: u32) {
        while self.decision_level() > target {
            let lim = self.trail_lim.pop().unwrap();
            while self.trail.len() > lim {
                let l = self.trail.pop().unwrap();
                let v = l.unsigned_abs() as usize;
                self.assign[v] = 0;
                self.reason[v] = None;
            }
        }
        self.qhead = self.trail.len();
    }

    fn pick_branch(&self) -> Option<i32> {
        let mut best: Option<usize> = None;
        for v in 1..=self.num_vars {
            if self.assign[v] != 0 {
                continue;
            }
            match best {
                None => best = Some(v),
                Some(b) if self.activity[v] > self.activity[b] => best = Some(v),
                _ => {}
            }
        }
        best.map(|v| if self.phase[v] { v as i32 } else { -(v as i32) })
    }

    /// Given an assumption literal `failing` whose negation is currently
    /// implied, return the subset of the placed assumptions (in their
    /// original polarity) responsible, including `failing` itself.
    fn analyze_final(&mut self, failing: i32) -> Vec<i32> {
        let mut out = vec![failing];
        if self.decision_level() == 0 {
            return out;
        }
        self.seen[failing.unsigned_abs() as usize] = true;
        let bottom = self.trail_lim[0];
        for i in (bottom..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.unsigned_abs() as usize;
            if !self.seen[v] {
                continue;
            }
            match self.reason[v] {
                // a reasonless literal above the root is an assumption
                None => out.push(l),
                Some(c) => {
                    for k in 1..self.clauses[c].len() {
                        let q = self.clauses[c][k];
                        let qv = q.unsigned_abs() as usize;
                        if self.level[qv] > 0 {
                            self.seen[qv] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[failing.unsigned_abs() as usize] = false;
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Solve under the given assumption literals.
    pub fn solve(&mut self, assumptions: &[i32]) -> SolveResult {
        self.cancel_until(0);
        if !self.ok {
            return SolveResult::Unsat(Vec::new());
        }
        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat(Vec::new());
        }
        let mut restart_count = 0u64;
        let mut conflicts_until_restart = RESTART_BASE * luby(restart_count);
        let mut conflicts_this_restart = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                conflicts_this_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    self.cancel_until(0);
                    return SolveResult::Unsat(Vec::new());
                }
                let (learnt, backjump) = self.analyze(confl);
                self.cancel_until(backjump);
                self.var_inc /= VAR_DECAY;
                let asserting = learnt[0];
                if learnt.len() == 1 {
                    if !self.enqueue(asserting, None) {
                        self.ok = false;
                        self.cancel_until(0);
                        return SolveResult::Unsat(Vec::new());
                    }
                } else {
                    let ci = self.clauses.len();
                    self.watches[lit_index(learnt[0])].push(ci);
                    self.watches[lit_index(learnt[1])].push(ci);
                    self.clauses.push(learnt);
                    self.enqueue(asserting, Some(ci));
                }
                // the backjump may land inside the assumption prefix; the
                // decision loop re-places assumptions and reports a core if
                // one of them is now implied false
            } else {
                if conflicts_this_restart >= conflicts_until_restart
                    && self.decision_level() > assumptions.len() as u32
                {
                    restart_count += 1;
                    conflicts_until_restart = RESTART_BASE * luby(restart_count);
                    conflicts_this_restart = 0;
                    self.cancel_until(assumptions.len() as u32);
                    continue;
                }
                // place the next assumption, or a free decision
                let dl = self.decision_level() as usize;
                if dl < assumptions.len() {
                    let p = assumptions[dl];
                    match self.value(p) {
                        1 => {
                            // already implied: still open a level so the
                            // prefix keeps lining up with assumption count
                            self.trail_lim.push(self.trail.len());
                        }
                        -1 => {
                            let core = self.analyze_final(p);
                            self.cancel_until(0);
                            return SolveResult::Unsat(core);
                        }
                        _ => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(p, None);
                        }
                    }
                    continue;
                }
                match self.pick_branch() {
                    None => {
                        let model: Vec<bool> =
                            (0..=self.num_vars).map(|v| self.assign[v] == 1).collect();
                        self.cancel_until(0);
                        return SolveResult::Sat(model);
                    }
                    Some(l) => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, None);
                    }
                }
            }
        }
    }

}

/// Shrink an unsat core by deletion: drop each member in turn and keep the
/// drop whenever the rest is still unsatisfiable.
pub fn minimize_core(solver: &mut Solver, core: &[i32]) -> Vec<i32> {
    let mut kept: Vec<i32> = core.to_vec();
    let mut i = 0;
    while i < kept.len() {
        let mut trial = kept.clone();
        trial.remove(i);
        match solver.solve(&trial) {
            SolveResult::Unsat(sub) => {
                // the sub-core may be even smaller; keep order stable
                kept = kept.iter().copied().filter(|l| sub.contains(l)).collect();
            }
            SolveResult::Sat(_) => i += 1,
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;

    fn brute_force_sat(num_vars: u32, clauses: &[Vec<i32>]) -> bool {
        for mask in 0u64..(1u64 << num_vars) {
            let val = |l: i32| {
                let b = mask & (1 << (l.unsigned_abs() - 1)) != 0;
                if l > 0 {
                    b
                } else {
                    !b
                }
            };
            if clauses.iter().all(|c| c.iter().any(|&l| val(l))) {
                return true;
            }
        }
        false
    }

    #[test]
    fn trivial_cases() {
        let mut s = Solver::new(2);
        s.add_clause(&[1]);
        s.add_clause(&[-1, 2]);
        match s.solve(&[]) {
            SolveResult::Sat(m) => {
                assert!(m[1] && m[2]);
            }
            _ => panic!("expected sat"),
        }
        s.add_clause(&[-2]);
        assert_eq!(s.solve(&[]), SolveResult::Unsat(vec![]));
    }

    #[test]
    fn empty_clause_is_permanent_unsat() {
        let mut s = Solver::new(1);
        s.add_clause(&[]);
        assert_eq!(s.solve(&[]), SolveResult::Unsat(vec![]));
        assert_eq!(s.solve(&[1]), SolveResult::Unsat(vec![]));
    }

    #[test]
    fn random_3cnf_matches_brute_force() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for round in 0..200 {
            let n = 4 + (round % 14) as u32; // 4..=17 vars
            let n_clauses = (n as f64 * 4.0) as usize;
            let mut clauses = Vec::new();
            for _ in 0..n_clauses {
                let mut c = Vec::new();
                while c.len() < 3 {
                    let v = rng.gen_range(1..=n) as i32;
                    let l = if rng.gen::<bool>() { v } else { -v };
                    if !c.contains(&l) && !c.contains(&-l) {
                        c.push(l);
                    }
                }
                clauses.push(c);
            }
            let want = brute_force_sat(n, &clauses);
            let mut s = Solver::new(n);
            for c in &clauses {
                s.add_clause(c);
            }
            match s.solve(&[]) {
                SolveResult::Sat(m) => {
                    assert!(want, "round {round}: solver sat, brute force unsat");
                    for c in &clauses {
                        assert!(
                            c.iter().any(|&l| if l > 0 {
                                m[l as usize]
                            } else {
                                !m[-l as usize]
                            }),
                            "round {round}: model violates clause"
                        );
                    }
                }
                SolveResult::Unsat(_) => {
                    assert!(!want, "round {round}: solver unsat, brute force sat");
                }
            }
        }
    }

    #[test]
    fn pigeonhole_3_into_2_unsat() {
        // pigeon i in hole j = var 2*i + j + 1 (i in 0..3, j in 0..2)
        let v = |i: u32, j: u32| (2 * i + j + 1) as i32;
        let mut s = Solver::new(6);
        for i in 0..3 {
            s.add_clause(&[v(i, 0), v(i, 1)]);
        }
        for j in 0..2 {
            for i1 in 0..3 {
                for i2 in (i1 + 1)..3 {
                    s.add_clause(&[-v(i1, j), -v(i2, j)]);
                }
            }
        }
        assert!(!s.solve(&[]).is_sat());
    }

    #[test]
    fn assumption_core_is_sound_and_relevant() {
        // selector s_i enables clause group i; groups 1 and 3 conflict
        let mut s = Solver::new(0);
        let x = s.new_var() as i32;
        let s1 = s.new_var() as i32;
        let s2 = s.new_var() as i32;
        let s3 = s.new_var() as i32;
        s.add_clause(&[-s1, x]);
        s.add_clause(&[-s2, x]); // irrelevant (agrees with group 1)
        s.add_clause(&[-s3, -x]);
        match s.solve(&[s1, s2, s3]) {
            SolveResult::Unsat(core) => {
                assert!(core.contains(&s3));
                assert!(core.contains(&s1) || core.contains(&s2));
                assert!(!core.is_empty() && core.len() <= 3);
                // the core itself must be unsat
                assert!(!s.solve(&core).is_sat());
            }
            _ => panic!("expected unsat"),
        }
        // without s3 the rest is satisfiable
        assert!(s.solve(&[s1, s2]).is_sat());
    }

    #[test]
    fn minimize_core_drops_irrelevant_members() {
        let mut s = Solver::new(0);
        let x = s.new_var() as i32;
        let y = s.new_var() as i32;
        let sels: Vec<i32> = (0..4).map(|_| s.new_var() as i32).collect();
        s.add_clause(&[-sels[0], x]);
        s.add_clause(&[-sels[1], -x]);
        s.add_clause(&[-sels[2], y]); // irrelevant
        s.add_clause(&[-sels[3], y, x]); // irrelevant
        match s.solve(&sels) {
            SolveResult::Unsat(core) => {
                let min = minimize_core(&mut s, &core);
                assert_eq!(
                    min.iter().copied().collect::<std::collections::BTreeSet<_>>(),
                    [sels[0], sels[1]].into_iter().collect()
                );
            }
            _ => panic!("expected unsat"),
        }
    }

    /// Randomized group-structured problems: every reported core must be
    /// unsatisfiable on its own, and after minimization no member is
    /// droppable.
    #[test]
    fn random_group_cores_sound_and_minimal() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut n_unsat = 0;
        for round in 0..60 {
            let n = 6u32;
            let n_groups = 5;
            let mut s = Solver::new(n);
            let sels: Vec<i32> = (0..n_groups).map(|_| s.new_var() as i32).collect();
            for &sel in &sels {
                // each group: 2 random ternary clauses guarded by the selector
                for _ in 0..2 {
                    let mut c = vec![-sel];
                    while c.len() < 4 {
                        let v = rng.gen_range(1..=n) as i32;
                        let l = if rng.gen::<bool>() { v } else { -v };
                        if !c.contains(&l) && !c.contains(&-l) {
                            c.push(l);
                        }
                    }
                    s.add_clause(&c);
                }
            }
            // force a contradiction into two random groups half the time
            if round % 2 == 0 {
                let picks: Vec<i32> = sels.choose_multiple(&mut rng, 2).copied().collect();
                s.add_clause(&[-picks[0], 1]);
                s.add_clause(&[-picks[1], -1]);
                s.add_clause(&[-picks[0], 2]);
                s.add_clause(&[-picks[1], -2]);
            }
            match s.solve(&sels) {
                SolveResult::Sat(_) => {}
                SolveResult::Unsat(core) => {
                    n_unsat += 1;
                    assert!(!s.solve(&core).is_sat(), "round {round}: core not unsat");
                    let min = minimize_core(&mut s, &core);
                    assert!(!s.solve(&min).is_sat(), "round {round}: min core not unsat");
                    for i in 0..min.len() {
                        let mut sub = min.clone();
                        sub.remove(i);
                        assert!(
                            s.solve(&sub).is_sat(),
                            "round {round}: minimized core still has a droppable member"
                        );
                    }
                }
            }
        }
        assert!(n_unsat >= 10, "expected a healthy share of unsat rounds, got {n_unsat}");
    }

    #[test]
    fn deterministic_across_runs_same_seed() {
        let build = |seed: Option<u64>| {
            let mut s = Solver::new(8);
            if let Some(seed) = seed {
                s.set_seed(seed);
            }
            s.add_clause(&[1, 2, 3]);
            s.add_clause(&[-1, 4]);
            s.add_clause(&[-2, 5, -6]);
            s.add_clause(&[7, -8]);
            match s.solve(&[]) {
                SolveResult::Sat(m) => m,
                _ => panic!("sat expected"),
            }
        };
        assert_eq!(build(Some(3)), build(Some(3)));
        assert_eq!(build(None), build(None));
    }
}
