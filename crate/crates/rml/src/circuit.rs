//! Hash-consed boolean circuits and their Tseitin conversion to CNF.
//!
//! Constant folding happens in the constructors, so clausification never
//! sees trivially reducible gates.

use std::collections::HashMap;

pub type NodeRef = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Var(u32),
    Not(NodeRef),
    And(Vec<NodeRef>),
    Or(Vec<NodeRef>),
}

#[derive(Default)]
pub struct Circuit {
    nodes: Vec<Node>,
    cache: HashMap<Node, NodeRef>,
}

impl Circuit {
    pub fn new() -> Self {
        let mut c = Circuit { nodes: Vec::new(), cache: HashMap::new() };
        c.intern(Node::False);
        c.intern(Node::True);
        c
    }

    pub const FALSE: NodeRef = 0;
    pub const TRUE: NodeRef = 1;

    fn intern(&mut self, node: Node) -> NodeRef {
        if let Some(&r) = self.cache.get(&node) {
            return r;
        }
        let r = self.nodes.len() as NodeRef;
        self.nodes.push(node.clone());
        self.cache.insert(node, r);
        r
    }

    pub fn node(&self, r: NodeRef) -> &Node {
        &self.nodes[r as usize]
    }

    pub fn var(&mut self, v: u32) -> NodeRef {
        debug_assert!(v > 0);
        self.intern(Node::Var(v))
    }

    pub fn constant(&mut self, b: bool) -> NodeRef {
        if b {
            Self::TRUE
        } else {
            Self::FALSE
        }
    }

    pub fn not(&mut self, x: NodeRef) -> NodeRef {
        match self.node(x) {
            Node::True => Self::FALSE,
            Node::False => Self::TRUE,
            Node::Not(inner) => *inner,
            _ => self.intern(Node::Not(x)),
        }
    }

    pub fn and(&mut self, xs: impl IntoIterator<Item = NodeRef>) -> NodeRef {
        let mut flat = Vec::new();
        for x in xs {
            match self.node(x) {
                Node::True => {}
                Node::False => return Self::FALSE,
                _ => flat.push(x),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        // x && !x is false
        if flat.iter().any(|&x| {
            matches!(self.node(x), Node::Not(inner) if flat.binary_search(inner).is_ok())
        }) {
            return Self::FALSE;
        }
        match flat.len() {
            0 => Self::TRUE,
            1 => flat[0],
            _ => self.intern(Node::And(flat)),
        }
    }

    pub fn or(&mut self, xs: impl IntoIterator<Item = NodeRef>) -> NodeRef {
        let mut flat = Vec::new();
        for x in xs {
            match self.node(x) {
                Node::False => {}
                Node::True => return Self::TRUE,
                _ => flat.push(x),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        if flat.iter().any(|&x| {
            matches!(self.node(x), Node::Not(inner) if flat.binary_search(inner).is_ok())
        }) {
            return Self::TRUE;
        }
        match flat.len() {
            0 => Self::FALSE,
            1 => flat[0],
            _ => self.intern(Node::Or(flat)),
        }
    }

    pub fn implies(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let na = self.not(a);
        self.or([na, b])
    }

    pub fn iff(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let fwd = self.implies(a, b);
        let bwd = self.implies(b, a);
        self.and([fwd, bwd])
    }

    /// Evaluate a node under a total assignment of the input variables.
    pub fn eval(&self, r: NodeRef, assignment: &dyn Fn(u32) -> bool) -> bool {
        match self.node(r) {
            Node::True => true,
            Node::False => false,
            Node::Var(v) => assignment(*v),
            Node::Not(x) => !self.eval(*x, assignment),
            Node::And(xs) => xs.iter().all(|&x| self.eval(x, assignment)),
            Node::Or(xs) => xs.iter().any(|&x| self.eval(x, assignment)),
        }
    }
}

/// Plain Tseitin conversion of one asserted root. Auxiliary variables are
/// drawn from `next_aux` and are never shared across calls, so clause groups
/// stay self-contained.
pub fn tseitin(circuit: &Circuit, root: NodeRef, next_aux: &mut u32) -> Vec<Vec<i32>> {
    let mut clauses = Vec::new();
    let mut lits: HashMap<NodeRef, i32> = HashMap::new();
    let root_lit = tseitin_node(circuit, root, next_aux, &mut lits, &mut clauses);
    match root_lit {
        LitOrConst::Const(true) => {}
        LitOrConst::Const(false) => clauses.push(vec![]),
        LitOrConst::Lit(l) => clauses.push(vec![l]),
    }
    clauses
}

#[derive(Clone, Copy)]
enum LitOrConst {
    Lit(i32),
    Const(bool),
}

fn tseitin_node(
    circuit: &Circuit,
    r: NodeRef,
    next_aux: &mut u32,
    lits: &mut HashMap<NodeRef, i32>,
    clauses: &mut Vec<Vec<i32>>,
) -> LitOrConst {
    if let Some(&l) = lits.get(&r) {
        return LitOrConst::Lit(l);
    }
    let result = match circuit.node(r) {
        Node::True => LitOrConst::Const(true),
        Node::False => LitOrConst::Const(false),
        Node::Var(v) => LitOrConst::Lit(*v as i32),
        Node::Not(x) => match tseitin_node(circuit, *x, next_aux, lits, clauses) {
            LitOrConst::Lit(l) => LitOrConst::Lit(-l),
            LitOrConst::Const(b) => LitOrConst::Const(!b),
        },
        Node::And(xs) | Node::Or(xs) => {
            let is_and = matches!(circuit.node(r), Node::And(_));
            let mut child_lits = Vec::with_capacity(xs.len());
            for &x in xs.clone().iter() {
                match tseitin_node(circuit, x, next_aux, lits, clauses) {
                    LitOrConst::Lit(l) => child_lits.push(l),
                    // constant folding in the constructors has already
                    // removed neutral elements and short circuits
                    LitOrConst::Const(_) => unreachable!("constant child survived folding"),
                }
            }
            let aux = *next_aux as i32;
            *next_aux += 1;
            if is_and {
                for &l in &child_lits {
                    clauses.push(vec![-aux, l]);
                }
                let mut long = vec![aux];
                long.extend(child_lits.iter().map(|&l| -l));
                clauses.push(long);
            } else {
                let mut long = vec![-aux];
                long.extend(child_lits.iter().copied());
                clauses.push(long);
                for &l in &child_lits {
                    clauses.push(vec![aux, -l]);
                }
            }
            LitOrConst::Lit(aux)
        }
    };
    if let LitOrConst::Lit(l) = result {
        lits.insert(r, l);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        let mut c = Circuit::new();
        let v1 = c.var(1);
        let t = Circuit::TRUE;
        assert_eq!(c.and([v1, t]), v1);
        assert_eq!(c.or([v1, t]), t);
        let nv1 = c.not(v1);
        assert_eq!(c.and([v1, nv1]), Circuit::FALSE);
        assert_eq!(c.or([v1, nv1]), Circuit::TRUE);
        assert_eq!(c.not(nv1), v1);
        let empty_and = c.and([]);
        assert_eq!(empty_and, Circuit::TRUE);
    }

    #[test]
    fn hash_consing_dedupes() {
        let mut c = Circuit::new();
        let v1 = c.var(1);
        let v2 = c.var(2);
        let a = c.and([v1, v2]);
        let b = c.and([v2, v1]);
        assert_eq!(a, b);
    }

    /// Tseitin equisatisfiability, brute-forced over all assignments of the
    /// input variables.
    #[test]
    fn tseitin_matches_circuit_semantics() {
        let mut c = Circuit::new();
        let vars: Vec<NodeRef> = (1..=4).map(|v| c.var(v)).collect();
        let n3 = c.not(vars[2]);
        let a = c.and([vars[0], vars[1]]);
        let o = c.or([a, n3]);
        let root = c.iff(o, vars[3]);
        let mut next_aux = 5;
        let clauses = tseitin(&c, root, &mut next_aux);
        for mask in 0u32..16 {
            let assign = |v: u32| mask & (1 << (v - 1)) != 0;
            let want = c.eval(root, &assign);
            // extension exists iff the circuit evaluates true
            let n_aux = next_aux - 5;
            let mut found = false;
            for aux_mask in 0u32..(1 << n_aux) {
                let total = |l: i32| {
                    let v = l.unsigned_abs();
                    let val = if v < 5 { assign(v) } else { aux_mask & (1 << (v - 5)) != 0 };
                    if l > 0 {
                        val
                    } else {
                        !val
                    }
                };
                if clauses.iter().all(|cl| cl.iter().any(|&l| total(l))) {
                    found = true;
                    break;
                }
            }
            assert_eq!(found, want, "mask {mask}");
        }
    }
}
