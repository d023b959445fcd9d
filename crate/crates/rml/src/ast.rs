//! Resolved abstract syntax for relational models.
//!
//! A [`Model`] holds signature declarations, fact conjuncts, predicates,
//! assertions and commands. Relational expressions are arity-checked during
//! resolution; every node carries a [`SourceSpan`] pointing back into the
//! input file.

use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

/// A half-open region of source text, 1-based lines and columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub file: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(file: &str, start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        debug_assert!((start_line, start_col) <= (end_line, end_col));
        SourceSpan { file: file.to_string(), start_line, start_col, end_line, end_col }
    }

    pub fn dummy() -> Self {
        SourceSpan { file: String::new(), start_line: 1, start_col: 1, end_line: 1, end_col: 1 }
    }

    /// Merge two spans into the smallest span covering both.
    pub fn to(&self, other: &SourceSpan) -> SourceSpan {
        let (sl, sc) = (self.start_line, self.start_col).min((other.start_line, other.start_col));
        let (el, ec) = (self.end_line, self.end_col).max((other.end_line, other.end_col));
        SourceSpan { file: self.file.clone(), start_line: sl, start_col: sc, end_line: el, end_col: ec }
    }

    pub fn contains(&self, other: &SourceSpan) -> bool {
        (self.start_line, self.start_col) <= (other.start_line, other.start_col)
            && (other.end_line, other.end_col) <= (self.end_line, self.end_col)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.file.is_empty() {
            write!(f, "{}:{}", self.start_line, self.start_col)
        } else {
            write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Multiplicity {
    One,
    Lone,
    Some,
    Set,
}

impl Multiplicity {
    pub fn keyword(self) -> &'static str {
        match self {
            Multiplicity::One => "one",
            Multiplicity::Lone => "lone",
            Multiplicity::Some => "some",
            Multiplicity::Set => "set",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SigDecl {
    pub name: String,
    pub mult: Multiplicity,
    pub fields: Vec<FieldDecl>,
    pub span: SourceSpan,
}

/// A binary relation `owner -> target` with a per-owner multiplicity on the
/// target column.
#[derive(Clone, Debug)]
pub struct FieldDecl {
    pub name: String,
    pub owner: String,
    pub target: String,
    pub mult: Multiplicity,
    pub span: SourceSpan,
}

/// Whether a resolved relation name denotes a signature or a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelTarget {
    Sig,
    Field,
}

#[derive(Clone, Debug)]
pub enum RelExprKind {
    /// Unresolved identifier as produced by the parser. Resolution replaces
    /// every occurrence with `Rel` or `Var`.
    Name(String),
    Rel(String, RelTarget),
    Var(String),
    NoneConst,
    UnivConst,
    IdenConst,
    Union(Box<RelExpr>, Box<RelExpr>),
    Difference(Box<RelExpr>, Box<RelExpr>),
    Intersect(Box<RelExpr>, Box<RelExpr>),
    Join(Box<RelExpr>, Box<RelExpr>),
    Product(Box<RelExpr>, Box<RelExpr>),
    Transpose(Box<RelExpr>),
    TClosure(Box<RelExpr>),
    RTClosure(Box<RelExpr>),
}

#[derive(Clone, Debug)]
pub struct RelExpr {
    pub kind: RelExprKind,
    /// Resolved arity; 0 until resolution has run.
    pub arity: u32,
    pub span: SourceSpan,
}

impl RelExpr {
    pub fn new(kind: RelExprKind, span: SourceSpan) -> Self {
        RelExpr { kind, arity: 0, span }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultTestKind {
    No,
    Some,
    Lone,
    One,
}

impl MultTestKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MultTestKind::No => "no",
            MultTestKind::Some => "some",
            MultTestKind::Lone => "lone",
            MultTestKind::One => "one",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantKind {
    All,
    Some,
    No,
}

impl QuantKind {
    pub fn keyword(self) -> &'static str {
        match self {
            QuantKind::All => "all",
            QuantKind::Some => "some",
            QuantKind::No => "no",
        }
    }
}

#[derive(Clone, Debug)]
pub enum FormulaKind {
    Subset(RelExpr, RelExpr),
    NotSubset(RelExpr, RelExpr),
    Equal(RelExpr, RelExpr),
    NotEqual(RelExpr, RelExpr),
    MultTest(MultTestKind, RelExpr),
    /// Single-variable quantifier. Multi-variable surface syntax is desugared
    /// into a nested chain sharing the bound.
    Quant(QuantKind, String, RelExpr, Box<Formula>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

#[derive(Clone, Debug)]
pub struct Formula {
    pub kind: FormulaKind,
    pub span: SourceSpan,
}

impl Formula {
    pub fn new(kind: FormulaKind, span: SourceSpan) -> Self {
        Formula { kind, span }
    }
}

/// One top-level formula inside a fact or predicate block. Conjuncts are the
/// unit of slicing, scoring and unsat-core grouping.
#[derive(Clone, Debug)]
pub struct Conjunct {
    pub owner: String,
    pub index: usize,
    pub formula: Formula,
    pub span: SourceSpan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Check,
    Run,
}

#[derive(Clone, Debug)]
pub struct Command {
    pub kind: CommandKind,
    pub target: String,
    pub scope: u32,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, Default)]
pub struct Model {
    pub sigs: Vec<SigDecl>,
    pub facts: Vec<Conjunct>,
    pub preds: Vec<(String, Vec<Conjunct>)>,
    pub asserts: Vec<(String, Formula)>,
    pub commands: Vec<Command>,
}

impl Model {
    pub fn sig(&self, name: &str) -> Option<&SigDecl> {
        self.sigs.iter().find(|s| s.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.sigs.iter().flat_map(|s| s.fields.iter()).find(|f| f.name == name)
    }

    pub fn fields(&self) -> impl Iterator<Item = &FieldDecl> {
        self.sigs.iter().flat_map(|s| s.fields.iter())
    }

    pub fn pred(&self, name: &str) -> Option<&[Conjunct]> {
        self.preds.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn assert(&self, name: &str) -> Option<&Formula> {
        self.asserts.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

/// Resolved arity of an expression. Equivalent to reading `e.arity` but kept
/// as a function so call sites read like the other static helpers.
pub fn arity_of(e: &RelExpr) -> u32 {
    debug_assert!(e.arity > 0, "arity_of on unresolved expression");
    e.arity
}

/// Quantifier-variable names occurring free in a relational expression.
pub fn free_vars_rel(e: &RelExpr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free_rel(e, &mut Vec::new(), &mut out);
    out
}

/// Quantifier-variable names occurring free in a formula.
pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free_formula(f, &mut Vec::new(), &mut out);
    out
}

fn collect_free_rel(e: &RelExpr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &e.kind {
        RelExprKind::Var(v) => {
            if !bound.iter().any(|b| b == v) {
                out.insert(v.clone());
            }
        }
        RelExprKind::Name(_)
        | RelExprKind::Rel(..)
        | RelExprKind::NoneConst
        | RelExprKind::UnivConst
        | RelExprKind::IdenConst => {}
        RelExprKind::Union(l, r)
        | RelExprKind::Difference(l, r)
        | RelExprKind::Intersect(l, r)
        | RelExprKind::Join(l, r)
        | RelExprKind::Product(l, r) => {
            collect_free_rel(l, bound, out);
            collect_free_rel(r, bound, out);
        }
        RelExprKind::Transpose(x) | RelExprKind::TClosure(x) | RelExprKind::RTClosure(x) => {
            collect_free_rel(x, bound, out)
        }
    }
}

fn collect_free_formula(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &f.kind {
        FormulaKind::Subset(l, r)
        | FormulaKind::NotSubset(l, r)
        | FormulaKind::Equal(l, r)
        | FormulaKind::NotEqual(l, r) => {
            collect_free_rel(l, bound, out);
            collect_free_rel(r, bound, out);
        }
        FormulaKind::MultTest(_, e) => collect_free_rel(e, bound, out),
        FormulaKind::Quant(_, var, b, body) => {
            collect_free_rel(b, bound, out);
            bound.push(var.clone());
            collect_free_formula(body, bound, out);
            bound.pop();
        }
        FormulaKind::Not(x) => collect_free_formula(x, bound, out),
        FormulaKind::And(l, r)
        | FormulaKind::Or(l, r)
        | FormulaKind::Implies(l, r)
        | FormulaKind::Iff(l, r) => {
            collect_free_formula(l, bound, out);
            collect_free_formula(r, bound, out);
        }
    }
}

/// Maximal relational sub-expressions of a formula: the operands of
/// comparisons and multiplicity tests plus quantifier bounds, in
/// left-to-right source order. Every relation or variable occurrence lies in
/// exactly one returned leaf.
pub fn leaf_rel_subexprs(f: &Formula) -> Vec<&RelExpr> {
    let mut out = Vec::new();
    collect_leaves(f, &mut out);
    out
}

fn collect_leaves<'a>(f: &'a Formula, out: &mut Vec<&'a RelExpr>) {
    match &f.kind {
        FormulaKind::Subset(l, r)
        | FormulaKind::NotSubset(l, r)
        | FormulaKind::Equal(l, r)
        | FormulaKind::NotEqual(l, r) => {
            out.push(l);
            out.push(r);
        }
        FormulaKind::MultTest(_, e) => out.push(e),
        FormulaKind::Quant(_, _, b, body) => {
            out.push(b);
            collect_leaves(body, out);
        }
        FormulaKind::Not(x) => collect_leaves(x, out),
        FormulaKind::And(l, r)
        | FormulaKind::Or(l, r)
        | FormulaKind::Implies(l, r)
        | FormulaKind::Iff(l, r) => {
            collect_leaves(l, out);
            collect_leaves(r, out);
        }
    }
}

/// All signature and field names referenced by an expression.
pub fn rel_names_rel(e: &RelExpr, out: &mut BTreeSet<String>) {
    match &e.kind {
        RelExprKind::Rel(n, _) => {
            out.insert(n.clone());
        }
        RelExprKind::Name(_)
        | RelExprKind::Var(_)
        | RelExprKind::NoneConst
        | RelExprKind::UnivConst
        | RelExprKind::IdenConst => {}
        RelExprKind::Union(l, r)
        | RelExprKind::Difference(l, r)
        | RelExprKind::Intersect(l, r)
        | RelExprKind::Join(l, r)
        | RelExprKind::Product(l, r) => {
            rel_names_rel(l, out);
            rel_names_rel(r, out);
        }
        RelExprKind::Transpose(x) | RelExprKind::TClosure(x) | RelExprKind::RTClosure(x) => {
            rel_names_rel(x, out)
        }
    }
}

/// All signature and field names referenced by a formula.
pub fn rel_names(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_rel_names(f, &mut out);
    out
}

fn collect_rel_names(f: &Formula, out: &mut BTreeSet<String>) {
    for leaf in leaf_rel_subexprs(f) {
        rel_names_rel(leaf, out);
    }
}

// ---------------------------------------------------------------------------
// Structural equality (spans excluded)
// ---------------------------------------------------------------------------

pub fn rel_eq(a: &RelExpr, b: &RelExpr) -> bool {
    use RelExprKind::*;
    match (&a.kind, &b.kind) {
        (Name(x), Name(y)) => x == y,
        (Rel(x, tx), Rel(y, ty)) => x == y && tx == ty,
        // An unresolved name matches its resolved form; this lets round-trip
        // tests compare a reparsed (unresolved) tree against a resolved one.
        (Name(x), Rel(y, _)) | (Rel(x, _), Name(y)) => x == y,
        (Name(x), Var(y)) | (Var(x), Name(y)) => x == y,
        (Var(x), Var(y)) => x == y,
        (NoneConst, NoneConst) | (UnivConst, UnivConst) | (IdenConst, IdenConst) => true,
        (Union(l1, r1), Union(l2, r2))
        | (Difference(l1, r1), Difference(l2, r2))
        | (Intersect(l1, r1), Intersect(l2, r2))
        | (Join(l1, r1), Join(l2, r2))
        | (Product(l1, r1), Product(l2, r2)) => rel_eq(l1, l2) && rel_eq(r1, r2),
        (Transpose(x), Transpose(y)) | (TClosure(x), TClosure(y)) | (RTClosure(x), RTClosure(y)) => {
            rel_eq(x, y)
        }
        _ => false,
    }
}

pub fn formula_eq(a: &Formula, b: &Formula) -> bool {
    use FormulaKind::*;
    match (&a.kind, &b.kind) {
        (Subset(l1, r1), Subset(l2, r2))
        | (NotSubset(l1, r1), NotSubset(l2, r2))
        | (Equal(l1, r1), Equal(l2, r2))
        | (NotEqual(l1, r1), NotEqual(l2, r2)) => rel_eq(l1, l2) && rel_eq(r1, r2),
        (MultTest(k1, e1), MultTest(k2, e2)) => k1 == k2 && rel_eq(e1, e2),
        (Quant(k1, v1, b1, f1), Quant(k2, v2, b2, f2)) => {
            k1 == k2 && v1 == v2 && rel_eq(b1, b2) && formula_eq(f1, f2)
        }
        (Not(x), Not(y)) => formula_eq(x, y),
        (And(l1, r1), And(l2, r2))
        | (Or(l1, r1), Or(l2, r2))
        | (Implies(l1, r1), Implies(l2, r2))
        | (Iff(l1, r1), Iff(l2, r2)) => formula_eq(l1, l2) && formula_eq(r1, r2),
        _ => false,
    }
}

pub fn model_eq(a: &Model, b: &Model) -> bool {
    a.sigs.len() == b.sigs.len()
        && a.sigs.iter().zip(&b.sigs).all(|(x, y)| {
            x.name == y.name
                && x.mult == y.mult
                && x.fields.len() == y.fields.len()
                && x.fields.iter().zip(&y.fields).all(|(f, g)| {
                    f.name == g.name && f.owner == g.owner && f.target == g.target && f.mult == g.mult
                })
        })
        && a.facts.len() == b.facts.len()
        && a.facts.iter().zip(&b.facts).all(|(x, y)| {
            x.owner == y.owner && x.index == y.index && formula_eq(&x.formula, &y.formula)
        })
        && a.preds.len() == b.preds.len()
        && a.preds.iter().zip(&b.preds).all(|((n1, c1), (n2, c2))| {
            n1 == n2
                && c1.len() == c2.len()
                && c1.iter().zip(c2).all(|(x, y)| formula_eq(&x.formula, &y.formula))
        })
        && a.asserts.len() == b.asserts.len()
        && a.asserts.iter().zip(&b.asserts).all(|((n1, f1), (n2, f2))| n1 == n2 && formula_eq(f1, f2))
        && a.commands.len() == b.commands.len()
        && a.commands.iter().zip(&b.commands).all(|(x, y)| {
            x.kind == y.kind && x.target == y.target && x.scope == y.scope
        })
}

// ---------------------------------------------------------------------------
// Pretty printing
// ---------------------------------------------------------------------------

// Binding strength, loosest to tightest. Used to decide where parentheses are
// required when printing.
const PREC_UNION: u8 = 1;
const PREC_INTERSECT: u8 = 2;
const PREC_PRODUCT: u8 = 3;
const PREC_JOIN: u8 = 4;
const PREC_UNARY: u8 = 5;

fn fmt_rel(e: &RelExpr, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let prec = match &e.kind {
        RelExprKind::Union(..) | RelExprKind::Difference(..) => PREC_UNION,
        RelExprKind::Intersect(..) => PREC_INTERSECT,
        RelExprKind::Product(..) => PREC_PRODUCT,
        RelExprKind::Join(..) => PREC_JOIN,
        RelExprKind::Transpose(..) | RelExprKind::TClosure(..) | RelExprKind::RTClosure(..) => {
            PREC_UNARY
        }
        _ => u8::MAX,
    };
    let parens = prec < parent;
    if parens {
        write!(f, "(")?;
    }
    match &e.kind {
        RelExprKind::Name(n) | RelExprKind::Rel(n, _) | RelExprKind::Var(n) => write!(f, "{n}")?,
        RelExprKind::NoneConst => write!(f, "none")?,
        RelExprKind::UnivConst => write!(f, "univ")?,
        RelExprKind::IdenConst => write!(f, "iden")?,
        RelExprKind::Union(l, r) => {
            fmt_rel(l, PREC_UNION, f)?;
            write!(f, " + ")?;
            fmt_rel(r, PREC_UNION + 1, f)?;
        }
        RelExprKind::Difference(l, r) => {
            fmt_rel(l, PREC_UNION, f)?;
            write!(f, " - ")?;
            fmt_rel(r, PREC_UNION + 1, f)?;
        }
        RelExprKind::Intersect(l, r) => {
            fmt_rel(l, PREC_INTERSECT, f)?;
            write!(f, " & ")?;
            fmt_rel(r, PREC_INTERSECT + 1, f)?;
        }
        RelExprKind::Product(l, r) => {
            fmt_rel(l, PREC_PRODUCT, f)?;
            write!(f, " -> ")?;
            fmt_rel(r, PREC_PRODUCT + 1, f)?;
        }
        RelExprKind::Join(l, r) => {
            fmt_rel(l, PREC_JOIN, f)?;
            write!(f, ".")?;
            fmt_rel(r, PREC_JOIN + 1, f)?;
        }
        RelExprKind::Transpose(x) => {
            write!(f, "~")?;
            fmt_rel(x, PREC_UNARY, f)?;
        }
        RelExprKind::TClosure(x) => {
            write!(f, "^")?;
            fmt_rel(x, PREC_UNARY, f)?;
        }
        RelExprKind::RTClosure(x) => {
            write!(f, "*")?;
            fmt_rel(x, PREC_UNARY, f)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for RelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_rel(self, 0, f)
    }
}

const FPREC_IFF: u8 = 1;
const FPREC_IMPLIES: u8 = 2;
const FPREC_OR: u8 = 3;
const FPREC_AND: u8 = 4;
const FPREC_NOT: u8 = 5;

fn fmt_formula(x: &Formula, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let prec = match &x.kind {
        FormulaKind::Quant(..) => FPREC_IFF, // body extends maximally right
        FormulaKind::Iff(..) => FPREC_IFF,
        FormulaKind::Implies(..) => FPREC_IMPLIES,
        FormulaKind::Or(..) => FPREC_OR,
        FormulaKind::And(..) => FPREC_AND,
        FormulaKind::Not(..) => FPREC_NOT,
        _ => u8::MAX,
    };
    let parens = prec < parent;
    if parens {
        write!(f, "(")?;
    }
    match &x.kind {
        FormulaKind::Subset(l, r) => write!(f, "{l} in {r}")?,
        FormulaKind::NotSubset(l, r) => write!(f, "{l} !in {r}")?,
        FormulaKind::Equal(l, r) => write!(f, "{l} = {r}")?,
        FormulaKind::NotEqual(l, r) => write!(f, "{l} != {r}")?,
        FormulaKind::MultTest(k, e) => write!(f, "{} {e}", k.keyword())?,
        FormulaKind::Quant(k, var, bound, body) => {
            write!(f, "{} {var}: {bound} | ", k.keyword())?;
            fmt_formula(body, 0, f)?;
        }
        FormulaKind::Not(inner) => {
            write!(f, "!")?;
            fmt_formula(inner, FPREC_NOT, f)?;
        }
        FormulaKind::And(l, r) => {
            fmt_formula(l, FPREC_AND, f)?;
            write!(f, " && ")?;
            fmt_formula(r, FPREC_AND + 1, f)?;
        }
        FormulaKind::Or(l, r) => {
            fmt_formula(l, FPREC_OR, f)?;
            write!(f, " || ")?;
            fmt_formula(r, FPREC_OR + 1, f)?;
        }
        FormulaKind::Implies(l, r) => {
            // right-associative
            fmt_formula(l, FPREC_IMPLIES + 1, f)?;
            write!(f, " => ")?;
            fmt_formula(r, FPREC_IMPLIES, f)?;
        }
        FormulaKind::Iff(l, r) => {
            fmt_formula(l, FPREC_IFF + 1, f)?;
            write!(f, " <=> ")?;
            fmt_formula(r, FPREC_IFF, f)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, 0, f)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for sig in &self.sigs {
            if sig.mult != Multiplicity::Set {
                write!(f, "{} ", sig.mult.keyword())?;
            }
            write!(f, "sig {} {{", sig.name)?;
            let mut first = true;
            for field in &sig.fields {
                if !first {
                    write!(f, ",")?;
                }
                first = false;
                write!(f, " {}: ", field.name)?;
                if field.mult != Multiplicity::Set {
                    write!(f, "{} ", field.mult.keyword())?;
                }
                write!(f, "{}", field.target)?;
            }
            writeln!(f, " }}")?;
        }
        let mut fact_owner: Option<&str> = None;
        for conjunct in &self.facts {
            if fact_owner != Some(conjunct.owner.as_str()) {
                if fact_owner.is_some() {
                    writeln!(f, "}}")?;
                }
                writeln!(f, "fact {} {{", conjunct.owner)?;
                fact_owner = Some(conjunct.owner.as_str());
            }
            writeln!(f, "  {}", conjunct.formula)?;
        }
        if fact_owner.is_some() {
            writeln!(f, "}}")?;
        }
        for (name, conjuncts) in &self.preds {
            writeln!(f, "pred {name} {{")?;
            for conjunct in conjuncts {
                writeln!(f, "  {}", conjunct.formula)?;
            }
            writeln!(f, "}}")?;
        }
        for (name, body) in &self.asserts {
            writeln!(f, "assert {name} {{")?;
            writeln!(f, "  {body}")?;
            writeln!(f, "}}")?;
        }
        for cmd in &self.commands {
            let kw = match cmd.kind {
                CommandKind::Check => "check",
                CommandKind::Run => "run",
            };
            writeln!(f, "{kw} {} for {}", cmd.target, cmd.scope)?;
        }
        Ok(())
    }
}
