//! Name and arity resolution. Turns the parser's raw identifiers into
//! signature/field references or quantifier-variable references and computes
//! the arity of every relational expression.

use super::Diagnostic;
use crate::ast::{
    Formula, FormulaKind, Model, RelExpr, RelExprKind, RelTarget,
};
use crate::ast::CommandKind;
use std::collections::HashMap;

struct Resolver {
    sigs: Vec<String>,
    fields: Vec<String>,
    diagnostics: Vec<Diagnostic>,
}

pub fn resolve(mut model: Model) -> Result<Model, Vec<Diagnostic>> {
    let mut r = Resolver { sigs: Vec::new(), fields: Vec::new(), diagnostics: Vec::new() };

    let mut seen: HashMap<String, &'static str> = HashMap::new();
    for sig in &model.sigs {
        if seen.insert(sig.name.clone(), "signature").is_some() {
            r.diagnostics.push(Diagnostic::error(
                format!("duplicate declaration of `{}`", sig.name),
                sig.span.clone(),
            ));
        }
        r.sigs.push(sig.name.clone());
    }
    for sig in &model.sigs {
        for field in &sig.fields {
            if let Some(kind) = seen.insert(field.name.clone(), "field") {
                r.diagnostics.push(Diagnostic::error(
                    format!("`{}` conflicts with a {kind} of the same name", field.name),
                    field.span.clone(),
                ));
            }
            r.fields.push(field.name.clone());
        }
    }
    // field targets must name signatures
    let sig_names: Vec<String> = r.sigs.clone();
    for sig in &mut model.sigs {
        for field in &mut sig.fields {
            if !sig_names.contains(&field.target) {
                r.diagnostics.push(Diagnostic::error(
                    format!("unknown signature `{}` in field declaration", field.target),
                    field.span.clone(),
                ));
            }
        }
    }

    for conjunct in &mut model.facts {
        r.resolve_formula(&mut conjunct.formula, &mut Vec::new());
    }
    for (_, conjuncts) in &mut model.preds {
        for conjunct in conjuncts {
            r.resolve_formula(&mut conjunct.formula, &mut Vec::new());
        }
    }
    for (_, body) in &mut model.asserts {
        r.resolve_formula(body, &mut Vec::new());
    }

    for cmd in &model.commands {
        let known = match cmd.kind {
            CommandKind::Check => model.asserts.iter().any(|(n, _)| n == &cmd.target),
            CommandKind::Run => model.preds.iter().any(|(n, _)| n == &cmd.target),
        };
        if !known {
            let what = match cmd.kind {
                CommandKind::Check => "assertion",
                CommandKind::Run => "predicate",
            };
            r.diagnostics.push(Diagnostic::error(
                format!("unknown {what} `{}`", cmd.target),
                cmd.span.clone(),
            ));
        }
    }

    if r.diagnostics.is_empty() {
        Ok(model)
    } else {
        Err(r.diagnostics)
    }
}

impl Resolver {
    fn error(&mut self, msg: String, span: &crate::ast::SourceSpan) {
        self.diagnostics.push(Diagnostic::error(msg, span.clone()));
    }

    /// Resolve names and compute arity. Returns 0 when the expression could
    /// not be resolved; an error has been recorded in that case.
    fn resolve_rel(&mut self, e: &mut RelExpr, scope: &mut Vec<String>) -> u32 {
        let arity = match &mut e.kind {
            RelExprKind::Name(name) => {
                let name = name.clone();
                if scope.iter().rev().any(|v| v == &name) {
                    e.kind = RelExprKind::Var(name);
                    1
                } else if self.sigs.contains(&name) {
                    e.kind = RelExprKind::Rel(name, RelTarget::Sig);
                    1
                } else if self.fields.contains(&name) {
                    e.kind = RelExprKind::Rel(name, RelTarget::Field);
                    2
                } else {
                    self.error(format!("unknown name `{name}`"), &e.span);
                    0
                }
            }
            RelExprKind::Rel(_, RelTarget::Sig) | RelExprKind::Var(_) => 1,
            RelExprKind::Rel(_, RelTarget::Field) => 2,
            RelExprKind::NoneConst | RelExprKind::UnivConst => 1,
            RelExprKind::IdenConst => 2,
            RelExprKind::Union(l, r)
            | RelExprKind::Difference(l, r)
            | RelExprKind::Intersect(l, r) => {
                let (al, ar) = (self.resolve_rel(l, scope), self.resolve_rel(r, scope));
                if al != 0 && ar != 0 && al != ar {
                    let span = e.span.clone();
                    self.error(
                        format!("arity mismatch: left has arity {al}, right has arity {ar}"),
                        &span,
                    );
                    0
                } else {
                    al.max(ar)
                }
            }
            RelExprKind::Join(l, r) => {
                let (al, ar) = (self.resolve_rel(l, scope), self.resolve_rel(r, scope));
                if al == 0 || ar == 0 {
                    0
                } else if al + ar < 3 {
                    let span = e.span.clone();
                    self.error("join of two unary expressions is ill-typed".to_string(), &span);
                    0
                } else {
                    al + ar - 2
                }
            }
            RelExprKind::Product(l, r) => {
                let (al, ar) = (self.resolve_rel(l, scope), self.resolve_rel(r, scope));
                if al == 0 || ar == 0 {
                    0
                } else {
                    al + ar
                }
            }
            RelExprKind::Transpose(x) | RelExprKind::TClosure(x) | RelExprKind::RTClosure(x) => {
                let ax = self.resolve_rel(x, scope);
                if ax != 0 && ax != 2 {
                    let span = e.span.clone();
                    self.error(
                        format!("operator requires a binary operand, got arity {ax}"),
                        &span,
                    );
                    0
                } else {
                    2
                }
            }
        };
        e.arity = arity;
        arity
    }

    fn resolve_formula(&mut self, f: &mut Formula, scope: &mut Vec<String>) {
        match &mut f.kind {
            FormulaKind::Subset(l, r) | FormulaKind::NotSubset(l, r) => {
                let (al, ar) = (self.resolve_rel(l, scope), self.resolve_rel(r, scope));
                if al != 0 && ar != 0 && al != ar {
                    let span = f.span.clone();
                    self.error(
                        format!("subset operands must have equal arity ({al} vs {ar})"),
                        &span,
                    );
                }
            }
            FormulaKind::Equal(l, r) | FormulaKind::NotEqual(l, r) => {
                let (al, ar) = (self.resolve_rel(l, scope), self.resolve_rel(r, scope));
                if al != 0 && ar != 0 && al != ar {
                    let span = f.span.clone();
                    self.error(
                        format!("equality operands must have equal arity ({al} vs {ar})"),
                        &span,
                    );
                }
            }
            FormulaKind::MultTest(_, e) => {
                self.resolve_rel(e, scope);
            }
            FormulaKind::Quant(_, var, bound, body) => {
                let a = self.resolve_rel(bound, scope);
                if a > 1 {
                    let span = bound.span.clone();
                    self.error(format!("quantifier bound must be unary, got arity {a}"), &span);
                }
                scope.push(var.clone());
                self.resolve_formula(body, scope);
                scope.pop();
            }
            FormulaKind::Not(x) => self.resolve_formula(x, scope),
            FormulaKind::And(l, r)
            | FormulaKind::Or(l, r)
            | FormulaKind::Implies(l, r)
            | FormulaKind::Iff(l, r) => {
                self.resolve_formula(l, scope);
                self.resolve_formula(r, scope);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::load_model;
    use crate::ast::Multiplicity;

    pub const FSM_SRC: &str = include_str!("../../tests/fixtures/fsm.rml");

    #[test]
    fn fsm_model_resolves() {
        let m = load_model("fsm.rml", FSM_SRC).unwrap();
        assert_eq!(m.sigs.len(), 2);
        assert_eq!(m.fields().count(), 3);
        assert_eq!(m.facts.len(), 8);
        assert_eq!(m.asserts.len(), 1);
        assert_eq!(m.commands[0].scope, 5);
        assert_eq!(m.sig("FSM").unwrap().mult, Multiplicity::One);
    }

    #[test]
    fn arities_computed() {
        let m = load_model("fsm.rml", FSM_SRC).unwrap();
        // `no FSM.stop.transition`: the join chain has arity 1
        let (_, assert_body) = &m.asserts[0];
        let leaves = crate::ast::leaf_rel_subexprs(assert_body);
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].arity, 1);
    }

    #[test]
    fn unknown_name_reported() {
        let src = "sig A {}\nfact F {\nsome transitions\n}\n";
        let errs = load_model("t", src).unwrap_err();
        assert!(errs[0].message.contains("transitions"));
    }

    #[test]
    fn unknown_command_target_reported() {
        let src = "sig A {}\ncheck Foo for 5\n";
        let errs = load_model("t", src).unwrap_err();
        assert!(errs[0].message.contains("Foo"));
    }

    #[test]
    fn transpose_of_unary_rejected() {
        let src = "sig A {}\nfact F {\nsome ~A\n}\n";
        let errs = load_model("t", src).unwrap_err();
        assert!(errs[0].message.contains("binary"));
    }

    #[test]
    fn duplicate_sig_rejected() {
        let src = "sig A {}\nsig A {}\n";
        let errs = load_model("t", src).unwrap_err();
        assert!(errs[0].message.contains("duplicate"));
    }

    #[test]
    fn shadowing_innermost_wins() {
        let src = "sig A { r: A }\nfact F {\nall x: A | all x: A.r | x in A\n}\n";
        assert!(load_model("t", src).is_ok());
    }
}
