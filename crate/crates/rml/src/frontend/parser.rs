//! Recursive-descent parser producing an unresolved [`Model`].
//!
//! Conjuncts inside `fact`/`pred`/`assert` blocks are separated by newlines
//! at paren depth 0 or by top-level `&&`. A formula spans lines only through
//! unbalanced parentheses (the lexer suppresses newline tokens inside parens).

use super::lexer::{Token, TokenKind};
use super::Diagnostic;
use crate::ast::{
    Command, CommandKind, Conjunct, FieldDecl, Formula, FormulaKind, Model, MultTestKind,
    Multiplicity, QuantKind, RelExpr, RelExprKind, SigDecl, SourceSpan,
};

pub fn parse(file: &str, tokens: &[Token]) -> Result<Model, Vec<Diagnostic>> {
    let mut p = Parser { file: file.to_string(), tokens, pos: 0 };
    let mut model = Model::default();
    let mut diagnostics = Vec::new();
    loop {
        p.skip_newlines();
        let Some(tok) = p.peek() else { break };
        let result = match (tok.kind, tok.text.as_str()) {
            (TokenKind::Keyword, "sig" | "one" | "lone" | "some")
                if tok.text == "sig" || p.peek_at(1).is_some_and(|t| t.text == "sig") =>
            {
                p.parse_sig().map(|s| model.sigs.push(s))
            }
            (TokenKind::Keyword, "fact") => p.parse_block("fact").map(|(name, conjuncts)| {
                model.facts.extend(conjuncts.into_iter().map(|(formula, span)| Conjunct {
                    owner: name.clone(),
                    index: 0,
                    formula,
                    span,
                }));
            }),
            (TokenKind::Keyword, "pred") => p.parse_block("pred").map(|(name, conjuncts)| {
                let conjuncts = conjuncts
                    .into_iter()
                    .enumerate()
                    .map(|(index, (formula, span))| Conjunct {
                        owner: name.clone(),
                        index,
                        formula,
                        span,
                    })
                    .collect();
                model.preds.push((name, conjuncts));
            }),
            (TokenKind::Keyword, "assert") => p.parse_assert().map(|a| {
                if let Some(a) = a {
                    model.asserts.push(a)
                }
            }),
            (TokenKind::Keyword, "check" | "run") => {
                p.parse_command().map(|c| model.commands.push(c))
            }
            _ => Err(Diagnostic::error(
                format!("expected a declaration, found `{}`", tok.text),
                tok.span.clone(),
            )),
        };
        if let Err(d) = result {
            diagnostics.push(d);
            p.resync();
        }
    }
    // Re-number fact conjunct indices per owning fact.
    let mut owner: Option<String> = None;
    let mut index = 0;
    for c in &mut model.facts {
        if owner.as_deref() != Some(c.owner.as_str()) {
            owner = Some(c.owner.clone());
            index = 0;
        }
        c.index = index;
        index += 1;
    }
    if diagnostics.is_empty() {
        Ok(model)
    } else {
        Err(diagnostics)
    }
}

struct Parser<'a> {
    file: String,
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    /// Nth upcoming token, counting newline tokens.
    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.tokens.get(self.pos + n)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.peek().is_some_and(|t| t.kind == TokenKind::Newline) {
            self.pos += 1;
        }
    }

    fn eof_span(&self) -> SourceSpan {
        self.tokens
            .last()
            .map(|t| t.span.clone())
            .unwrap_or_else(|| SourceSpan::new(&self.file, 1, 1, 1, 1))
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text && t.kind != TokenKind::Newline)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> Result<&'a Token, Diagnostic> {
        match self.peek() {
            Some(t) if t.text == text && t.kind != TokenKind::Newline => {
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(Diagnostic::error(
                format!("expected `{text}`, found `{}`", t.text.escape_debug()),
                t.span.clone(),
            )),
            None => Err(Diagnostic::error(format!("expected `{text}`, found end of input"), self.eof_span())),
        }
    }

    fn expect_ident(&mut self) -> Result<&'a Token, Diagnostic> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(Diagnostic::error(
                format!("expected an identifier, found `{}`", t.text.escape_debug()),
                t.span.clone(),
            )),
            None => {
                Err(Diagnostic::error("expected an identifier, found end of input", self.eof_span()))
            }
        }
    }

    /// Skip forward to the next top-level declaration keyword.
    fn resync(&mut self) {
        self.pos += 1;
        while let Some(t) = self.peek() {
            if t.kind == TokenKind::Keyword
                && matches!(t.text.as_str(), "sig" | "fact" | "pred" | "assert" | "check" | "run")
            {
                return;
            }
            if matches!(t.text.as_str(), "one" | "lone" | "some")
                && self.peek_at(1).is_some_and(|n| n.text == "sig")
            {
                return;
            }
            self.pos += 1;
        }
    }

    fn parse_mult(&mut self) -> Multiplicity {
        for (kw, mult) in [
            ("one", Multiplicity::One),
            ("lone", Multiplicity::Lone),
            ("some", Multiplicity::Some),
            ("set", Multiplicity::Set),
        ] {
            if self.at(kw) {
                self.pos += 1;
                return mult;
            }
        }
        Multiplicity::Set
    }

    fn parse_sig(&mut self) -> Result<SigDecl, Diagnostic> {
        let start = self.peek().unwrap().span.clone();
        let mult = self.parse_mult();
        self.expect("sig")?;
        let name = self.expect_ident()?;
        self.expect("{")?;
        let mut fields = Vec::new();
        loop {
            self.skip_newlines();
            if self.at("}") {
                break;
            }
            if !fields.is_empty() {
                // fields are separated by commas and/or newlines
                self.eat(",");
                self.skip_newlines();
                if self.at("}") {
                    break;
                }
            }
            let fname = self.expect_ident()?;
            self.expect(":")?;
            let fmult = self.parse_mult();
            let target = self.expect_ident()?;
            fields.push(FieldDecl {
                name: fname.text.clone(),
                owner: name.text.clone(),
                target: target.text.clone(),
                mult: fmult,
                span: fname.span.to(&target.span),
            });
        }
        let end = self.expect("}")?;
        Ok(SigDecl { name: name.text.clone(), mult, fields, span: start.to(&end.span) })
    }

    /// Parse `fact`/`pred` style blocks into a list of conjunct formulas.
    fn parse_block(&mut self, kw: &str) -> Result<(String, Vec<(Formula, SourceSpan)>), Diagnostic> {
        self.expect(kw)?;
        let name = self.expect_ident()?.text.clone();
        self.expect("{")?;
        let mut conjuncts = Vec::new();
        loop {
            self.skip_newlines();
            if self.at("}") {
                break;
            }
            if self.peek().is_none() {
                return Err(Diagnostic::error("unterminated block", self.eof_span()));
            }
            let formula = self.parse_formula()?;
            split_conjuncts(formula, &mut conjuncts);
            // a conjunct ends at a newline or at the closing brace
            if !self.at("}") && self.peek().is_some_and(|t| t.kind != TokenKind::Newline) {
                let t = self.peek().unwrap();
                return Err(Diagnostic::error(
                    format!("expected end of conjunct, found `{}`", t.text.escape_debug()),
                    t.span.clone(),
                ));
            }
        }
        self.expect("}")?;
        Ok((name, conjuncts))
    }

    fn parse_assert(&mut self) -> Result<Option<(String, Formula)>, Diagnostic> {
        let (name, conjuncts) = self.parse_block("assert")?;
        let mut iter = conjuncts.into_iter();
        let Some((first, _)) = iter.next() else {
            return Err(Diagnostic::error(format!("assert {name} has an empty body"), self.eof_span()));
        };
        let body = iter.fold(first, |acc, (next, _)| {
            let span = acc.span.to(&next.span);
            Formula::new(FormulaKind::And(Box::new(acc), Box::new(next)), span)
        });
        Ok(Some((name, body)))
    }

    fn parse_command(&mut self) -> Result<Command, Diagnostic> {
        let kw = self.bump().unwrap();
        let kind = if kw.text == "check" { CommandKind::Check } else { CommandKind::Run };
        let target = self.expect_ident()?;
        let mut scope = 3;
        let mut end = target.span.clone();
        if self.eat("for") {
            let n = match self.peek() {
                Some(t) if t.kind == TokenKind::Integer => self.bump().unwrap(),
                Some(t) => {
                    return Err(Diagnostic::error(
                        format!("expected a scope after `for`, found `{}`", t.text),
                        t.span.clone(),
                    ))
                }
                None => {
                    return Err(Diagnostic::error("expected a scope after `for`", self.eof_span()))
                }
            };
            scope = n.text.parse::<u32>().map_err(|_| {
                Diagnostic::error(format!("scope `{}` out of range", n.text), n.span.clone())
            })?;
            if scope == 0 {
                return Err(Diagnostic::error("scope must be at least 1", n.span.clone()));
            }
            end = n.span.clone();
        }
        Ok(Command { kind, target: target.text.clone(), scope, span: kw.span.to(&end) })
    }

    // -- formulas ----------------------------------------------------------

    fn parse_formula(&mut self) -> Result<Formula, Diagnostic> {
        self.parse_iff()
    }

    fn parse_iff(&mut self) -> Result<Formula, Diagnostic> {
        let l = self.parse_implies()?;
        if self.at("<=>") {
            self.pos += 1;
            let r = self.parse_iff()?;
            let span = l.span.to(&r.span);
            return Ok(Formula::new(FormulaKind::Iff(Box::new(l), Box::new(r)), span));
        }
        Ok(l)
    }

    fn parse_implies(&mut self) -> Result<Formula, Diagnostic> {
        let l = self.parse_or()?;
        if self.at("=>") {
            self.pos += 1;
            let r = self.parse_implies()?;
            let span = l.span.to(&r.span);
            return Ok(Formula::new(FormulaKind::Implies(Box::new(l), Box::new(r)), span));
        }
        Ok(l)
    }

    fn parse_or(&mut self) -> Result<Formula, Diagnostic> {
        let mut l = self.parse_and()?;
        while self.at("||") || self.at("or") {
            self.pos += 1;
            let r = self.parse_and()?;
            let span = l.span.to(&r.span);
            l = Formula::new(FormulaKind::Or(Box::new(l), Box::new(r)), span);
        }
        Ok(l)
    }

    fn parse_and(&mut self) -> Result<Formula, Diagnostic> {
        let mut l = self.parse_not()?;
        while self.at("&&") || self.at("and") {
            self.pos += 1;
            let r = self.parse_not()?;
            let span = l.span.to(&r.span);
            l = Formula::new(FormulaKind::And(Box::new(l), Box::new(r)), span);
        }
        Ok(l)
    }

    fn parse_not(&mut self) -> Result<Formula, Diagnostic> {
        if self.at("!") || self.at("not") {
            let start = self.bump().unwrap().span.clone();
            let inner = self.parse_not()?;
            let span = start.to(&inner.span);
            // `!` before a comparison is normalized into the negated form
            let kind = match inner.kind {
                FormulaKind::Subset(l, r) => FormulaKind::NotSubset(l, r),
                FormulaKind::NotSubset(l, r) => FormulaKind::Subset(l, r),
                FormulaKind::Equal(l, r) => FormulaKind::NotEqual(l, r),
                FormulaKind::NotEqual(l, r) => FormulaKind::Equal(l, r),
                other => FormulaKind::Not(Box::new(Formula::new(other, inner.span))),
            };
            return Ok(Formula::new(kind, span));
        }
        self.parse_atom_formula()
    }

    /// True when the upcoming tokens look like `kw v1, v2, ... :`.
    fn at_quantifier(&self) -> bool {
        let Some(t) = self.peek() else { return false };
        if !(t.kind == TokenKind::Keyword && matches!(t.text.as_str(), "all" | "some" | "no")) {
            return false;
        }
        let mut j = 1;
        loop {
            match self.peek_at(j) {
                Some(t) if t.kind == TokenKind::Ident => j += 1,
                _ => return false,
            }
            match self.peek_at(j) {
                Some(t) if t.text == ":" => return true,
                Some(t) if t.text == "," => j += 1,
                _ => return false,
            }
        }
    }

    fn parse_atom_formula(&mut self) -> Result<Formula, Diagnostic> {
        if self.at_quantifier() {
            return self.parse_quant();
        }
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Keyword {
                let kind = match t.text.as_str() {
                    "no" => Some(MultTestKind::No),
                    "some" => Some(MultTestKind::Some),
                    "lone" => Some(MultTestKind::Lone),
                    "one" => Some(MultTestKind::One),
                    _ => None,
                };
                // `none`, `univ`, `iden` begin a relational expression, not a
                // multiplicity test keyword's operand position.
                if let Some(kind) = kind {
                    let start = self.bump().unwrap().span.clone();
                    let e = self.parse_relexpr()?;
                    let span = start.to(&e.span);
                    return Ok(Formula::new(FormulaKind::MultTest(kind, e), span));
                }
            }
        }
        // Try a comparison first; fall back to a parenthesized formula.
        let saved = self.pos;
        match self.parse_comparison() {
            Ok(f) => Ok(f),
            Err(cmp_err) => {
                self.pos = saved;
                if self.at("(") {
                    self.pos += 1;
                    let f = self.parse_formula()?;
                    self.expect(")")?;
                    return Ok(f);
                }
                Err(cmp_err)
            }
        }
    }

    fn parse_quant(&mut self) -> Result<Formula, Diagnostic> {
        let kw = self.bump().unwrap();
        let kind = match kw.text.as_str() {
            "all" => QuantKind::All,
            "some" => QuantKind::Some,
            _ => QuantKind::No,
        };
        let mut vars = vec![self.expect_ident()?.text.clone()];
        while self.eat(",") {
            vars.push(self.expect_ident()?.text.clone());
        }
        self.expect(":")?;
        let bound = self.parse_relexpr()?;
        self.expect("|")?;
        let body = self.parse_formula()?;
        let span = kw.span.to(&body.span);
        // Multi-variable binders desugar to nested single-variable ones
        // sharing the bound expression.
        let mut formula = body;
        for var in vars.into_iter().rev() {
            formula = Formula::new(
                FormulaKind::Quant(kind, var, bound.clone(), Box::new(formula)),
                span.clone(),
            );
        }
        Ok(formula)
    }

    fn parse_comparison(&mut self) -> Result<Formula, Diagnostic> {
        let l = self.parse_relexpr()?;
        let negated_in = self.at("not") && self.peek_at(1).is_some_and(|t| t.text == "in");
        if negated_in {
            self.pos += 2;
            let r = self.parse_relexpr()?;
            let span = l.span.to(&r.span);
            return Ok(Formula::new(FormulaKind::NotSubset(l, r), span));
        }
        let op = match self.peek() {
            Some(t) if matches!(t.text.as_str(), "in" | "!in" | "=" | "!=") => {
                self.bump().unwrap().text.clone()
            }
            Some(t) => {
                return Err(Diagnostic::error(
                    format!("expected a comparison operator, found `{}`", t.text.escape_debug()),
                    t.span.clone(),
                ))
            }
            None => {
                return Err(Diagnostic::error("expected a comparison operator", self.eof_span()))
            }
        };
        let r = self.parse_relexpr()?;
        let span = l.span.to(&r.span);
        let kind = match op.as_str() {
            "in" => FormulaKind::Subset(l, r),
            "!in" => FormulaKind::NotSubset(l, r),
            "=" => FormulaKind::Equal(l, r),
            _ => FormulaKind::NotEqual(l, r),
        };
        Ok(Formula::new(kind, span))
    }

    // -- relational expressions --------------------------------------------

    fn parse_relexpr(&mut self) -> Result<RelExpr, Diagnostic> {
        let mut l = self.parse_intersect()?;
        loop {
            let op = if self.at("+") {
                "+"
            } else if self.at("-") {
                "-"
            } else {
                break;
            };
            self.pos += 1;
            let r = self.parse_intersect()?;
            let span = l.span.to(&r.span);
            let kind = if op == "+" {
                RelExprKind::Union(Box::new(l), Box::new(r))
            } else {
                RelExprKind::Difference(Box::new(l), Box::new(r))
            };
            l = RelExpr::new(kind, span);
        }
        Ok(l)
    }

    fn parse_intersect(&mut self) -> Result<RelExpr, Diagnostic> {
        let mut l = self.parse_product()?;
        while self.at("&") {
            self.pos += 1;
            let r = self.parse_product()?;
            let span = l.span.to(&r.span);
            l = RelExpr::new(RelExprKind::Intersect(Box::new(l), Box::new(r)), span);
        }
        Ok(l)
    }

    fn parse_product(&mut self) -> Result<RelExpr, Diagnostic> {
        let mut l = self.parse_join()?;
        while self.at("->") {
            self.pos += 1;
            let r = self.parse_join()?;
            let span = l.span.to(&r.span);
            l = RelExpr::new(RelExprKind::Product(Box::new(l), Box::new(r)), span);
        }
        Ok(l)
    }

    fn parse_join(&mut self) -> Result<RelExpr, Diagnostic> {
        let mut l = self.parse_unary()?;
        while self.at(".") {
            self.pos += 1;
            let r = self.parse_unary()?;
            let span = l.span.to(&r.span);
            l = RelExpr::new(RelExprKind::Join(Box::new(l), Box::new(r)), span);
        }
        Ok(l)
    }

    fn parse_unary(&mut self) -> Result<RelExpr, Diagnostic> {
        for (op, make) in [
            ("~", RelExprKind::Transpose as fn(Box<RelExpr>) -> RelExprKind),
            ("^", RelExprKind::TClosure as fn(Box<RelExpr>) -> RelExprKind),
            ("*", RelExprKind::RTClosure as fn(Box<RelExpr>) -> RelExprKind),
        ] {
            if self.at(op) {
                let start = self.bump().unwrap().span.clone();
                let e = self.parse_unary()?;
                let span = start.to(&e.span);
                return Ok(RelExpr::new(make(Box::new(e)), span));
            }
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<RelExpr, Diagnostic> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                Ok(RelExpr::new(RelExprKind::Name(t.text.clone()), t.span.clone()))
            }
            Some(t) if t.text == "none" => {
                self.pos += 1;
                Ok(RelExpr::new(RelExprKind::NoneConst, t.span.clone()))
            }
            Some(t) if t.text == "univ" => {
                self.pos += 1;
                Ok(RelExpr::new(RelExprKind::UnivConst, t.span.clone()))
            }
            Some(t) if t.text == "iden" => {
                self.pos += 1;
                Ok(RelExpr::new(RelExprKind::IdenConst, t.span.clone()))
            }
            Some(t) if t.text == "(" => {
                self.pos += 1;
                let e = self.parse_relexpr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some(t) => Err(Diagnostic::error(
                format!("expected a relational expression, found `{}`", t.text.escape_debug()),
                t.span.clone(),
            )),
            None => {
                Err(Diagnostic::error("expected a relational expression", self.eof_span()))
            }
        }
    }
}

/// Split top-level conjunctions into separate conjuncts.
fn split_conjuncts(f: Formula, out: &mut Vec<(Formula, SourceSpan)>) {
    match f.kind {
        FormulaKind::And(l, r) => {
            split_conjuncts(*l, out);
            split_conjuncts(*r, out);
        }
        _ => {
            let span = f.span.clone();
            out.push((f, span));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::lexer::tokenize;
    use super::*;
    use crate::ast::{formula_eq, FormulaKind};

    fn parse_src(src: &str) -> Model {
        parse("t", &tokenize("t", src).unwrap()).unwrap()
    }

    fn parse_fact_formula(body: &str) -> Formula {
        let m = parse_src(&format!("fact F {{\n{body}\n}}\n"));
        assert_eq!(m.facts.len(), 1, "expected one conjunct from {body:?}");
        m.facts.into_iter().next().unwrap().formula
    }

    #[test]
    fn implication_precedence() {
        let f = parse_fact_formula("s.transition = none => s in FSM.stop");
        match &f.kind {
            FormulaKind::Implies(l, r) => {
                assert!(matches!(l.kind, FormulaKind::Equal(..)));
                assert!(matches!(r.kind, FormulaKind::Subset(..)));
            }
            other => panic!("expected Implies, got {other:?}"),
        }
    }

    #[test]
    fn quantifier_body_extends_right() {
        let f = parse_fact_formula("all s: State | FSM.stop in s.*transition");
        match &f.kind {
            FormulaKind::Quant(QuantKind::All, v, _, body) => {
                assert_eq!(v, "s");
                assert!(matches!(body.kind, FormulaKind::Subset(..)));
            }
            other => panic!("expected Quant, got {other:?}"),
        }
    }

    #[test]
    fn empty_fact_block() {
        let m = parse_src("fact F { }");
        assert!(m.facts.is_empty());
    }

    #[test]
    fn union_intersect_precedence() {
        let a = parse_fact_formula("a + b & c in d");
        let b = parse_fact_formula("a + (b & c) in d");
        assert!(formula_eq(&a, &b));
    }

    #[test]
    fn implies_right_associative() {
        let a = parse_fact_formula("p in q => q in r => r in s");
        let b = parse_fact_formula("p in q => (q in r => r in s)");
        assert!(formula_eq(&a, &b));
    }

    #[test]
    fn multivar_quantifier_desugars() {
        let f = parse_fact_formula("all start1, start2: FSM.start | start1 = start2");
        let FormulaKind::Quant(QuantKind::All, v1, _, body) = &f.kind else {
            panic!("expected outer Quant");
        };
        assert_eq!(v1, "start1");
        let FormulaKind::Quant(QuantKind::All, v2, _, _) = &body.kind else {
            panic!("expected nested Quant");
        };
        assert_eq!(v2, "start2");
    }

    #[test]
    fn double_conjunct_split() {
        let m = parse_src("fact F {\nsome a\nno b && some c\n}");
        assert_eq!(m.facts.len(), 3);
        assert_eq!(m.facts[2].index, 2);
    }

    #[test]
    fn not_in_normalizes() {
        let a = parse_fact_formula("a not in b");
        let b = parse_fact_formula("a !in b");
        let c = parse_fact_formula("!(a in b)");
        assert!(formula_eq(&a, &b));
        assert!(formula_eq(&b, &c));
    }

    #[test]
    fn command_default_scope() {
        let m = parse_src("assert A { some x }\ncheck A");
        assert_eq!(m.commands[0].scope, 3);
    }

    #[test]
    fn syntax_error_resynchronizes() {
        let src = "fact F { some + }\nfact G { some x }";
        let errs = parse("t", &tokenize("t", src).unwrap()).unwrap_err();
        assert_eq!(errs.len(), 1);
    }
}
