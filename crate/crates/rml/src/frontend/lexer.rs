//! Tokenizer for the model language. `//` comments are stripped; operators
//! use maximal munch (`<=>` before `=>` before `=`).

use super::Diagnostic;
use crate::ast::SourceSpan;

pub const KEYWORDS: &[&str] = &[
    "sig", "one", "lone", "some", "set", "no", "all", "fact", "pred", "assert", "check", "run",
    "for", "in", "not", "and", "or", "none", "univ", "iden",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Keyword,
    Operator,
    Integer,
    Punct,
    /// Synthetic token marking the end of a physical line at paren depth 0.
    /// Conjunct boundaries inside blocks are read off these.
    Newline,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
}

// Multi-character operators first so maximal munch falls out of the scan order.
const OPERATORS: &[&str] = &[
    "<=>", "!in", "!=", "=>", "&&", "||", "->", "=", "!", "+", "-", "&", ".", "~", "*", "^", ":",
    ",", "|", "{", "}", "(", ")",
];

pub fn tokenize(file: &str, source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut paren_depth: i32 = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            if paren_depth == 0 {
                tokens.push(Token {
                    kind: TokenKind::Newline,
                    text: "\n".to_string(),
                    span: SourceSpan::new(file, line, col, line, col),
                });
            }
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && i + 1 < chars.len() && chars[i + 1] == '/' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
                col += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start_col = col;
            let mut text = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                text.push(chars[i]);
                i += 1;
                col += 1;
            }
            let kind = if KEYWORDS.contains(&text.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
            tokens.push(Token {
                kind,
                span: SourceSpan::new(file, line, start_col, line, col - 1),
                text,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start_col = col;
            let mut text = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                text.push(chars[i]);
                i += 1;
                col += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Integer,
                span: SourceSpan::new(file, line, start_col, line, col - 1),
                text,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if let Some(op) = OPERATORS.iter().find(|op| {
            rest.starts_with(**op)
                && !(**op == "!in"
                    && chars.get(i + 3).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_'))
        }) {
            let len = op.len() as u32;
            match *op {
                "(" => paren_depth += 1,
                ")" => paren_depth = (paren_depth - 1).max(0),
                _ => {}
            }
            let kind = if matches!(*op, "{" | "}" | "(" | ")" | ",") {
                TokenKind::Punct
            } else {
                TokenKind::Operator
            };
            tokens.push(Token {
                kind,
                text: op.to_string(),
                span: SourceSpan::new(file, line, col, line, col + len - 1),
            });
            i += op.len();
            col += len;
            continue;
        }
        return Err(Diagnostic::error(
            format!("unrecognized character `{c}`"),
            SourceSpan::new(file, line, col, line, col),
        ));
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize("t", src)
            .unwrap()
            .into_iter()
            .filter(|t| t.kind != TokenKind::Newline)
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn basic_stream() {
        let ts = kinds("s.transition = none");
        assert_eq!(
            ts,
            vec![
                (TokenKind::Ident, "s".into()),
                (TokenKind::Operator, ".".into()),
                (TokenKind::Ident, "transition".into()),
                (TokenKind::Operator, "=".into()),
                (TokenKind::Keyword, "none".into()),
            ]
        );
    }

    #[test]
    fn command_tokens() {
        let ts = kinds("check NoStopTransition for 5");
        assert_eq!(ts[0], (TokenKind::Keyword, "check".into()));
        assert_eq!(ts[1], (TokenKind::Ident, "NoStopTransition".into()));
        assert_eq!(ts[2], (TokenKind::Keyword, "for".into()));
        assert_eq!(ts[3], (TokenKind::Integer, "5".into()));
    }

    #[test]
    fn maximal_munch() {
        let ts = kinds("a <=> b");
        assert_eq!(ts[1], (TokenKind::Operator, "<=>".into()));
        let ts = kinds("a => b");
        assert_eq!(ts[1], (TokenKind::Operator, "=>".into()));
        let ts = kinds("a !in b");
        assert_eq!(ts[1], (TokenKind::Operator, "!in".into()));
    }

    #[test]
    fn comments_stripped() {
        let ts = kinds("a // comment = nonsense\nb");
        assert_eq!(ts.len(), 2);
    }

    #[test]
    fn newlines_inside_parens_suppressed() {
        let ts = tokenize("t", "(a +\nb)").unwrap();
        assert!(ts.iter().all(|t| t.kind != TokenKind::Newline));
    }

    #[test]
    fn unrecognized_character() {
        let err = tokenize("t", "a @ b").unwrap_err();
        assert!(err.message.contains('@'));
        assert_eq!(err.span.start_col, 3);
    }

    #[test]
    fn spans_are_one_based() {
        let ts = tokenize("t", "ab cd").unwrap();
        assert_eq!(ts[0].span.start_col, 1);
        assert_eq!(ts[0].span.end_col, 2);
        assert_eq!(ts[1].span.start_col, 4);
    }
}
