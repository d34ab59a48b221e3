//! Text form of expressions.
//!
//! Grammar: integer literals, identifiers, `+ - * / ^`, parentheses. `^`
//! takes an integer exponent and binds tighter than unary minus, so `-z^2`
//! is `-(z^2)`. Rational constants are written as quotients (`3/4`).

use std::collections::BTreeSet;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::expr::{Expr, RawExpr, Symbol, SymbolKind, DEFAULT_TERM_LIMIT};
use crate::jet::JetContext;

/// The names an expression may use.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    base: BTreeSet<String>,
    fibers: bool,
    max_order: Option<usize>,
    towers: BTreeSet<String>,
    tower_depth: Option<usize>,
    constants: BTreeSet<String>,
    any_constant: bool,
    term_limit: usize,
}

impl Vocabulary {
    /// Coordinates of `ctx` plus its registered towers.
    pub fn jet(ctx: &JetContext) -> Self {
        Vocabulary {
            base: ["y", "u"].into_iter().map(String::from).collect(),
            fibers: true,
            max_order: Some(ctx.order()),
            towers: ctx.towers().map(String::from).collect(),
            tower_depth: Some(ctx.tower_depth()),
            constants: BTreeSet::new(),
            any_constant: false,
            term_limit: ctx.term_limit(),
        }
    }

    /// Functions of the base only: `y`, `u`, towers, declared constants. No fiber symbols.
    pub fn base_functions() -> Self {
        Vocabulary {
            base: ["y", "u"].into_iter().map(String::from).collect(),
            fibers: false,
            max_order: None,
            towers: BTreeSet::new(),
            tower_depth: None,
            constants: BTreeSet::new(),
            any_constant: false,
            term_limit: DEFAULT_TERM_LIMIT,
        }
    }

    /// Accepts every well-formed name; fiber names must still follow the `z_…` convention.
    pub fn permissive() -> Self {
        Vocabulary {
            base: ["x", "y", "u"].into_iter().map(String::from).collect(),
            fibers: true,
            max_order: None,
            towers: BTreeSet::new(),
            tower_depth: None,
            constants: BTreeSet::new(),
            any_constant: true,
            term_limit: DEFAULT_TERM_LIMIT,
        }
    }

    pub fn with_base(mut self, name: &str) -> Self {
        self.base.insert(name.to_string());
        self
    }

    pub fn only_base(mut self, names: &[&str]) -> Self {
        self.base = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn without_fibers(mut self) -> Self {
        self.fibers = false;
        self
    }

    /// Treats every unlisted identifier as a free constant.
    pub fn with_any_constant(mut self) -> Self {
        self.any_constant = true;
        self
    }

    pub fn with_tower(mut self, family: &str) -> Self {
        self.towers.insert(family.to_string());
        self
    }

    pub fn with_constant(mut self, name: &str) -> Self {
        self.constants.insert(name.to_string());
        self
    }

    pub fn with_constants<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Self {
        self.constants.extend(names.into_iter().map(String::from));
        self
    }

    pub fn with_term_limit(mut self, limit: usize) -> Self {
        self.term_limit = limit;
        self
    }

    fn accepts(&self, name: &str) -> bool {
        let s = Symbol::new(name);
        match s.kind() {
            SymbolKind::Base => self.base.contains(name),
            SymbolKind::Fiber(sigma) => {
                self.fibers && self.max_order.is_none_or(|k| sigma.order() <= k)
            }
            SymbolKind::Tower { family, index } => {
                self.any_constant
                    || (self.towers.contains(&family)
                        && self.tower_depth.is_none_or(|d| index <= d))
            }
            SymbolKind::Constant => {
                if name.starts_with("z_") {
                    return false;
                }
                self.any_constant || self.constants.contains(name)
            }
        }
    }

    fn describe(&self) -> String {
        let mut parts: Vec<String> = self.base.iter().cloned().collect();
        if self.fibers {
            match self.max_order {
                Some(k) => parts.push(format!("z and z_<y..><u..> up to order {k}")),
                None => parts.push("z and z_<y..><u..>".into()),
            }
        }
        for t in &self.towers {
            match self.tower_depth {
                Some(d) => parts.push(format!("{t}_0..{t}_{d}")),
                None => parts.push(format!("{t}_<n>")),
            }
        }
        parts.extend(self.constants.iter().cloned());
        if self.any_constant {
            parts.push("any other identifier as a constant".into());
        }
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
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
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                return Err(Error::Syntax {
                    line,
                    column: col + (i - start),
                    message: "decimal literals are not supported; write rationals as p/q".into(),
                });
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token {
                tok: Tok::Int(text.parse().expect("digits")),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(Error::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character {other:?}"),
                })
            }
        };
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vocab: &'a Vocabulary,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, t: &Token, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        })
    }

    /// Binding powers: (+,-) 1, (*,/) 2, unary minus 3, ^ 4.
    fn expr(&mut self, min_bp: u8) -> Result<RawExpr> {
        let t = self.next();
        let mut lhs = match t.tok {
            Tok::Int(n) => RawExpr::Int(n),
            Tok::Ident(ref name) => {
                if self.peek().tok == Tok::LParen {
                    return self.error(&t, format!("function application {name}(...) is not supported"));
                }
                if !self.vocab.accepts(name) {
                    return Err(Error::UnknownSymbol {
                        name: name.clone(),
                        valid: self.vocab.describe(),
                    });
                }
                RawExpr::Sym(Symbol::new(name))
            }
            Tok::LParen => {
                let inner = self.expr(0)?;
                let close = self.next();
                if close.tok != Tok::RParen {
                    return self.error(&close, "expected ')'");
                }
                inner
            }
            Tok::Op('-') => RawExpr::Neg(Box::new(self.expr(3)?)),
            Tok::Op('+') => self.expr(3)?,
            Tok::Eof => return self.error(&t, "unexpected end of input"),
            _ => return self.error(&t, "expected an operand"),
        };
        loop {
            let t = self.peek().clone();
            let (op, bp) = match t.tok {
                Tok::Op(c @ ('+' | '-')) => (c, 1),
                Tok::Op(c @ ('*' | '/')) => (c, 2),
                Tok::Op('^') => ('^', 4),
                Tok::Eof | Tok::RParen => break,
                _ => return self.error(&t, "expected an operator"),
            };
            if bp <= min_bp && op != '^' {
                break;
            }
            if op == '^' && bp < min_bp {
                break;
            }
            self.next();
            if op == '^' {
                let n = self.exponent()?;
                lhs = RawExpr::Pow(Box::new(lhs), n);
                continue;
            }
            let rhs = self.expr(bp)?;
            lhs = match op {
                '+' => RawExpr::Add(Box::new(lhs), Box::new(rhs)),
                '-' => RawExpr::Sub(Box::new(lhs), Box::new(rhs)),
                '*' => RawExpr::Mul(Box::new(lhs), Box::new(rhs)),
                _ => RawExpr::Div(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    /// `^` accepts `n`, `-n`, `(n)` or `(-n)`.
    fn exponent(&mut self) -> Result<i64> {
        let t = self.next();
        let (negative, t, parens) = match t.tok {
            Tok::LParen => {
                let inner = self.next();
                if inner.tok == Tok::Op('-') {
                    (true, self.next(), true)
                } else {
                    (false, inner, true)
                }
            }
            Tok::Op('-') => (true, self.next(), false),
            _ => (false, t, false),
        };
        let Tok::Int(ref n) = t.tok else {
            return self.error(&t, "exponent must be an integer literal");
        };
        let n: i64 = match i64::try_from(n) {
            Ok(v) if v <= u32::MAX as i64 => v,
            _ => return self.error(&t, "exponent out of range"),
        };
        if parens {
            let close = self.next();
            if close.tok != Tok::RParen {
                return self.error(&close, "expected ')' after exponent");
            }
        }
        if self.peek().tok == Tok::Op('^') {
            let t = self.peek().clone();
            return self.error(&t, "chained exponents are ambiguous; add parentheses");
        }
        Ok(if negative { -n } else { n })
    }
}

/// Parses into an unnormalized tree.
pub fn parse_raw(src: &str, vocab: &Vocabulary) -> Result<RawExpr> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        vocab,
    };
    let e = p.expr(0)?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return p.error(&t, "unexpected trailing input");
    }
    Ok(e)
}

/// Parses and normalizes.
pub fn parse_expression(src: &str, vocab: &Vocabulary) -> Result<Expr> {
    parse_raw(src, vocab)?.normalize(vocab.term_limit)
}

/// Parses with the vocabulary of a jet context.
pub fn parse_in(src: &str, ctx: &JetContext) -> Result<Expr> {
    parse_expression(src, &Vocabulary::jet(ctx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> JetContext {
        JetContext::new(5).with_tower("H")
    }

    #[test]
    fn parses_j21() {
        let e = parse_in("z_yy*z/z_y^2", &ctx()).unwrap();
        let expected = (&Expr::sym("z_yy") * &Expr::sym("z"))
            .checked_div(&Expr::sym("z_y").powi(2).unwrap())
            .unwrap();
        assert_eq!(e, expected);
    }

    #[test]
    fn precedence() {
        let v = Vocabulary::permissive();
        let e = parse_expression("-a^2 + b*c/d - 3/4", &v).unwrap();
        let manual = parse_expression("(0 - (a^2)) + ((b*c)/d) - (3/4)", &v).unwrap();
        assert_eq!(e, manual);
        let e = parse_expression("a^-2", &v).unwrap();
        assert_eq!(e, parse_expression("1/a^2", &v).unwrap());
        assert_eq!(parse_expression("a^(-2)", &v).unwrap(), e);
        assert_eq!(parse_expression("2-3-4", &v).unwrap(), Expr::int(-5));
        assert_eq!(parse_expression("12/4/3", &v).unwrap(), Expr::one());
    }

    #[test]
    fn syntax_error_position() {
        match parse_in("z_y +", &ctx()) {
            Err(Error::Syntax { line, column, .. }) => {
                assert_eq!((line, column), (1, 6));
            }
            other => panic!("{other:?}"),
        }
        match parse_in("z +\n  * z", &ctx()) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_symbols() {
        assert!(matches!(parse_in("z_q", &ctx()), Err(Error::UnknownSymbol { .. })));
        assert!(matches!(
            parse_in("z_yyyyyy", &ctx()),
            Err(Error::UnknownSymbol { .. })
        ));
        assert!(matches!(parse_in("w", &ctx()), Err(Error::UnknownSymbol { .. })));
        assert!(matches!(parse_in("H_9", &ctx()), Err(Error::UnknownSymbol { .. })));
        assert!(parse_in("H_7", &ctx()).is_ok());
        assert!(matches!(
            parse_expression("z", &Vocabulary::base_functions()),
            Err(Error::UnknownSymbol { .. })
        ));
    }

    #[test]
    fn rejects_functions_and_decimals() {
        let v = Vocabulary::permissive();
        assert!(matches!(parse_expression("exp(y)", &v), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expression("1.5*y", &v), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expression("y^u", &v), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expression("y^2^3", &v), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expression("(y", &v), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expression("y)", &v), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expression("1/(y-y)", &v), Err(Error::ZeroDenominator)));
    }
}
