use num_bigint::BigInt;

use super::{Expr, Symbol};
use crate::error::Result;

/// Unnormalized expression tree, as produced by the parser or built by hand.
#[derive(Debug, Clone, PartialEq)]
pub enum RawExpr {
    Int(BigInt),
    Sym(Symbol),
    Neg(Box<RawExpr>),
    Add(Box<RawExpr>, Box<RawExpr>),
    Sub(Box<RawExpr>, Box<RawExpr>),
    Mul(Box<RawExpr>, Box<RawExpr>),
    Div(Box<RawExpr>, Box<RawExpr>),
    Pow(Box<RawExpr>, i64),
}

impl RawExpr {
    pub fn sym(name: &str) -> Self {
        RawExpr::Sym(Symbol::new(name))
    }

    pub fn int(n: i64) -> Self {
        RawExpr::Int(BigInt::from(n))
    }

    /// Canonical reduced rational form. Every intermediate is checked against
    /// `limit` monomials.
    pub fn normalize(&self, limit: usize) -> Result<Expr> {
        let e = match self {
            RawExpr::Int(n) => Expr::from_poly(super::Poly::constant(n.clone())),
            RawExpr::Sym(s) => Expr::symbol(s.clone()),
            RawExpr::Neg(a) => -a.normalize(limit)?,
            RawExpr::Add(a, b) => a.normalize(limit)? + b.normalize(limit)?,
            RawExpr::Sub(a, b) => a.normalize(limit)? - b.normalize(limit)?,
            RawExpr::Mul(a, b) => a.normalize(limit)? * b.normalize(limit)?,
            RawExpr::Div(a, b) => a.normalize(limit)?.checked_div(&b.normalize(limit)?)?,
            RawExpr::Pow(a, n) => checked_pow(&a.normalize(limit)?, *n, limit)?,
        };
        e.check_size(limit)
    }
}

/// Binary exponentiation that aborts as soon as an intermediate exceeds `limit`.
fn checked_pow(base: &Expr, n: i64, limit: usize) -> Result<Expr> {
    let mut base = if n < 0 { base.inverse()? } else { base.clone() };
    let mut e = n.unsigned_abs();
    let mut acc = Expr::one();
    while e > 0 {
        if e & 1 == 1 {
            acc = (&acc * &base).check_size(limit)?;
        }
        e >>= 1;
        if e > 0 {
            base = (&base * &base).check_size(limit)?;
        }
    }
    Ok(acc)
}

impl From<Symbol> for RawExpr {
    fn from(s: Symbol) -> Self {
        RawExpr::Sym(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::expr::DEFAULT_TERM_LIMIT;

    fn b(r: RawExpr) -> Box<RawExpr> {
        Box::new(r)
    }

    #[test]
    fn normalize_is_idempotent_on_examples() {
        // (z_y·z − z·z_y) → 0
        let t = RawExpr::Sub(
            b(RawExpr::Mul(b(RawExpr::sym("z_y")), b(RawExpr::sym("z")))),
            b(RawExpr::Mul(b(RawExpr::sym("z")), b(RawExpr::sym("z_y")))),
        );
        assert!(t.normalize(DEFAULT_TERM_LIMIT).unwrap().is_zero());
        // z²/z → z
        let t = RawExpr::Div(b(RawExpr::Pow(b(RawExpr::sym("z")), 2)), b(RawExpr::sym("z")));
        assert_eq!(t.normalize(DEFAULT_TERM_LIMIT).unwrap(), Expr::sym("z"));
    }

    #[test]
    fn zero_denominator() {
        let t = RawExpr::Div(
            b(RawExpr::int(1)),
            b(RawExpr::Sub(b(RawExpr::sym("z")), b(RawExpr::sym("z")))),
        );
        assert_eq!(t.normalize(DEFAULT_TERM_LIMIT), Err(Error::ZeroDenominator));
    }

    #[test]
    fn runaway_power_is_rejected() {
        let sum = RawExpr::Add(
            b(RawExpr::Add(b(RawExpr::sym("a")), b(RawExpr::sym("b")))),
            b(RawExpr::sym("c")),
        );
        let t = RawExpr::Pow(b(sum), 400);
        assert!(matches!(t.normalize(1000), Err(Error::ExprTooLarge { .. })));
    }
}
