//! Exact rational expressions.
//!
//! An [`Expr`] is a reduced fraction of two integer polynomials. The
//! numerator and denominator share no non-unit factor and the denominator's
//! leading coefficient (graded lex over symbol names) is positive, so two
//! expressions are equal exactly when their parts are structurally equal.

mod gcd;
mod poly;
mod raw;
mod symbol;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub use gcd::gcd;
pub use poly::{Monomial, Poly};
pub use raw::RawExpr;
pub use symbol::{Symbol, SymbolKind};

/// Default ceiling on the number of monomials an expression may hold.
pub const DEFAULT_TERM_LIMIT: usize = 100_000;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl Expr {
    pub fn zero() -> Self {
        Expr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Self {
        Expr::from_poly(Poly::constant(BigInt::from(n)))
    }

    pub fn rational(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator in rational literal");
        Expr::from_rational(&BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_rational(r: &BigRational) -> Self {
        Expr::from_parts_unchecked(Poly::constant(r.numer().clone()), Poly::constant(r.denom().clone()))
    }

    pub fn from_poly(p: Poly) -> Self {
        Expr {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn symbol(s: Symbol) -> Self {
        Expr::from_poly(Poly::var(s))
    }

    pub fn sym(name: &str) -> Self {
        Expr::symbol(Symbol::new(name))
    }

    /// Builds `num / den` in canonical form.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Expr::from_parts_unchecked(num, den))
    }

    fn from_parts_unchecked(num: Poly, den: Poly) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return Expr::zero();
        }
        let g = gcd(&num, &den);
        let (mut num, mut den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        if den.leading_coeff_sign_negative() {
            num = num.neg();
            den = den.neg();
        }
        Expr { num, den }
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    /// The exact value when the expression has no symbols.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.num.is_zero() {
            return Some(BigRational::zero());
        }
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(BigRational::new(n.clone(), d.clone()))
    }

    /// Monomials in numerator plus denominator.
    pub fn term_count(&self) -> usize {
        self.num.len() + self.den.len()
    }

    pub fn check_size(self, limit: usize) -> Result<Self> {
        let terms = self.term_count();
        if terms > limit {
            Err(Error::ExprTooLarge { terms, limit })
        } else {
            Ok(self)
        }
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut s = self.num.variables();
        s.extend(self.den.variables());
        s
    }

    /// Highest |σ| among fiber symbols, or `None` if no fiber symbol occurs.
    pub fn jet_order(&self) -> Option<usize> {
        self.symbols()
            .iter()
            .filter_map(|s| s.as_fiber())
            .map(|m| m.order())
            .max()
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let (mut num, mut den) = (self.den.clone(), self.num.clone());
        if den.leading_coeff_sign_negative() {
            num = num.neg();
            den = den.neg();
        }
        Ok(Expr { num, den })
    }

    pub fn checked_div(&self, other: &Expr) -> Result<Self> {
        Ok(self * &other.inverse()?)
    }

    /// Integer power; negative exponents invert.
    pub fn powi(&self, n: i64) -> Result<Self> {
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let e = u32::try_from(n.unsigned_abs())
            .map_err(|_| Error::Invalid(format!("exponent {n} out of range")))?;
        if e == 0 {
            return Ok(Expr::one());
        }
        Ok(Expr {
            num: base.num.pow(e),
            den: base.den.pow(e),
        })
    }

    /// Formal partial derivative; every other symbol is a constant.
    pub fn diff(&self, s: &Symbol) -> Expr {
        self.derive_with(|t| if t == s { Some(Poly::one()) } else { None })
    }

    /// Applies the derivation determined by its values on symbols (`None` = 0).
    pub fn derive_with<F>(&self, image: F) -> Expr
    where
        F: Fn(&Symbol) -> Option<Poly>,
    {
        let dn = derive_poly(&self.num, &image);
        if self.den.is_constant() {
            return Expr::from_parts_unchecked(dn, self.den.clone());
        }
        let dd = derive_poly(&self.den, &image);
        if dd.is_zero() {
            return Expr::from_parts_unchecked(dn, self.den.clone());
        }
        // (n'd − nd')/d²
        let top = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Expr::from_parts_unchecked(top, self.den.mul(&self.den))
    }

    /// Simultaneous substitution followed by normalization.
    pub fn substitute(&self, bindings: &BTreeMap<Symbol, Expr>, limit: usize) -> Result<Expr> {
        let mut cache = PowerCache::default();
        let num = substitute_poly(&self.num, bindings, &mut cache, limit)?;
        let den = substitute_poly(&self.den, bindings, &mut cache, limit)?;
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        num.checked_div(&den)?.check_size(limit)
    }

    /// Exact evaluation; `lookup` supplies a rational value per symbol.
    pub fn eval_rational<F>(&self, mut lookup: F) -> Result<BigRational>
    where
        F: FnMut(&Symbol) -> Option<BigRational>,
    {
        let d = self
            .den
            .eval_rational(&mut lookup)
            .map_err(|s| Error::UnassignedSymbol(s.to_string()))?;
        let n = self
            .num
            .eval_rational(&mut lookup)
            .map_err(|s| Error::UnassignedSymbol(s.to_string()))?;
        if d.is_zero() {
            return Err(Error::DivisionByZeroAtPoint);
        }
        Ok(n / d)
    }

    /// Splits the numerator by power products in `vars`. Returns `None` if any
    /// of `vars` occurs in the denominator.
    pub fn coefficients_in(&self, vars: &BTreeSet<Symbol>) -> Option<BTreeMap<Monomial, Expr>> {
        if self.den.variables().iter().any(|s| vars.contains(s)) {
            return None;
        }
        Some(
            self.num
                .coefficients_in(vars)
                .into_iter()
                .map(|(m, p)| (m, Expr::from_parts_unchecked(p, self.den.clone())))
                .collect(),
        )
    }
}

fn derive_poly<F>(p: &Poly, image: &F) -> Poly
where
    F: Fn(&Symbol) -> Option<Poly>,
{
    let mut images: HashMap<&Symbol, Option<Poly>> = HashMap::new();
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        for (s, e) in m.factors() {
            let img = images.entry(s).or_insert_with(|| image(s).filter(|q| !q.is_zero()));
            let Some(img) = img else { continue };
            let rest = m
                .div(&Monomial::var(s.clone(), 1))
                .expect("factor divides its monomial");
            let k = c * BigInt::from(*e);
            out = out.add(&img.mul_term(&rest, &k));
        }
    }
    out
}

#[derive(Default)]
struct PowerCache {
    powers: HashMap<(Symbol, u32), Expr>,
}

impl PowerCache {
    fn get(&mut self, s: &Symbol, e: u32, value: &Expr) -> Result<Expr> {
        if let Some(v) = self.powers.get(&(s.clone(), e)) {
            return Ok(v.clone());
        }
        let v = value.powi(e as i64)?;
        self.powers.insert((s.clone(), e), v.clone());
        Ok(v)
    }
}

fn substitute_poly(
    p: &Poly,
    bindings: &BTreeMap<Symbol, Expr>,
    cache: &mut PowerCache,
    limit: usize,
) -> Result<Expr> {
    // Untouched factors stay in a polynomial part; bound factors become Exprs.
    // Terms sharing the same bound part are grouped before the Expr arithmetic.
    let mut groups: BTreeMap<Monomial, Poly> = BTreeMap::new();
    for (m, c) in p.terms() {
        let (bound, free): (Vec<_>, Vec<_>) = m
            .factors()
            .iter()
            .cloned()
            .partition(|(s, _)| bindings.contains_key(s));
        let bound = Monomial::from_sorted(bound);
        let free = Poly::term(Monomial::from_sorted(free), c.clone());
        let slot = groups.entry(bound).or_default();
        *slot = slot.add(&free);
    }
    let mut total = Expr::zero();
    for (bound, free) in groups {
        let mut t = Expr::from_poly(free);
        for (s, e) in bound.factors() {
            let v = cache.get(s, *e, &bindings[s])?;
            t = &t * &v;
            if t.is_zero() {
                break;
            }
        }
        total = (&total + &t).check_size(limit)?;
    }
    Ok(total)
}

impl Add for &Expr {
    type Output = Expr;

    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return Expr::from_parts_unchecked(self.num.add(&rhs.num), self.den.clone());
        }
        if self.den.is_one() {
            return Expr::from_parts_unchecked(self.num.mul(&rhs.den).add(&rhs.num), rhs.den.clone());
        }
        if rhs.den.is_one() {
            return Expr::from_parts_unchecked(rhs.num.mul(&self.den).add(&self.num), self.den.clone());
        }
        let g = gcd(&self.den, &rhs.den);
        let b1 = self.den.exact_div(&g).expect("gcd divides");
        let d1 = rhs.den.exact_div(&g).expect("gcd divides");
        let num = self.num.mul(&d1).add(&rhs.num.mul(&b1));
        Expr::from_parts_unchecked(num, b1.mul(&rhs.den))
    }
}

impl Sub for &Expr {
    type Output = Expr;

    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Mul for &Expr {
    type Output = Expr;

    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return Expr::from_poly(self.num.mul(&rhs.num));
        }
        // Cross-cancel so the product is already reduced.
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let a = self.num.exact_div(&g1).expect("gcd divides");
        let d = rhs.den.exact_div(&g1).expect("gcd divides");
        let c = rhs.num.exact_div(&g2).expect("gcd divides");
        let b = self.den.exact_div(&g2).expect("gcd divides");
        let (mut num, mut den) = (a.mul(&c), b.mul(&d));
        if den.leading_coeff_sign_negative() {
            num = num.neg();
            den = den.neg();
        }
        Expr { num, den }
    }
}

impl Neg for &Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { (&self).$m(&rhs) }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr { (&self).$m(rhs) }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::symbol(s)
    }
}

/// Renders `p/q` for exact rationals.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let num = if self.num.len() > 1 {
            format!("({})", self.num)
        } else {
            self.num.to_string()
        };
        let simple_den = match self.den.as_single_term() {
            Some((m, c)) => {
                (m.is_one() && c.is_positive())
                    || (c.is_one() && m.factors().len() == 1)
            }
            None => false,
        };
        if simple_den {
            write!(f, "{num}/{}", self.den)
        } else {
            write!(f, "{num}/({})", self.den)
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}
