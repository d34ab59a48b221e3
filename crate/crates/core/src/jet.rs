//! Jet space J^k(π) of the bundle (y, u, z) ↦ (y, u) and its total derivatives.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{rational_to_f64, Expr, Poly, Symbol, SymbolKind, DEFAULT_TERM_LIMIT};

/// Derivative multi-index: `y` order then `u` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    pub y: usize,
    pub u: usize,
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex { y: 0, u: 0 };

    pub fn new(y: usize, u: usize) -> Self {
        MultiIndex { y, u }
    }

    pub fn order(&self) -> usize {
        self.y + self.u
    }

    pub fn shifted(&self, dir: Direction) -> Self {
        match dir {
            Direction::Y => MultiIndex::new(self.y + 1, self.u),
            Direction::U => MultiIndex::new(self.y, self.u + 1),
        }
    }

    /// All multi-indices with |σ| ≤ k, sorted by order, then by decreasing `y`.
    pub fn up_to(k: usize) -> Vec<MultiIndex> {
        (0..=k)
            .flat_map(|n| (0..=n).rev().map(move |i| MultiIndex::new(i, n - i)))
            .collect()
    }

    pub fn coordinate_name(&self) -> String {
        if self.order() == 0 {
            "z".to_string()
        } else {
            format!("z_{}{}", "y".repeat(self.y), "u".repeat(self.u))
        }
    }

    /// Inverse of [`MultiIndex::coordinate_name`]; `z_uy` and `z_q` are rejected.
    pub fn parse_coordinate(name: &str) -> Option<MultiIndex> {
        if name == "z" {
            return Some(MultiIndex::ZERO);
        }
        let rest = name.strip_prefix("z_")?;
        if rest.is_empty() {
            return None;
        }
        let ys = rest.bytes().take_while(|&b| b == b'y').count();
        let tail = &rest[ys..];
        if !tail.bytes().all(|b| b == b'u') {
            return None;
        }
        Some(MultiIndex::new(ys, tail.len()))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.coordinate_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Y,
    U,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Y => "y",
            Direction::U => "u",
        })
    }
}

/// Chart of J^k(π): base `y, u`, fibers `z_σ` with |σ| ≤ k, and the formal
/// derivative towers of functions of `u` that may appear in coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetContext {
    order: usize,
    towers: BTreeSet<String>,
    tower_depth: Option<usize>,
    term_limit: usize,
}

impl JetContext {
    pub fn new(order: usize) -> Self {
        JetContext {
            order,
            towers: BTreeSet::new(),
            tower_depth: None,
            term_limit: DEFAULT_TERM_LIMIT,
        }
    }

    /// Registers a tower `family_0, family_1, …` with `D_u(family_m) = family_{m+1}`.
    pub fn with_tower(mut self, family: &str) -> Self {
        self.towers.insert(family.to_string());
        self
    }

    pub fn with_tower_depth(mut self, depth: usize) -> Self {
        self.tower_depth = Some(depth);
        self
    }

    pub fn with_term_limit(mut self, limit: usize) -> Self {
        self.term_limit = limit;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn term_limit(&self) -> usize {
        self.term_limit
    }

    pub fn towers(&self) -> impl Iterator<Item = &str> {
        self.towers.iter().map(String::as_str)
    }

    /// Highest tower index allowed; defaults to order + 2.
    pub fn tower_depth(&self) -> usize {
        self.tower_depth.unwrap_or(self.order + 2)
    }

    /// The same chart (towers, depth override, limits) at another order.
    pub fn with_order(&self, order: usize) -> Self {
        JetContext {
            order,
            ..self.clone()
        }
    }

    /// The same chart one order up.
    pub fn extended(&self) -> Self {
        JetContext {
            order: self.order + 1,
            ..self.clone()
        }
    }

    pub fn fiber_symbols(&self) -> Vec<Symbol> {
        MultiIndex::up_to(self.order)
            .into_iter()
            .map(Symbol::fiber)
            .collect()
    }

    /// `y`, `u`, then the fiber coordinates.
    pub fn coordinates(&self) -> Vec<Symbol> {
        let mut c = vec![Symbol::y(), Symbol::u()];
        c.extend(self.fiber_symbols());
        c
    }

    /// dim J^k(π) = 2 + C(k+2, 2).
    pub fn dimension(&self) -> usize {
        2 + fiber_dimension(self.order)
    }

    /// Applies `d/dy` or `d/du`. The result may reach order k+1.
    pub fn total_derivative(&self, e: &Expr, dir: Direction) -> Result<Expr> {
        if let Some(found) = e.jet_order() {
            if found > self.order {
                return Err(Error::OrderMismatch {
                    allowed: self.order,
                    found,
                });
            }
        }
        let depth = self.tower_depth();
        if dir == Direction::U {
            for s in e.symbols() {
                if let SymbolKind::Tower { family, index } = s.kind() {
                    if index + 1 > depth {
                        return Err(Error::TowerExhausted {
                            family,
                            index: index + 1,
                            max_depth: depth,
                        });
                    }
                }
            }
        }
        e.derive_with(|s| total_derivative_image(s, dir))
            .check_size(self.term_limit)
    }

    /// Iterated total derivative D_y^i D_u^j.
    pub fn total_derivative_multi(&self, e: &Expr, sigma: MultiIndex) -> Result<Expr> {
        let mut out = e.clone();
        let mut ctx = self.clone();
        for _ in 0..sigma.u {
            out = ctx.total_derivative(&out, Direction::U)?;
            ctx = ctx.extended();
        }
        for _ in 0..sigma.y {
            out = ctx.total_derivative(&out, Direction::Y)?;
            ctx = ctx.extended();
        }
        Ok(out)
    }
}

/// C(k+2, 2), the number of fiber coordinates of J^k(π).
pub fn fiber_dimension(k: usize) -> usize {
    (k + 2) * (k + 1) / 2
}

/// Image of a single symbol under d/dy or d/du.
fn total_derivative_image(s: &Symbol, dir: Direction) -> Option<Poly> {
    match s.kind() {
        SymbolKind::Base => match (s.name(), dir) {
            ("y", Direction::Y) | ("u", Direction::U) => Some(Poly::one()),
            _ => None,
        },
        SymbolKind::Fiber(sigma) => Some(Poly::var(Symbol::fiber(sigma.shifted(dir)))),
        SymbolKind::Tower { family, index } if dir == Direction::U => {
            Some(Poly::var(Symbol::tower(&family, index + 1)))
        }
        _ => None,
    }
}

/// Free-function form: returns the derivative and the context it lives in.
pub fn total_derivative(e: &Expr, dir: Direction, ctx: &JetContext) -> Result<(Expr, JetContext)> {
    let d = ctx.total_derivative(e, dir)?;
    Ok((d, ctx.extended()))
}

/// A numeric point: one binary64 value per assigned symbol.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JetPoint {
    values: BTreeMap<String, f64>,
}

impl JetPoint {
    pub fn new() -> Self {
        JetPoint::default()
    }

    pub fn from_pairs<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        JetPoint {
            values: pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn set(&mut self, s: &Symbol, v: f64) {
        self.values.insert(s.name().to_string(), v);
    }

    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.values.insert(name.to_string(), v);
        self
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.values.get(s.name()).copied()
    }

    pub fn get_name(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// True when every coordinate of `ctx` has a value.
    pub fn covers(&self, ctx: &JetContext) -> bool {
        ctx.coordinates().iter().all(|s| self.values.contains_key(s.name()))
    }

    /// Restriction to the coordinates of a lower-order chart.
    pub fn project(&self, k: usize) -> JetPoint {
        JetPoint {
            values: self
                .values
                .iter()
                .filter(|(name, _)| match Symbol::new(name).as_fiber() {
                    Some(s) => s.order() <= k,
                    None => true,
                })
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }
}

/// Exact evaluation at `p`, rounded to binary64 at the end.
pub fn evaluate(e: &Expr, p: &JetPoint) -> Result<f64> {
    evaluate_exact(e, p).map(|r| rational_to_f64(&r))
}

pub fn evaluate_exact(e: &Expr, p: &JetPoint) -> Result<BigRational> {
    let mut bad = None;
    let r = e.eval_rational(|s| {
        let v = p.get(s)?;
        let r = BigRational::from_float(v);
        if r.is_none() {
            bad = Some(s.to_string());
        }
        r
    });
    match (r, bad) {
        (_, Some(name)) => Err(Error::Invalid(format!("non-finite value for {name}"))),
        (r, None) => r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(name: &str) -> Expr {
        Expr::sym(name)
    }

    #[test]
    fn coordinate_names_round_trip() {
        for sigma in MultiIndex::up_to(5) {
            let name = sigma.coordinate_name();
            assert_eq!(MultiIndex::parse_coordinate(&name), Some(sigma));
        }
        assert_eq!(MultiIndex::new(1, 2).coordinate_name(), "z_yuu");
        assert_eq!(MultiIndex::parse_coordinate("z_q"), None);
        assert_eq!(MultiIndex::parse_coordinate("z_uy"), None);
    }

    #[test]
    fn fiber_count_is_binomial() {
        for k in 0..7 {
            let ctx = JetContext::new(k);
            assert_eq!(ctx.fiber_symbols().len(), (k + 2) * (k + 1) / 2);
        }
        assert_eq!(JetContext::new(5).dimension(), 23);
    }

    #[test]
    fn total_derivative_examples() {
        let ctx = JetContext::new(2).with_tower("H");
        assert_eq!(ctx.total_derivative(&s("z"), Direction::Y).unwrap(), s("z_y"));
        let e = &s("z") * &s("z_u");
        let d = ctx.total_derivative(&e, Direction::U).unwrap();
        assert_eq!(d, &s("z_u").powi(2).unwrap() + &(&s("z") * &s("z_uu")));
        let e = &s("H_0") * &s("z_u");
        let d = ctx.total_derivative(&e, Direction::U).unwrap();
        assert_eq!(d, &(&s("H_1") * &s("z_u")) + &(&s("H_0") * &s("z_uu")));
        let (_, ext) = total_derivative(&e, Direction::U, &ctx).unwrap();
        assert_eq!(ext.order(), 3);
    }

    #[test]
    fn total_derivative_raises_order_by_one() {
        let ctx = JetContext::new(3);
        let e = s("z_yyu").checked_div(&s("z_u")).unwrap();
        let d = ctx.total_derivative(&e, Direction::Y).unwrap();
        assert_eq!(d.jet_order(), Some(4));
    }

    #[test]
    fn total_derivatives_commute() {
        let ctx = JetContext::new(3).with_tower("H");
        let e = (&(&s("z_yu") * &s("z")) + &s("H_1"))
            .checked_div(&(&s("z_y") * &s("z_u")))
            .unwrap();
        let a = ctx.total_derivative_multi(&e, MultiIndex::new(1, 1)).unwrap();
        let dy = ctx.total_derivative(&e, Direction::Y).unwrap();
        let b = ctx.extended().total_derivative(&dy, Direction::U).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tower_exhaustion() {
        let ctx = JetContext::new(1).with_tower("H").with_tower_depth(2);
        let e = s("H_2");
        assert!(matches!(
            ctx.total_derivative(&e, Direction::U),
            Err(Error::TowerExhausted { index: 3, .. })
        ));
        // d/dy leaves towers alone
        assert!(ctx.total_derivative(&e, Direction::Y).unwrap().is_zero());
    }

    #[test]
    fn order_above_context_is_rejected() {
        let ctx = JetContext::new(1);
        assert!(matches!(
            ctx.total_derivative(&s("z_yy"), Direction::Y),
            Err(Error::OrderMismatch { allowed: 1, found: 2 })
        ));
    }

    #[test]
    fn evaluation_examples() {
        let p = JetPoint::from_pairs([("z", 1.0), ("z_y", 1.0), ("z_yy", 3.0), ("z_u", 0.0)]);
        let j21 = (&s("z_yy") * &s("z")).checked_div(&s("z_y").powi(2).unwrap()).unwrap();
        assert_eq!(evaluate(&j21, &p).unwrap(), 3.0);
        let q = s("z").checked_div(&s("z_u")).unwrap();
        assert_eq!(evaluate(&q, &p), Err(Error::DivisionByZeroAtPoint));
        assert_eq!(
            evaluate(&s("z_uu"), &p),
            Err(Error::UnassignedSymbol("z_uu".into()))
        );
        let j22 = (&s("z_yu") * &s("z")).checked_div(&(&s("z_y") * &s("z_u"))).unwrap();
        let p = JetPoint::from_pairs([("z", 2.0), ("z_y", 3.0), ("z_u", 5.0), ("z_yu", 7.0)]);
        assert!((evaluate(&j22, &p).unwrap() - 14.0 / 15.0).abs() < 1e-15);
    }
}
