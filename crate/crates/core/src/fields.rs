//! Point vector fields on J⁰(π) and their prolongations.
//!
//! A field `a ∂/∂y + b ∂/∂u + c ∂/∂z` has generating function
//! `φ = c − z_y a − z_u b`; its k-th prolongation carries the coefficient
//! `D_σ(φ) + a z_{σ+(1,0)} + b z_{σ+(0,1)}` on `∂/∂z_σ`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol, SymbolKind};
use crate::jet::{Direction, JetContext, MultiIndex};

/// `φ = c − z_y·a − z_u·b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratingFunction(pub Expr);

impl GeneratingFunction {
    pub fn phi(&self) -> &Expr {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    name: String,
    coeff_y: Expr,
    coeff_u: Expr,
    /// Coefficients on `∂/∂z_σ`; the entry at `z` is the unprolonged `c`.
    fiber: BTreeMap<MultiIndex, Expr>,
    order: usize,
}

impl VectorField {
    /// A point field `a ∂/∂y + b ∂/∂u + c ∂/∂z`. `a` and `b` must not involve
    /// the fiber, and `c` may involve `z` but no derivative coordinate.
    pub fn new(name: &str, a: Expr, b: Expr, c: Expr) -> Result<Self> {
        for (label, e, allow_z) in [("a", &a, false), ("b", &b, false), ("c", &c, true)] {
            for s in e.symbols() {
                if let SymbolKind::Fiber(sigma) = s.kind() {
                    if !(allow_z && sigma.order() == 0) {
                        return Err(Error::Invalid(format!(
                            "coefficient {label} of a point field cannot depend on {s}"
                        )));
                    }
                }
            }
        }
        let mut fiber = BTreeMap::new();
        fiber.insert(MultiIndex::ZERO, c);
        Ok(VectorField {
            name: name.to_string(),
            coeff_y: a,
            coeff_u: b,
            fiber,
            order: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff_y(&self) -> &Expr {
        &self.coeff_y
    }

    pub fn coeff_u(&self) -> &Expr {
        &self.coeff_u
    }

    pub fn coeff_z(&self) -> &Expr {
        &self.fiber[&MultiIndex::ZERO]
    }

    /// Coefficient on `∂/∂z_σ`, if σ is within the prolongation order.
    pub fn coefficient(&self, sigma: MultiIndex) -> Option<&Expr> {
        self.fiber.get(&sigma)
    }

    pub fn generating_function(&self) -> GeneratingFunction {
        let zy = Expr::symbol(Symbol::fiber(MultiIndex::new(1, 0)));
        let zu = Expr::symbol(Symbol::fiber(MultiIndex::new(0, 1)));
        GeneratingFunction(self.coeff_z() - &(&zy * &self.coeff_y) - &zu * &self.coeff_u)
    }

    /// `(coordinate, coefficient)` pairs in chart order, zeros included.
    pub fn components(&self) -> Vec<(Symbol, Expr)> {
        let mut out = vec![
            (Symbol::y(), self.coeff_y.clone()),
            (Symbol::u(), self.coeff_u.clone()),
        ];
        for sigma in MultiIndex::up_to(self.order) {
            out.push((Symbol::fiber(sigma), self.fiber[&sigma].clone()));
        }
        out
    }

    /// `X(e) = Σ coefficient · ∂e/∂coordinate`.
    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        if let Some(found) = e.jet_order() {
            if found > self.order {
                return Err(Error::OrderMismatch {
                    allowed: self.order,
                    found,
                });
            }
        }
        let mut total = Expr::zero();
        for s in e.symbols() {
            let coeff = match s.kind() {
                SymbolKind::Base if s == Symbol::y() => &self.coeff_y,
                SymbolKind::Base if s == Symbol::u() => &self.coeff_u,
                SymbolKind::Fiber(sigma) => &self.fiber[&sigma],
                _ => continue,
            };
            if coeff.is_zero() {
                continue;
            }
            total = &total + &(coeff * &e.diff(&s));
        }
        Ok(total)
    }

    /// Constant multiple of the field (all components, prolonged ones included).
    pub fn scaled(&self, k: &Expr) -> VectorField {
        VectorField {
            name: format!("{k}*{}", self.name),
            coeff_y: k * &self.coeff_y,
            coeff_u: k * &self.coeff_u,
            fiber: self.fiber.iter().map(|(s, c)| (*s, k * c)).collect(),
            order: self.order,
        }
    }

    /// Sum of two fields; the result keeps the smaller prolongation order.
    pub fn sum(&self, other: &VectorField) -> VectorField {
        let order = self.order.min(other.order);
        VectorField {
            name: format!("{}+{}", self.name, other.name),
            coeff_y: &self.coeff_y + &other.coeff_y,
            coeff_u: &self.coeff_u + &other.coeff_u,
            fiber: MultiIndex::up_to(order)
                .into_iter()
                .map(|s| (s, &self.fiber[&s] + &other.fiber[&s]))
                .collect(),
            order,
        }
    }

    /// Lie bracket `[X, Y]` as fields on J^k, k = min of the two orders.
    pub fn bracket(&self, other: &VectorField) -> Result<VectorField> {
        let order = self.order.min(other.order);
        let x = self.truncated(order);
        let y = other.truncated(order);
        let comp = |cx: &Expr, cy: &Expr| -> Result<Expr> { Ok(x.apply(cy)? - y.apply(cx)?) };
        let mut fiber = BTreeMap::new();
        for s in MultiIndex::up_to(order) {
            fiber.insert(s, comp(&x.fiber[&s], &y.fiber[&s])?);
        }
        Ok(VectorField {
            name: format!("[{},{}]", self.name, other.name),
            coeff_y: comp(&x.coeff_y, &y.coeff_y)?,
            coeff_u: comp(&x.coeff_u, &y.coeff_u)?,
            fiber,
            order,
        })
    }

    fn truncated(&self, order: usize) -> VectorField {
        VectorField {
            fiber: self
                .fiber
                .iter()
                .filter(|(s, _)| s.order() <= order)
                .map(|(s, c)| (*s, c.clone()))
                .collect(),
            order,
            ..self.clone()
        }
    }

    /// The field with only base and `z` components, as before prolongation.
    pub fn base_field(&self) -> VectorField {
        self.truncated(0)
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, c) in self.components() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({c})*d/d{s}")?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Table of `D_y^i D_u^j(φ)` for |(i, j)| ≤ k.
fn derivative_table(phi: &Expr, k: usize, ctx: &JetContext) -> Result<BTreeMap<MultiIndex, Expr>> {
    let mut table = BTreeMap::new();
    let base_order = phi.jet_order().unwrap_or(0);
    let mut column = phi.clone();
    for j in 0..=k {
        if j > 0 {
            let c = ctx.with_order(base_order + j - 1);
            column = c.total_derivative(&column, Direction::U)?;
        }
        let mut cell = column.clone();
        table.insert(MultiIndex::new(0, j), cell.clone());
        for i in 1..=(k - j) {
            let c = ctx.with_order(base_order + j + i - 1);
            cell = c.total_derivative(&cell, Direction::Y)?;
            table.insert(MultiIndex::new(i, j), cell.clone());
        }
    }
    Ok(table)
}

/// k-th prolongation, with towers bounded by `ctx`'s depth setting.
pub fn prolong_in(x: &VectorField, k: usize, ctx: &JetContext) -> Result<VectorField> {
    let base = x.base_field();
    let phi = base.generating_function().0;
    let table = derivative_table(&phi, k, ctx)?;
    let mut fiber = BTreeMap::new();
    for sigma in MultiIndex::up_to(k) {
        let transport_y = &base.coeff_y * &Expr::symbol(Symbol::fiber(sigma.shifted(Direction::Y)));
        let transport_u = &base.coeff_u * &Expr::symbol(Symbol::fiber(sigma.shifted(Direction::U)));
        let c = &(&table[&sigma] + &transport_y) + &transport_u;
        fiber.insert(sigma, c.check_size(ctx.term_limit())?);
    }
    Ok(VectorField {
        fiber,
        order: k,
        ..base
    })
}

/// k-th prolongation X^(k).
pub fn prolong(x: &VectorField, k: usize) -> Result<VectorField> {
    prolong_in(x, k, &JetContext::new(1))
}

/// The evolutionary representative's fiber part: base components dropped and
/// `D_σ(φ)` on `∂/∂z_σ` for |σ| ≤ k.
pub fn evolutionary_restriction(x: &VectorField, k: usize) -> Result<VectorField> {
    let base = x.base_field();
    let phi = base.generating_function().0;
    let fiber = derivative_table(&phi, k, &JetContext::new(1))?;
    Ok(VectorField {
        name: format!("evo({})", base.name),
        coeff_y: Expr::zero(),
        coeff_u: Expr::zero(),
        fiber,
        order: k,
    })
}

/// The pseudo-group generators on the total space of π.
pub mod catalog {
    use super::*;

    fn field(name: &str, a: Expr, b: Expr, c: Expr) -> VectorField {
        VectorField::new(name, a, b, c).expect("catalog fields are point fields")
    }

    /// Y₁ = ∂/∂y
    pub fn y1() -> VectorField {
        field("Y1", Expr::one(), Expr::zero(), Expr::zero())
    }

    /// Y₂ = y ∂/∂y
    pub fn y2() -> VectorField {
        field("Y2", Expr::symbol(Symbol::y()), Expr::zero(), Expr::zero())
    }

    /// Y₃ = z ∂/∂z
    pub fn y3() -> VectorField {
        field("Y3", Expr::zero(), Expr::zero(), Expr::sym("z"))
    }

    /// Y₄ = H(u) ∂/∂u with H a formal tower `H_0, H_1, …`.
    pub fn y4() -> VectorField {
        field("Y4", Expr::zero(), Expr::symbol(Symbol::tower(HEIGHT_TOWER, 0)), Expr::zero())
    }

    /// Name of the tower standing for the arbitrary function in Y₄.
    pub const HEIGHT_TOWER: &str = "H";

    pub fn generators() -> Vec<VectorField> {
        vec![y1(), y2(), y3(), y4()]
    }

    /// Z₁ = y ∂/∂y
    pub fn z1() -> VectorField {
        field("Z1", Expr::symbol(Symbol::y()), Expr::zero(), Expr::zero())
    }

    /// Z₂ = z ∂/∂z
    pub fn z2() -> VectorField {
        field("Z2", Expr::zero(), Expr::zero(), Expr::sym("z"))
    }

    /// Z₃ = u·l(u) ∂/∂u with l(u) = u^m.
    pub fn z3_monomial(m: u32) -> VectorField {
        let b = Expr::symbol(Symbol::u()).powi(i64::from(m) + 1).expect("nonnegative power");
        field(&format!("Z3[u^{m}]"), Expr::zero(), b, Expr::zero())
    }

    /// Looks up a generator by its short name (Y1..Y4, Z1, Z2).
    pub fn by_name(name: &str) -> Option<VectorField> {
        Some(match name {
            "Y1" => y1(),
            "Y2" => y2(),
            "Y3" => y3(),
            "Y4" => y4(),
            "Z1" => z1(),
            "Z2" => z2(),
            _ => return None,
        })
    }
}
