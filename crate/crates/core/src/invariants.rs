//! The basic differential invariants through order 5 and the checks run on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol, SymbolKind};
use crate::fields::{self, catalog::HEIGHT_TOWER, VectorField};
use crate::jet::{JetPoint, MultiIndex};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub name: String,
    pub order: usize,
    pub body: Expr,
}

impl Invariant {
    /// Wraps an arbitrary expression; the order is read off the body.
    pub fn from_expr(name: &str, body: Expr) -> Self {
        Invariant {
            name: name.to_string(),
            order: body.jet_order().unwrap_or(0),
            body,
        }
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.name, self.body)
    }
}

fn zs(sub: &str) -> Expr {
    if sub.is_empty() {
        Expr::sym("z")
    } else {
        Expr::sym(&format!("z_{sub}"))
    }
}

/// `z_sub · z^a / (z_y^b · z_u^c)`
fn ratio(sub: &str, a: i64, b: i64, c: i64) -> Expr {
    let num = &zs(sub) * &zs("").powi(a).expect("positive power");
    let den = &zs("y").powi(b).expect("positive power") * &zs("u").powi(c).expect("positive power");
    num.checked_div(&den).expect("monomial denominator")
}

fn k(n: i64) -> Expr {
    Expr::int(n)
}

/// The 14 basic invariants J21 … J55, in order.
pub fn catalog() -> Vec<Invariant> {
    let w2 = ratio("uu", 1, 0, 2);
    let w3 = ratio("uuu", 2, 0, 3);
    let w4 = ratio("uuuu", 3, 0, 4);

    let j21 = ratio("yy", 1, 2, 0);
    let j22 = ratio("yu", 1, 1, 1);
    let j31 = ratio("yyy", 2, 3, 0);
    let j32 = ratio("yyu", 2, 2, 1);
    let j33 = ratio("yuu", 2, 1, 2) - &j22 * &w2;
    let j41 = ratio("yyyy", 3, 4, 0);
    let j42 = ratio("yyyu", 3, 3, 1);
    let j43 = ratio("yyuu", 3, 2, 2) - &j32 * &w2;
    let j44 = ratio("yuuu", 3, 1, 3) - &(&k(3) * &j33) * &w2 - &j22 * &w3;
    let j51 = ratio("yyyyy", 4, 5, 0);
    let j52 = ratio("yyyyu", 4, 4, 1);
    let j53 = ratio("yyyuu", 4, 3, 2) - &j42 * &w2;
    let j54 = ratio("yyuuu", 4, 2, 3) - &(&k(3) * &j43) * &w2 - &j32 * &w3;
    let w2sq = &w2 * &w2;
    let j55 = ratio("yuuuu", 4, 1, 4)
        - &(&k(6) * &j44) * &w2
        - &(&k(3) * &j33) * &w2sq
        - &(&k(4) * &j33) * &w3
        - &j22 * &w4;

    [
        ("J21", j21),
        ("J22", j22),
        ("J31", j31),
        ("J32", j32),
        ("J33", j33),
        ("J41", j41),
        ("J42", j42),
        ("J43", j43),
        ("J44", j44),
        ("J51", j51),
        ("J52", j52),
        ("J53", j53),
        ("J54", j54),
        ("J55", j55),
    ]
    .into_iter()
    .map(|(n, e)| Invariant::from_expr(n, e))
    .collect()
}

/// Catalog entries of exactly order `k`.
pub fn catalog_of_order(k: usize) -> Vec<Invariant> {
    catalog().into_iter().filter(|j| j.order == k).collect()
}

/// Catalog entries up to and including order `k`.
pub fn catalog_up_to(k: usize) -> Vec<Invariant> {
    catalog().into_iter().filter(|j| j.order <= k).collect()
}

pub fn lookup(name: &str) -> Option<Invariant> {
    catalog().into_iter().find(|j| j.name == name)
}

/// Map from catalog names to bodies, for substitution.
pub fn catalog_bindings() -> BTreeMap<Symbol, Expr> {
    catalog()
        .into_iter()
        .map(|j| (Symbol::new(&j.name), j.body))
        .collect()
}

/// Number of independent invariants of order ≤ k: (k² + k − 2)/2.
pub fn nu(k: usize) -> usize {
    assert!(k >= 1, "nu is defined for k >= 1");
    (k * k + k - 2) / 2
}

/// Number of new invariants at order k: ν(k) − ν(k−1) = k.
pub fn mu(k: usize) -> usize {
    assert!(k >= 2, "mu is defined for k >= 2");
    nu(k) - nu(k - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCheck {
    pub generator: String,
    pub residual: Expr,
    /// For Y4, the residual split by monomials in the height tower.
    pub tower_coefficients: Vec<(String, Expr)>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub invariant: String,
    pub order: usize,
    pub checks: Vec<GeneratorCheck>,
}

impl InvarianceReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn into_result(self) -> Result<Self> {
        if let Some(c) = self.checks.iter().find(|c| !c.pass) {
            return Err(Error::NotInvariant {
                generator: c.generator.clone(),
                residual: c.residual.to_string(),
            });
        }
        Ok(self)
    }
}

fn check_generator(g: &VectorField, j: &Invariant) -> Result<GeneratorCheck> {
    let order = j.order.max(j.body.jet_order().unwrap_or(0));
    let pg = fields::prolong(g, order)?;
    let residual = pg.apply(&j.body)?;
    let towers: BTreeSet<Symbol> = residual
        .symbols()
        .into_iter()
        .filter(|s| matches!(s.kind(), SymbolKind::Tower { ref family, .. } if family == HEIGHT_TOWER))
        .collect();
    let mut tower_coefficients = Vec::new();
    let pass = if towers.is_empty() {
        residual.is_zero()
    } else {
        match residual.coefficients_in(&towers) {
            Some(coeffs) => {
                for (m, c) in &coeffs {
                    tower_coefficients.push((m.to_string(), c.clone()));
                }
                coeffs.values().all(Expr::is_zero)
            }
            None => false,
        }
    };
    Ok(GeneratorCheck {
        generator: g.name().to_string(),
        residual,
        tower_coefficients,
        pass,
    })
}

/// Applies Y1..Y4, prolonged to the invariant's order, and records each residual.
pub fn verify_invariance(j: &Invariant) -> Result<InvarianceReport> {
    let checks = fields::catalog::generators()
        .iter()
        .map(|g| check_generator(g, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(InvarianceReport {
        invariant: j.name.clone(),
        order: j.order,
        checks,
    })
}

/// [`verify_invariance`] over several invariants in parallel, preserving order.
pub fn verify_all(js: &[Invariant]) -> Result<Vec<InvarianceReport>> {
    js.par_iter().map(verify_invariance).collect()
}

/// Degree-0 homogeneity under `z_σ → λ z_σ` for all σ at once.
pub fn is_scale_invariant(e: &Expr) -> Result<bool> {
    let lambda = Expr::sym("lambda");
    let bindings: BTreeMap<Symbol, Expr> = e
        .symbols()
        .into_iter()
        .filter(|s| s.as_fiber().is_some())
        .map(|s| {
            let scaled = &lambda * &Expr::symbol(s.clone());
            (s, scaled)
        })
        .collect();
    let scaled = e.substitute(&bindings, crate::expr::DEFAULT_TERM_LIMIT)?;
    Ok(&scaled == e)
}

fn check_regular(p: &JetPoint) -> Result<()> {
    for name in ["z", "z_y", "z_u"] {
        if p.get_name(name) == Some(0.0) {
            return Err(Error::SingularPoint(format!("{name} = 0")));
        }
    }
    Ok(())
}

/// Rank of the Jacobian of `js` with respect to the fiber coordinates up to
/// their highest order, at `p`.
pub fn jacobian_rank(js: &[Expr], p: &JetPoint, tol: f64) -> Result<usize> {
    check_regular(p)?;
    let order = js.iter().filter_map(Expr::jet_order).max().unwrap_or(0);
    let vars: Vec<Symbol> = MultiIndex::up_to(order).into_iter().map(Symbol::fiber).collect();
    let rows = linalg::jacobian(js, &vars);
    let m = linalg::evaluate_matrix(&rows, p)?;
    Ok(linalg::rank(&m, tol))
}

/// Whether the differentials of `js` are linearly independent at `p`.
pub fn functional_independence(js: &[Invariant], p: &JetPoint, tol: f64) -> Result<bool> {
    let bodies: Vec<Expr> = js.iter().map(|j| j.body.clone()).collect();
    Ok(jacobian_rank(&bodies, p, tol)? == js.len())
}
