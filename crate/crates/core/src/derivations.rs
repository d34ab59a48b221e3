//! Invariant derivations ∇₁ = (z/z_y)·D_y and ∇₂ = (z/z_u)·D_u, the
//! commutation relation between them, the relations they satisfy on the
//! basic invariants, and generation of higher invariants from J21, J22.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol, DEFAULT_TERM_LIMIT};
use crate::invariants::{self, Invariant};
use crate::jet::{Direction, JetContext, JetPoint, MultiIndex};
use crate::linalg;
use crate::parse::{parse_expression, Vocabulary};
use crate::sampling;

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantDerivation {
    pub name: &'static str,
    pub scale: Expr,
    pub direction: Direction,
}

pub fn nabla1() -> InvariantDerivation {
    InvariantDerivation {
        name: "D1",
        scale: Expr::sym("z").checked_div(&Expr::sym("z_y")).expect("nonzero"),
        direction: Direction::Y,
    }
}

pub fn nabla2() -> InvariantDerivation {
    InvariantDerivation {
        name: "D2",
        scale: Expr::sym("z").checked_div(&Expr::sym("z_u")).expect("nonzero"),
        direction: Direction::U,
    }
}

impl InvariantDerivation {
    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        let ctx = JetContext::new(e.jet_order().unwrap_or(0));
        let d = ctx.total_derivative(e, self.direction)?;
        (&self.scale * &d).check_size(ctx.term_limit())
    }
}

/// `D(J)` as a new invariant named `D1(J21)` etc.
pub fn apply_derivation(d: &InvariantDerivation, j: &Invariant) -> Result<Invariant> {
    let body = d.apply(&j.body)?;
    Ok(Invariant {
        name: format!("{}({})", d.name, j.name),
        order: body.jet_order().unwrap_or(0),
        body,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: Expr,
    pub rhs: Expr,
    pub residual: Expr,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(name: String, lhs: Expr, rhs: Expr) -> Self {
        let residual = &lhs - &rhs;
        IdentityCheck {
            name,
            pass: residual.is_zero(),
            lhs,
            rhs,
            residual,
        }
    }
}

/// Expressions the commutator is tested on.
pub fn commutator_probes() -> Vec<(String, Expr)> {
    let j = |n: &str| invariants::lookup(n).expect("catalog").body;
    vec![
        ("z".into(), Expr::sym("z")),
        ("z_y".into(), Expr::sym("z_y")),
        ("z_u".into(), Expr::sym("z_u")),
        ("J21".into(), j("J21")),
        ("J22".into(), j("J22")),
        ("1".into(), Expr::one()),
    ]
}

/// Compares `[∇₁,∇₂](f)` with `(−1 + J22)∇₁f + (1 − J22)∇₂f`.
pub fn check_commutator(name: &str, f: &Expr) -> Result<IdentityCheck> {
    let (n1, n2) = (nabla1(), nabla2());
    let j22 = invariants::lookup("J22").expect("catalog").body;
    let d1 = n1.apply(f)?;
    let d2 = n2.apply(f)?;
    let lhs = &n1.apply(&d2)? - &n2.apply(&d1)?;
    let a = &j22 - &Expr::one();
    let rhs = &(&a * &d1) - &(&a * &d2);
    Ok(IdentityCheck::new(name.to_string(), lhs, rhs))
}

pub fn verify_commutator() -> Result<Vec<IdentityCheck>> {
    commutator_probes()
        .par_iter()
        .map(|(n, f)| check_commutator(n, f))
        .collect()
}

/// An identity between expressions in the catalog names `J21…J55` and the
/// placeholders `D1_Jxy`, `D2_Jxy` standing for ∇₁(Jxy), ∇₂(Jxy).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Relation {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
}

impl Relation {
    pub fn new(name: &str, lhs: &str, rhs: &str) -> Self {
        Relation {
            name: name.into(),
            lhs: lhs.into(),
            rhs: rhs.into(),
        }
    }

    fn derivation_rule(d: usize, target: &str, rhs: &str) -> Self {
        Relation::new(
            &format!("D{d}({target})"),
            &format!("D{d}_{target}"),
            rhs,
        )
    }
}

/// The derivation formulas through order 5 and the order-3 syzygy.
pub fn relations() -> Vec<Relation> {
    let r = Relation::derivation_rule;
    vec![
        r(1, "J21", "J21 - 2*J21^2 + J31"),
        r(2, "J21", "J21 - 2*J21*J22 + J32"),
        r(1, "J22", "J22 - J21*J22 - J22^2 + J32"),
        r(2, "J22", "J22 - J22^2 + J33"),
        Relation::new(
            "syzygy(3)",
            "D2_J21 - J21 + J21*J22",
            "D1_J22 - J22 + J22^2",
        ),
        r(1, "J31", "2*J31 - 3*J21*J31 + J41"),
        r(2, "J31", "2*J31 - 3*J22*J31 + J42"),
        r(1, "J32", "2*J32 - 2*J21*J32 - J22*J32 + J42"),
        r(2, "J32", "2*J32 - 2*J22*J32 + J43"),
        r(1, "J33", "2*J33 - J21*J33 - 3*J22*J33 + J43"),
        r(2, "J33", "2*J33 - J22*J33 + J44"),
        r(1, "J41", "3*J41 - 4*J21*J41 + J51"),
        r(2, "J41", "3*J41 - 4*J22*J41 + J52"),
        r(1, "J42", "3*J42 - 3*J21*J42 - J22*J42 + J52"),
        r(2, "J42", "3*J42 - 3*J22*J42 + J53"),
        r(1, "J43", "3*J43 - 2*J21*J43 - 2*J22*J43 - J33*J32 + J53"),
        r(2, "J43", "3*J43 - 2*J22*J43 + J54"),
        r(1, "J44", "3*J44 - J21*J44 - 4*J22*J44 - 3*J33^2 + J54"),
        r(2, "J44", "3*J44 - J22*J44 + J55"),
    ]
}

/// Expands catalog names and derivation placeholders into jet coordinates.
pub struct Expander {
    bindings: BTreeMap<Symbol, Expr>,
    vocab: Vocabulary,
}

impl Default for Expander {
    fn default() -> Self {
        Self::new()
    }
}

impl Expander {
    pub fn new() -> Self {
        let mut bindings = BTreeMap::new();
        let mut names = Vec::new();
        let (n1, n2) = (nabla1(), nabla2());
        for j in invariants::catalog() {
            for d in [&n1, &n2] {
                let key = format!("{}_{}", d.name, j.name);
                let body = d.apply(&j.body).expect("catalog invariants differentiate");
                bindings.insert(Symbol::new(&key), body);
                names.push(key);
            }
            names.push(j.name.clone());
            bindings.insert(Symbol::new(&j.name), j.body);
        }
        let vocab = Vocabulary::jet(&JetContext::new(6))
            .with_constants(names.iter().map(String::as_str));
        Expander { bindings, vocab }
    }

    pub fn expand(&self, src: &str) -> Result<Expr> {
        let e = parse_expression(src, &self.vocab)?;
        e.substitute(&self.bindings, DEFAULT_TERM_LIMIT)
    }

    pub fn check(&self, rel: &Relation) -> Result<IdentityCheck> {
        let lhs = self.expand(&rel.lhs)?;
        let rhs = self.expand(&rel.rhs)?;
        Ok(IdentityCheck::new(rel.name.clone(), lhs, rhs))
    }
}

/// Checks each relation after full expansion.
pub fn verify_relations(rels: &[Relation]) -> Result<Vec<IdentityCheck>> {
    let ex = Expander::new();
    rels.par_iter().map(|r| ex.check(r)).collect()
}

pub fn verify_syzygies() -> Result<Vec<IdentityCheck>> {
    verify_relations(&relations())
}

/// First failing check as an error.
pub fn first_failure(checks: &[IdentityCheck], commutator: bool) -> Result<()> {
    match checks.iter().find(|c| !c.pass) {
        None => Ok(()),
        Some(c) if commutator => Err(Error::IdentityFailed {
            probe: c.name.clone(),
            residual: c.residual.to_string(),
        }),
        Some(c) => Err(Error::SyzygyFailed {
            relation: c.name.clone(),
            residual: c.residual.to_string(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderSummary {
    pub order: usize,
    pub candidates: Vec<String>,
    pub kept: Vec<String>,
    /// Candidates dependent on the invariants kept before them.
    pub dependent: Vec<String>,
    /// Cumulative Jacobian rank after this order, at each sample point.
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub invariants: Vec<Invariant>,
    pub orders: Vec<OrderSummary>,
    pub points: Vec<JetPoint>,
    pub tol: f64,
    vars: Vec<Symbol>,
    /// Gradient of each kept invariant at each point: `rows[point][invariant]`.
    rows: Vec<Vec<Vec<f64>>>,
}

impl Generation {
    /// Whether `e` is functionally dependent on the generated set at every sample point.
    pub fn spans(&self, e: &Expr) -> Result<bool> {
        let max = self.orders.last().map_or(0, |o| o.order);
        if e.jet_order().is_some_and(|k| k > max) {
            return Ok(false);
        }
        let extra = gradients(e, &self.vars, &self.points)?;
        let base = self.invariants.len();
        Ok(self
            .rows
            .iter()
            .zip(extra)
            .all(|(rows, g)| stacked_rank(rows, Some(g), self.tol) == base))
    }
}

/// Number of sample points used for the independence test.
pub const GENERATION_POINTS: usize = 5;

/// Gradient of `e` over `vars` evaluated at each point.
fn gradients(e: &Expr, vars: &[Symbol], points: &[JetPoint]) -> Result<Vec<Vec<f64>>> {
    let partials: Vec<Expr> = vars.iter().map(|x| e.diff(x)).collect();
    points
        .iter()
        .map(|p| {
            let row = linalg::evaluate_matrix(std::slice::from_ref(&partials), p)?;
            Ok(row.iter().copied().collect())
        })
        .collect()
}

fn stacked_rank(rows: &[Vec<f64>], extra: Option<Vec<f64>>, tol: f64) -> usize {
    let ncols = rows.first().or(extra.as_ref()).map_or(0, Vec::len);
    let all: Vec<f64> = rows.iter().chain(extra.as_ref()).flatten().copied().collect();
    let nrows = all.len().checked_div(ncols).unwrap_or(0);
    linalg::rank(&DMatrix::from_row_slice(nrows, ncols, &all), tol)
}

/// Applies ∇₁, ∇₂ to the invariants kept at the previous order and keeps a
/// maximal independent subset, decided by Jacobian rank at sampled points.
pub fn generate_invariants(max_order: usize, seed: u64, tol: f64) -> Result<Generation> {
    if max_order < 2 {
        return Err(Error::Invalid("max order must be at least 2".into()));
    }
    let points = sampling::regular_points(seed, GENERATION_POINTS, max_order);
    let vars: Vec<Symbol> = MultiIndex::up_to(max_order).into_iter().map(Symbol::fiber).collect();
    let mut rows: Vec<Vec<Vec<f64>>> = vec![Vec::new(); points.len()];
    let mut kept: Vec<Invariant> = Vec::new();
    let mut orders = Vec::new();
    let mut frontier: Vec<Invariant> = Vec::new();
    let (n1, n2) = (nabla1(), nabla2());
    for order in 2..=max_order {
        let candidates: Vec<Invariant> = if order == 2 {
            invariants::catalog_of_order(2)
        } else {
            frontier
                .iter()
                .flat_map(|j| [(j, &n1), (j, &n2)])
                .collect::<Vec<_>>()
                .par_iter()
                .map(|(j, d)| apply_derivation(d, j))
                .collect::<Result<_>>()?
        };
        let grads: Vec<Vec<Vec<f64>>> = candidates
            .par_iter()
            .map(|c| gradients(&c.body, &vars, &points))
            .collect::<Result<_>>()?;
        let mut summary = OrderSummary {
            order,
            candidates: candidates.iter().map(|c| c.name.clone()).collect(),
            kept: Vec::new(),
            dependent: Vec::new(),
            ranks: Vec::new(),
        };
        let mut fresh = Vec::new();
        for (c, g) in candidates.into_iter().zip(grads) {
            let target = kept.len() + 1;
            let independent = rows
                .iter()
                .zip(&g)
                .all(|(r, gi)| stacked_rank(r, Some(gi.clone()), tol) == target);
            if independent {
                for (r, gi) in rows.iter_mut().zip(g) {
                    r.push(gi);
                }
                summary.kept.push(c.name.clone());
                kept.push(c.clone());
                fresh.push(c);
            } else {
                summary.dependent.push(c.name.clone());
            }
        }
        summary.ranks = rows.iter().map(|r| stacked_rank(r, None, tol)).collect();
        let expected = invariants::mu(order);
        if fresh.len() != expected {
            return Err(Error::RankDeficiency {
                order,
                found: fresh.len(),
                expected,
            });
        }
        orders.push(summary);
        frontier = fresh;
    }
    Ok(Generation {
        invariants: kept,
        orders,
        points,
        tol,
        vars,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;

    fn j(n: &str) -> Invariant {
        invariants::lookup(n).unwrap()
    }

    #[test]
    fn nabla_on_order_two() {
        let ex = Expander::new();
        let d = apply_derivation(&nabla1(), &j("J21")).unwrap();
        assert_eq!(d.name, "D1(J21)");
        assert_eq!(d.order, 3);
        assert_eq!(d.body, ex.expand("J21 - 2*J21^2 + J31").unwrap());
        let d = apply_derivation(&nabla2(), &j("J22")).unwrap();
        assert_eq!(d.body, ex.expand("J22 - J22^2 + J33").unwrap());
        assert!(nabla2().apply(&Expr::one()).unwrap().is_zero());
        assert_eq!(nabla1().apply(&Expr::sym("z")).unwrap(), Expr::sym("z"));
    }

    #[test]
    fn derived_invariants_stay_invariant() {
        for inv in invariants::catalog_up_to(3) {
            for d in [nabla1(), nabla2()] {
                let r = invariants::verify_invariance(&apply_derivation(&d, &inv).unwrap()).unwrap();
                assert!(r.pass(), "{}", r.invariant);
            }
        }
    }

    #[test]
    fn commutator_on_probes() {
        let checks = verify_commutator().unwrap();
        assert_eq!(checks.len(), 6);
        for c in &checks {
            assert!(c.pass, "{}: {}", c.name, c.residual);
        }
        let z = &checks[0];
        assert!(z.lhs.is_zero() && z.rhs.is_zero());
        assert!(first_failure(&checks, true).is_ok());
    }

    #[test]
    fn all_relations_hold() {
        let checks = verify_syzygies().unwrap();
        assert_eq!(checks.len(), 19);
        for c in &checks {
            assert!(c.pass, "{}: {}", c.name, c.residual);
        }
    }

    #[test]
    fn altered_coefficients_fail() {
        let ex = Expander::new();
        for (lhs, rhs) in [
            ("D1_J33", "2*J33 - 2*J21*J33 - 3*J22*J33 + J43"),
            ("D1_J44", "3*J44 - J21*J44 - 4*J22*J44 - J33^2 + J54"),
        ] {
            let c = ex.check(&Relation::new("alt", lhs, rhs)).unwrap();
            assert!(!c.pass);
        }
        let c = ex.check(&Relation::new("alt", "D1_J33", "2*J33")).unwrap();
        assert!(matches!(
            first_failure(&[c], false),
            Err(Error::SyzygyFailed { .. })
        ));
    }

    #[test]
    fn leibniz() {
        let (a, b) = (j("J21"), j("J32"));
        for d in [nabla1(), nabla2()] {
            let lhs = d.apply(&(&a.body * &b.body)).unwrap();
            let rhs = &(&d.apply(&a.body).unwrap() * &b.body) + &(&a.body * &d.apply(&b.body).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn generation_through_order_four() {
        let g = generate_invariants(2, 1, DEFAULT_TOL).unwrap();
        assert_eq!(g.invariants.len(), 2);
        let g = generate_invariants(4, 1, DEFAULT_TOL).unwrap();
        assert_eq!(g.invariants.len(), 9);
        assert_eq!(g.orders[1].candidates.len(), 4);
        assert_eq!(g.orders[1].kept.len(), 3);
        assert_eq!(g.orders[2].candidates.len(), 6);
        assert_eq!(g.orders[2].dependent.len(), 2);
        assert!(g.orders[2].ranks.iter().all(|&r| r == 9));
        for inv in invariants::catalog_up_to(4) {
            assert!(g.spans(&inv.body).unwrap(), "{}", inv.name);
        }
        assert!(!g.spans(&Expr::sym("z_yyyyy")).unwrap());
        assert!(!g.spans(&Expr::sym("z_yyuu")).unwrap());
    }
}
