//! Orbit dimensions of the prolonged pseudo-group action, evaluated numerically.
//!
//! The arbitrary function in Y₄ enters a prolonged field at a point only
//! through its jet `H(u₀), H'(u₀), …, H⁽ᵏ⁾(u₀)`, so the family `H(u)∂/∂u` is
//! replaced by the monomials `u⁰, …, uᵏ`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol, DEFAULT_TERM_LIMIT};
use crate::fields::{self, catalog, evolutionary_restriction};
use crate::invariants;
use crate::jet::{fiber_dimension, evaluate, JetContext, JetPoint};
use crate::linalg;
use crate::sampling;

/// Generic points used to establish the maximal rank at each order.
pub const REFERENCE_POINTS: usize = 20;
const REFERENCE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentSpan {
    pub point: JetPoint,
    pub order: usize,
    /// Rows Y1, Y2, Y3, then Y4 with H = u⁰ … uᵏ; columns y, u, fibers.
    pub vectors: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub tol: f64,
    /// False when the rank changes if `tol` moves by one decade either way.
    pub stable: bool,
}

type Rows = Arc<Vec<Vec<Expr>>>;

/// Components of Y1..Y4 prolonged to order k, as symbolic rows.
fn prolonged_rows(k: usize) -> Result<Rows> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Rows>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().expect("cache lock").get(&k) {
        return Ok(r.clone());
    }
    let rows = catalog::generators()
        .iter()
        .map(|g| {
            let p = fields::prolong(g, k)?;
            Ok(p.components().into_iter().map(|(_, c)| c).collect())
        })
        .collect::<Result<Vec<Vec<Expr>>>>()?;
    let rows = Arc::new(rows);
    cache.lock().expect("cache lock").insert(k, rows.clone());
    Ok(rows)
}

/// `d^r/du^r (u^m)` at `u0`.
fn monomial_derivative(m: usize, r: usize, u0: f64) -> f64 {
    if r > m {
        return 0.0;
    }
    let falling: f64 = ((m - r + 1)..=m).map(|i| i as f64).product();
    falling * u0.powi((m - r) as i32)
}

fn evaluate_row(row: &[Expr], p: &JetPoint) -> Result<Vec<f64>> {
    row.iter()
        .map(|e| if e.is_zero() { Ok(0.0) } else { evaluate(e, p) })
        .collect()
}

/// Z^k(θ): the span of the prolonged generators at θ.
pub fn tangent_span(theta: &JetPoint, k: usize, tol: f64) -> Result<TangentSpan> {
    let ctx = JetContext::new(k);
    if !theta.covers(&ctx) {
        return Err(Error::Invalid(format!(
            "point does not assign every coordinate of J^{k}"
        )));
    }
    let rows = prolonged_rows(k)?;
    let ncols = ctx.dimension();
    let mut data: Vec<Vec<f64>> = Vec::with_capacity(3 + k + 1);
    for row in &rows[..3] {
        data.push(evaluate_row(row, theta)?);
    }
    let u0 = theta.get(&Symbol::u()).expect("covered");
    for m in 0..=k {
        let mut p = theta.clone();
        for r in 0..=k {
            p.set(
                &Symbol::tower(catalog::HEIGHT_TOWER, r),
                monomial_derivative(m, r, u0),
            );
        }
        data.push(evaluate_row(&rows[3], &p)?);
    }
    let flat: Vec<f64> = data.iter().flatten().copied().collect();
    let vectors = DMatrix::from_row_slice(data.len(), ncols, &flat);
    let singular_values = linalg::singular_values(&vectors);
    let rank = linalg::rank_of(&singular_values, tol);
    let stable = linalg::rank_of(&singular_values, tol * 10.0) == rank
        && linalg::rank_of(&singular_values, tol / 10.0) == rank;
    Ok(TangentSpan {
        point: theta.clone(),
        order: k,
        vectors,
        singular_values,
        rank,
        tol,
        stable,
    })
}

/// Largest rank of Z^k over the reference sample.
pub fn maximal_rank(k: usize, tol: f64) -> Result<usize> {
    static CACHE: OnceLock<Mutex<BTreeMap<(usize, u64), usize>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (k, tol.to_bits());
    if let Some(&r) = cache.lock().expect("cache lock").get(&key) {
        return Ok(r);
    }
    let ranks = sampling::regular_points(REFERENCE_SEED, REFERENCE_POINTS, k)
        .par_iter()
        .map(|p| tangent_span(p, k, tol).map(|s| s.rank))
        .collect::<Result<Vec<_>>>()?;
    let r = ranks.into_iter().max().unwrap_or(0);
    cache.lock().expect("cache lock").insert(key, r);
    Ok(r)
}

/// θ is regular when Z^l has maximal rank at its projection to every J^l, l ≤ k.
pub fn is_regular(theta: &JetPoint, k: usize, tol: f64) -> Result<bool> {
    for l in 0..=k {
        let span = tangent_span(&theta.project(l), l, tol)?;
        if span.rank < maximal_rank(l, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodimSample {
    pub index: usize,
    pub rank: usize,
    pub codim: usize,
    pub stable: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodimReport {
    pub order: usize,
    pub dim_jet: usize,
    pub nu: usize,
    pub samples: Vec<CodimSample>,
    pub passed: usize,
}

impl CodimReport {
    pub fn pass(&self) -> bool {
        self.passed == self.samples.len()
    }

    pub fn into_result(self) -> Result<Self> {
        if let Some(s) = self.samples.iter().find(|s| !s.pass) {
            return Err(Error::CodimMismatch {
                order: self.order,
                sample: s.index,
                observed: s.codim,
                expected: self.nu,
            });
        }
        Ok(self)
    }
}

/// Checks dim J^k − rank Z^k = ν(k) at `samples` seeded regular points.
pub fn verify_codimension(k: usize, samples: usize, seed: u64, tol: f64) -> Result<CodimReport> {
    if k == 0 {
        return Err(Error::Invalid("codimension check needs order >= 1".into()));
    }
    let dim_jet = JetContext::new(k).dimension();
    let nu = invariants::nu(k);
    let results = (0..samples)
        .into_par_iter()
        .map(|i| {
            let p = sampling::regular_point(&mut sampling::stream(seed, i as u64), k);
            let span = tangent_span(&p, k, tol)?;
            let codim = dim_jet - span.rank;
            Ok(CodimSample {
                index: i,
                rank: span.rank,
                codim,
                stable: span.stable,
                pass: codim == nu && span.stable,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = results.iter().filter(|s| s.pass).count();
    Ok(CodimReport {
        order: k,
        dim_jet,
        nu,
        samples: results,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumReport {
    pub order: usize,
    pub dim_stratum: usize,
    pub expected_rank: usize,
    pub ranks: Vec<usize>,
    /// Order 0 lies outside the range of the rank formula; its result is not asserted.
    pub informational: bool,
    pub pass: bool,
}

impl StratumReport {
    pub fn into_result(self) -> Result<Self> {
        if !self.pass {
            let observed = self
                .ranks
                .iter()
                .copied()
                .find(|&r| r != self.expected_rank)
                .unwrap_or(0);
            return Err(Error::RankMismatch {
                order: self.order,
                observed,
                expected: self.expected_rank,
            });
        }
        Ok(self)
    }
}

/// Fiber components of the evolutionary Z₁, Z₂, Z₃[uᵐ] (m ≤ k) restricted to y = u = 0.
fn stratum_rows(k: usize) -> Result<Vec<Vec<Expr>>> {
    let mut fields = vec![catalog::z1(), catalog::z2()];
    fields.extend((0..=k as u32).map(catalog::z3_monomial));
    let origin: BTreeMap<Symbol, Expr> = [(Symbol::y(), Expr::zero()), (Symbol::u(), Expr::zero())]
        .into_iter()
        .collect();
    fields
        .iter()
        .map(|f| {
            let evo = evolutionary_restriction(f, k)?;
            evo.components()
                .into_iter()
                .skip(2)
                .map(|(_, c)| c.substitute(&origin, DEFAULT_TERM_LIMIT))
                .collect()
        })
        .collect()
}

/// Rank of the stratum tangent vectors on N^k = {y = 0, u = 0}.
pub fn verify_stratum_rank(k: usize, samples: usize, seed: u64, tol: f64) -> Result<StratumReport> {
    let rows = stratum_rows(k)?;
    let dim_stratum = fiber_dimension(k);
    let ranks = (0..samples)
        .into_par_iter()
        .map(|i| {
            let p = sampling::regular_point(&mut sampling::stream(seed, i as u64), k)
                .with("y", 0.0)
                .with("u", 0.0);
            let m = linalg::evaluate_matrix(&rows, &p)?;
            Ok(linalg::rank(&m, tol))
        })
        .collect::<Result<Vec<_>>>()?;
    let expected_rank = k + 2;
    let informational = k == 0;
    let pass = informational || ranks.iter().all(|&r| r == expected_rank);
    Ok(StratumReport {
        order: k,
        dim_stratum,
        expected_rank,
        ranks,
        informational,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;

    fn generic(k: usize, i: u64) -> JetPoint {
        sampling::regular_point(&mut sampling::stream(99, i), k)
    }

    #[test]
    fn order_zero_spans() {
        let p = JetPoint::from_pairs([("y", 0.3), ("u", -1.2), ("z", 0.7)]);
        assert_eq!(tangent_span(&p, 0, DEFAULT_TOL).unwrap().rank, 3);
        let p = p.with("z", 0.0);
        assert_eq!(tangent_span(&p, 0, DEFAULT_TOL).unwrap().rank, 2);
    }

    #[test]
    fn order_two_hand_point() {
        let p = JetPoint::from_pairs([
            ("y", 1.0),
            ("u", 2.0),
            ("z", 1.0),
            ("z_y", 2.0),
            ("z_u", -1.0),
            ("z_yy", 3.0),
            ("z_yu", 0.5),
            ("z_uu", -2.0),
        ]);
        let s = tangent_span(&p, 2, DEFAULT_TOL).unwrap();
        assert_eq!(s.vectors.shape(), (6, 8));
        assert_eq!(s.rank, 6);
        assert!(s.stable);
    }

    #[test]
    fn generic_ranks() {
        let expected = [3, 5, 6, 7, 8, 9];
        for (k, &r) in expected.iter().enumerate() {
            assert_eq!(maximal_rank(k, DEFAULT_TOL).unwrap(), r, "order {k}");
        }
    }

    #[test]
    fn singular_hyperplanes() {
        let p = generic(3, 0);
        assert!(is_regular(&p, 2, DEFAULT_TOL).unwrap());
        assert!(!is_regular(&p.clone().with("z_y", 0.0), 2, DEFAULT_TOL).unwrap());
        assert!(!is_regular(&p.clone().with("z_u", 0.0), 3, DEFAULT_TOL).unwrap());
        assert!(!is_regular(&p.with("z", 0.0), 2, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn codimension_small_orders() {
        for k in 1..=3 {
            let r = verify_codimension(k, 20, 3, DEFAULT_TOL).unwrap();
            assert!(r.pass(), "order {k}: {:?}", r.samples);
            assert_eq!(r.nu, invariants::nu(k));
        }
        assert!(verify_codimension(0, 1, 0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn stratum_ranks() {
        let r = verify_stratum_rank(2, 10, 1, DEFAULT_TOL).unwrap();
        assert_eq!((r.dim_stratum, r.expected_rank), (6, 4));
        assert!(r.pass);
        assert!(r.ranks.iter().all(|&x| x == 4));
        let r = verify_stratum_rank(0, 3, 1, DEFAULT_TOL).unwrap();
        assert!(r.informational);
        assert_eq!(r.ranks, vec![1, 1, 1]);
        assert_eq!(r.dim_stratum, 1);
    }

    #[test]
    fn rank_survives_fiber_scaling() {
        for k in 1..=3 {
            let p = generic(k, 5);
            let base = tangent_span(&p, k, DEFAULT_TOL).unwrap().rank;
            for lambda in [0.5, 2.0, 10.0] {
                let mut q = p.clone();
                for (name, v) in p.iter() {
                    if name.starts_with('z') {
                        q = q.with(name, v * lambda);
                    }
                }
                assert_eq!(tangent_span(&q, k, DEFAULT_TOL).unwrap().rank, base);
            }
        }
    }

    #[test]
    fn rank_is_monotone_in_order() {
        let p = generic(4, 8);
        let ranks: Vec<usize> = (0..=4)
            .map(|k| tangent_span(&p.project(k), k, DEFAULT_TOL).unwrap().rank)
            .collect();
        assert!(ranks.windows(2).all(|w| w[1] >= w[0]), "{ranks:?}");
    }

    #[test]
    fn monomial_jets() {
        assert_eq!(monomial_derivative(3, 1, 2.0), 12.0);
        assert_eq!(monomial_derivative(3, 3, 2.0), 6.0);
        assert_eq!(monomial_derivative(2, 3, 2.0), 0.0);
        assert_eq!(monomial_derivative(0, 0, 5.0), 1.0);
    }
}
