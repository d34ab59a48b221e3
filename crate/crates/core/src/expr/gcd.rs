//! Multivariate gcd over ℤ[x₁..xₙ].
//!
//! Monomial and constant operands take a direct path; everything else goes
//! through a recursive primitive pseudo-remainder sequence in one shared
//! variable, with contents handled one level down. The result is normalized
//! to a positive leading coefficient.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use super::poly::{Monomial, Poly};
use super::Symbol;

pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    normalize_sign(gcd_inner(a, b))
}

fn normalize_sign(p: Poly) -> Poly {
    if p.leading_coeff_sign_negative() {
        p.neg()
    } else {
        p
    }
}

fn gcd_inner(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::constant(a.content().gcd(&b.content()));
    }
    if let Some((m, c)) = a.as_single_term() {
        return monomial_gcd(m, c, b);
    }
    if let Some((m, c)) = b.as_single_term() {
        return monomial_gcd(m, c, a);
    }

    // Pull out integer and monomial contents first.
    let ca = a.content();
    let cb = b.content();
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let int_g = ca.gcd(&cb);
    let mono_g = ma.gcd(&mb);
    let a = strip(a, &ca, &ma);
    let b = strip(b, &cb, &mb);

    let core = primitive_gcd(&a, &b);
    core.mul_term(&mono_g, &int_g)
}

fn strip(p: &Poly, c: &BigInt, m: &Monomial) -> Poly {
    let q = if c.is_one() { p.clone() } else { p.div_int(c) };
    if m.is_one() {
        q
    } else {
        q.div_monomial(m).expect("monomial content divides")
    }
}

fn monomial_gcd(m: &Monomial, c: &BigInt, other: &Poly) -> Poly {
    let g = m.gcd(&other.monomial_content());
    let k = c.abs().gcd(&other.content());
    Poly::term(g, k)
}

/// gcd of two polynomials with unit integer content and no monomial content.
fn primitive_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.clone();
    }
    let va = a.variables();
    let vb = b.variables();
    // A variable in only one operand: gcd divides that operand's content in it.
    if let Some(x) = va.difference(&vb).next() {
        let c = content_in(a, x);
        return gcd_inner(&c, b);
    }
    if let Some(x) = vb.difference(&va).next() {
        let c = content_in(b, x);
        return gcd_inner(a, &c);
    }
    // Shared variable with the smallest combined degree keeps the PRS short.
    let x = va
        .iter()
        .min_by_key(|s| a.degree_in(s) + b.degree_in(s))
        .expect("non-constant")
        .clone();

    let ua = a.to_univariate(&x);
    let ub = b.to_univariate(&x);
    let ca = coeff_gcd(&ua);
    let cb = coeff_gcd(&ub);
    let cont = gcd_inner(&ca, &cb);
    let pa = primitive_part(&ua, &ca);
    let pb = primitive_part(&ub, &cb);

    let g = univariate_prs(pa, pb);
    let g = Poly::from_univariate(&x, &g);
    normalize_sign(g.mul(&cont))
}

fn content_in(p: &Poly, x: &Symbol) -> Poly {
    coeff_gcd(&p.to_univariate(x))
}

fn coeff_gcd(coeffs: &[Poly]) -> Poly {
    let mut nonzero = coeffs.iter().filter(|c| !c.is_zero());
    let Some(first) = nonzero.next() else {
        return Poly::zero();
    };
    let mut g = normalize_sign(first.clone());
    for c in nonzero {
        if g.is_one() {
            break;
        }
        g = normalize_sign(gcd_inner(&g, c));
    }
    g
}

fn primitive_part(coeffs: &[Poly], content: &Poly) -> Vec<Poly> {
    if content.is_one() {
        return coeffs.to_vec();
    }
    coeffs
        .iter()
        .map(|c| c.exact_div(content).expect("content divides every coefficient"))
        .collect()
}

fn trim(v: &mut Vec<Poly>) {
    while v.len() > 1 && v.last().is_some_and(Poly::is_zero) {
        v.pop();
    }
}

fn degree(v: &[Poly]) -> Option<usize> {
    v.iter().rposition(|c| !c.is_zero())
}

/// Sparse pseudo-remainder of `a` by `b` (both univariate in the outer variable).
fn prem(mut a: Vec<Poly>, b: &[Poly]) -> Vec<Poly> {
    let db = degree(b).expect("nonzero divisor");
    let lb = &b[db];
    while let Some(da) = degree(&a) {
        if da < db {
            break;
        }
        let la = a[da].clone();
        let shift = da - db;
        for c in a.iter_mut() {
            *c = c.mul(lb);
        }
        for (k, bk) in b.iter().enumerate() {
            if !bk.is_zero() {
                a[k + shift] = a[k + shift].sub(&bk.mul(&la));
            }
        }
        debug_assert!(a[da].is_zero());
        trim(&mut a);
        if a.len() == 1 && a[0].is_zero() {
            break;
        }
    }
    a
}

fn univariate_prs(mut a: Vec<Poly>, mut b: Vec<Poly>) -> Vec<Poly> {
    trim(&mut a);
    trim(&mut b);
    if degree(&a) < degree(&b) {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        let db = degree(&b).unwrap_or(0);
        if db == 0 {
            // b is a nonzero element of the coefficient ring, and both inputs are primitive.
            return vec![Poly::one()];
        }
        let r = prem(a, &b);
        match degree(&r) {
            None => return b,
            Some(0) if r[0].is_zero() => return b,
            Some(0) => return vec![Poly::one()],
            Some(_) => {
                let c = coeff_gcd(&r);
                let pr = primitive_part(&r, &c);
                a = b;
                b = pr;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Poly {
        Poly::var(Symbol::new(s))
    }
    fn k(n: i64) -> Poly {
        Poly::constant(BigInt::from(n))
    }

    #[test]
    fn gcd_of_products_recovers_common_factor() {
        let common = v("x").mul(&v("y")).add(&k(1));
        let a = common.mul(&v("x").add(&v("z")));
        let b = common.mul(&v("y").sub(&k(3)));
        assert_eq!(gcd(&a, &b), common);
    }

    #[test]
    fn gcd_handles_monomials_and_contents() {
        let a = v("x").pow(3).mul(&v("y")).scale(&BigInt::from(6));
        let b = v("x").pow(2).mul(&v("z")).scale(&BigInt::from(4))
            .add(&v("x").pow(5).scale(&BigInt::from(2)));
        assert_eq!(gcd(&a, &b), v("x").pow(2).scale(&BigInt::from(2)));
    }

    #[test]
    fn gcd_with_power_of_common_factor() {
        let f = v("u").pow(2).mul(&v("y")).add(&v("u"));
        let g = v("u").mul(&v("y")).scale(&BigInt::from(2)).add(&k(1));
        let a = f.mul(&g).mul(&g);
        let b = g.pow(3).mul(&v("y"));
        assert_eq!(gcd(&a, &b), g.mul(&g));
    }

    #[test]
    fn coprime_inputs_give_unit() {
        let a = v("x").add(&v("y"));
        let b = v("x").sub(&v("y"));
        assert!(gcd(&a, &b).is_one());
        assert!(gcd(&Poly::zero(), &a) == a);
        assert!(!gcd(&a, &a.scale(&BigInt::from(-2))).is_zero());
    }

    #[test]
    fn sign_is_normalized() {
        let a = v("x").neg().add(&k(1));
        let g = gcd(&a, &a);
        assert!(!g.leading_coeff_sign_negative());
    }
}
