//! Invariants restricted to a concrete right-hand side `f(y, u)`, the
//! normal-form tests built on them, and the determining equations for point
//! symmetries of the equation class.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol, SymbolKind, DEFAULT_TERM_LIMIT};
use crate::invariants::{self, Invariant};
use crate::jet::{evaluate, JetContext, JetPoint, MultiIndex};
use crate::parse::{parse_expression, Vocabulary};

/// Tower depth used when differentiating abstract functions of `u`.
const TOWER_DEPTH: usize = 64;

/// Default upper bound on the exponent tried for the power normal form.
pub const DEFAULT_N_MAX: u32 = 10;

/// A right-hand side `f(y, u)`: rational in `y`, `u`, free constants and
/// abstract functions of `u` written as towers (`alpha_0`, `alpha_1`, …).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFunction {
    body: Expr,
}

impl ControlFunction {
    pub fn new(body: Expr) -> Result<Self> {
        for s in body.symbols() {
            match s.kind() {
                SymbolKind::Fiber(_) => {
                    return Err(Error::Invalid(format!(
                        "control function may not contain jet coordinate {s}"
                    )))
                }
                SymbolKind::Base if s != Symbol::y() && s != Symbol::u() => {
                    return Err(Error::Invalid(format!(
                        "control function depends on y and u only, found {s}"
                    )))
                }
                _ => {}
            }
        }
        Ok(ControlFunction { body })
    }

    /// Input vocabulary: `y`, `u`, towers `name_<n>` and any other identifier as a constant.
    pub fn vocabulary() -> Vocabulary {
        Vocabulary::base_functions().with_any_constant()
    }

    pub fn parse(src: &str) -> Result<Self> {
        ControlFunction::new(parse_expression(src, &Self::vocabulary())?)
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    /// ∂^σ f, with towers shifting under ∂/∂u.
    pub fn partial(&self, sigma: MultiIndex) -> Result<Expr> {
        JetContext::new(0)
            .with_tower_depth(TOWER_DEPTH)
            .total_derivative_multi(&self.body, sigma)
    }

    /// `z_σ ↦ ∂^σ f` for |σ| ≤ k.
    pub fn bindings(&self, k: usize) -> Result<BTreeMap<Symbol, Expr>> {
        MultiIndex::up_to(k)
            .into_iter()
            .map(|s| Ok((Symbol::fiber(s), self.partial(s)?)))
            .collect()
    }

    /// Whether the body has no free constants or abstract functions.
    pub fn is_concrete(&self) -> bool {
        self.body.symbols().iter().all(|s| s.kind() == SymbolKind::Base)
    }
}

impl fmt::Display for ControlFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.body.fmt(f)
    }
}

fn partial_name(sigma: MultiIndex) -> String {
    let mut s = String::from("f");
    if sigma.order() > 0 {
        s.push('_');
        s.push_str(&"y".repeat(sigma.y));
        s.push_str(&"u".repeat(sigma.u));
    }
    s
}

fn restrict_with(j: &Invariant, bindings: &BTreeMap<Symbol, Expr>) -> Result<Expr> {
    for s in j.body.denom().variables() {
        if let Some(sigma) = s.as_fiber() {
            if bindings.get(&s).is_some_and(Expr::is_zero) {
                return Err(Error::IdenticallySingular(format!(
                    "{} divides by {s}, but {} vanishes identically",
                    j.name,
                    partial_name(sigma)
                )));
            }
        }
    }
    j.body
        .substitute(bindings, DEFAULT_TERM_LIMIT)
        .map_err(|e| match e {
            Error::ZeroDenominator => Error::IdenticallySingular(format!(
                "denominator of {} vanishes identically: {}",
                j.name,
                j.body.denom()
            )),
            other => other,
        })
}

/// J(f): the invariant with every `z_σ` replaced by `∂^σ f`.
pub fn restrict(j: &Invariant, f: &ControlFunction) -> Result<Expr> {
    restrict_with(j, &f.bindings(j.order)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum NormalForm {
    /// `y'' + (α(u) y)^n = 0`
    Power { n: u32 },
    /// `y'' + α(u) y + β(u) = 0`
    Affine,
    /// `y'' + α(u) y² + β(u) y + γ(u) = 0`
    Quadratic,
    None,
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalForm::Power { n } => write!(f, "power(n={n})"),
            NormalForm::Affine => f.write_str("affine"),
            NormalForm::Quadratic => f.write_str("quadratic"),
            NormalForm::None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormVerdict {
    /// The first match in the order affine, quadratic, power(1..n_max).
    pub form: NormalForm,
    pub matches: Vec<NormalForm>,
    /// Restricted values of J21, J22, J31, J32, J33 that could be computed.
    pub evidence: BTreeMap<String, Expr>,
    /// Set when the power test could not run (an invariant is undefined for f).
    pub note: Option<String>,
}

/// The constants the power form with exponent n forces on J21, J22, J31, J32, J33.
pub fn power_form_values(n: u32) -> [(&'static str, Expr); 5] {
    let n = i64::from(n);
    let r = Expr::rational(n - 1, n);
    [
        ("J21", r.clone()),
        ("J22", Expr::one()),
        ("J31", Expr::rational((n - 1) * (n - 2), n * n)),
        ("J32", r),
        ("J33", Expr::zero()),
    ]
}

/// Runs the three normal-form tests and reports every form that matches.
pub fn classify(f: &ControlFunction, n_max: u32) -> Result<NormalFormVerdict> {
    if n_max < 1 {
        return Err(Error::Invalid("n_max must be at least 1".into()));
    }
    let bindings = f.bindings(3)?;
    let mut evidence = BTreeMap::new();
    let mut matches = Vec::new();
    let get = |name: &str| invariants::lookup(name).expect("catalog");

    let j21 = restrict_with(&get("J21"), &bindings)?;
    let j31 = restrict_with(&get("J31"), &bindings)?;
    if j21.is_zero() {
        matches.push(NormalForm::Affine);
    }
    if j31.is_zero() {
        matches.push(NormalForm::Quadratic);
    }
    evidence.insert("J21".to_string(), j21);
    evidence.insert("J31".to_string(), j31);

    let mut note = None;
    let mut rest = Vec::new();
    for name in ["J22", "J32", "J33"] {
        match restrict_with(&get(name), &bindings) {
            Ok(v) => rest.push((name, v)),
            Err(Error::IdenticallySingular(msg)) if !matches.is_empty() => {
                note = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if note.is_none() {
        evidence.extend(rest.into_iter().map(|(n, v)| (n.to_string(), v)));
        for n in 1..=n_max {
            let hit = power_form_values(n)
                .iter()
                .all(|(name, value)| evidence.get(*name) == Some(value));
            if hit {
                matches.push(NormalForm::Power { n });
            }
        }
    }
    Ok(NormalFormVerdict {
        form: matches.first().copied().unwrap_or(NormalForm::None),
        matches,
        evidence,
        note,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminingReport {
    /// `A_yy`, `B_yy − 2A_xy`, `2B_xy − A_xx − 3fA_y`, each with `f` abstract.
    pub equations: Vec<(String, Expr)>,
    /// Third equation split into its `f`-free part and its coefficient of `f`.
    pub f_free: Expr,
    pub f_coefficient: Expr,
    /// `G = B_xx − C f_u − B f_y + f B_y − 2 f A_x`, with `f`, `f_y`, `f_u`, `C` abstract.
    pub g: Expr,
    /// `G` with a concrete f substituted, when one was supplied.
    pub g_for_f: Option<Expr>,
    pub pass: bool,
}

impl DeterminingReport {
    pub fn into_result(self) -> Result<Self> {
        if !self.f_free.is_zero() {
            return Err(Error::NotAdmissible {
                equation: "2B_xy - A_xx - 3fA_y (f-free part)".into(),
                residual: self.f_free.to_string(),
            });
        }
        if !self.f_coefficient.is_zero() {
            return Err(Error::NotAdmissible {
                equation: "2B_xy - A_xx - 3fA_y (coefficient of f)".into(),
                residual: self.f_coefficient.to_string(),
            });
        }
        if let Some((name, residual)) = self.equations.iter().take(2).find(|(_, e)| !e.is_zero()) {
            return Err(Error::NotAdmissible {
                equation: name.clone(),
                residual: residual.to_string(),
            });
        }
        Ok(self)
    }
}

/// Vocabulary for the components A(x, y), B(x, y).
pub fn field_vocabulary() -> Vocabulary {
    Vocabulary::base_functions()
        .only_base(&["x", "y"])
        .with_any_constant()
}

/// Evaluates the determining equations of a point symmetry
/// `A ∂x + B ∂y + C(u) ∂u` for all f at once.
pub fn check_determining_equations(
    a: &Expr,
    b: &Expr,
    f: Option<&ControlFunction>,
) -> Result<DeterminingReport> {
    for s in a.symbols().into_iter().chain(b.symbols()) {
        let bad = match s.kind() {
            SymbolKind::Base => s == Symbol::u(),
            SymbolKind::Fiber(_) | SymbolKind::Tower { .. } => true,
            SymbolKind::Constant => matches!(s.name(), "f" | "f_y" | "f_u" | "C"),
        };
        if bad {
            return Err(Error::Invalid(format!(
                "A and B depend on x, y and constants only, found {s}"
            )));
        }
    }
    let (x, y) = (Symbol::x(), Symbol::y());
    let fs = Expr::sym("f");
    let d = |e: &Expr, s: &[&Symbol]| s.iter().fold(e.clone(), |acc, v| acc.diff(v));
    let eq1 = d(a, &[&y, &y]);
    let eq2 = &d(b, &[&y, &y]) - &(&Expr::int(2) * &d(a, &[&x, &y]));
    let f_free = &(&Expr::int(2) * &d(b, &[&x, &y])) - &d(a, &[&x, &x]);
    let f_coefficient = &Expr::int(-3) * &d(a, &[&y]);
    let eq3 = &f_free + &(&f_coefficient * &fs);

    let g = d(b, &[&x, &x]) - &Expr::sym("C") * &Expr::sym("f_u") - b * &Expr::sym("f_y")
        + &fs * &d(b, &[&y])
        - &(&Expr::int(2) * &fs) * &d(a, &[&x]);
    let g_for_f = match f {
        Some(f) => {
            let binds: BTreeMap<Symbol, Expr> = [
                (Symbol::new("f"), f.body.clone()),
                (Symbol::new("f_y"), f.partial(MultiIndex::new(1, 0))?),
                (Symbol::new("f_u"), f.partial(MultiIndex::new(0, 1))?),
            ]
            .into_iter()
            .collect();
            Some(g.substitute(&binds, DEFAULT_TERM_LIMIT)?)
        }
        None => None,
    };
    let pass = eq1.is_zero() && eq2.is_zero() && f_free.is_zero() && f_coefficient.is_zero();
    Ok(DeterminingReport {
        equations: vec![
            ("A_yy".into(), eq1),
            ("B_yy - 2A_xy".into(), eq2),
            ("2B_xy - A_xx - 3fA_y".into(), eq3),
        ],
        f_free,
        f_coefficient,
        g,
        g_for_f,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureRow {
    pub y: f64,
    pub u: f64,
    /// (invariant name, value) in catalog order.
    pub values: Vec<(String, f64)>,
}

/// All 14 restricted invariants, symbolically.
pub fn restricted_catalog(f: &ControlFunction) -> Result<Vec<(String, Expr)>> {
    let bindings = f.bindings(5)?;
    invariants::catalog()
        .par_iter()
        .map(|j| Ok((j.name.clone(), restrict_with(j, &bindings)?)))
        .collect()
}

/// Numeric values of the restricted invariants at each `(y, u)`.
pub fn invariant_signature(f: &ControlFunction, points: &[(f64, f64)]) -> Result<Vec<SignatureRow>> {
    if !f.is_concrete() {
        return Err(Error::Invalid(
            "signature needs f without free constants or abstract functions".into(),
        ));
    }
    let restricted = restricted_catalog(f)?;
    let guards = [
        ("f", f.body.clone()),
        ("f_y", f.partial(MultiIndex::new(1, 0))?),
        ("f_u", f.partial(MultiIndex::new(0, 1))?),
    ];
    points
        .iter()
        .map(|&(y, u)| {
            let p = JetPoint::from_pairs([("y", y), ("u", u)]);
            for (name, g) in &guards {
                let v = evaluate(g, &p)?;
                if v == 0.0 || !v.is_finite() {
                    return Err(Error::SingularSample(format!("{name} = {v} at y={y}, u={u}")));
                }
            }
            let values = restricted
                .iter()
                .map(|(n, e)| {
                    evaluate(e, &p)
                        .map(|v| (n.clone(), v))
                        .map_err(|_| Error::SingularSample(format!("{n} undefined at y={y}, u={u}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SignatureRow { y, u, values })
        })
        .collect()
}

/// One-sided test: true when some invariant differs between matched rows by
/// more than `tol` (relative). Equal signatures prove nothing.
pub fn signatures_differ(a: &[SignatureRow], b: &[SignatureRow], tol: f64) -> bool {
    a.iter().zip(b).any(|(ra, rb)| {
        ra.values.iter().zip(&rb.values).any(|((_, x), (_, y))| {
            let scale = x.abs().max(y.abs()).max(1.0);
            (x - y).abs() > tol * scale
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivations::{apply_derivation, nabla1};

    fn f(src: &str) -> ControlFunction {
        ControlFunction::parse(src).unwrap()
    }

    fn j(name: &str) -> Invariant {
        invariants::lookup(name).unwrap()
    }

    #[test]
    fn restriction_examples() {
        assert_eq!(restrict(&j("J21"), &f("y^2*u")).unwrap(), Expr::rational(1, 2));
        assert!(restrict(&j("J21"), &f("alpha_0*y + beta_0")).unwrap().is_zero());
        assert_eq!(restrict(&j("J22"), &f("(alpha_0*y)^3")).unwrap(), Expr::one());
    }

    #[test]
    fn singular_restriction() {
        match restrict(&j("J21"), &f("u^2 + 1")) {
            Err(Error::IdenticallySingular(msg)) => assert!(msg.contains("f_y"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            restrict(&j("J22"), &f("y^3")),
            Err(Error::IdenticallySingular(_))
        ));
    }

    #[test]
    fn classification_examples() {
        let v = classify(&f("u*y^3"), 6).unwrap();
        assert_eq!(v.form, NormalForm::Power { n: 3 });
        assert_eq!(v.evidence["J21"], Expr::rational(2, 3));
        assert_eq!(v.evidence["J31"], Expr::rational(2, 9));
        assert_eq!(v.evidence["J32"], Expr::rational(2, 3));
        assert!(v.evidence["J33"].is_zero());
        assert!(v.evidence["J22"].is_one());

        let v = classify(&f("u^2*y + u"), 6).unwrap();
        assert_eq!(v.form, NormalForm::Affine);
        assert!(v.matches.contains(&NormalForm::Quadratic));

        let v = classify(&f("u*y^2 + y + 1"), 6).unwrap();
        assert_eq!(v.form, NormalForm::Quadratic);
        assert!(!v.matches.contains(&NormalForm::Affine));

        let v = classify(&f("u*y^2"), 6).unwrap();
        assert_eq!(v.matches, vec![NormalForm::Quadratic, NormalForm::Power { n: 2 }]);

        let v = classify(&f("u*y^3 + y^2"), 6).unwrap();
        assert_eq!(v.form, NormalForm::None);

        let v = classify(&f("(alpha_0*y)^5"), 4).unwrap();
        assert_eq!(v.form, NormalForm::None);
        let v = classify(&f("(alpha_0*y)^5"), 10).unwrap();
        assert_eq!(v.form, NormalForm::Power { n: 5 });
    }

    #[test]
    fn power_constants_are_consistent() {
        for n in 1..=6 {
            let vals = power_form_values(n);
            let r = &vals[0].1;
            let n_e = Expr::int(i64::from(n));
            let second = r - &Expr::one().checked_div(&n_e).unwrap();
            assert_eq!(vals[2].1, r * &second);
            assert_eq!(vals[3].1, *r);
        }
    }

    #[test]
    fn determining_examples() {
        let v = field_vocabulary();
        let p = |s: &str| parse_expression(s, &v).unwrap();
        let r = check_determining_equations(&p("alpha*x + beta"), &p("gamma + delta*y"), None).unwrap();
        assert!(r.pass);
        let g_expected = parse_expression(
            "-C*f_u - (gamma + delta*y)*f_y + f*delta - 2*f*alpha",
            &Vocabulary::permissive(),
        )
        .unwrap();
        assert_eq!(r.g, g_expected);
        assert!(r.into_result().is_ok());

        let r = check_determining_equations(&p("x^2"), &Expr::zero(), None).unwrap();
        assert!(!r.pass);
        assert_eq!(r.f_free, Expr::int(-2));
        assert!(matches!(r.into_result(), Err(Error::NotAdmissible { .. })));

        let r = check_determining_equations(&p("y"), &Expr::zero(), None).unwrap();
        assert_eq!(r.f_coefficient, Expr::int(-3));
        assert!(r.f_free.is_zero());

        let r = check_determining_equations(&p("x"), &p("y"), Some(&f("u*y^2"))).unwrap();
        assert!(r.pass);
        // G = -C*y^2 - y*2uy + u*y^2 - 2u*y^2 = -C*y^2 - 3u*y^2
        let g = parse_expression("-C*y^2 - 3*u*y^2", &Vocabulary::permissive()).unwrap();
        assert_eq!(r.g_for_f.unwrap(), g);
    }

    #[test]
    fn signatures() {
        let pts = [(1.0, 2.0), (2.0, 1.0), (0.5, -1.5)];
        let a = invariant_signature(&f("y^2*u"), &pts).unwrap();
        let b = invariant_signature(&f("y^3*u"), &pts).unwrap();
        assert_eq!(a[0].values.len(), 14);
        assert!((a[0].values[0].1 - 0.5).abs() < 1e-12);
        assert!((b[0].values[0].1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(signatures_differ(&a, &b, 1e-9));

        // y -> 2y: y'' + f(y,u) = 0 becomes y'' + f(2y,u)/2 = 0
        let g = f("y^2*u + y*u^3 + u");
        let h = f("((2*y)^2*u + 2*y*u^3 + u)/2");
        let sg = invariant_signature(&g, &[(2.0, 1.5), (1.0, -0.7)]).unwrap();
        let sh = invariant_signature(&h, &[(1.0, 1.5), (0.5, -0.7)]).unwrap();
        assert!(!signatures_differ(&sg, &sh, 1e-9));

        assert!(matches!(
            invariant_signature(&f("y^2*u"), &[(0.0, 1.0)]),
            Err(Error::SingularSample(_))
        ));
        assert!(invariant_signature(&f("a*y^2*u"), &pts).is_err());
        assert!(ControlFunction::parse("exp(y)").is_err());
        assert!(ControlFunction::parse("z_y*y").is_err());
        assert!(ControlFunction::parse("x*y").is_err());
    }

    #[test]
    fn restriction_properties() {
        let g = f("y^2*u");
        let (a, b) = (j("J21"), j("J32"));
        let prod = Invariant::from_expr("p", &a.body * &b.body);
        let sum = Invariant::from_expr("s", &a.body + &b.body);
        let (ra, rb) = (restrict(&a, &g).unwrap(), restrict(&b, &g).unwrap());
        assert_eq!(restrict(&prod, &g).unwrap(), &ra * &rb);
        assert_eq!(restrict(&sum, &g).unwrap(), &ra + &rb);

        // chain rule through the invariant derivation
        let d = apply_derivation(&nabla1(), &a).unwrap();
        let fy = g.partial(MultiIndex::new(1, 0)).unwrap();
        let scale = g.body().checked_div(&fy).unwrap();
        assert_eq!(restrict(&d, &g).unwrap(), &scale * &ra.diff(&Symbol::y()));

        let scaled = ControlFunction::new(&Expr::int(-7) * g.body()).unwrap();
        for inv in invariants::catalog() {
            assert_eq!(restrict(&inv, &scaled).unwrap(), restrict(&inv, &g).unwrap(), "{}", inv.name);
        }
    }
}
