//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use jetinv::classify::{self, classify, restrict, ControlFunction, NormalForm};
use jetinv::derivations::{self, Expander, Relation};
use jetinv::fields::{catalog, prolong, VectorField};
use jetinv::invariants::{self, verify_all};
use jetinv::jet::fiber_dimension;
use jetinv::orbits::{tangent_span, verify_codimension, verify_stratum_rank};
use jetinv::parse::{parse_expression, Vocabulary};
use jetinv::{cli, Expr, JetContext, JetPoint};

const TOL: f64 = 1e-8;
const SEED: u64 = 42;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn vocab() -> Vocabulary {
    Vocabulary::jet(&JetContext::new(6).with_tower("H"))
}

fn parse(src: &str) -> Expr {
    parse_expression(src, &vocab()).expect("fixture parses")
}

/// Nonzero components of a field as coordinate name → coefficient.
fn components(x: &VectorField) -> BTreeMap<String, Expr> {
    x.components()
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(s, c)| (s.name().to_string(), c))
        .collect()
}

fn table(entries: &[(&str, &str)]) -> BTreeMap<String, Expr> {
    entries.iter().map(|(k, v)| (k.to_string(), parse(v))).collect()
}

/// Reference second and third prolongations of Y1..Y4. The z_yu entry of
/// Y2^(2) is `-z_yu`: that value follows from the prolongation formula and is
/// the only one that keeps J22 invariant.
fn reference_prolongations() -> Vec<(&'static str, usize, BTreeMap<String, Expr>)> {
    let y2_2 = [("y", "y"), ("z_y", "-z_y"), ("z_yy", "-2*z_yy"), ("z_yu", "-z_yu")];
    let y2_3_extra = [("z_yyy", "-3*z_yyy"), ("z_yyu", "-2*z_yyu"), ("z_yuu", "-z_yuu")];
    let y3_2 = [
        ("z", "z"),
        ("z_y", "z_y"),
        ("z_u", "z_u"),
        ("z_yy", "z_yy"),
        ("z_yu", "z_yu"),
        ("z_uu", "z_uu"),
    ];
    let y3_3_extra = [
        ("z_yyy", "z_yyy"),
        ("z_yyu", "z_yyu"),
        ("z_yuu", "z_yuu"),
        ("z_uuu", "z_uuu"),
    ];
    let y4_2 = [
        ("u", "H_0"),
        ("z_u", "-H_1*z_u"),
        ("z_yu", "-H_1*z_yu"),
        ("z_uu", "-(H_2*z_u + 2*H_1*z_uu)"),
    ];
    let y4_3_extra = [
        ("z_yyu", "-H_1*z_yyu"),
        ("z_yuu", "-(H_2*z_yu + 2*H_1*z_yuu)"),
        ("z_uuu", "-(H_3*z_u + 3*H_2*z_uu + 3*H_1*z_uuu)"),
    ];
    let cat = |a: &[(&'static str, &'static str)], b: &[(&'static str, &'static str)]| {
        let mut v = a.to_vec();
        v.extend_from_slice(b);
        table(&v)
    };
    vec![
        ("Y1", 2, table(&[("y", "1")])),
        ("Y1", 3, table(&[("y", "1")])),
        ("Y2", 2, table(&y2_2)),
        ("Y2", 3, cat(&y2_2, &y2_3_extra)),
        ("Y3", 2, table(&y3_2)),
        ("Y3", 3, cat(&y3_2, &y3_3_extra)),
        ("Y4", 2, table(&y4_2)),
        ("Y4", 3, cat(&y4_2, &y4_3_extra)),
    ]
}

fn criterion_1() -> Outcome {
    let refs = reference_prolongations();
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for (name, k, expected) in &refs {
        let p = prolong(&catalog::by_name(name).unwrap(), *k).map_err(|e| e.to_string())?;
        let got = components(&p);
        if &got != expected {
            mismatches.push(format!("{name}^({k})"));
        }
    }
    let elapsed = start.elapsed();
    ensure(mismatches.is_empty(), || format!("mismatch in {}", mismatches.join(", ")))?;
    within(elapsed, 1.0)?;

    // -2*z_yu on d/dz_yu would not annihilate J22.
    let j22 = invariants::lookup("J22").unwrap().body;
    let y2 = prolong(&catalog::y2(), 2).unwrap();
    let altered = &y2.apply(&j22).unwrap() + &(&parse("-z_yu") * &j22.diff(&jetinv::Symbol::new("z_yu")));
    ensure(!altered.is_zero(), || "coefficient -2*z_yu would also annihilate J22".into())?;
    Ok(format!(
        "8 fields equal coefficient by coefficient in {:.3}s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let reports = verify_all(&invariants::catalog()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass()).map(|r| r.invariant.clone()).collect();
    ensure(reports.len() == 14, || format!("{} invariants", reports.len()))?;
    ensure(failed.is_empty(), || format!("not invariant: {}", failed.join(", ")))?;
    let exact = reports
        .iter()
        .flat_map(|r| &r.checks)
        .all(|c| c.residual.is_zero());
    ensure(exact, || "a residual is not exactly zero".into())?;
    within(elapsed, 30.0)?;
    Ok(format!("14/14 invariants, 56 generator checks in {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let checks = derivations::verify_syzygies().map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let failed: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    ensure(checks.len() == 19, || format!("{} relations", checks.len()))?;
    ensure(failed.is_empty(), || format!("failed: {}", failed.join(", ")))?;
    within(elapsed, 60.0)?;

    // The alternative coefficients in the D1(J33) and D1(J44) formulas
    // contradict the D2(J32) and D2(J43) formulas that define J43 and J54.
    let ex = Expander::new();
    for (lhs, rhs) in [
        ("D1_J33", "2*J33 - 2*J21*J33 - 3*J22*J33 + J43"),
        ("D1_J44", "3*J44 - J21*J44 - 4*J22*J44 - J33^2 + J54"),
    ] {
        let c = ex.check(&Relation::new(lhs, lhs, rhs)).map_err(|e| e.to_string())?;
        ensure(!c.pass, || format!("alternative form of {lhs} unexpectedly holds"))?;
    }
    Ok(format!("19/19 identities exact in {:.2}s", elapsed.as_secs_f64()))
}

fn criterion_4() -> Outcome {
    let checks = derivations::verify_commutator().map_err(|e| e.to_string())?;
    let names: Vec<&str> = checks.iter().map(|c| c.name.as_str()).collect();
    for probe in ["z", "z_y", "z_u", "J21", "J22"] {
        ensure(names.contains(&probe), || format!("probe {probe} missing"))?;
    }
    let failed: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    ensure(failed.is_empty(), || format!("failed on {}", failed.join(", ")))?;
    Ok(format!("{} probes exact", checks.len()))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    for k in 1..=5 {
        let r = verify_codimension(k, 100, SEED, TOL).map_err(|e| e.to_string())?;
        ensure(r.pass(), || {
            format!("order {k}: {}/{} samples with codim {}", r.passed, r.samples.len(), r.nu)
        })?;
        ensure(r.nu == (k * k + k - 2) / 2, || format!("nu({k}) = {}", r.nu))?;
        summary.push(format!("{}", r.nu));
    }
    let generic = JetPoint::from_pairs([("y", 0.4), ("u", 1.3), ("z", 0.9)]);
    let on_z0 = generic.clone().with("z", 0.0);
    let r_gen = tangent_span(&generic, 0, TOL).map_err(|e| e.to_string())?.rank;
    let r_z0 = tangent_span(&on_z0, 0, TOL).map_err(|e| e.to_string())?.rank;
    ensure(r_gen == 3 && r_z0 == 2, || format!("order-0 ranks {r_gen} generic, {r_z0} on z=0"))?;
    let elapsed = start.elapsed();
    within(elapsed, 10.0)?;
    Ok(format!(
        "codim [{}] at 100/100 samples per order; order 0 rank 3 vs 2 on z=0; {:.2}s",
        summary.join(", "),
        elapsed.as_secs_f64()
    ))
}

fn criterion_6() -> Outcome {
    let mut ranks = Vec::new();
    for k in 1..=5 {
        let r = verify_stratum_rank(k, 20, SEED, TOL).map_err(|e| e.to_string())?;
        ensure(r.dim_stratum == fiber_dimension(k), || format!("dim N^{k} = {}", r.dim_stratum))?;
        ensure(r.pass && r.ranks.iter().all(|&x| x == k + 2), || {
            format!("order {k}: ranks {:?}, expected {}", r.ranks, k + 2)
        })?;
        ranks.push(format!("{}/{}", k + 2, r.dim_stratum));
    }
    Ok(format!("rank/dim N^k for k=1..5: {}", ranks.join(", ")))
}

fn criterion_7() -> Outcome {
    let g = derivations::generate_invariants(5, SEED, TOL).map_err(|e| e.to_string())?;
    for o in &g.orders[1..] {
        ensure(o.kept.len() == o.order, || {
            format!("order {}: {} independent, expected {}", o.order, o.kept.len(), o.order)
        })?;
    }
    ensure(g.points.len() == 5, || format!("{} sample points", g.points.len()))?;
    for j in invariants::catalog() {
        let dep = g.spans(&j.body).map_err(|e| e.to_string())?;
        ensure(dep, || format!("{} is independent of the generated set", j.name))?;
    }
    let counts: Vec<String> = g.orders.iter().map(|o| format!("{}", o.kept.len())).collect();
    Ok(format!(
        "new invariants per order 2..5: [{}]; all 14 catalog invariants dependent at 5 points",
        counts.join(", ")
    ))
}

fn criterion_8() -> Outcome {
    let cf = |s: &str| ControlFunction::parse(s).map_err(|e| e.to_string());
    for n in 2..=6u32 {
        let f = cf(&format!("u*y^{n}"))?;
        let v = classify(&f, 10).map_err(|e| e.to_string())?;
        ensure(v.matches.contains(&NormalForm::Power { n }), || {
            format!("u*y^{n}: matches {:?}", v.matches)
        })?;
        for (name, value) in classify::power_form_values(n) {
            ensure(v.evidence.get(name) == Some(&value), || {
                format!("u*y^{n}: {name} = {:?}", v.evidence.get(name).map(ToString::to_string))
            })?;
        }
        if n > 2 {
            ensure(v.form == NormalForm::Power { n }, || format!("u*y^{n}: form {}", v.form))?;
        }
    }
    let v = classify(&cf("u^2*y + u")?, 10).map_err(|e| e.to_string())?;
    ensure(v.form == NormalForm::Affine, || format!("u^2*y + u: {}", v.form))?;
    let v = classify(&cf("u*y^2 + y + 1")?, 10).map_err(|e| e.to_string())?;
    ensure(
        v.form == NormalForm::Quadratic && !v.matches.contains(&NormalForm::Affine),
        || format!("u*y^2 + y + 1: {:?}", v.matches),
    )?;

    let j = |n: &str| invariants::lookup(n).unwrap();
    let oracles = [
        ("J21", "y^2*u", Expr::rational(1, 2)),
        ("J21", "alpha_0*y + beta_0", Expr::zero()),
        ("J22", "(alpha_0*y)^3", Expr::one()),
        ("J31", "u*y^3", Expr::rational(2, 9)),
    ];
    for (name, f, expected) in oracles {
        let got = restrict(&j(name), &cf(f)?).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("{name}({f}) = {got}, expected {expected}"))?;
    }
    Ok("power(n) for n=2..6 with exact constants; affine; quadratic not affine; restriction values exact".into())
}

fn criterion_9() -> Outcome {
    let v = classify::field_vocabulary();
    let p = |s: &str| parse_expression(s, &v).map_err(|e| e.to_string());
    let check = |a: &str, b: &str| {
        classify::check_determining_equations(&p(a)?, &p(b)?, None).map_err(|e| e.to_string())
    };
    let general = check("alpha*x + beta", "gamma + delta*y")?;
    ensure(general.pass, || "general solution rejected".into())?;
    ensure(general.equations.iter().all(|(_, e)| e.is_zero()), || "nonzero equation".into())?;

    let r = check("x^2", "0")?;
    ensure(!r.pass && r.f_free == Expr::int(-2) && r.f_coefficient.is_zero(), || {
        format!("A = x^2: f-free {}, f-coefficient {}", r.f_free, r.f_coefficient)
    })?;
    let r = check("y", "0")?;
    ensure(!r.pass && r.f_coefficient == Expr::int(-3), || {
        format!("A = y: f-coefficient {}", r.f_coefficient)
    })?;
    Ok("general solution passes; A=x^2 gives -2, A=y gives f-coefficient -3".into())
}

fn criterion_10() -> Outcome {
    let v = vocab();
    for j in invariants::catalog() {
        let printed = j.body.to_string();
        let back = parse_expression(&printed, &v).map_err(|e| format!("{}: {e}", j.name))?;
        ensure(back == j.body, || format!("{} does not round trip", j.name))?;
    }
    let runs = [
        vec!["jetinv", "--json", "--seed", "7", "dims", "--max-order", "3", "--samples", "25"],
        vec!["jetinv", "--json", "--seed", "7", "generate", "--max-order", "4"],
        vec!["jetinv", "--json", "classify", "--f", "u*y^4"],
    ];
    for argv in runs {
        let a = cli::dispatch(argv.clone()).to_json();
        let b = cli::dispatch(argv.clone()).to_json();
        ensure(a == b, || format!("{} output differs between runs", argv[4]))?;
        serde_json::from_str::<serde_json::Value>(&a).map_err(|e| e.to_string())?;
    }
    Ok("14/14 bodies round trip; seeded JSON byte-identical across runs".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("prolongation fidelity", criterion_1),
        ("invariance suite", criterion_2),
        ("syzygy suite", criterion_3),
        ("commutator", criterion_4),
        ("dimension counts", criterion_5),
        ("stratum rank", criterion_6),
        ("generation", criterion_7),
        ("classification", criterion_8),
        ("determining equations", criterion_9),
        ("cli round trip", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("PASS  [{:>2}] {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL  [{:>2}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
