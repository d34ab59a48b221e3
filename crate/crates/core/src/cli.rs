//! Command-line front end. `dispatch` runs one command and returns a
//! structured result; `run` prints it and yields the process exit code.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::classify::{self, ControlFunction, NormalForm, DEFAULT_N_MAX};
use crate::derivations;
use crate::error::{Error, Result};
use crate::expr::{format_rational, rational_to_f64, Expr, DEFAULT_TERM_LIMIT};
use crate::fields::{self, catalog, VectorField};
use crate::invariants::{self, Invariant};
use crate::jet::{evaluate, Direction, JetContext, JetPoint};
use crate::linalg::DEFAULT_TOL;
use crate::orbits;
use crate::parse::{parse_expression, Vocabulary};

#[derive(Debug, Parser)]
#[command(
    name = "jetinv",
    version,
    about = "Differential invariants of y'' + f(y, u) = 0 under feedback transformations"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Emit a JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every sampled point.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Relative singular-value threshold for numeric rank.
    #[arg(long, global = true, env = "JETINV_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Also write the JSON document to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Abort when an expression exceeds this many monomials.
    #[arg(long, global = true, default_value_t = DEFAULT_TERM_LIMIT)]
    max_terms: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that catalog invariants (or a given expression) are annihilated by Y1..Y4.
    VerifyInvariants {
        /// Only catalog invariants of this order.
        #[arg(long)]
        order: Option<usize>,
        /// Check this expression instead of the catalog.
        #[arg(long = "expr")]
        expression: Option<String>,
    },
    /// Check the derivation formulas, the order-3 syzygy and the commutator.
    Syzygies,
    /// Generate invariants from J21, J22 with the invariant derivations.
    Generate {
        #[arg(long, default_value_t = 5)]
        max_order: usize,
    },
    /// Prolong a generator (Y1..Y4, Z1, Z2, Z3) or a field given by components.
    Prolong {
        /// Catalog field name.
        #[arg(long, conflicts_with_all = ["a", "b", "c"])]
        field: Option<String>,
        /// Exponent m of l(u) = u^m for Z3.
        #[arg(long, default_value_t = 0)]
        m: u32,
        /// Coefficient of d/dy.
        #[arg(long, requires_all = ["b", "c"])]
        a: Option<String>,
        /// Coefficient of d/du.
        #[arg(long)]
        b: Option<String>,
        /// Coefficient of d/dz.
        #[arg(long)]
        c: Option<String>,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Print only the evolutionary part D_sigma(phi).
        #[arg(long)]
        evolutionary: bool,
    },
    /// Regular-orbit codimension against nu(k) at sampled points.
    Dims {
        #[arg(long, default_value_t = 5)]
        max_order: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Rank of Z1, Z2, Z3 on the stratum y = u = 0.
    Stratum {
        #[arg(long, default_value_t = 5)]
        max_order: usize,
        #[arg(long, default_value_t = 10)]
        samples: usize,
    },
    /// Normal-form tests for a right-hand side f(y, u).
    Classify {
        #[arg(long = "f")]
        f: String,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: u32,
    },
    /// Values of the 14 restricted invariants at points (y, u).
    Signature {
        #[arg(long = "f")]
        f: String,
        /// Points as "y=1,u=2;y=2,u=1".
        #[arg(long)]
        points: String,
        /// Second right-hand side to compare against at the same points.
        #[arg(long)]
        compare: Option<String>,
    },
    /// Determining equations for a point field A d/dx + B d/dy + C(u) d/du.
    Determining {
        #[arg(long = "A")]
        a: String,
        #[arg(long = "B")]
        b: String,
        /// Concrete f for the induced G(y, u).
        #[arg(long = "f")]
        f: Option<String>,
    },
    /// Normalize an expression, optionally differentiate and evaluate it.
    Eval {
        #[arg(long = "expr")]
        expression: String,
        /// Jet order of the input vocabulary.
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// Apply total derivatives, e.g. "y", "u", "yu".
        #[arg(long)]
        total: Option<String>,
        /// Evaluate at "name=value,...".
        #[arg(long)]
        at: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandResult {
    pub command: String,
    pub status: Status,
    pub payload: Value,
    pub diagnostics: Vec<String>,
    /// Human-readable rendering.
    pub text: String,
    json: bool,
    out: Option<PathBuf>,
}

impl CommandResult {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }

    pub fn to_json(&self) -> String {
        let doc = json!({
            "command": self.command,
            "status": self.status,
            "payload": self.payload,
            "diagnostics": self.diagnostics,
        });
        serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
    }

    /// What goes to stdout.
    pub fn render(&self) -> String {
        if self.json {
            return self.to_json();
        }
        let mut s = self.text.clone();
        for d in &self.diagnostics {
            s.push_str(d);
            s.push('\n');
        }
        s
    }
}

struct Outcome {
    status: Status,
    payload: Value,
    text: String,
    diagnostics: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, payload: Value, text: String) -> Self {
        Outcome {
            status: if pass { Status::Pass } else { Status::Fail },
            payload,
            text,
            diagnostics: Vec::new(),
        }
    }

    fn note(mut self, d: impl Into<String>) -> Self {
        self.diagnostics.push(d.into());
        self
    }
}

/// `{"exact": "p/q", "float": x}` for constants, `{"expr": "..."}` otherwise.
pub fn expr_json(e: &Expr) -> Value {
    match e.as_rational() {
        Some(r) => json!({"exact": format_rational(&r), "float": rational_to_f64(&r)}),
        None => json!({"expr": e.to_string()}),
    }
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::ZeroDenominator => "zero_denominator",
        Error::ExprTooLarge { .. } => "expr_too_large",
        Error::TowerExhausted { .. } => "tower_exhausted",
        Error::OrderMismatch { .. } => "order_mismatch",
        Error::DivisionByZeroAtPoint => "division_by_zero_at_point",
        Error::UnassignedSymbol(_) => "unassigned_symbol",
        Error::NotInvariant { .. } => "not_invariant",
        Error::SingularPoint(_) => "singular_point",
        Error::IdentityFailed { .. } => "identity_failed",
        Error::SyzygyFailed { .. } => "syzygy_failed",
        Error::RankDeficiency { .. } => "rank_deficiency",
        Error::CodimMismatch { .. } => "codim_mismatch",
        Error::RankMismatch { .. } => "rank_mismatch",
        Error::IdenticallySingular(_) => "identically_singular",
        Error::NotAdmissible { .. } => "not_admissible",
        Error::SingularSample(_) => "singular_sample",
        Error::Syntax { .. } => "syntax_error",
        Error::UnknownSymbol { .. } => "unknown_symbol",
        Error::Invalid(_) => "invalid_argument",
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::VerifyInvariants { .. } => "verify-invariants",
        Command::Syzygies => "syzygies",
        Command::Generate { .. } => "generate",
        Command::Prolong { .. } => "prolong",
        Command::Dims { .. } => "dims",
        Command::Stratum { .. } => "stratum",
        Command::Classify { .. } => "classify",
        Command::Signature { .. } => "signature",
        Command::Determining { .. } => "determining",
        Command::Eval { .. } => "eval",
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return CommandResult {
                command: String::new(),
                status: if shown { Status::Pass } else { Status::Error },
                payload: json!({"error": "usage", "message": e.to_string()}),
                diagnostics: Vec::new(),
                text: e.to_string(),
                json: false,
                out: None,
            };
        }
    };
    let g = &cli.global;
    let name = command_name(&cli.command);
    let outcome = execute(&cli.command, g).unwrap_or_else(|e| Outcome {
        status: Status::Error,
        payload: json!({"error": error_code(&e), "message": e.to_string()}),
        text: String::new(),
        diagnostics: vec![format!("error: {e}")],
    });
    CommandResult {
        command: name.to_string(),
        status: outcome.status,
        payload: outcome.payload,
        diagnostics: outcome.diagnostics,
        text: outcome.text,
        json: g.json,
        out: g.out.clone(),
    }
}

/// Runs the CLI: prints the result, writes `--out` if given, returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let r = dispatch(argv);
    if r.command.is_empty() && r.status == Status::Error {
        eprint!("{}", r.text);
        return r.exit_code();
    }
    print!("{}", r.render());
    if let Some(path) = &r.out {
        if let Err(e) = std::fs::write(path, r.to_json()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
    }
    r.exit_code()
}

fn execute(cmd: &Command, g: &Global) -> Result<Outcome> {
    if !(g.tol > 0.0 && g.tol < 1.0) {
        return Err(Error::Invalid(format!("tolerance must lie in (0, 1), got {}", g.tol)));
    }
    match cmd {
        Command::VerifyInvariants { order, expression } => {
            verify_invariants(*order, expression.as_deref(), g)
        }
        Command::Syzygies => syzygies(),
        Command::Generate { max_order } => generate(*max_order, g),
        Command::Prolong {
            field,
            m,
            a,
            b,
            c,
            order,
            evolutionary,
        } => prolong(field.as_deref(), *m, [a, b, c], *order, *evolutionary, g),
        Command::Dims { max_order, samples } => dims(*max_order, *samples, g),
        Command::Stratum { max_order, samples } => stratum(*max_order, *samples, g),
        Command::Classify { f, n_max } => classify_cmd(f, *n_max, g),
        Command::Signature { f, points, compare } => signature(f, points, compare.as_deref(), g),
        Command::Determining { a, b, f } => determining(a, b, f.as_deref(), g),
        Command::Eval {
            expression,
            order,
            total,
            at,
        } => eval(expression, *order, total.as_deref(), at.as_deref(), g),
    }
}

fn parse_control(src: &str, g: &Global) -> Result<ControlFunction> {
    let vocab = ControlFunction::vocabulary().with_term_limit(g.max_terms);
    ControlFunction::new(parse_expression(src, &vocab)?)
}

fn verify_invariants(order: Option<usize>, src: Option<&str>, g: &Global) -> Result<Outcome> {
    let targets: Vec<Invariant> = match src {
        Some(s) => {
            let ctx = JetContext::new(7).with_term_limit(g.max_terms);
            vec![Invariant::from_expr(s, parse_expression(s, &Vocabulary::jet(&ctx))?)]
        }
        None => match order {
            Some(k) => invariants::catalog_of_order(k),
            None => invariants::catalog(),
        },
    };
    let mut out = Outcome::new(true, Value::Null, String::new());
    if targets.is_empty() {
        out = out.note("no invariants below order 2");
    }
    let reports = invariants::verify_all(&targets)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut all = true;
    for r in &reports {
        for c in &r.checks {
            all &= c.pass;
            rows.push(json!({
                "invariant": r.invariant,
                "order": r.order,
                "generator": c.generator,
                "residual": c.residual.to_string(),
                "pass": c.pass,
            }));
            text.push_str(&format!(
                "{:<6} {:<3} {}  residual: {}\n",
                r.invariant,
                c.generator,
                if c.pass { "PASS" } else { "FAIL" },
                c.residual
            ));
        }
    }
    let passed = reports.iter().filter(|r| r.pass()).count();
    text.push_str(&format!("{passed}/{} invariant\n", reports.len()));
    out.status = if all { Status::Pass } else { Status::Fail };
    out.payload = json!({"results": rows, "passed": passed, "total": reports.len()});
    out.text = text;
    Ok(out)
}

fn identity_rows(checks: &[derivations::IdentityCheck]) -> (Vec<Value>, String) {
    let mut rows = Vec::new();
    let mut text = String::new();
    for c in checks {
        rows.push(json!({"name": c.name, "residual": c.residual.to_string(), "pass": c.pass}));
        text.push_str(&format!(
            "{:<12} {}  residual: {}\n",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.residual
        ));
    }
    (rows, text)
}

fn syzygies() -> Result<Outcome> {
    let rels = derivations::relations();
    let checks = derivations::verify_relations(&rels)?;
    let comm = derivations::verify_commutator()?;
    let (mut rows, mut text) = identity_rows(&checks);
    for (row, rel) in rows.iter_mut().zip(&rels) {
        row["lhs"] = json!(rel.lhs);
        row["rhs"] = json!(rel.rhs);
    }
    let (crow, ctext) = identity_rows(&comm);
    text.push_str("commutator probes:\n");
    text.push_str(&ctext);
    let passed = checks.iter().filter(|c| c.pass).count();
    let cpassed = comm.iter().filter(|c| c.pass).count();
    text.push_str(&format!(
        "{passed}/{} relations, {cpassed}/{} commutator probes\n",
        checks.len(),
        comm.len()
    ));
    let pass = passed == checks.len() && cpassed == comm.len();
    Ok(Outcome::new(
        pass,
        json!({
            "relations": rows,
            "passed": passed,
            "total": checks.len(),
            "commutator": crow,
        }),
        text,
    ))
}

fn point_json(p: &JetPoint) -> Value {
    let m: serde_json::Map<String, Value> = p.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    Value::Object(m)
}

fn generate(max_order: usize, g: &Global) -> Result<Outcome> {
    let gen = derivations::generate_invariants(max_order, g.seed, g.tol)?;
    let mut text = String::new();
    for o in &gen.orders {
        text.push_str(&format!(
            "order {}: {} candidates, kept {} [{}], dependent [{}], ranks {:?}\n",
            o.order,
            o.candidates.len(),
            o.kept.len(),
            o.kept.join(", "),
            o.dependent.join(", "),
            o.ranks
        ));
    }
    let mut spans = Vec::new();
    let mut all_dependent = true;
    for j in invariants::catalog_up_to(max_order) {
        let dep = gen.spans(&j.body)?;
        all_dependent &= dep;
        spans.push(json!({"invariant": j.name, "dependent": dep}));
        text.push_str(&format!(
            "{} {} on the generated set\n",
            j.name,
            if dep { "dependent" } else { "INDEPENDENT" }
        ));
    }
    let invs: Vec<Value> = gen
        .invariants
        .iter()
        .map(|j| json!({"name": j.name, "order": j.order, "expr": j.body.to_string()}))
        .collect();
    Ok(Outcome::new(
        all_dependent,
        json!({
            "invariants": invs,
            "orders": gen.orders,
            "points": gen.points.iter().map(point_json).collect::<Vec<_>>(),
            "tol": gen.tol,
            "catalog_dependence": spans,
        }),
        text,
    ))
}

fn prolong(
    field: Option<&str>,
    m: u32,
    abc: [&Option<String>; 3],
    order: usize,
    evolutionary: bool,
    g: &Global,
) -> Result<Outcome> {
    let x: VectorField = match (field, abc) {
        (Some("Z3"), _) => catalog::z3_monomial(m),
        (Some(name), _) => catalog::by_name(name)
            .ok_or_else(|| Error::Invalid(format!("unknown field {name}; use Y1..Y4, Z1, Z2, Z3")))?,
        (None, [Some(a), Some(b), Some(c)]) => {
            let vocab = Vocabulary::jet(&JetContext::new(0))
                .with_any_constant()
                .with_term_limit(g.max_terms);
            VectorField::new(
                "X",
                parse_expression(a, &vocab)?,
                parse_expression(b, &vocab)?,
                parse_expression(c, &vocab)?,
            )?
        }
        _ => return Err(Error::Invalid("give --field or all of --a, --b, --c".into())),
    };
    let p = if evolutionary {
        fields::evolutionary_restriction(&x, order)?
    } else {
        fields::prolong(&x, order)?
    };
    let mut rows = Vec::new();
    let mut text = format!("{}^({order}):\n", x.name());
    for (s, c) in p.components() {
        if c.is_zero() {
            continue;
        }
        text.push_str(&format!("  d/d{s}: {c}\n"));
        rows.push(json!({"coordinate": s.name(), "coefficient": c.to_string()}));
    }
    Ok(Outcome::new(
        true,
        json!({"field": x.name(), "order": order, "evolutionary": evolutionary, "components": rows}),
        text,
    ))
}

fn dims(max_order: usize, samples: usize, g: &Global) -> Result<Outcome> {
    if !(1..=8).contains(&max_order) || samples == 0 {
        return Err(Error::Invalid("need 1 <= max-order <= 8 and samples >= 1".into()));
    }
    let mut rows = Vec::new();
    let mut text = format!("{:>5} {:>6} {:>5} {:>6} {:>4} {:>9}\n", "order", "dimJk", "rank", "codim", "nu", "passed");
    let mut all = true;
    for k in 1..=max_order {
        let r = orbits::verify_codimension(k, samples, g.seed, g.tol)?;
        let min = r.samples.iter().map(|s| s.rank).min().unwrap_or(0);
        let max = r.samples.iter().map(|s| s.rank).max().unwrap_or(0);
        all &= r.pass();
        text.push_str(&format!(
            "{:>5} {:>6} {:>5} {:>6} {:>4} {:>5}/{}\n",
            k,
            r.dim_jet,
            max,
            r.dim_jet - max,
            r.nu,
            r.passed,
            samples
        ));
        rows.push(json!({
            "order": k,
            "dimJk": r.dim_jet,
            "rank": max,
            "min_rank": min,
            "codim": r.dim_jet - max,
            "nu": r.nu,
            "passed": r.passed,
            "samples": samples,
            "unstable": r.samples.iter().filter(|s| !s.stable).count(),
            "pass": r.pass(),
        }));
    }
    let z0 = JetPoint::from_pairs([("y", 1.0), ("u", 1.0), ("z", 0.0)]);
    let z1 = z0.clone().with("z", 1.0);
    let r0 = orbits::tangent_span(&z0, 0, g.tol)?.rank;
    let r1 = orbits::tangent_span(&z1, 0, g.tol)?.rank;
    text.push_str(&format!("order 0: rank {r1} generic, {r0} on z = 0\n"));
    Ok(Outcome::new(
        all,
        json!({"orders": rows, "order0": {"generic_rank": r1, "rank_on_z_zero": r0}, "seed": g.seed, "tol": g.tol}),
        text,
    ))
}

fn stratum(max_order: usize, samples: usize, g: &Global) -> Result<Outcome> {
    if max_order > 8 || samples == 0 {
        return Err(Error::Invalid("need max-order <= 8 and samples >= 1".into()));
    }
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut all = true;
    for k in 0..=max_order {
        let r = orbits::verify_stratum_rank(k, samples, g.seed, g.tol)?;
        all &= r.pass;
        let mut distinct = r.ranks.clone();
        distinct.sort_unstable();
        distinct.dedup();
        text.push_str(&format!(
            "order {k}: dim N = {}, ranks {:?}, expected {}{}\n",
            r.dim_stratum,
            distinct,
            r.expected_rank,
            if r.informational { " (not asserted)" } else if r.pass { "" } else { " MISMATCH" }
        ));
        rows.push(json!({
            "order": k,
            "dim_stratum": r.dim_stratum,
            "expected_rank": r.expected_rank,
            "ranks": distinct,
            "informational": r.informational,
            "pass": r.pass,
        }));
    }
    Ok(Outcome::new(all, json!({"orders": rows}), text))
}

fn classify_cmd(src: &str, n_max: u32, g: &Global) -> Result<Outcome> {
    let f = parse_control(src, g)?;
    let v = classify::classify(&f, n_max)?;
    let evidence: serde_json::Map<String, Value> =
        v.evidence.iter().map(|(k, e)| (k.clone(), expr_json(e))).collect();
    let mut text = format!("f = {f}\nform: {}\n", v.form);
    if v.matches.len() > 1 {
        let all: Vec<String> = v.matches.iter().map(ToString::to_string).collect();
        text.push_str(&format!("all matches: {}\n", all.join(", ")));
    }
    for (k, e) in &v.evidence {
        text.push_str(&format!("  {k}(f) = {e}\n"));
    }
    let mut out = Outcome::new(
        v.form != NormalForm::None,
        json!({
            "f": f.to_string(),
            "form": v.form.to_string(),
            "matches": v.matches.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "evidence": evidence,
            "n_max": n_max,
            "note": v.note,
        }),
        text,
    );
    if v.form == NormalForm::None {
        out = out.note(format!("no normal form detected; power form not detected up to n = {n_max}"));
    }
    if let Some(n) = v.note {
        out = out.note(n);
    }
    Ok(out)
}

fn parse_points(src: &str) -> Result<Vec<(f64, f64)>> {
    src.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let p = parse_assignments(item)?;
            match (p.get_name("y"), p.get_name("u")) {
                (Some(y), Some(u)) if p.iter().count() == 2 => Ok((y, u)),
                _ => Err(Error::Invalid(format!("point {item:?} must assign exactly y and u"))),
            }
        })
        .collect()
}

fn parse_assignments(src: &str) -> Result<JetPoint> {
    let mut p = JetPoint::new();
    for pair in src.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected name=value, got {pair:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("not a number: {v:?}")))?;
        p = p.with(k.trim(), v);
    }
    Ok(p)
}

fn signature(src: &str, points: &str, compare: Option<&str>, g: &Global) -> Result<Outcome> {
    let f = parse_control(src, g)?;
    let pts = parse_points(points)?;
    let rows = classify::invariant_signature(&f, &pts)?;
    let mut text = String::new();
    for r in &rows {
        text.push_str(&format!("y={} u={}\n", r.y, r.u));
        for (n, v) in &r.values {
            text.push_str(&format!("  {n} = {v}\n"));
        }
    }
    let mut payload = json!({"f": f.to_string(), "rows": rows});
    let mut out_notes = Vec::new();
    if let Some(other) = compare {
        let h = parse_control(other, g)?;
        let rows_h = classify::invariant_signature(&h, &pts)?;
        let differ = classify::signatures_differ(&rows, &rows_h, 1e-9);
        payload["compare"] = json!({"f": h.to_string(), "rows": rows_h, "inequivalent": differ});
        text.push_str(if differ {
            "signatures differ: the equations are not equivalent\n"
        } else {
            "signatures agree at these points (this does not prove equivalence)\n"
        });
        if !differ {
            out_notes.push("matching signatures are not a certificate of equivalence".to_string());
        }
    }
    let mut out = Outcome::new(true, payload, text);
    out.diagnostics = out_notes;
    Ok(out)
}

fn determining(a: &str, b: &str, f: Option<&str>, g: &Global) -> Result<Outcome> {
    let vocab = classify::field_vocabulary().with_term_limit(g.max_terms);
    let a = parse_expression(a, &vocab)?;
    let b = parse_expression(b, &vocab)?;
    let f = f.map(|s| parse_control(s, g)).transpose()?;
    let r = classify::check_determining_equations(&a, &b, f.as_ref())?;
    let mut text = String::new();
    let mut eqs = Vec::new();
    for (name, e) in &r.equations {
        text.push_str(&format!("{name} = {e}\n"));
        eqs.push(json!({"equation": name, "value": e.to_string(), "zero": e.is_zero()}));
    }
    text.push_str(&format!(
        "f-free part: {}, coefficient of f: {}\nG = {}\n",
        r.f_free, r.f_coefficient, r.g
    ));
    if let Some(gf) = &r.g_for_f {
        text.push_str(&format!("G for f: {gf}\n"));
    }
    text.push_str(if r.pass { "admissible\n" } else { "not admissible\n" });
    let payload = json!({
        "equations": eqs,
        "f_free": r.f_free.to_string(),
        "f_coefficient": r.f_coefficient.to_string(),
        "G": r.g.to_string(),
        "G_for_f": r.g_for_f.as_ref().map(ToString::to_string),
        "pass": r.pass,
    });
    let mut out = Outcome::new(r.pass, payload, text);
    if let Err(e) = r.into_result() {
        out = out.note(e.to_string());
    }
    Ok(out)
}

fn eval(src: &str, order: usize, total: Option<&str>, at: Option<&str>, g: &Global) -> Result<Outcome> {
    let ctx = JetContext::new(order).with_tower("H").with_term_limit(g.max_terms);
    let vocab = Vocabulary::jet(&ctx).with_any_constant();
    let mut e = parse_expression(src, &vocab)?;
    if let Some(dirs) = total {
        let mut c = ctx.clone();
        for ch in dirs.chars() {
            let dir = match ch {
                'y' => Direction::Y,
                'u' => Direction::U,
                other => return Err(Error::Invalid(format!("total derivative direction must be y or u, got {other:?}"))),
            };
            c = c.with_order(c.order().max(e.jet_order().unwrap_or(0)));
            e = c.total_derivative(&e, dir)?;
        }
    }
    let mut payload = json!({"expr": e.to_string(), "value": expr_json(&e), "terms": e.term_count()});
    let mut text = format!("{e}\n");
    if let Some(at) = at {
        let p = parse_assignments(at)?;
        let v = evaluate(&e, &p)?;
        payload["at"] = point_json(&p);
        payload["float"] = json!(v);
        text.push_str(&format!("= {v}\n"));
    }
    Ok(Outcome::new(true, payload, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_json(args: &[&str]) -> (CommandResult, Value) {
        let mut argv = vec!["jetinv", "--json"];
        argv.extend_from_slice(args);
        let r = dispatch(argv);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        (r, v)
    }

    #[test]
    fn syzygies_pass() {
        let (r, v) = run_json(&["syzygies"]);
        assert_eq!(r.exit_code(), 0);
        assert_eq!(v["payload"]["passed"], 19);
        assert_eq!(v["status"], "pass");
    }

    #[test]
    fn classify_power() {
        let (r, v) = run_json(&["classify", "--f", "u*y^3"]);
        assert_eq!(r.exit_code(), 0);
        assert_eq!(v["payload"]["form"], "power(n=3)");
        assert_eq!(v["payload"]["evidence"]["J31"]["exact"], "2/9");
    }

    #[test]
    fn errors_map_to_status() {
        let (r, v) = run_json(&["eval", "--expr", "z_y +"]);
        assert_eq!(r.status, Status::Error);
        assert_eq!(v["payload"]["error"], "syntax_error");
        let (r, _) = run_json(&["classify", "--f", "exp(y)"]);
        assert_eq!(r.exit_code(), 2);
        let r = dispatch(["jetinv", "no-such-command"]);
        assert_eq!(r.exit_code(), 2);
        let r = dispatch(["jetinv", "--help"]);
        assert_eq!(r.exit_code(), 0);
        let (r, _) = run_json(&["--tol", "2", "syzygies"]);
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn fail_status() {
        let (r, v) = run_json(&["verify-invariants", "--expr", "z_y"]);
        assert_eq!(r.exit_code(), 1);
        assert_eq!(v["payload"]["passed"], 0);
        let (r, _) = run_json(&["determining", "--A", "x^2", "--B", "0"]);
        assert_eq!(r.exit_code(), 1);
        let (r, _) = run_json(&["determining", "--A", "alpha*x + beta", "--B", "gamma + delta*y"]);
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn eval_and_prolong() {
        let (_, v) = run_json(&["eval", "--expr", "z*z_y", "--total", "y", "--at", "z=2,z_y=3,z_yy=1"]);
        assert_eq!(v["payload"]["expr"], "z*z_yy + z_y^2");
        assert_eq!(v["payload"]["float"], 11.0);
        let (r, v) = run_json(&["prolong", "--field", "Y2", "--order", "1"]);
        assert_eq!(r.exit_code(), 0);
        assert_eq!(v["payload"]["components"][0]["coordinate"], "y");
        let (r, _) = run_json(&["prolong", "--a", "y", "--b", "0", "--c", "z", "--order", "2"]);
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn signature_points() {
        assert_eq!(parse_points("y=1,u=2;y=2,u=1").unwrap(), vec![(1.0, 2.0), (2.0, 1.0)]);
        assert!(parse_points("y=1").is_err());
        let (r, v) = run_json(&["signature", "--f", "y^2*u", "--points", "y=1,u=2", "--compare", "y^3*u"]);
        assert_eq!(r.exit_code(), 0);
        assert_eq!(v["payload"]["compare"]["inequivalent"], true);
    }
}
