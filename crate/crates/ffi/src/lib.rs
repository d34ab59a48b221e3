//! C interface to jetinv.
//!
//! Expressions cross the boundary as opaque `JetinvExpr` handles owned by the
//! caller and released with `jetinv_expr_free`. Strings returned to C are
//! released with `jetinv_string_free`. Every function returns a
//! `JetinvStatus`; on failure `jetinv_last_error_message` describes the error
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jetinv::invariants::{self, Invariant};
use jetinv::parse::{parse_expression, Vocabulary};
use jetinv::{Direction, Error, Expr, JetContext, JetPoint, Symbol};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetinvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    SyntaxError = 3,
    UnknownSymbol = 4,
    ZeroDenominator = 5,
    ExprTooLarge = 6,
    OrderMismatch = 7,
    TowerExhausted = 8,
    EvaluationFailed = 9,
    OutOfRange = 10,
    InvalidArgument = 11,
    Panic = 12,
    Other = 13,
}

/// Total derivative direction.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetinvDirection {
    Y = 0,
    U = 1,
}

/// Opaque expression handle.
pub struct JetinvExpr(Expr);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> JetinvStatus {
    match e {
        Error::Syntax { .. } => JetinvStatus::SyntaxError,
        Error::UnknownSymbol { .. } => JetinvStatus::UnknownSymbol,
        Error::ZeroDenominator => JetinvStatus::ZeroDenominator,
        Error::ExprTooLarge { .. } => JetinvStatus::ExprTooLarge,
        Error::OrderMismatch { .. } => JetinvStatus::OrderMismatch,
        Error::TowerExhausted { .. } => JetinvStatus::TowerExhausted,
        Error::DivisionByZeroAtPoint | Error::UnassignedSymbol(_) => JetinvStatus::EvaluationFailed,
        Error::Invalid(_) => JetinvStatus::InvalidArgument,
        _ => JetinvStatus::Other,
    }
}

struct Fail(JetinvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> JetinvStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JetinvStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("internal error: {msg}"));
            JetinvStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(JetinvStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(JetinvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_expr<'a>(p: *const JetinvExpr, what: &str) -> Result<&'a Expr, Fail> {
    p.as_ref()
        .map(|h| &h.0)
        .ok_or_else(|| Fail(JetinvStatus::NullArgument, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(JetinvStatus::NullArgument, "output pointer is null".into()));
    }
    out.write(v);
    Ok(())
}

fn new_handle(e: Expr) -> *mut JetinvExpr {
    Box::into_raw(Box::new(JetinvExpr(e)))
}

fn new_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next jetinv call on the same thread.
#[no_mangle]
pub extern "C" fn jetinv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses `src` with the coordinates of J^order, height tower `H_n` and free constants.
///
/// # Safety
/// `src` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_expr_parse(
    src: *const c_char,
    order: u32,
    out: *mut *mut JetinvExpr,
) -> JetinvStatus {
    guard(|| {
        let s = read_str(src, "src")?;
        let ctx = JetContext::new(order as usize).with_tower("H");
        let e = parse_expression(s, &Vocabulary::jet(&ctx).with_any_constant())?;
        write_out(out, new_handle(e))
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `e` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn jetinv_expr_free(e: *mut JetinvExpr) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Canonical text form. Release with `jetinv_string_free`.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_expr_to_string(e: *const JetinvExpr, out: *mut *mut c_char) -> JetinvStatus {
    guard(|| {
        let e = read_expr(e, "expression")?;
        write_out(out, new_string(e.to_string()))
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn jetinv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Partial derivative with respect to a named symbol.
///
/// # Safety
/// `e` must be a live handle, `symbol` a valid string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_expr_diff(
    e: *const JetinvExpr,
    symbol: *const c_char,
    out: *mut *mut JetinvExpr,
) -> JetinvStatus {
    guard(|| {
        let e = read_expr(e, "expression")?;
        let s = read_str(symbol, "symbol")?;
        write_out(out, new_handle(e.diff(&Symbol::new(s))))
    })
}

/// Total derivative D_y or D_u; towers `name_n` shift under D_u.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_expr_total_derivative(
    e: *const JetinvExpr,
    direction: JetinvDirection,
    out: *mut *mut JetinvExpr,
) -> JetinvStatus {
    guard(|| {
        let e = read_expr(e, "expression")?;
        let ctx = JetContext::new(e.jet_order().unwrap_or(0)).with_tower_depth(usize::MAX - 1);
        let dir = match direction {
            JetinvDirection::Y => Direction::Y,
            JetinvDirection::U => Direction::U,
        };
        write_out(out, new_handle(ctx.total_derivative(e, dir)?))
    })
}

/// Evaluates at the point `names[i] = values[i]`, i < len.
///
/// # Safety
/// `names` and `values` must hold `len` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_expr_evaluate(
    e: *const JetinvExpr,
    names: *const *const c_char,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> JetinvStatus {
    guard(|| {
        let e = read_expr(e, "expression")?;
        if len > 0 && (names.is_null() || values.is_null()) {
            return Err(Fail(JetinvStatus::NullArgument, "point arrays are null".into()));
        }
        let mut p = JetPoint::new();
        for i in 0..len {
            let n = read_str(*names.add(i), "name")?;
            p = p.with(n, *values.add(i));
        }
        write_out(out, jetinv::jet::evaluate(e, &p)?)
    })
}

/// Exact equality of canonical forms.
///
/// # Safety
/// `a`, `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_expr_equal(
    a: *const JetinvExpr,
    b: *const JetinvExpr,
    out: *mut bool,
) -> JetinvStatus {
    guard(|| {
        let (a, b) = (read_expr(a, "a")?, read_expr(b, "b")?);
        write_out(out, a == b)
    })
}

/// Number of catalog invariants.
#[no_mangle]
pub extern "C" fn jetinv_catalog_len() -> usize {
    invariants::catalog().len()
}

/// Name (release with `jetinv_string_free`) and body (release with
/// `jetinv_expr_free`) of catalog entry `index`. Either output may be NULL.
///
/// # Safety
/// Non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_catalog_get(
    index: usize,
    name: *mut *mut c_char,
    body: *mut *mut JetinvExpr,
) -> JetinvStatus {
    guard(|| {
        let c = invariants::catalog();
        let j = c.get(index).ok_or_else(|| {
            Fail(JetinvStatus::OutOfRange, format!("index {index} out of range (len {})", c.len()))
        })?;
        if !name.is_null() {
            name.write(new_string(j.name.clone()));
        }
        if !body.is_null() {
            body.write(new_handle(j.body.clone()));
        }
        Ok(())
    })
}

/// Whether `e` is annihilated by the prolonged generators Y1..Y4.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_verify_invariance(e: *const JetinvExpr, out: *mut bool) -> JetinvStatus {
    guard(|| {
        let e = read_expr(e, "expression")?;
        let r = invariants::verify_invariance(&Invariant::from_expr("expr", e.clone()))?;
        write_out(out, r.pass())
    })
}

/// Runs a CLI command (argv without the program name) and returns its JSON
/// document and exit code. Release `json_out` with `jetinv_string_free`.
///
/// # Safety
/// `argv` must hold `argc` valid strings; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn jetinv_run_command(
    argv: *const *const c_char,
    argc: usize,
    json_out: *mut *mut c_char,
    exit_code: *mut i32,
) -> JetinvStatus {
    guard(|| {
        if argc > 0 && argv.is_null() {
            return Err(Fail(JetinvStatus::NullArgument, "argv is null".into()));
        }
        let mut args = vec!["jetinv".to_string()];
        for i in 0..argc {
            args.push(read_str(*argv.add(i), "argument")?.to_string());
        }
        let r = jetinv::cli::dispatch(args);
        write_out(exit_code, r.exit_code())?;
        write_out(json_out, new_string(r.to_json()))
    })
}
