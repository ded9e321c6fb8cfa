//! C ABI over `ckcount`. Tables and counters are opaque handles created by
//! `*_new` and released by `*_free`; every call returns a [`CkStatus`] and
//! writes results through out-pointers. Panics never cross the boundary.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use ckcount::trig::CoeffTable;
use ckcount::{Counter, Dilation, Error, RepTable, Q};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    TableTooSmall = 4,
    Overflow = 5,
    Panic = 6,
    Failure = 7,
}

impl From<&Error> for CkStatus {
    fn from(e: &Error) -> CkStatus {
        match e {
            Error::InvalidArgument(_) | Error::Policy(_) => CkStatus::InvalidArgument,
            Error::Capacity { .. } | Error::Range { .. } | Error::SearchCap(_) => CkStatus::Capacity,
            Error::TableTooSmall { .. } => CkStatus::TableTooSmall,
            Error::Overflow(_) => CkStatus::Overflow,
            _ => CkStatus::Failure,
        }
    }
}

/// A static, NUL-terminated description of `status`.
#[no_mangle]
pub extern "C" fn ck_status_message(status: CkStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        CkStatus::Ok => b"ok\0",
        CkStatus::NullPointer => b"null pointer argument\0",
        CkStatus::InvalidArgument => b"invalid argument\0",
        CkStatus::Capacity => b"capacity budget exceeded\0",
        CkStatus::TableTooSmall => b"table too small for the request\0",
        CkStatus::Overflow => b"value does not fit the output type\0",
        CkStatus::Panic => b"internal panic\0",
        CkStatus::Failure => b"computation failed\0",
    };
    s.as_ptr().cast()
}

fn guard(f: impl FnOnce() -> Result<(), CkStatus>) -> CkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CkStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => CkStatus::Panic,
    }
}

fn lift<T>(r: ckcount::Result<T>) -> Result<T, CkStatus> {
    r.map_err(|e| CkStatus::from(&e))
}

fn q_of(q: u32) -> Result<Q, CkStatus> {
    lift(Q::new(q))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), CkStatus> {
    if out.is_null() {
        return Err(CkStatus::NullPointer);
    }
    out.write(v);
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, CkStatus> {
    p.as_ref().ok_or(CkStatus::NullPointer)
}

fn narrow(v: u128) -> Result<u64, CkStatus> {
    u64::try_from(v).map_err(|_| CkStatus::Overflow)
}

/// Opaque table of r₂ and r_{2k} up to a limit.
pub struct CkRepTable(RepTable);

/// Opaque table of the trigonometric coefficients for one (q, H, d_max).
pub struct CkCoeffTable(CoeffTable);

/// Opaque counter able to evaluate counts and error terms up to a dilation.
pub struct CkCounter(Counter);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CkErrorSample {
    pub x: f64,
    pub quartic: u64,
    pub count: u64,
    pub main: f64,
    pub err: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CkCoeffs {
    pub a: f64,
    pub a_star: f64,
    pub a_chi: f64,
    pub b_star: f64,
}

/// vol(𝓑) for the given q.
///
/// # Safety
/// `out` must be null or valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn ck_ball_volume(q: u32, out: *mut f64) -> CkStatus {
    guard(|| put(out, ckcount::geometry::ball_volume(q_of(q)?)))
}

/// # Safety
/// `out` must be null or valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_rep_table_new(q: u32, limit: u64, out: *mut *mut CkRepTable) -> CkStatus {
    guard(|| {
        if out.is_null() {
            return Err(CkStatus::NullPointer);
        }
        let t = lift(RepTable::build(q_of(q)?, limit))?;
        put(out, Box::into_raw(Box::new(CkRepTable(t))))
    })
}

/// r_{2q}(m) from the table.
///
/// # Safety
/// `table` must come from `ck_rep_table_new` and not be freed; `out` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn ck_rep_table_r2q(table: *const CkRepTable, m: u64, out: *mut u64) -> CkStatus {
    guard(|| {
        let t = &borrow(table)?.0;
        if m > t.limit() {
            return Err(CkStatus::TableTooSmall);
        }
        put(out, narrow(t.r2q()[m as usize])?)
    })
}

/// # Safety
/// `table` must be null or a live handle from `ck_rep_table_new`.
#[no_mangle]
pub unsafe extern "C" fn ck_rep_table_free(table: *mut CkRepTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `out` must be null or valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_counter_new(q: u32, x_max: f64, out: *mut *mut CkCounter) -> CkStatus {
    guard(|| {
        if out.is_null() {
            return Err(CkStatus::NullPointer);
        }
        let c = lift(Counter::new(q_of(q)?, x_max))?;
        put(out, Box::into_raw(Box::new(CkCounter(c))))
    })
}

unsafe fn sample(counter: *const CkCounter, dil: Dilation, out: *mut CkErrorSample) -> Result<(), CkStatus> {
    let s = lift(borrow(counter)?.0.error_term(dil))?;
    put(
        out,
        CkErrorSample {
            x: s.x,
            quartic: narrow(s.quartic)?,
            count: narrow(s.count)?,
            main: s.main,
            err: s.err,
        },
    )
}

/// Count and error term at x with x⁴ = `quartic` exactly.
///
/// # Safety
/// `counter` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ck_counter_error_quartic(counter: *const CkCounter, quartic: u64, out: *mut CkErrorSample) -> CkStatus {
    guard(|| sample(counter, Dilation::from_quartic(quartic), out))
}

/// Count and error term at a real dilation x.
///
/// # Safety
/// `counter` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ck_counter_error(counter: *const CkCounter, x: f64, out: *mut CkErrorSample) -> CkStatus {
    guard(|| sample(counter, lift(Dilation::from_real(x))?, out))
}

/// (1/X)∫_X^{2X} 𝓔_q² dx; the counter must reach 2X.
///
/// # Safety
/// `counter` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ck_counter_mean_square(counter: *const CkCounter, big_x: f64, out: *mut f64) -> CkStatus {
    guard(|| put(out, lift(ckcount::moments::mean_square_exact(&borrow(counter)?.0, big_x))?))
}

/// # Safety
/// `counter` must be null or a live handle from `ck_counter_new`.
#[no_mangle]
pub unsafe extern "C" fn ck_counter_free(counter: *mut CkCounter) {
    if !counter.is_null() {
        drop(Box::from_raw(counter));
    }
}

/// # Safety
/// `out` must be null or valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn ck_coeff_table_new(q: u32, h: f64, d_max: u64, out: *mut *mut CkCoeffTable) -> CkStatus {
    guard(|| {
        if out.is_null() {
            return Err(CkStatus::NullPointer);
        }
        let t = lift(CoeffTable::build(q_of(q)?, h, d_max))?;
        put(out, Box::into_raw(Box::new(CkCoeffTable(t))))
    })
}

/// Coefficients at (m, d); zero where none are stored.
///
/// # Safety
/// `table` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ck_coeff_table_get(table: *const CkCoeffTable, m: u64, d: u64, out: *mut CkCoeffs) -> CkStatus {
    guard(|| {
        let t = &borrow(table)?.0;
        if d == 0 || m == 0 {
            return Err(CkStatus::InvalidArgument);
        }
        if d > t.d_max() {
            return Err(CkStatus::TableTooSmall);
        }
        let c = t.get(m, d).unwrap_or_default();
        put(out, CkCoeffs { a: c.a, a_star: c.a_star, a_chi: c.a_chi, b_star: c.b_star })
    })
}

/// Number of stored (m, d) keys.
///
/// # Safety
/// `table` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ck_coeff_table_len(table: *const CkCoeffTable, out: *mut u64) -> CkStatus {
    guard(|| put(out, borrow(table)?.0.len() as u64))
}

/// # Safety
/// `table` must be null or a live handle from `ck_coeff_table_new`.
#[no_mangle]
pub unsafe extern "C" fn ck_coeff_table_free(table: *mut CkCoeffTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}
