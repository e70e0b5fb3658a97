//! C ABI over toastlab.
//!
//! Every function returns a [`TlStatus`]. On failure a message is kept per
//! thread and can be fetched with [`tl_last_error`]. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use toastlab::construct::{greedy_toast, quasi_tile, ComputableAction};
use toastlab::grid::{GridBox, Rect, Topology};
use toastlab::lcl::{rt_window_member, verify_labeling, LclProblem, WindowAssignment};
use toastlab::toast::{coverage, label_from_toast, Label, Labeling, Toast};
use toastlab::{coloring, io, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidToast = 3,
    Precondition = 4,
    Unsupported = 5,
    Overflow = 6,
    Parse = 7,
    Io = 8,
    Panic = 9,
}

/// A validated toast.
pub struct TlToast(Toast);

/// A labeling of a box.
pub struct TlLabeling(Labeling);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| {
        let mut v = msg.into_bytes();
        v.retain(|&b| b != 0);
        v.push(0);
        *e.borrow_mut() = v;
    });
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::Usage(_) | Error::Config(_) => TlStatus::InvalidArgument,
        Error::Precondition(_) => TlStatus::Precondition,
        Error::Overflow(_) => TlStatus::Overflow,
        Error::Unsupported(_) => TlStatus::Unsupported,
        Error::InvalidToast(_) => TlStatus::InvalidToast,
        Error::Parse { .. } => TlStatus::Parse,
        Error::Io(_) => TlStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), TlStatusError>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(TlStatusError(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            TlStatus::Panic
        }
    }
}

struct TlStatusError(TlStatus, String);

impl From<Error> for TlStatusError {
    fn from(e: Error) -> Self {
        TlStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> TlStatusError {
    TlStatusError(TlStatus::NullPointer, format!("null pointer: {what}"))
}

fn invalid(msg: impl Into<String>) -> TlStatusError {
    TlStatusError(TlStatus::InvalidArgument, msg.into())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], TlStatusError> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, TlStatusError> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), TlStatusError> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn toast_ref<'a>(t: *const TlToast) -> Result<&'a Toast, TlStatusError> {
    t.as_ref().map(|t| &t.0).ok_or_else(|| null("toast"))
}

unsafe fn labeling_ref<'a>(l: *const TlLabeling) -> Result<&'a Labeling, TlStatusError> {
    l.as_ref().map(|l| &l.0).ok_or_else(|| null("labeling"))
}

fn topology(torus: bool) -> Topology {
    if torus {
        Topology::Torus
    } else {
        Topology::HardBoundary
    }
}

/// Copies the calling thread's last error message into `buf` and returns the
/// length it needs including the terminating NUL. Pass `buf = NULL` to query.
///
/// # Safety
/// `buf` must be NULL or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tl_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let msg: &[u8] = if e.is_empty() { b"\0" } else { &e };
        if !buf.is_null() && cap > 0 {
            let k = msg.len().min(cap);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, k);
            *buf.add(k - 1) = 0;
        }
        msg.len()
    })
}

/// Builds and validates a toast. Piece `i` spans `lo[i*n..i*n+n]` to `hi[i*n..i*n+n]`.
///
/// # Safety
/// `box_lo`, `box_hi` point to `n` coordinates; `lo`, `hi` to `count * n`; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_new(
    n: usize,
    box_lo: *const i64,
    box_hi: *const i64,
    torus: bool,
    q: u32,
    lo: *const i64,
    hi: *const i64,
    count: usize,
    out: *mut *mut TlToast,
) -> TlStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        let total = count.checked_mul(n).ok_or_else(|| invalid("piece count overflows"))?;
        let grid = GridBox::new(slice(box_lo, n, "box_lo")?, slice(box_hi, n, "box_hi")?, topology(torus))?;
        let (lo, hi) = (slice(lo, total, "lo")?, slice(hi, total, "hi")?);
        let pieces = (0..count)
            .map(|i| Rect::new(&lo[i * n..(i + 1) * n], &hi[i * n..(i + 1) * n]))
            .collect::<toastlab::Result<Vec<_>>>()?;
        put(out, TlToast(Toast::new(grid, q, pieces)?))
    })
}

/// Greedy toast with `count` squares on `Z^n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_greedy(n: usize, q: u32, count: usize, big_gaps: bool, out: *mut *mut TlToast) -> TlStatus {
    guard(|| {
        let t = greedy_toast(&ComputableAction::new(n)?, q, count, big_gaps)?;
        put(out, TlToast(t))
    })
}

/// Quasi-tiling of the torus `[box_lo, box_hi]` with the given square sides.
///
/// # Safety
/// `box_lo`, `box_hi` point to `n` coordinates, `scales` to `nscales`; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_quasi_tile(
    n: usize,
    box_lo: *const i64,
    box_hi: *const i64,
    q: u32,
    scales: *const i64,
    nscales: usize,
    seed: u64,
    out: *mut *mut TlToast,
) -> TlStatus {
    guard(|| {
        let grid = GridBox::new(slice(box_lo, n, "box_lo")?, slice(box_hi, n, "box_hi")?, Topology::Torus)?;
        let qt = quasi_tile(&grid, q, slice(scales, nscales, "scales")?, seed)?;
        put(out, TlToast(qt.toast))
    })
}

/// Reads a toast file and validates it.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_read(path: *const c_char, out: *mut *mut TlToast) -> TlStatus {
    guard(|| {
        let f = std::fs::File::open(cstr(path, "path")?).map_err(Error::from)?;
        put(out, TlToast(io::read_toast(std::io::BufReader::new(f))?))
    })
}

/// # Safety
/// `t` is a live toast handle; `path` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_write(t: *const TlToast, path: *const c_char) -> TlStatus {
    guard(|| {
        let t = toast_ref(t)?;
        let mut f = std::fs::File::create(cstr(path, "path")?).map_err(Error::from)?;
        io::write_toast(&mut f, t)?;
        Ok(())
    })
}

/// Number of pieces, or 0 for NULL.
///
/// # Safety
/// `t` is NULL or a live toast handle.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_len(t: *const TlToast) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// Copies piece `i` into `lo` and `hi`, each of length `n`.
///
/// # Safety
/// `t` is a live toast handle; `lo` and `hi` point to `n` writable coordinates.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_piece(t: *const TlToast, i: usize, lo: *mut i64, hi: *mut i64, n: usize) -> TlStatus {
    guard(|| {
        let t = toast_ref(t)?;
        let p = t.pieces().get(i).ok_or_else(|| invalid(format!("piece {i} out of range")))?;
        if n != p.n() {
            return Err(invalid(format!("buffer length {n} differs from dimension {}", p.n())));
        }
        if lo.is_null() || hi.is_null() {
            return Err(null("lo/hi"));
        }
        ptr::copy_nonoverlapping(p.lo.as_ptr(), lo, n);
        ptr::copy_nonoverlapping(p.hi.as_ptr(), hi, n);
        Ok(())
    })
}

/// Covered fraction of the box as a reduced fraction.
///
/// # Safety
/// `t` is a live toast handle; `num` and `den` are writable.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_coverage(t: *const TlToast, num: *mut u64, den: *mut u64) -> TlStatus {
    guard(|| {
        let c = coverage(toast_ref(t)?)?;
        if num.is_null() || den.is_null() {
            return Err(null("num/den"));
        }
        let conv = |x: u128| u64::try_from(x).map_err(|_| TlStatusError(TlStatus::Overflow, "coverage exceeds 64 bits".into()));
        *num = conv(c.num)?;
        *den = conv(c.den)?;
        Ok(())
    })
}

/// # Safety
/// `t` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_toast_free(t: *mut TlToast) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// R/B/G labeling of a toast.
///
/// # Safety
/// `t` is a live toast handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tl_label_rt(t: *const TlToast, out: *mut *mut TlLabeling) -> TlStatus {
    guard(|| put(out, TlLabeling(label_from_toast(toast_ref(t)?)?)))
}

/// R/B/0/1 labeling of a toast.
///
/// # Safety
/// `t` is a live toast handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tl_label_crt(t: *const TlToast, q: u32, out: *mut *mut TlLabeling) -> TlStatus {
    guard(|| put(out, TlLabeling(coloring::assemble_crt(toast_ref(t)?, q)?)))
}

/// Reads a labeling file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn tl_labeling_read(path: *const c_char, out: *mut *mut TlLabeling) -> TlStatus {
    guard(|| {
        let f = std::fs::File::open(cstr(path, "path")?).map_err(Error::from)?;
        put(out, TlLabeling(io::read_labeling(std::io::BufReader::new(f))?))
    })
}

/// # Safety
/// `l` is a live labeling handle; `path` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tl_labeling_write(l: *const TlLabeling, path: *const c_char) -> TlStatus {
    guard(|| {
        let l = labeling_ref(l)?;
        let mut f = std::fs::File::create(cstr(path, "path")?).map_err(Error::from)?;
        io::write_labeling(&mut f, l)?;
        Ok(())
    })
}

/// Number of cells, or 0 for NULL.
///
/// # Safety
/// `l` is NULL or a live labeling handle.
#[no_mangle]
pub unsafe extern "C" fn tl_labeling_len(l: *const TlLabeling) -> usize {
    l.as_ref().map_or(0, |l| l.0.cells.len())
}

/// Copies all label codes (ASCII, last axis fastest) into `buf`.
///
/// # Safety
/// `l` is a live labeling handle; `buf` points to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tl_labeling_codes(l: *const TlLabeling, buf: *mut u8, len: usize) -> TlStatus {
    guard(|| {
        let l = labeling_ref(l)?;
        if len != l.cells.len() {
            return Err(invalid(format!("buffer length {len} differs from {} cells", l.cells.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        for (k, c) in l.cells.iter().enumerate() {
            *buf.add(k) = c.byte();
        }
        Ok(())
    })
}

/// # Safety
/// `l` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_labeling_free(l: *mut TlLabeling) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Counts violations of `problem` (`rt:<q>`, `crt:<q>`, `color:<k>`).
///
/// # Safety
/// `l` is a live labeling handle; `problem` is a NUL-terminated string; `count` is writable.
#[no_mangle]
pub unsafe extern "C" fn tl_verify(l: *const TlLabeling, problem: *const c_char, count: *mut usize) -> TlStatus {
    guard(|| {
        let l = labeling_ref(l)?;
        let p = LclProblem::parse(cstr(problem, "problem")?)?;
        let v = verify_labeling(&p, l)?;
        if count.is_null() {
            return Err(null("count"));
        }
        *count = v.len();
        Ok(())
    })
}

/// Decides whether a window of side `2q+1` (ASCII codes R, B, G) belongs to RT(q).
///
/// # Safety
/// `codes` points to `len` bytes; `member` is writable.
#[no_mangle]
pub unsafe extern "C" fn tl_rt_window_member(n: usize, q: u32, codes: *const u8, len: usize, member: *mut bool) -> TlStatus {
    guard(|| {
        let bytes = slice(codes, len, "codes")?;
        let values = bytes
            .iter()
            .map(|&b| Label::from_char(b as char).ok_or_else(|| invalid(format!("bad label code {b}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let w = WindowAssignment::new(n, q, values)?;
        let m = rt_window_member(&w)?;
        if member.is_null() {
            return Err(null("member"));
        }
        *member = m;
        Ok(())
    })
}
