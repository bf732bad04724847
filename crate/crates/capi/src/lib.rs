//! C ABI over the PAC encoder and Fano decoder.
//!
//! Conventions: every function that can fail returns a [`PacStatus`]; 0 is
//! success. Handles are opaque and freed exactly once with
//! [`pac_code_free`]. A human-readable message for the most recent failure
//! on the calling thread is available from [`pac_last_error`] until the
//! next failing call on that thread. All pointers must be non-null unless
//! documented otherwise; buffers must have the documented lengths.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use paclab_core::fano::{fano_decode, FanoConfig};
use paclab_core::polar::polar_transform;
use paclab_core::precoder::{conv_encode, insert_data, CodeSpec};

/// Result of a `pac_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// The JSON could not be parsed.
    InvalidJson = 2,
    /// The code description is inconsistent (lengths, profile bounds...).
    InvalidSpec = 3,
    /// A scalar or buffer argument is out of contract.
    InvalidArgument = 4,
    /// The sequential search hit its visit budget before reaching a leaf.
    SearchExhausted = 5,
    /// An internal invariant failed; the library state is still sound.
    InternalError = 6,
}

/// Opaque handle to a fully validated code description.
pub struct PacCode {
    spec: CodeSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let mut text = msg.to_string();
    text.retain(|c| c != '\0');
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).expect("NULs stripped above");
    });
}

fn fail(status: PacStatus, msg: impl std::fmt::Display) -> PacStatus {
    set_error(msg);
    status
}

/// Message for the most recent failure on this thread.
///
/// The pointer stays valid until the next failing `pac_*` call on the same
/// thread. Never null; the string is empty when nothing has failed yet.
#[no_mangle]
pub extern "C" fn pac_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a code from its canonical JSON
/// (`{"n":..,"k":..,"profile":[..],"poly":[..],"offset":[..]}`).
///
/// On success writes a new handle to `out`; the caller owns it and must
/// release it with [`pac_code_free`].
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` to a writable
/// pointer slot.
#[no_mangle]
pub unsafe extern "C" fn pac_code_from_json(
    json: *const c_char,
    out: *mut *mut PacCode,
) -> PacStatus {
    if json.is_null() || out.is_null() {
        return fail(PacStatus::NullPointer, "json and out must be non-null");
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(e) => return fail(PacStatus::InvalidJson, format!("json is not UTF-8: {e}")),
    };
    // Deserialization funnels through the validating constructor, so a
    // parsed spec is a valid spec; serde only loses the error class.
    match serde_json::from_str::<CodeSpec>(text) {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(PacCode { spec }));
            PacStatus::Ok
        }
        Err(e) if e.is_data() => fail(PacStatus::InvalidSpec, e),
        Err(e) => fail(PacStatus::InvalidJson, e),
    }
}

/// Build a code from raw parts: `profile` holds `k` one-based input
/// positions, `poly` holds `poly_len` binary taps (constant term first),
/// and the per-position offset bits are all zero.
///
/// # Safety
/// `profile` must be readable for `k` entries, `poly` for `poly_len`, and
/// `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn pac_code_new(
    block_len: usize,
    k: usize,
    profile: *const u32,
    poly: *const u8,
    poly_len: usize,
    out: *mut *mut PacCode,
) -> PacStatus {
    if profile.is_null() || poly.is_null() || out.is_null() {
        return fail(PacStatus::NullPointer, "profile, poly and out must be non-null");
    }
    let profile: Vec<usize> =
        std::slice::from_raw_parts(profile, k).iter().map(|&p| p as usize).collect();
    let poly = std::slice::from_raw_parts(poly, poly_len).to_vec();
    match CodeSpec::new(block_len, profile, poly, vec![0; block_len]) {
        Ok(spec) => {
            *out = Box::into_raw(Box::new(PacCode { spec }));
            PacStatus::Ok
        }
        Err(e) => fail(PacStatus::InvalidSpec, e),
    }
}

/// Release a handle returned by the constructors. Null is a no-op.
///
/// # Safety
/// `code` must be a pointer returned by a `pac_code_*` constructor that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn pac_code_free(code: *mut PacCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Codeword length in bits, or 0 on a null handle.
///
/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pac_code_block_len(code: *const PacCode) -> usize {
    code.as_ref().map_or(0, |c| c.spec.block_len())
}

/// Data length in bits, or 0 on a null handle.
///
/// # Safety
/// `code` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pac_code_data_len(code: *const PacCode) -> usize {
    code.as_ref().map_or(0, |c| c.spec.data_len())
}

/// Encode `data_len` data bits (values 0/1) into `block_len` codeword bits.
///
/// # Safety
/// `data` must be readable for `pac_code_data_len(code)` entries and
/// `codeword` writable for `pac_code_block_len(code)` entries.
#[no_mangle]
pub unsafe extern "C" fn pac_encode(
    code: *const PacCode,
    data: *const u8,
    data_len: usize,
    codeword: *mut u8,
    codeword_len: usize,
) -> PacStatus {
    let Some(code) = code.as_ref() else {
        return fail(PacStatus::NullPointer, "code handle is null");
    };
    if data.is_null() || codeword.is_null() {
        return fail(PacStatus::NullPointer, "data and codeword must be non-null");
    }
    if data_len != code.spec.data_len() || codeword_len != code.spec.block_len() {
        return fail(
            PacStatus::InvalidArgument,
            format!(
                "expected data_len {} and codeword_len {}, got {data_len} and {codeword_len}",
                code.spec.data_len(),
                code.spec.block_len()
            ),
        );
    }
    let data = std::slice::from_raw_parts(data, data_len);
    let result = catch_unwind(AssertUnwindSafe(|| -> Result<Vec<u8>, String> {
        let v = insert_data(data, &code.spec).map_err(|e| e.to_string())?;
        let u = conv_encode(&v, &code.spec).map_err(|e| e.to_string())?;
        polar_transform(&u).map_err(|e| e.to_string())
    }));
    match result {
        Ok(Ok(x)) => {
            ptr::copy_nonoverlapping(x.as_ptr(), codeword, codeword_len);
            PacStatus::Ok
        }
        Ok(Err(e)) => fail(PacStatus::InvalidArgument, e),
        Err(_) => fail(PacStatus::InternalError, "encoder panicked"),
    }
}

/// Sequentially decode `block_len` channel LLRs into `data_len` data bits.
///
/// `delta` is the threshold spacing (must be positive). `max_visits` caps
/// forward moves; 0 means unbounded. `bias` may be null for an unbiased
/// metric, or point at `block_len` per-position metric biases. `visits`
/// (optional) receives the number of forward moves spent.
///
/// Returns `SearchExhausted` when the budget ran out first; `data` then
/// holds the best prefix found, zero-padded.
///
/// # Safety
/// `llrs` must be readable for `llr_len` entries, `data` writable for
/// `data_len` entries, `bias` null or readable for `llr_len` entries, and
/// `visits` null or writable.
#[no_mangle]
pub unsafe extern "C" fn pac_fano_decode(
    code: *const PacCode,
    llrs: *const f64,
    llr_len: usize,
    delta: f64,
    max_visits: u64,
    bias: *const f64,
    data: *mut u8,
    data_len: usize,
    visits: *mut u64,
) -> PacStatus {
    let Some(code) = code.as_ref() else {
        return fail(PacStatus::NullPointer, "code handle is null");
    };
    if llrs.is_null() || data.is_null() {
        return fail(PacStatus::NullPointer, "llrs and data must be non-null");
    }
    if llr_len != code.spec.block_len() || data_len != code.spec.data_len() {
        return fail(
            PacStatus::InvalidArgument,
            format!(
                "expected llr_len {} and data_len {}, got {llr_len} and {data_len}",
                code.spec.block_len(),
                code.spec.data_len()
            ),
        );
    }
    let llrs = std::slice::from_raw_parts(llrs, llr_len);
    let cfg = FanoConfig {
        delta,
        bias: if bias.is_null() {
            vec![0.0; llr_len]
        } else {
            std::slice::from_raw_parts(bias, llr_len).to_vec()
        },
        max_visits: (max_visits > 0).then_some(max_visits),
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| fano_decode(llrs, &code.spec, &cfg)));
    match outcome {
        Ok(Ok(out)) => {
            ptr::copy_nonoverlapping(out.d_hat.as_ptr(), data, data_len);
            if !visits.is_null() {
                *visits = out.visits_total;
            }
            if out.success {
                PacStatus::Ok
            } else {
                fail(PacStatus::SearchExhausted, "visit budget exhausted before a leaf")
            }
        }
        Ok(Err(e)) => fail(PacStatus::InvalidArgument, e),
        Err(_) => fail(PacStatus::InternalError, "decoder panicked"),
    }
}
