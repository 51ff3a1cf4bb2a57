//! C ABI over the hghz library.
//!
//! Keys and trapdoors cross the boundary as opaque handles that the caller
//! frees with the matching `*_free`. Every fallible call returns an `int32_t`
//! status (`HGHZ_OK` or a negative `HGHZ_ERR_*`) and writes results through
//! out-pointers. Byte and word buffers follow the usual two-call pattern:
//! pass a null buffer to learn the required length.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use hghz::family::{self, io, FamilyError, Params};
use hghz::rng;

pub const HGHZ_OK: i32 = 0;
pub const HGHZ_ERR_NULL: i32 = -1;
pub const HGHZ_ERR_INVALID: i32 = -2;
pub const HGHZ_ERR_FORMAT: i32 = -3;
pub const HGHZ_ERR_BUFFER_TOO_SMALL: i32 = -4;
pub const HGHZ_ERR_NO_TWIN: i32 = -5;
pub const HGHZ_ERR_PANIC: i32 = -6;

/// Public evaluation key.
pub struct HghzKey(family::HghzKey);

/// Inversion trapdoor.
pub struct HghzTrapdoor(family::HghzTrapdoor);

fn family_code(e: &FamilyError) -> i32 {
    match e {
        FamilyError::Format(_) => HGHZ_ERR_FORMAT,
        _ => HGHZ_ERR_INVALID,
    }
}

fn guard(f: impl FnOnce() -> i32) -> i32 {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(HGHZ_ERR_PANIC)
}

/// Nonzero bytes are 1 bits.
unsafe fn read_bits(p: *const u8, n: usize) -> Option<Vec<bool>> {
    if p.is_null() && n > 0 {
        return None;
    }
    if n == 0 {
        return Some(Vec::new());
    }
    Some(
        slice::from_raw_parts(p, n)
            .iter()
            .map(|&b| b != 0)
            .collect(),
    )
}

/// Copies `src` into `(buf, cap)`, always reporting the needed length.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, len_out: *mut usize) -> i32 {
    if len_out.is_null() {
        return HGHZ_ERR_NULL;
    }
    *len_out = src.len();
    if buf.is_null() {
        return HGHZ_OK;
    }
    if cap < src.len() {
        return HGHZ_ERR_BUFFER_TOO_SMALL;
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    HGHZ_OK
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn hghz_status_message(code: i32) -> *const c_char {
    let s: &'static CStr = match code {
        HGHZ_OK => c"ok",
        HGHZ_ERR_NULL => c"null pointer argument",
        HGHZ_ERR_INVALID => c"invalid argument or parameters",
        HGHZ_ERR_FORMAT => c"malformed key or trapdoor bytes",
        HGHZ_ERR_BUFFER_TOO_SMALL => c"output buffer too small",
        HGHZ_ERR_NO_TWIN => c"image has no twin preimage",
        HGHZ_ERR_PANIC => c"internal error",
        _ => c"unknown status",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn hghz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a toy key and trapdoor (N = 2, k = 12, αq = 2) for the support
/// `d0[0..n]`, retrying until the trapdoor passes its own check.
///
/// # Safety
/// `d0` must point to `n` readable bytes; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hghz_keygen_toy(
    d0: *const u8,
    n: usize,
    seed: u64,
    key_out: *mut *mut HghzKey,
    trapdoor_out: *mut *mut HghzTrapdoor,
) -> i32 {
    guard(|| {
        if key_out.is_null() || trapdoor_out.is_null() {
            return HGHZ_ERR_NULL;
        }
        let Some(d0) = read_bits(d0, n) else {
            return HGHZ_ERR_NULL;
        };
        if n == 0 {
            return HGHZ_ERR_INVALID;
        }
        let p = Params::toy_default(n);
        match family::gen_checked(&p, &d0, &mut rng::labeled(seed, "keygen", 0)) {
            Ok((k, t, _)) => {
                *key_out = Box::into_raw(Box::new(HghzKey(k)));
                *trapdoor_out = Box::into_raw(Box::new(HghzTrapdoor(t)));
                HGHZ_OK
            }
            Err(e) => family_code(&e),
        }
    })
}

/// # Safety
/// `key` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hghz_key_free(key: *mut HghzKey) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

/// # Safety
/// `trapdoor` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hghz_trapdoor_free(trapdoor: *mut HghzTrapdoor) {
    if !trapdoor.is_null() {
        drop(Box::from_raw(trapdoor));
    }
}

/// Serializes a key in the `.hghzk` container format.
///
/// # Safety
/// `buf` is null or points to `cap` writable bytes; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hghz_key_to_bytes(
    key: *const HghzKey,
    buf: *mut u8,
    cap: usize,
    len_out: *mut usize,
) -> i32 {
    guard(|| match key.as_ref() {
        Some(k) => copy_out(&io::write_key(&k.0), buf, cap, len_out),
        None => HGHZ_ERR_NULL,
    })
}

/// # Safety
/// `bytes` must point to `len` readable bytes; `key_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hghz_key_from_bytes(
    bytes: *const u8,
    len: usize,
    key_out: *mut *mut HghzKey,
) -> i32 {
    guard(|| {
        if bytes.is_null() || key_out.is_null() {
            return HGHZ_ERR_NULL;
        }
        match io::read_key(slice::from_raw_parts(bytes, len)) {
            Ok(k) => {
                *key_out = Box::into_raw(Box::new(HghzKey(k)));
                HGHZ_OK
            }
            Err(e) => family_code(&e),
        }
    })
}

/// Serializes a trapdoor in the `.hghzt` container format.
///
/// # Safety
/// `buf` is null or points to `cap` writable bytes; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hghz_trapdoor_to_bytes(
    trapdoor: *const HghzTrapdoor,
    buf: *mut u8,
    cap: usize,
    len_out: *mut usize,
) -> i32 {
    guard(|| match trapdoor.as_ref() {
        Some(t) => copy_out(&io::write_trapdoor(&t.0), buf, cap, len_out),
        None => HGHZ_ERR_NULL,
    })
}

/// # Safety
/// `bytes` must point to `len` readable bytes; `trapdoor_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hghz_trapdoor_from_bytes(
    bytes: *const u8,
    len: usize,
    trapdoor_out: *mut *mut HghzTrapdoor,
) -> i32 {
    guard(|| {
        if bytes.is_null() || trapdoor_out.is_null() {
            return HGHZ_ERR_NULL;
        }
        match io::read_trapdoor(slice::from_raw_parts(bytes, len)) {
            Ok(t) => {
                *trapdoor_out = Box::into_raw(Box::new(HghzTrapdoor(t)));
                HGHZ_OK
            }
            Err(e) => family_code(&e),
        }
    })
}

/// Writes 1 to `ok_out` when the trapdoor is an honest one for `key` and `d0`.
///
/// # Safety
/// Handles must be live; `d0` points to `n` readable bytes; `ok_out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hghz_check_trapdoor(
    key: *const HghzKey,
    trapdoor: *const HghzTrapdoor,
    d0: *const u8,
    n: usize,
    ok_out: *mut i32,
) -> i32 {
    guard(|| {
        let (Some(k), Some(t), Some(d0)) = (key.as_ref(), trapdoor.as_ref(), read_bits(d0, n))
        else {
            return HGHZ_ERR_NULL;
        };
        if ok_out.is_null() {
            return HGHZ_ERR_NULL;
        }
        *ok_out = i32::from(family::check_trapdoor(&d0, &t.0, &k.0));
        HGHZ_OK
    })
}

/// Samples x inside the margin box from `seed` and writes f_k(x) to `y`.
///
/// # Safety
/// `y` is null or points to `cap` writable words; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hghz_eval_sample(
    key: *const HghzKey,
    seed: u64,
    y: *mut u64,
    cap: usize,
    len_out: *mut usize,
) -> i32 {
    guard(|| {
        let Some(k) = key.as_ref() else {
            return HGHZ_ERR_NULL;
        };
        let p = &k.0.params;
        let x = family::sample_box(
            p,
            family::margin_radius(p),
            &mut rng::labeled(seed, "eval", 0),
        );
        match family::eval(&k.0, &x) {
            Ok(img) => copy_out(&img, y, cap, len_out),
            Err(e) => family_code(&e),
        }
    })
}

/// Inverts `y` and writes h of both preimages (one byte per bit, c = 0 first).
/// Returns `HGHZ_ERR_NO_TWIN` when the image has a single preimage.
///
/// # Safety
/// `y` points to `len` words; `h0` and `h1` each point to `n` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hghz_invert(
    trapdoor: *const HghzTrapdoor,
    y: *const u64,
    len: usize,
    h0: *mut u8,
    h1: *mut u8,
    n: usize,
) -> i32 {
    guard(|| {
        let Some(t) = trapdoor.as_ref() else {
            return HGHZ_ERR_NULL;
        };
        if y.is_null() || h0.is_null() || h1.is_null() {
            return HGHZ_ERR_NULL;
        }
        let p = &t.0.params;
        if n != p.n || len != p.m_rows() + p.n {
            return HGHZ_ERR_INVALID;
        }
        let y = slice::from_raw_parts(y, len);
        if y.iter().any(|&v| v >= p.q()) {
            return HGHZ_ERR_INVALID;
        }
        let Some((a, b)) = family::invert(&t.0, y) else {
            return HGHZ_ERR_NO_TWIN;
        };
        for (dst, src) in [(h0, family::h(&a)), (h1, family::h(&b))] {
            let out = slice::from_raw_parts_mut(dst, n);
            for (o, bit) in out.iter_mut().zip(src) {
                *o = u8::from(bit);
            }
        }
        HGHZ_OK
    })
}

/// Number of support bits a key was generated for.
///
/// # Safety
/// `key` must be live and `n_out` writable.
#[no_mangle]
pub unsafe extern "C" fn hghz_key_parties(key: *const HghzKey, n_out: *mut usize) -> i32 {
    match (key.as_ref(), n_out.is_null()) {
        (Some(k), false) => {
            *n_out = k.0.params.n;
            HGHZ_OK
        }
        _ => HGHZ_ERR_NULL,
    }
}
