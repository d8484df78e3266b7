//! C ABI over the detection pipeline: opaque handles, integer status codes,
//! and a thread-local last-error message.
//!
//! The matching header lives at `include/coordnet.h` and is maintained by
//! hand; keep both sides in sync when the surface changes.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use libc::{c_char, c_double, c_longlong, c_ulonglong};

use coordnet::actions::{extract_actions, ActionType};
use coordnet::community::{louvain, CommunityPartition};
use coordnet::graph::{build_graph, threshold_graph, write_edge_csv, CoordinationGraph};
use coordnet::ingest::load_dataset;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    IoError = 4,
    ParseError = 5,
    InternalError = 6,
}

/// Stats of one channel, mirrored in the header as a plain struct.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CoordnetChannelStats {
    pub coordinated_nodes: c_ulonglong,
    pub coordinated_links: c_ulonglong,
    pub filtered_nodes: c_ulonglong,
    pub filtered_links: c_ulonglong,
    pub threshold: c_ulonglong,
    pub communities: c_ulonglong,
    pub filtered_density: c_double,
    pub modularity: c_double,
}

struct ChannelResult {
    coordinated_nodes: u64,
    coordinated_links: u64,
    threshold: u64,
    filtered: CoordinationGraph,
    filtered_density: f64,
    partition: CommunityPartition,
}

/// Opaque detection handle; created by `coordnet_detect_file`, released by
/// `coordnet_detection_free`.
pub struct CoordnetDetection {
    channels: Vec<(ActionType, ChannelResult)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message.replace('\0', "?"))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Library version as a static string; never freed by the caller.
#[no_mangle]
pub extern "C" fn coordnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy of the last error message on this thread, or NULL when none.
/// Free with `coordnet_string_free`.
#[no_mangle]
pub extern "C" fn coordnet_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(message) => message.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by `coordnet_last_error` (or
/// NULL), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coordnet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, CoordnetStatus> {
    if ptr.is_null() {
        set_error(format!("{name} is NULL"));
        return Err(CoordnetStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        CoordnetStatus::InvalidUtf8
    })
}

fn channel_arg(name: &str) -> Result<ActionType, CoordnetStatus> {
    ActionType::parse(name).ok_or_else(|| {
        set_error(format!(
            "unknown channel {name:?}; expected semantic, referral or social"
        ));
        CoordnetStatus::InvalidArgument
    })
}

fn run_detection(
    posts_path: &str,
    event_id: &str,
    window_seconds: u64,
    seed: u64,
) -> Result<CoordnetDetection, CoordnetStatus> {
    if window_seconds == 0 {
        set_error("window_seconds must be at least 1".to_string());
        return Err(CoordnetStatus::InvalidArgument);
    }
    let dataset = load_dataset(Path::new(posts_path), event_id, None).map_err(|e| {
        set_error(e.to_string());
        match e {
            coordnet::Error::Io { .. } => CoordnetStatus::IoError,
            coordnet::Error::CorruptInput { .. } => CoordnetStatus::ParseError,
            _ => CoordnetStatus::InternalError,
        }
    })?;
    let mut channels = Vec::with_capacity(3);
    for ty in ActionType::ALL {
        let events = extract_actions(&dataset, ty);
        let coordinated = build_graph(ty, &events, window_seconds);
        let outcome = threshold_graph(&coordinated);
        let partition = louvain(&outcome.graph, seed);
        channels.push((
            ty,
            ChannelResult {
                coordinated_nodes: outcome.coordinated.node_count as u64,
                coordinated_links: outcome.coordinated.edge_count as u64,
                threshold: outcome.threshold,
                filtered_density: outcome.filtered.density,
                filtered: outcome.graph,
                partition,
            },
        ));
    }
    Ok(CoordnetDetection { channels })
}

/// Run detection over a JSONL post export at a fixed window, producing an
/// opaque handle with per-channel graphs and partitions.
///
/// # Safety
/// `posts_path` and `event_id` must be valid NUL-terminated strings and
/// `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn coordnet_detect_file(
    posts_path: *const c_char,
    event_id: *const c_char,
    window_seconds: c_ulonglong,
    seed: c_ulonglong,
    out: *mut *mut CoordnetDetection,
) -> CoordnetStatus {
    clear_error();
    if out.is_null() {
        set_error("out is NULL".to_string());
        return CoordnetStatus::NullPointer;
    }
    let posts = match cstr_arg(posts_path, "posts_path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let event = match cstr_arg(event_id, "event_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let result = catch_unwind(AssertUnwindSafe(|| {
        run_detection(posts, event, window_seconds, seed)
    }));
    match result {
        Ok(Ok(detection)) => {
            *out = Box::into_raw(Box::new(detection));
            CoordnetStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            CoordnetStatus::InternalError
        }
    }
}

/// Fill `out` with the stats of one channel ("semantic", "referral",
/// "social").
///
/// # Safety
/// `detection` must be a live handle from `coordnet_detect_file`; `channel`
/// a valid NUL-terminated string; `out` a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn coordnet_detection_channel_stats(
    detection: *const CoordnetDetection,
    channel: *const c_char,
    out: *mut CoordnetChannelStats,
) -> CoordnetStatus {
    clear_error();
    if detection.is_null() || out.is_null() {
        set_error("detection or out is NULL".to_string());
        return CoordnetStatus::NullPointer;
    }
    let name = match cstr_arg(channel, "channel") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let ty = match channel_arg(name) {
        Ok(ty) => ty,
        Err(status) => return status,
    };
    let detection = &*detection;
    let Some((_, result)) = detection.channels.iter().find(|(t, _)| *t == ty) else {
        set_error(format!("channel {name} absent from this detection"));
        return CoordnetStatus::InvalidArgument;
    };
    *out = CoordnetChannelStats {
        coordinated_nodes: result.coordinated_nodes,
        coordinated_links: result.coordinated_links,
        filtered_nodes: result.filtered.node_count() as c_ulonglong,
        filtered_links: result.filtered.edge_count() as c_ulonglong,
        threshold: result.threshold,
        communities: result.partition.community_count() as c_ulonglong,
        filtered_density: result.filtered_density,
        modularity: result.partition.modularity,
    };
    CoordnetStatus::Ok
}

/// Write the filtered edge list of one channel as CSV.
///
/// # Safety
/// Pointer arguments as in `coordnet_detection_channel_stats`; `path` names
/// a writable location.
#[no_mangle]
pub unsafe extern "C" fn coordnet_detection_write_edges_csv(
    detection: *const CoordnetDetection,
    channel: *const c_char,
    path: *const c_char,
) -> CoordnetStatus {
    clear_error();
    if detection.is_null() {
        set_error("detection is NULL".to_string());
        return CoordnetStatus::NullPointer;
    }
    let name = match cstr_arg(channel, "channel") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let ty = match channel_arg(name) {
        Ok(ty) => ty,
        Err(status) => return status,
    };
    let out_path = match cstr_arg(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let detection = &*detection;
    let Some((_, result)) = detection.channels.iter().find(|(t, _)| *t == ty) else {
        set_error(format!("channel {name} absent from this detection"));
        return CoordnetStatus::InvalidArgument;
    };
    let mut buf = Vec::new();
    if let Err(e) = write_edge_csv(&result.filtered, &mut buf) {
        set_error(e.to_string());
        return CoordnetStatus::InternalError;
    }
    if let Err(e) = std::fs::write(out_path, &buf) {
        set_error(format!("{out_path}: {e}"));
        return CoordnetStatus::IoError;
    }
    CoordnetStatus::Ok
}

/// Look up the community id of a user within one channel. Writes -1 when the
/// user is absent from the filtered graph.
///
/// # Safety
/// Pointer arguments as in `coordnet_detection_channel_stats`.
#[no_mangle]
pub unsafe extern "C" fn coordnet_detection_community_of(
    detection: *const CoordnetDetection,
    channel: *const c_char,
    user_id: *const c_char,
    out_community: *mut c_longlong,
) -> CoordnetStatus {
    clear_error();
    if detection.is_null() || out_community.is_null() {
        set_error("detection or out_community is NULL".to_string());
        return CoordnetStatus::NullPointer;
    }
    let name = match cstr_arg(channel, "channel") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let ty = match channel_arg(name) {
        Ok(ty) => ty,
        Err(status) => return status,
    };
    let user = match cstr_arg(user_id, "user_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let detection = &*detection;
    let Some((_, result)) = detection.channels.iter().find(|(t, _)| *t == ty) else {
        set_error(format!("channel {name} absent from this detection"));
        return CoordnetStatus::InvalidArgument;
    };
    *out_community = result
        .partition
        .assignment
        .get(user)
        .map(|&c| c as c_longlong)
        .unwrap_or(-1);
    CoordnetStatus::Ok
}

/// Release a detection handle.
///
/// # Safety
/// `detection` must come from `coordnet_detect_file` and not be used after
/// this call. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn coordnet_detection_free(detection: *mut CoordnetDetection) {
    if !detection.is_null() {
        drop(Box::from_raw(detection));
    }
}
