// SPDX-License-Identifier: Apache-2.0

//! C ABI for the spikefabric simulator.
//!
//! Objects are opaque handles created by `sf_*_new`/`sf_*_load`/`sf_run`
//! and released with the matching `sf_*_free`. Every function returns an
//! [`SfStatus`]; on failure `sf_last_error()` describes the problem until the
//! next call on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spikefabric::codec::{self, Disparity};
use spikefabric::engine::{self, EngineError, SimConfig};
use spikefabric::io::{self, IoError};
use spikefabric::netcompiler::{self, FabricProgram};
use spikefabric::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Checksum = 4,
    Truncated = 5,
    Version = 6,
    Format = 7,
    Compile = 8,
    VerifyMismatch = 9,
    Config = 10,
    Engine = 11,
    Panic = 12,
}

/// Compiled routing tables.
pub struct SfProgram(FabricProgram);

/// Simulation configuration.
pub struct SfConfig(SimConfig);

/// Results of one run.
pub struct SfReport(engine::RunReport);

/// Byte buffer owned by the library; release with `sf_buffer_free`.
#[repr(C)]
pub struct SfBuffer {
    pub data: *mut u8,
    pub len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SfLatency {
    pub count: u64,
    pub p1_ns: u64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SfCounts {
    pub generated: u64,
    pub replicated: u64,
    pub traced: u64,
    pub dropped: u64,
    pub filtered: u64,
    pub in_flight: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SfTraceRecord {
    pub label: u16,
    pub emitted_ns: u64,
    pub link_arrived_ns: u64,
    pub arrived_ns: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(io) => return io.clone().into(),
            Error::Compile(_) => SfStatus::Compile,
            Error::Engine(EngineError::Config(_)) => SfStatus::Config,
            Error::Engine(_) | Error::Harness(_) => SfStatus::Engine,
            Error::Verify(_) => SfStatus::VerifyMismatch,
            Error::Usage(_) => SfStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let status = match e {
            IoError::Parse { .. } | IoError::Toml(_) | IoError::Json(_) | IoError::Csv(_) => SfStatus::Parse,
            IoError::Checksum { .. } => SfStatus::Checksum,
            IoError::Truncated { .. } => SfStatus::Truncated,
            IoError::Version { .. } => SfStatus::Version,
            IoError::Magic | IoError::Malformed(_) | IoError::Missing(_) | IoError::Fs { .. } => SfStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

impl From<netcompiler::CompileError> for Failure {
    fn from(e: netcompiler::CompileError) -> Self {
        Error::from(e).into()
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Error::from(e).into()
    }
}

fn fail(status: SfStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, converting errors and panics into a status and the last-error text.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            SfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(SfStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(SfStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(SfStatus::NullPointer, format!("{what} is NULL")))
}

fn into_buffer(bytes: Vec<u8>) -> SfBuffer {
    let boxed = bytes.into_boxed_slice();
    let len = boxed.len();
    SfBuffer { data: Box::into_raw(boxed) as *mut u8, len }
}

/// Description of the last failure on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a buffer returned by the library. NULL data is ignored.
///
/// # Safety
/// `buffer` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sf_buffer_free(buffer: SfBuffer) {
    if !buffer.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(buffer.data, buffer.len)));
    }
}

/// Compiles connectivity text for `node_count` nodes.
///
/// # Safety
/// `connectivity` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_program_compile(
    connectivity: *const c_char,
    node_count: u32,
    out: *mut *mut SfProgram,
) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let parsed = io::parse_connectivity(str_arg(connectivity, "connectivity")?)?;
        let program = netcompiler::compile(&parsed.connections, node_count as usize)?;
        *out = Box::into_raw(Box::new(SfProgram(program)));
        Ok(())
    })
}

/// Loads a program file image.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_program_load(bytes: *const u8, len: usize, out: *mut *mut SfProgram) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if bytes.is_null() && len > 0 {
            return Err(fail(SfStatus::NullPointer, "bytes is NULL"));
        }
        let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(bytes, len) };
        *out = Box::into_raw(Box::new(SfProgram(io::load_program(slice)?)));
        Ok(())
    })
}

/// Serializes a program into the program file format.
///
/// # Safety
/// `program` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_program_store(program: *const SfProgram, out: *mut SfBuffer) -> SfStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        let out = out_arg(out, "out")?;
        *out = into_buffer(io::store_program(&p.0));
        Ok(())
    })
}

/// Checks a program against connectivity text. Returns `VerifyMismatch`
/// with the differences as JSON in `sf_last_error()` when they disagree.
///
/// # Safety
/// `program` must be a live handle; `connectivity` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sf_program_verify(program: *const SfProgram, connectivity: *const c_char) -> SfStatus {
    guard(|| {
        let p = ref_arg(program, "program")?;
        let parsed = io::parse_connectivity(str_arg(connectivity, "connectivity")?)?;
        let report = netcompiler::verify(&p.0, &parsed.connections);
        if report.is_empty() {
            return Ok(());
        }
        let json = serde_json::to_string(&report).expect("report serializes");
        Err(fail(SfStatus::VerifyMismatch, json))
    })
}

/// # Safety
/// `program` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_program_free(program: *mut SfProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Parses a TOML config.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_config_parse(text: *const c_char, out: *mut *mut SfConfig) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg = io::load_config(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(SfConfig(cfg)));
        Ok(())
    })
}

/// Applies one `key = value` override; keys without a top-level section are calibration keys.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn sf_config_override(
    config: *mut SfConfig,
    key: *const c_char,
    value: *const c_char,
) -> SfStatus {
    guard(|| {
        let cfg = out_arg(config, "config")?;
        let (k, v) = (str_arg(key, "key")?, str_arg(value, "value")?);
        cfg.0.apply_override(k, v).map_err(|e| fail(SfStatus::InvalidArgument, e))
    })
}

/// # Safety
/// `config` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_config_free(config: *mut SfConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs a simulation to completion.
///
/// # Safety
/// `config` and `program` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_run(
    config: *const SfConfig,
    program: *const SfProgram,
    out: *mut *mut SfReport,
) -> SfStatus {
    guard(|| {
        let cfg = ref_arg(config, "config")?;
        let p = ref_arg(program, "program")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(SfReport(engine::run(&cfg.0, &p.0)?)));
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_report_free(report: *mut SfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Chip-to-chip latency percentiles; all zero when nothing was traced.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_report_latency(report: *const SfReport, out: *mut SfLatency) -> SfStatus {
    guard(|| {
        let r = &ref_arg(report, "report")?.0;
        let out = out_arg(out, "out")?;
        *out = match r.latency.percentiles {
            Some(p) => SfLatency {
                count: r.latency.count,
                p1_ns: p.p1_ns,
                p50_ns: p.p50_ns,
                p99_ns: p.p99_ns,
                max_ns: p.max_ns,
            },
            None => SfLatency::default(),
        };
        Ok(())
    })
}

/// Event-balance terms of the run.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_report_counts(report: *const SfReport, out: *mut SfCounts) -> SfStatus {
    guard(|| {
        let c = ref_arg(report, "report")?.0.conservation;
        *out_arg(out, "out")? = SfCounts {
            generated: c.generated,
            replicated: c.replicated,
            traced: c.traced,
            dropped: c.dropped(),
            filtered: c.filtered(),
            in_flight: c.in_flight,
        };
        Ok(())
    })
}

/// Number of trace records at receiver `node`.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_report_trace_len(report: *const SfReport, node: u32, out: *mut usize) -> SfStatus {
    guard(|| {
        let r = &ref_arg(report, "report")?.0;
        let out = out_arg(out, "out")?;
        let t =
            r.traces.get(node as usize).ok_or_else(|| fail(SfStatus::InvalidArgument, format!("no node {node}")))?;
        *out = t.len();
        Ok(())
    })
}

/// Trace record `index` at receiver `node`.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_report_trace_get(
    report: *const SfReport,
    node: u32,
    index: usize,
    out: *mut SfTraceRecord,
) -> SfStatus {
    guard(|| {
        let r = &ref_arg(report, "report")?.0;
        let out = out_arg(out, "out")?;
        let rec = r
            .traces
            .get(node as usize)
            .and_then(|t| t.get(index))
            .ok_or_else(|| fail(SfStatus::InvalidArgument, format!("no record {index} at node {node}")))?;
        let ns = |t: spikefabric::types::SimTime| t.ticks() * spikefabric::types::TICK_NS;
        *out = SfTraceRecord {
            label: rec.label.get(),
            emitted_ns: ns(rec.emitted_at),
            link_arrived_ns: ns(rec.link_arrived_at),
            arrived_ns: ns(rec.arrived_at),
        };
        Ok(())
    })
}

/// The report summary (counters and latency distributions, no traces) as JSON.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_report_json(report: *const SfReport, out: *mut SfBuffer) -> SfStatus {
    guard(|| {
        let r = &ref_arg(report, "report")?.0;
        let out = out_arg(out, "out")?;
        let json = serde_json::to_vec_pretty(r).map_err(|e| fail(SfStatus::Format, e.to_string()))?;
        *out = into_buffer(json);
        Ok(())
    })
}

/// Frames a 15-bit payload as an MGT word; `is_command` sets the command flag.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_mgt_frame(is_command: bool, payload: u32, out: *mut u16) -> SfStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let kind = if is_command { codec::MgtKind::Command } else { codec::MgtKind::Event };
        *out = codec::frame_mgt(kind, payload).map_err(|e| fail(SfStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

fn disparity(rd: i32) -> Result<Disparity, Failure> {
    match rd {
        -1 => Ok(Disparity::Negative),
        1 => Ok(Disparity::Positive),
        _ => Err(fail(SfStatus::InvalidArgument, format!("running disparity must be -1 or +1, got {rd}"))),
    }
}

/// Encodes one byte; `rd` is the running disparity (-1 or +1) and is updated.
///
/// # Safety
/// `rd` and `out_bits` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_8b10b_encode(byte: u8, is_control: bool, rd: *mut i32, out_bits: *mut u16) -> SfStatus {
    guard(|| {
        let rd = out_arg(rd, "rd")?;
        let out = out_arg(out_bits, "out_bits")?;
        let (sym, next) = codec::encode_8b10b(byte, is_control, disparity(*rd)?)
            .map_err(|e| fail(SfStatus::InvalidArgument, e.to_string()))?;
        *out = sym.bits;
        *rd = i32::from(next.as_i8());
        Ok(())
    })
}

/// Decodes one 10-bit code group; `rd` is checked and updated.
///
/// # Safety
/// `rd`, `out_byte` and `out_is_control` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_8b10b_decode(
    bits: u16,
    rd: *mut i32,
    out_byte: *mut u8,
    out_is_control: *mut bool,
) -> SfStatus {
    guard(|| {
        let rd = out_arg(rd, "rd")?;
        let byte = out_arg(out_byte, "out_byte")?;
        let k = out_arg(out_is_control, "out_is_control")?;
        let d = codec::decode_8b10b(bits, disparity(*rd)?).map_err(|e| fail(SfStatus::Parse, e.to_string()))?;
        *byte = d.byte;
        *k = d.is_control;
        *rd = i32::from(d.rd.as_i8());
        Ok(())
    })
}
