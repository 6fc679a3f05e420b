//! C ABI for the `mrps` library.
//!
//! Every function returns an [`MrpsStatus`]; results come back through out-pointers.
//! Handles are opaque and owned by the caller, who releases them with the matching
//! `*_free` function. On failure the message is kept per thread and can be read with
//! [`mrps_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mrps::adapt::{adapt_vqe, build_pool, PoolKind};
use mrps::cli::run::{build_mrps, load_problem, Problem};
use mrps::cli::RunConfig;
use mrps::integrals::hf_reference;
use mrps::oracle::{fidelity, ground_state_in_sector};
use mrps::simulator::{expectation, prepare_basis, QuantumState};
use mrps::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrpsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Validation = 5,
    Dimension = 6,
    Optimizer = 7,
    Config = 8,
    Internal = 9,
    Panic = 10,
}

/// Operator pool for [`mrps_adapt`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrpsPool {
    FermionicInter = 0,
    FermionicFull = 1,
    QubitInter = 2,
}

/// A molecular problem: integrals, fragment partition and qubit Hamiltonian.
pub struct MrpsProblem(Problem);

/// A state vector.
pub struct MrpsState(QuantumState);

/// Outcome of an ADAPT-VQE run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MrpsAdaptSummary {
    pub energy: f64,
    pub exact_energy: f64,
    pub iterations: usize,
    pub cnots: usize,
    pub converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MrpsStatus {
    match err {
        Error::Parse { .. } | Error::Schema(_) => MrpsStatus::Parse,
        Error::Io(_) => MrpsStatus::Io,
        Error::Validation(_) | Error::Parity { .. } | Error::NonHermitian(_) => MrpsStatus::Validation,
        Error::Dimension(_) => MrpsStatus::Dimension,
        Error::Optimizer(_) => MrpsStatus::Optimizer,
        Error::Config(_) => MrpsStatus::Config,
        Error::UnsupportedGate(_) => MrpsStatus::Internal,
    }
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MrpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MrpsStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("{name} is null"));
            MrpsStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            MrpsStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MrpsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Arg(format!("{name} is not valid UTF-8")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated, truncated
/// to `len`) and returns the full message length in bytes, or 0 when there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mrps_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mrps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads an FCIDUMP file. The fragment partition is read from the `.meta` sidecar next
/// to it unless both `fragments` (e.g. `"0,2;1,3"`) and `electrons` (e.g. `"2,2"`) are
/// given.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out_problem` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mrps_problem_load(
    path: *const c_char,
    fragments: *const c_char,
    electrons: *const c_char,
    out_problem: *mut *mut MrpsProblem,
) -> MrpsStatus {
    guard(|| {
        let slot = out(out_problem, "out_problem")?;
        *slot = ptr::null_mut();
        let path = text(path, "path")?;
        let partition = match (fragments.is_null(), electrons.is_null()) {
            (true, true) => None,
            (false, false) => Some((text(fragments, "fragments")?.to_string(), text(electrons, "electrons")?.to_string())),
            _ => return Err(Failure::Arg("fragments and electrons must be given together".into())),
        };
        let p = load_problem(Path::new(path), None, partition.as_ref())?;
        *slot = boxed(MrpsProblem(p));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`mrps_problem_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mrps_problem_free(problem: *mut MrpsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Number of qubits (twice the number of spatial orbitals).
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mrps_problem_n_qubits(problem: *const MrpsProblem, out_n: *mut usize) -> MrpsStatus {
    guard(|| {
        *out(out_n, "out_n")? = deref(problem, "problem")?.0.partition.n_qubits();
        Ok(())
    })
}

/// Exact ground-state energy in the problem's electron-number sector. When `out_state`
/// is non-null it receives a new state handle with the ground state.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mrps_exact_ground_state(
    problem: *const MrpsProblem,
    out_energy: *mut f64,
    out_state: *mut *mut MrpsState,
) -> MrpsStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.0;
        let e = out(out_energy, "out_energy")?;
        let r = ground_state_in_sector(&p.hamiltonian, p.integrals.n_elec)?;
        *e = r.energy;
        if let Some(s) = out_state.as_mut() {
            *s = boxed(MrpsState(r.state));
        }
        Ok(())
    })
}

/// Closed-shell Hartree–Fock determinant on the problem's register.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mrps_hf_state(problem: *const MrpsProblem, out_state: *mut *mut MrpsState) -> MrpsStatus {
    guard(|| {
        let slot = out(out_state, "out_state")?;
        let p = &deref(problem, "problem")?.0;
        *slot = boxed(MrpsState(prepare_basis(hf_reference(&p.integrals, &p.partition)?)));
        Ok(())
    })
}

/// Multireference product state from fragment VQE with `layers` HEA layers and
/// `restarts` seeded restarts per fragment.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mrps_product_state(
    problem: *const MrpsProblem,
    layers: usize,
    restarts: usize,
    seed: u64,
    out_state: *mut *mut MrpsState,
) -> MrpsStatus {
    guard(|| {
        let slot = out(out_state, "out_state")?;
        let p = &deref(problem, "problem")?.0;
        let mut cfg = RunConfig::default();
        cfg.hea.layers = layers;
        cfg.optimizer.restarts = restarts;
        cfg.optimizer.seed = seed;
        cfg.hea.validate()?;
        cfg.optimizer.validate()?;
        let (_, _, state) = build_mrps(p, &cfg)?;
        *slot = boxed(MrpsState(state));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a state handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mrps_state_free(state: *mut MrpsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// `⟨ψ|H|ψ⟩` of the problem's Hamiltonian.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mrps_expectation(
    problem: *const MrpsProblem,
    state: *const MrpsState,
    out_energy: *mut f64,
) -> MrpsStatus {
    guard(|| {
        let e = out(out_energy, "out_energy")?;
        *e = expectation(&deref(state, "state")?.0, &deref(problem, "problem")?.0.hamiltonian)?;
        Ok(())
    })
}

/// `|⟨a|b⟩|²`.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mrps_fidelity(a: *const MrpsState, b: *const MrpsState, out_value: *mut f64) -> MrpsStatus {
    guard(|| {
        let v = out(out_value, "out_value")?;
        *v = fidelity(&deref(a, "a")?.0, &deref(b, "b")?.0)?;
        Ok(())
    })
}

/// ADAPT-VQE from `reference` with `pool` (an [`MrpsPool`] value) and default
/// thresholds. When `out_state` is non-null it receives the final state.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mrps_adapt(
    problem: *const MrpsProblem,
    reference: *const MrpsState,
    pool: i32,
    seed: u64,
    out_summary: *mut MrpsAdaptSummary,
    out_state: *mut *mut MrpsState,
) -> MrpsStatus {
    guard(|| {
        let summary = out(out_summary, "out_summary")?;
        let p = &deref(problem, "problem")?.0;
        let reference = &deref(reference, "reference")?.0;
        let kind = match pool {
            p if p == MrpsPool::FermionicInter as i32 => PoolKind::FermionicGsdInter,
            p if p == MrpsPool::FermionicFull as i32 => PoolKind::FermionicGsdFull,
            p if p == MrpsPool::QubitInter as i32 => PoolKind::QubitInter,
            other => return Err(Failure::Arg(format!("unknown pool {other}"))),
        };
        let mut cfg = RunConfig::default();
        cfg.optimizer.seed = seed;
        let ops = build_pool(&p.partition, p.partition.n_qubits(), kind)?;
        let r = adapt_vqe(&p.hamiltonian, reference, &ops, &cfg.adapt, &cfg.optimizer)?;
        let exact = ground_state_in_sector(&p.hamiltonian, p.integrals.n_elec)?.energy;
        *summary = MrpsAdaptSummary {
            energy: r.final_energy,
            exact_energy: exact,
            iterations: r.iterations.len(),
            cnots: r.cnots(),
            converged: r.converged,
        };
        if let Some(s) = out_state.as_mut() {
            *s = boxed(MrpsState(r.final_state(reference)?));
        }
        Ok(())
    })
}
