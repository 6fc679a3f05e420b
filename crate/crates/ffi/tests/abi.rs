use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mrps_ffi::*;

fn fixture(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        mrps_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn h2_exact_energy_and_hf_fidelity() {
    unsafe {
        let mut p = ptr::null_mut();
        let path = fixture("h2_sto3g_r0.7414.fcidump");
        assert_eq!(mrps_problem_load(path.as_ptr(), ptr::null(), ptr::null(), &mut p), MrpsStatus::Ok);
        let mut n = 0;
        assert_eq!(mrps_problem_n_qubits(p, &mut n), MrpsStatus::Ok);
        assert_eq!(n, 4);

        let (mut e, mut ground) = (0.0, ptr::null_mut());
        assert_eq!(mrps_exact_ground_state(p, &mut e, &mut ground), MrpsStatus::Ok);
        assert!((e - -1.137270174661).abs() < 1e-8);

        let mut hf = ptr::null_mut();
        assert_eq!(mrps_hf_state(p, &mut hf), MrpsStatus::Ok);
        let (mut ehf, mut f) = (0.0, 0.0);
        assert_eq!(mrps_expectation(p, hf, &mut ehf), MrpsStatus::Ok);
        assert_eq!(mrps_fidelity(ground, hf, &mut f), MrpsStatus::Ok);
        assert!(ehf > e && f > 0.9 && f < 1.0);

        mrps_state_free(hf);
        mrps_state_free(ground);
        mrps_problem_free(p);
    }
}

#[test]
fn adapt_from_product_state_reaches_exact() {
    unsafe {
        let mut p = ptr::null_mut();
        let path = fixture("h4_rect_r2_1.00_localized.fcidump");
        let (frags, elec) = (CString::new("0,2;1,3").unwrap(), CString::new("2,2").unwrap());
        assert_eq!(mrps_problem_load(path.as_ptr(), frags.as_ptr(), elec.as_ptr(), &mut p), MrpsStatus::Ok);
        let mut reference = ptr::null_mut();
        assert_eq!(mrps_product_state(p, 6, 4, 1, &mut reference), MrpsStatus::Ok);
        let mut summary = MrpsAdaptSummary::default();
        let mut fin = ptr::null_mut();
        assert_eq!(mrps_adapt(p, reference, MrpsPool::QubitInter as i32, 1, &mut summary, &mut fin), MrpsStatus::Ok);
        assert!(summary.converged);
        assert!((summary.energy - summary.exact_energy).abs() < 1e-6, "{summary:?}");
        assert!(summary.cnots > 0 && summary.iterations > 0);
        let mut e = 0.0;
        assert_eq!(mrps_expectation(p, fin, &mut e), MrpsStatus::Ok);
        assert!((e - summary.energy).abs() < 1e-10);
        mrps_state_free(fin);
        mrps_state_free(reference);
        mrps_problem_free(p);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        let missing = fixture("missing.fcidump");
        assert_eq!(mrps_problem_load(missing.as_ptr(), ptr::null(), ptr::null(), &mut p), MrpsStatus::Config);
        assert!(p.is_null());
        assert!(last_error().contains("missing.fcidump"));

        assert_eq!(mrps_problem_load(ptr::null(), ptr::null(), ptr::null(), &mut p), MrpsStatus::NullPointer);
        assert_eq!(last_error(), "path is null");

        let path = fixture("h2_sto3g_r0.7414.fcidump");
        let frags = CString::new("0;1").unwrap();
        assert_eq!(mrps_problem_load(path.as_ptr(), frags.as_ptr(), ptr::null(), &mut p), MrpsStatus::InvalidArgument);
        let bad = CString::new("3").unwrap();
        assert_eq!(mrps_problem_load(path.as_ptr(), frags.as_ptr(), bad.as_ptr(), &mut p), MrpsStatus::Config);

        assert_eq!(mrps_problem_load(path.as_ptr(), ptr::null(), ptr::null(), &mut p), MrpsStatus::Ok);
        assert_eq!(mrps_last_error(ptr::null_mut(), 0), 0);
        let (mut hf, mut summary) = (ptr::null_mut(), MrpsAdaptSummary::default());
        assert_eq!(mrps_hf_state(p, &mut hf), MrpsStatus::Ok);
        assert_eq!(mrps_adapt(p, hf, 7, 0, &mut summary, ptr::null_mut()), MrpsStatus::InvalidArgument);
        assert_eq!(mrps_product_state(p, 0, 1, 0, &mut hf), MrpsStatus::Config);
        let mut e = 0.0;
        assert_eq!(mrps_expectation(p, ptr::null(), &mut e), MrpsStatus::NullPointer);

        let mut small = [0 as c_char; 4];
        let full = mrps_last_error(small.as_mut_ptr(), small.len());
        assert_eq!(full, "state is null".len());
        assert_eq!(CStr::from_ptr(small.as_ptr()).to_str().unwrap(), "sta");

        mrps_state_free(hf);
        mrps_problem_free(p);
        mrps_problem_free(ptr::null_mut());
        assert!(CStr::from_ptr(mrps_version()).to_str().unwrap().starts_with("0."));
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"mrps.h\"\nint main(void) { MrpsProblem *p = 0; MrpsAdaptSummary s; (void)s;\n  return mrps_problem_load(\"x\", 0, 0, &p) == MRPS_STATUS_OK ? MRPS_POOL_QUBIT_INTER : 0; }\n",
    )
    .unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let Ok(status) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"]).arg(&include).arg(&src).status()
    else {
        eprintln!("no C compiler; header check skipped");
        return;
    };
    assert!(status.success());
}
