use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use sdi_core::em::{self, Backing, ComplexPermittivity, SlabGeometry};
use sdi_core::estimator;
use sdi_ffi::*;

fn last_error() -> Option<String> {
    let p = sdi_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn synthetic(a: f64, b: f64, c: f64, count: usize) -> *mut SdiDatasetHandle {
    let mut ds = ptr::null_mut();
    let s = unsafe { sdi_dataset_synthetic(a, b, c, count, 1e-4, 79e9, SdiDirection::Receding, &mut ds) };
    assert_eq!(s, SdiStatus::Ok);
    ds
}

#[test]
fn dataset_round_trip_and_fit() {
    let ds = synthetic(2.6, 0.1, 0.3, 40);
    assert_eq!(unsafe { sdi_dataset_len(ds) }, 40);
    let (mut re, mut im) = (vec![0.0; 40], vec![0.0; 40]);
    for m in 0..40 {
        assert_eq!(unsafe { sdi_dataset_get(ds, m, &mut re[m], &mut im[m]) }, SdiStatus::Ok);
    }
    let mut copy = ptr::null_mut();
    let s = unsafe { sdi_dataset_new(re.as_ptr(), im.as_ptr(), 40, 1e-4, 79e9, SdiDirection::Receding, &mut copy) };
    assert_eq!(s, SdiStatus::Ok);

    let mut fit = SdiFitResult::default();
    assert_eq!(unsafe { sdi_fit(copy, 100.0, 50.0, &mut fit) }, SdiStatus::Ok);
    assert!(last_error().is_none());
    assert_eq!(fit.converged, 1);
    assert!(fit.residual_norm < 1e-9);
    // the fitted curve reproduces the input
    let c1 = estimator::per_step_phase(1e-4, 79e9);
    for m in 0..40 {
        let (mut gr, mut gi) = (0.0, 0.0);
        let s = unsafe { sdi_model_gamma(fit.eps_real, fit.eps_imag, fit.phase_offset, m, c1, &mut gr, &mut gi) };
        assert_eq!(s, SdiStatus::Ok);
        assert!((gr - re[m]).abs() < 1e-9 && (gi - im[m]).abs() < 1e-9);
    }
    unsafe {
        sdi_dataset_free(ds);
        sdi_dataset_free(copy);
        sdi_dataset_free(ptr::null_mut());
    }
}

#[test]
fn error_codes_follow_the_cli() {
    let mut ds = ptr::null_mut();
    let re = [0.1, 0.2];
    let s = unsafe { sdi_dataset_new(re.as_ptr(), re.as_ptr(), 2, 1e-4, 79e9, SdiDirection::Receding, &mut ds) };
    assert_eq!(s, SdiStatus::InvalidInput);
    assert!(ds.is_null());
    assert!(last_error().unwrap().contains("at least 3"));

    let zeros = [0.0; 5];
    let s = unsafe { sdi_dataset_new(zeros.as_ptr(), zeros.as_ptr(), 5, 1e-4, 79e9, SdiDirection::Receding, &mut ds) };
    assert_eq!(s, SdiStatus::Ok);
    let mut fit = SdiFitResult::default();
    assert_eq!(unsafe { sdi_fit(ds, 100.0, 50.0, &mut fit) }, SdiStatus::DegenerateData);
    assert_eq!(unsafe { sdi_fit(ds, 0.5, 50.0, &mut fit) }, SdiStatus::InvalidInput);
    unsafe { sdi_dataset_free(ds) };

    assert_eq!(unsafe { sdi_fit(ptr::null(), 100.0, 50.0, &mut fit) }, SdiStatus::NullPointer);
    assert_eq!(unsafe { sdi_dataset_new(ptr::null(), ptr::null(), 4, 1e-4, 79e9, SdiDirection::Receding, &mut ds) }, SdiStatus::NullPointer);
    let mut d = 0.0;
    assert_eq!(unsafe { sdi_fraunhofer_distance(-1.0, 0.0038, &mut d) }, SdiStatus::InvalidInput);
    // a later success clears the message
    assert_eq!(unsafe { sdi_fraunhofer_distance(0.015, 0.0038, &mut d) }, SdiStatus::Ok);
    assert!(last_error().is_none());
    assert!((d - 2.0 * 0.015 * 0.015 / 0.0038).abs() < 1e-15);
}

#[test]
fn index_out_of_range() {
    let ds = synthetic(3.0, 0.15, 0.0, 5);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { sdi_dataset_get(ds, 5, &mut re, &mut im) }, SdiStatus::InvalidInput);
    unsafe { sdi_dataset_free(ds) };
}

#[test]
fn effective_reflection_matches_core() {
    let (mut re, mut im) = (0.0, 0.0);
    let s = unsafe { sdi_effective_reflection(4.0, 0.3, 5e-3, 1, 0.0, 0.0, 79e9, &mut re, &mut im) };
    assert_eq!(s, SdiStatus::Ok);
    let eps = ComplexPermittivity::new(4.0, 0.3).unwrap();
    let want = em::effective_reflection(eps, &SlabGeometry::new(5e-3, 0.25, Backing::Metal).unwrap(), 79e9).unwrap();
    assert_eq!((re, im), (want.re, want.im));

    // air backing behind an air slab reflects nothing
    let s = unsafe { sdi_effective_reflection(1.0, 0.0, 5e-3, 0, 1.0, 0.0, 79e9, &mut re, &mut im) };
    assert_eq!(s, SdiStatus::Ok);
    assert!(re.hypot(im) < 1e-15);
    let s = unsafe { sdi_effective_reflection(4.0, 0.3, 5e-3, 1, 0.0, 0.0, -1.0, &mut re, &mut im) };
    assert_eq!(s, SdiStatus::InvalidInput);
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/sdi.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["sdi_dataset_new", "sdi_dataset_free", "sdi_fit", "SdiFitResult", "SDI_STATUS_DEGENERATE_DATA"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", "-"])
        .arg("-include")
        .arg(&header)
        .stdin(std::fs::File::open("/dev/null").unwrap())
        .status()
    else {
        eprintln!("no C compiler; header syntax not checked");
        return;
    };
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/abi-* -> target/<profile>
    let profile = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile.join("libsdi_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let exe = tempfile::tempdir().unwrap();
    let bin = exe.path().join("smoke");
    let Ok(status) = Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.success(), "cc failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!String::from_utf8_lossy(&out.stdout).trim().is_empty());
}
