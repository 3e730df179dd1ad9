use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use betalab_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        betalab_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn quadratic() -> *mut BetalabPotential {
    let c = [0.0, 0.0, 0.5];
    let mut p = ptr::null_mut();
    let s = unsafe { betalab_potential_new(c.as_ptr(), c.len(), 0.0, 1, &mut p) };
    assert_eq!(s, BetalabStatus::Ok);
    p
}

#[test]
fn semicircle_through_the_c_abi() {
    unsafe {
        let p = quadratic();
        let mut e = ptr::null_mut();
        assert_eq!(betalab_equilibrium_solve(p, &mut e), BetalabStatus::Ok);

        let mut q = 0usize;
        assert_eq!(betalab_equilibrium_cut_count(e, &mut q), BetalabStatus::Ok);
        assert_eq!(q, 1);
        let mut edges = [0.0; 2];
        assert_eq!(betalab_equilibrium_edges(e, edges.as_mut_ptr(), 2), BetalabStatus::Ok);
        assert!((edges[0] + 2.0).abs() < 1e-10 && (edges[1] - 2.0).abs() < 1e-10);

        let mut rho = 0.0;
        assert_eq!(betalab_equilibrium_density(e, 0.0, &mut rho), BetalabStatus::Ok);
        assert!((rho - 1.0 / std::f64::consts::PI).abs() < 1e-10);

        let mut med = 1.0;
        assert_eq!(betalab_equilibrium_quantile(e, 0.5, &mut med), BetalabStatus::Ok);
        assert!(med.abs() < 1e-10);

        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(betalab_equilibrium_stieltjes(e, 0.0, 1.0, &mut re, &mut im), BetalabStatus::Ok);
        // m(i) = (i − √(i² − 4))/2 = −i(√5 − 1)/2.
        assert!(re.abs() < 1e-10 && (im + (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-10);

        let mut sample = [0.0; 32];
        assert_eq!(betalab_tridiagonal_sample(2.0, 32, 7, sample.as_mut_ptr()), BetalabStatus::Ok);
        assert!(sample.windows(2).all(|w| w[0] <= w[1]));
        let mut w = 0.0;
        assert_eq!(betalab_wasserstein1(e, sample.as_ptr(), 32, &mut w), BetalabStatus::Ok);
        assert!(w > 0.0 && w < 0.5);

        betalab_equilibrium_free(e);
        betalab_potential_free(p);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(betalab_potential_eval(ptr::null(), 0.0, &mut out), BetalabStatus::NullPointer);
        assert!(last_error().contains("null"));

        let p = quadratic();
        let mut e = ptr::null_mut();
        assert_eq!(betalab_equilibrium_solve(p, &mut e), BetalabStatus::Ok);
        let mut one = [0.0; 1];
        assert_eq!(betalab_equilibrium_edges(e, one.as_mut_ptr(), 1), BetalabStatus::BufferTooSmall);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(
            betalab_equilibrium_stieltjes(e, 0.0, 0.0, &mut re, &mut im),
            BetalabStatus::NumericFailure
        );
        assert!(!last_error().is_empty());
        assert_eq!(betalab_equilibrium_quantile(e, 1.5, &mut out), BetalabStatus::InvalidArgument);

        let mut s = [0.0; 4];
        assert_eq!(betalab_tridiagonal_sample(-1.0, 4, 1, s.as_mut_ptr()), BetalabStatus::InvalidArgument);

        let bad = [f64::NAN];
        let mut q = ptr::null_mut();
        assert_eq!(betalab_potential_new(bad.as_ptr(), 1, 0.0, 0, &mut q), BetalabStatus::InvalidArgument);
        assert!(q.is_null());

        betalab_equilibrium_free(e);
        betalab_potential_free(p);
        betalab_potential_free(ptr::null_mut());
    }
}

#[test]
fn mcmc_is_deterministic() {
    unsafe {
        let p = quadratic();
        let (n, m) = (6, 5);
        let mut a = vec![0.0; n * m];
        let mut b = vec![0.0; n * m];
        assert_eq!(betalab_mcmc_sample(p, 2.0, n, m, 50, 2, 11, a.as_mut_ptr(), a.len()), BetalabStatus::Ok);
        assert_eq!(betalab_mcmc_sample(p, 2.0, n, m, 50, 2, 11, b.as_mut_ptr(), b.len()), BetalabStatus::Ok);
        assert_eq!(a, b);
        let mut small = vec![0.0; 3];
        assert_eq!(
            betalab_mcmc_sample(p, 2.0, n, m, 50, 2, 11, small.as_mut_ptr(), small.len()),
            BetalabStatus::BufferTooSmall
        );
        betalab_potential_free(p);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(betalab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_generated_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/betalab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["betalab_equilibrium_solve", "BETALAB_STATUS_NUMERIC_FAILURE", "typedef struct BetalabPotential"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
