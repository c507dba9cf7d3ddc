use phototherm_ffi::*;
use std::ffi::CStr;
use std::ptr;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { pt_last_error(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn scalars_match_closed_forms() {
    let mut k = 0.0;
    assert_eq!(unsafe { pt_k_cut(1000.0, 0.5, 20.0, &mut k) }, PtStatus::Ok);
    assert!((k - (1000f64.ln() / 10.0).sqrt()).abs() < 1e-15);
    let (mut s, mut r) = (0.0, 0.0);
    assert_eq!(unsafe { pt_averaging_gain(200, &mut s, &mut r) }, PtStatus::Ok);
    assert!((s - 200f64.sqrt()).abs() < 1e-12 && (r - 0.5 * 200f64.ln()).abs() < 1e-12);
    let mut dr = 0.0;
    assert_eq!(unsafe { pt_delta_r_depth(2.0, 1000.0, &mut dr) }, PtStatus::Ok);
    assert!(dr > 0.0);
    let v = unsafe { CStr::from_ptr(pt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn errors_set_status_and_message() {
    let mut k = 0.0;
    assert_eq!(unsafe { pt_k_cut(0.5, 0.5, 20.0, &mut k) }, PtStatus::InvalidArgument);
    assert!(last_error().contains("snr"), "{}", last_error());
    assert_eq!(unsafe { pt_k_cut(1000.0, 0.5, 20.0, ptr::null_mut()) }, PtStatus::NullPointer);
    assert!(last_error().contains("out_k"));
    assert_eq!(unsafe { pt_k_cut(1000.0, 0.5, 20.0, &mut k) }, PtStatus::Ok);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { pt_averaging_gain(0, &mut k, &mut k) }, PtStatus::InvalidArgument);
    let full = unsafe { pt_last_error(ptr::null_mut(), 0) };
    let mut tiny = [0 as std::ffi::c_char; 4];
    assert_eq!(unsafe { pt_last_error(tiny.as_mut_ptr(), 4) }, full);
    assert_eq!(tiny[3], 0);
}

#[test]
fn kernel_round_trip() {
    let mut k: *mut PtKernel = ptr::null_mut();
    assert_eq!(unsafe { pt_kernel_new(200, 2.0, 200, 1.0, 1.0, 0.5, &mut k) }, PtStatus::Ok);
    let (mut nt, mut ntp) = (0, 0);
    assert_eq!(unsafe { pt_kernel_dims(k, &mut nt, &mut ntp) }, PtStatus::Ok);
    assert_eq!((nt, ntp), (200, 200));
    let x: Vec<f64> = (0..ntp).map(|j| (-((j as f64 - 30.0) / 6.0).powi(2)).exp()).collect();
    let mut y = vec![0.0; nt];
    assert_eq!(unsafe { pt_kernel_apply(k, x.as_ptr(), ntp, y.as_mut_ptr(), nt) }, PtStatus::Ok);
    let mut rec = vec![0.0; ntp];
    let mut rank = 0;
    assert_eq!(unsafe { pt_kernel_invert_tsvd(k, y.as_ptr(), nt, 1e-6, rec.as_mut_ptr(), ntp, &mut rank) }, PtStatus::Ok);
    assert!(rank > 0 && rank <= ntp);
    let mut back = vec![0.0; nt];
    unsafe { pt_kernel_apply(k, rec.as_ptr(), ntp, back.as_mut_ptr(), nt) };
    let err = back.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(err < 1e-3 * y.iter().map(|v| v * v).sum::<f64>().sqrt());

    let mut conv = false;
    let mut sparse = vec![0.0; ntp];
    let s = unsafe { pt_kernel_invert_admm(k, y.as_ptr(), nt, 0.01, 2000, sparse.as_mut_ptr(), ntp, &mut conv) };
    assert_eq!(s, PtStatus::Ok);
    assert!(sparse.iter().all(|&v| v >= 0.0));

    assert_eq!(unsafe { pt_kernel_apply(k, x.as_ptr(), ntp - 1, y.as_mut_ptr(), nt) }, PtStatus::ShapeMismatch);
    assert_eq!(unsafe { pt_kernel_apply(k, x.as_ptr(), ntp, y.as_mut_ptr(), nt + 1) }, PtStatus::ShapeMismatch);
    unsafe { pt_kernel_free(k) };
    unsafe { pt_kernel_free(ptr::null_mut()) };
}

#[test]
fn bad_kernel_leaves_null_handle() {
    let mut k: *mut PtKernel = 1 as *mut PtKernel;
    assert_eq!(unsafe { pt_kernel_new(10, 1.0, 10, 1.0, 1.0, -1.0, &mut k) }, PtStatus::InvalidArgument);
    assert!(k.is_null());
}

#[test]
fn walk_is_seeded_and_conserves_walkers() {
    let run = |seed| {
        let mut w: *mut PtWalk = ptr::null_mut();
        assert_eq!(unsafe { pt_walk_new(20, 1000, PtSource::Cell, 3, seed, &mut w) }, PtStatus::Ok);
        assert_eq!(unsafe { pt_walk_step(w, 50) }, PtStatus::Ok);
        let mut t = 0;
        unsafe { pt_walk_time(w, &mut t) };
        assert_eq!(t, 50);
        let mut h = vec![0u64; 20];
        assert_eq!(unsafe { pt_walk_histogram(w, h.as_mut_ptr(), 20) }, PtStatus::Ok);
        assert_eq!(unsafe { pt_walk_histogram(w, h.as_mut_ptr(), 19) }, PtStatus::ShapeMismatch);
        unsafe { pt_walk_free(w) };
        h
    };
    let a = run(9);
    assert_eq!(a.iter().sum::<u64>(), 1000);
    assert_eq!(a, run(9));
    assert_ne!(a, run(10));
    let mut w: *mut PtWalk = ptr::null_mut();
    assert_eq!(unsafe { pt_walk_new(20, 10, PtSource::Cell, 20, 1, &mut w) }, PtStatus::InvalidArgument);
    assert_eq!(unsafe { pt_walk_step(ptr::null_mut(), 1) }, PtStatus::NullPointer);
}

#[test]
fn psf_handle() {
    let mut p: *mut PtPsf = ptr::null_mut();
    assert_eq!(unsafe { pt_psf_new(1000.0, 1.0, 256, 2.0, &mut p) }, PtStatus::Ok);
    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { pt_psf_axial_window(p, &mut lo, &mut hi) }, PtStatus::Ok);
    assert!(lo < 1.0 && hi > 1.0);
    let (mut lat, mut ax) = (0.0, 0.0);
    assert_eq!(unsafe { pt_psf_fwhm(p, &mut lat, &mut ax) }, PtStatus::Ok);
    assert!(lat > ax);
    let mut v = vec![0.0; 256 * 256];
    assert_eq!(unsafe { pt_psf_values(p, v.as_mut_ptr(), v.len()) }, PtStatus::Ok);
    assert!((v.iter().fold(f64::MIN, |m, &x| m.max(x)) - 1.0).abs() < 1e-12);
    unsafe { pt_psf_free(p) };
    assert_eq!(unsafe { pt_psf_new(1000.0, 1.0, 2, 2.0, &mut p) }, PtStatus::InvalidArgument);
}

#[test]
fn header_is_current() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/phototherm.h")).unwrap();
    for name in [
        "pt_last_error", "pt_version", "pt_k_cut", "pt_delta_r_time", "pt_delta_r_depth", "pt_averaging_gain",
        "pt_kernel_new", "pt_kernel_free", "pt_kernel_dims", "pt_kernel_apply", "pt_kernel_invert_tsvd",
        "pt_kernel_invert_admm", "pt_walk_new", "pt_walk_free", "pt_walk_step", "pt_walk_time",
        "pt_walk_histogram", "pt_psf_new", "pt_psf_free", "pt_psf_values", "pt_psf_fwhm", "pt_psf_axial_window",
        "typedef struct PtKernel PtKernel", "PT_STATUS_SHAPE_MISMATCH = 3",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}
