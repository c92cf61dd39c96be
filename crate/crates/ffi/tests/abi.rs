use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mmblock::*;

fn baseline() -> MmbScenario {
    let mut s = std::mem::MaybeUninit::<MmbScenario>::uninit();
    assert_eq!(
        unsafe { mmb_scenario_default(s.as_mut_ptr()) },
        MmbStatus::Ok
    );
    unsafe { s.assume_init() }
}

fn build(s: &MmbScenario, n: u32) -> Result<*mut MmbModel, MmbStatus> {
    let mut m = ptr::null_mut();
    match unsafe { mmb_model_build(s, n, &mut m) } {
        MmbStatus::Ok => Ok(m),
        st => {
            assert!(m.is_null());
            Err(st)
        }
    }
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 512];
    let n = unsafe { mmb_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn baseline_metrics() {
    let m = build(&baseline(), 0).unwrap();
    let mut out = MmbMetrics::default();
    assert_eq!(unsafe { mmb_model_metrics(m, &mut out) }, MmbStatus::Ok);
    assert!((out.frac_los - 0.876).abs() < 2e-3, "{out:?}");
    assert!((out.e_xi - out.e_omega - out.e_eta).abs() < 1e-12);
    assert!((out.e_eta_numeric - out.e_eta).abs() / out.e_eta < 1e-3);
    unsafe { mmb_model_free(m) };
}

#[test]
fn cdfs_are_monotone_and_bounded() {
    let m = build(&baseline(), 1000).unwrap();
    let xs: Vec<f64> = (0..200).map(|k| k as f64 * 0.02).collect();
    for dist in [
        MmbDistribution::ResidenceTime,
        MmbDistribution::Blocked,
        MmbDistribution::NonBlocked,
        MmbDistribution::ResidualBlocked,
    ] {
        let mut out = vec![f64::NAN; xs.len()];
        assert_eq!(
            unsafe { mmb_model_cdf(m, dist, xs.as_ptr(), out.as_mut_ptr(), xs.len()) },
            MmbStatus::Ok
        );
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)), "{dist:?}");
        assert!(out.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{dist:?}");
    }
    unsafe { mmb_model_free(m) };
}

#[test]
fn conditional_rows() {
    let m = build(&baseline(), 1000).unwrap();
    let lags = [0.0, 0.5, 50.0];
    let mut out = [MmbConditional::default(); 3];
    assert_eq!(
        unsafe { mmb_model_conditional(m, lags.as_ptr(), 3, 1e-5, out.as_mut_ptr()) },
        MmbStatus::Ok
    );
    assert_eq!((out[0].p00, out[0].p11), (1.0, 1.0));
    for r in &out {
        assert!((r.p00 + r.p01 - 1.0).abs() <= 1e-5);
        assert!((r.p10 + r.p11 - 1.0).abs() <= 1e-5);
    }
    assert!(out[2].terms_used > 0);
    unsafe { mmb_model_free(m) };
}

#[test]
fn errors_carry_status_and_message() {
    let mut s = baseline();
    s.v = -1.0;
    assert_eq!(build(&s, 0), Err(MmbStatus::InvalidParameter));
    assert!(last_error().contains('v'), "{}", last_error());

    let mut s = baseline();
    s.lambda_i = 0.0;
    assert_eq!(build(&s, 0), Err(MmbStatus::NeverBlocked));

    let mut s = baseline();
    s.h_b = 5.0;
    assert!(build(&s, 0).is_err());

    assert_eq!(
        unsafe { mmb_model_build(ptr::null(), 0, &mut ptr::null_mut()) },
        MmbStatus::NullPointer
    );
    assert!(last_error().contains("scenario"));
    let mut out = MmbMetrics::default();
    assert_eq!(
        unsafe { mmb_model_metrics(ptr::null(), &mut out) },
        MmbStatus::NullPointer
    );
    let name = unsafe { CStr::from_ptr(mmb_status_string(MmbStatus::NeverBlocked)) };
    assert_eq!(name.to_str().unwrap(), "link is never blocked");
}

#[test]
fn explicit_mode_matches_the_default() {
    let a = baseline();
    let mut b = a;
    b.kind = MmbScenarioKind::S2;
    b.c = a.w_s / 2.0;
    let mut c = a;
    c.kind = MmbScenarioKind::S2;
    let metrics = |s: &MmbScenario| {
        let m = build(s, 1000).unwrap();
        let mut out = MmbMetrics::default();
        unsafe { mmb_model_metrics(m, &mut out) };
        unsafe { mmb_model_free(m) };
        out.e_eta_numeric
    };
    assert_eq!(metrics(&b), metrics(&c));
}

#[test]
fn trace_round_trip() {
    let s = baseline();
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { mmb_simulate(&s, 500.0, 4, MmbSimMode::Exact, &mut t) },
        MmbStatus::Ok
    );
    let n = unsafe { mmb_trace_len(t) };
    assert!(n > 10);
    let mut small = vec![MmbInterval::default(); n - 1];
    assert_eq!(
        unsafe { mmb_trace_intervals(t, small.as_mut_ptr(), small.len()) },
        MmbStatus::BufferTooSmall
    );
    let mut iv = vec![MmbInterval::default(); n];
    assert_eq!(
        unsafe { mmb_trace_intervals(t, iv.as_mut_ptr(), n) },
        MmbStatus::Ok
    );
    assert_eq!(iv[0].start, 0.0);
    assert_eq!(iv[n - 1].end, 500.0);
    assert!(iv
        .windows(2)
        .all(|w| w[0].end == w[1].start && w[0].blocked != w[1].blocked));
    unsafe { mmb_trace_free(t) };
    unsafe { mmb_trace_free(ptr::null_mut()) };
    assert_eq!(unsafe { mmb_trace_len(ptr::null()) }, 0);
}

/// Compiles the C smoke program against the generated header and the static
/// library, then runs it.
#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libmmblock.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out = profile_dir.join("mmblock_c_smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&out)
        .status()
        .expect("run the C compiler");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
