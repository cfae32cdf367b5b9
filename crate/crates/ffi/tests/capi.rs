use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use codedcache_ffi::*;

const TOY: &str = r#"{"K": 3, "groups": [{"size": 1, "r": 2}, {"size": 1, "r": 1}], "popularity": ["153/200", "47/200"]}"#;

fn placement(json: &str) -> *mut CcPlacement {
    let json = CString::new(json).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { cc_placement_from_json(json.as_ptr(), &mut p) },
        CcStatus::Ok
    );
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let e = cc_last_error();
    assert!(!e.is_null());
    unsafe { CStr::from_ptr(e) }.to_str().unwrap().to_string()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let text = CStr::from_ptr(s).to_str().unwrap().to_string();
    cc_string_free(s);
    text
}

unsafe fn deliver(p: *const CcPlacement, d: &str, sched: u32) -> (CcStatus, *mut CcSchedule) {
    let d = CString::new(d).unwrap();
    let mut s = ptr::null_mut();
    (cc_deliver(p, d.as_ptr(), sched, &mut s), s)
}

#[test]
fn subpacketization_of_the_example() {
    let mut s = 0u64;
    let r = [2u32, 1];
    assert_eq!(
        unsafe { cc_subpacketization(3, r.as_ptr(), 2, &mut s) },
        CcStatus::Ok
    );
    assert_eq!(s, 6);
    let bad = [1u32, 2];
    assert_eq!(
        unsafe { cc_subpacketization(3, bad.as_ptr(), 2, &mut s) },
        CcStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { cc_subpacketization(3, ptr::null(), 2, &mut s) },
        CcStatus::NullPointer
    );
}

#[test]
fn cache_json_matches_the_cli_golden() {
    let p = placement(TOY);
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(cc_placement_cache_json(p, &mut out), CcStatus::Ok);
        let golden =
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/toy_cache.json");
        assert_eq!(take(out), std::fs::read_to_string(golden).unwrap());
        let (mut num, mut den) = (0, 0);
        assert_eq!(cc_placement_memory(p, 2, &mut num, &mut den), CcStatus::Ok);
        assert_eq!((num, den), (1, 1));
        assert_eq!(
            cc_placement_memory(p, 4, &mut num, &mut den),
            CcStatus::InvalidArgument
        );
        cc_placement_free(p);
    }
}

#[test]
fn deliver_and_verify_all_demands() {
    let p = placement(TOY);
    unsafe {
        for (d, rate) in [("A,A,A", (1, 3)), ("A,B,A", (2, 3)), ("B,B,B", (2, 3))] {
            for sched in [
                CC_SCHEDULER_TOY,
                CC_SCHEDULER_GREEDY,
                CC_SCHEDULER_EXHAUSTIVE,
                CC_SCHEDULER_AUTO,
            ] {
                let (status, s) = deliver(p, d, sched);
                assert_eq!(status, CcStatus::Ok, "{d} {sched}");
                let mut ok = false;
                assert_eq!(cc_verify(p, s, &mut ok), CcStatus::Ok);
                assert!(ok);
                if sched != CC_SCHEDULER_GREEDY {
                    let (mut num, mut den) = (0, 0);
                    cc_schedule_rate(s, &mut num, &mut den);
                    assert_eq!((num, den), rate, "{d} {sched}");
                }
                cc_schedule_free(s);
            }
        }
        let (_, s) = deliver(p, "A,A,B", CC_SCHEDULER_TOY);
        let mut n = 0usize;
        assert_eq!(cc_schedule_message_count(s, &mut n), CcStatus::Ok);
        assert_eq!(n, 4);
        let mut text = ptr::null_mut();
        assert_eq!(cc_schedule_text(s, &mut text), CcStatus::Ok);
        let text = take(text);
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().all(|l| l.contains(" + ")));
        cc_schedule_free(s);
        cc_placement_free(p);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        let bad = CString::new("{\"K\": 3,").unwrap();
        assert_eq!(
            cc_placement_from_json(bad.as_ptr(), &mut p),
            CcStatus::InvalidArgument
        );
        assert!(p.is_null());
        assert!(last_error().contains("invalid config"));
        assert_eq!(
            cc_placement_from_json(ptr::null(), &mut p),
            CcStatus::NullPointer
        );

        let p = placement(TOY);
        let (status, s) = deliver(p, "A,A", CC_SCHEDULER_TOY);
        assert_eq!(status, CcStatus::InvalidArgument);
        assert!(s.is_null());
        assert_eq!(deliver(p, "A,A,B", 9).0, CcStatus::InvalidArgument);
        assert!(last_error().contains("scheduler"));
        // A later success clears the message.
        let (status, s) = deliver(p, "A,A,B", CC_SCHEDULER_TOY);
        assert_eq!(status, CcStatus::Ok);
        assert!(cc_last_error().is_null());
        cc_schedule_free(s);
        cc_placement_free(p);

        let hard = placement(r#"{"K": 4, "groups": [{"size": 1, "r": 2}, {"size": 1, "r": 1}]}"#);
        assert_eq!(
            deliver(hard, "A,A,A,B", CC_SCHEDULER_EXHAUSTIVE).0,
            CcStatus::Infeasible
        );
        let (status, s) = deliver(hard, "A,A,A,B", CC_SCHEDULER_AUTO);
        assert_eq!(status, CcStatus::Ok);
        cc_schedule_free(s);
        cc_placement_free(hard);

        let mut r = 0.0;
        assert_eq!(cc_rate_beta_closed(0.3, &mut r), CcStatus::InvalidArgument);
        cc_string_free(ptr::null_mut());
        cc_placement_free(ptr::null_mut());
        cc_schedule_free(ptr::null_mut());
    }
}

#[test]
fn alpha_placements_expose_parts() {
    let p = placement(r#"{"K": 3, "groups": [{"size": 2, "r": 1.5}], "strategy": "alpha"}"#);
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(cc_placement_cache_json(p, &mut out), CcStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["parts"].as_array().unwrap().len(), 2);
        assert_eq!(
            deliver(p, "A,A,B", CC_SCHEDULER_AUTO).0,
            CcStatus::Unsupported
        );
        let mut rate = 0.0;
        let mut exact = ptr::null_mut();
        assert_eq!(
            cc_expected_rate(p, CC_SCHEDULER_EXHAUSTIVE, &mut rate, &mut exact),
            CcStatus::Ok
        );
        // Uniform popularity: 2/3 - (1/8 + 1/8)/6.
        assert_eq!(take(exact), "5/8");
        assert_eq!(rate, 0.625);
        cc_placement_free(p);
    }
}

#[test]
fn expected_rate_and_closed_forms() {
    let p = placement(TOY);
    unsafe {
        let mut rate = 0.0;
        let mut exact = ptr::null_mut();
        assert_eq!(
            cc_expected_rate(p, CC_SCHEDULER_TOY, &mut rate, &mut exact),
            CcStatus::Ok
        );
        assert_eq!(take(exact), "12418423/24000000");
        assert_eq!(
            cc_expected_rate(p, CC_SCHEDULER_AUTO, &mut rate, ptr::null_mut()),
            CcStatus::Ok
        );
        let pv = 0.765f64;
        assert!((rate - (2.0 / 3.0 - pv.powi(3) / 3.0)).abs() < 1e-15);
        let (mut b, mut a) = (0.0, 0.0);
        assert_eq!(cc_rate_beta_closed(pv, &mut b), CcStatus::Ok);
        assert_eq!(cc_rate_alpha_closed(pv, &mut a), CcStatus::Ok);
        assert!((b - rate).abs() < 1e-15);
        assert!(b < a);
        cc_placement_free(p);
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let lib = target_dir().join("libcodedcache_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!(
            "skipping: no C compiler or static library at {}",
            lib.display()
        );
        return;
    }
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let build = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        build.status.success(),
        "{}",
        String::from_utf8_lossy(&build.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok 0.5174"));
}
