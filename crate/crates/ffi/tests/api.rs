use std::ffi::{CStr, CString};
use std::ptr;

use dialectic_ffi::*;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { dialectic_string_free(s) };
    text
}

fn last_error() -> String {
    let p = dialectic_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn parse(text: &str) -> Result<*mut DialecticSystem, DialecticStatus> {
    let c = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    match unsafe { dialectic_system_parse(c.as_ptr(), &mut out) } {
        DialecticStatus::Ok => Ok(out),
        status => {
            assert!(out.is_null());
            Err(status)
        }
    }
}

#[test]
fn empty_system_expands() {
    let sys = parse("").unwrap();
    assert_eq!(unsafe { dialectic_system_variant(sys) }, b'd' as std::ffi::c_char);
    let mut run = ptr::null_mut();
    assert_eq!(
        unsafe { dialectic_system_run(sys, 5, 2, &mut run) },
        DialecticStatus::Ok
    );
    unsafe {
        assert_eq!(dialectic_run_length(run), 5);
        for n in 0..5 {
            let mut v = 0;
            assert_eq!(dialectic_run_token(run, n, &mut v), DialecticStatus::Ok);
            assert_eq!(v, n as i64);
        }
        assert_eq!(dialectic_run_stable_prefix(run), 3);
        assert_eq!(dialectic_run_loop_suspects(run), 0);
        let trace = take(dialectic_run_trace(run));
        assert_eq!(trace.lines().count(), 5);
        dialectic_run_free(run);
        dialectic_system_free(sys);
    }
}

#[test]
fn gaps_read_as_minus_one() {
    let sys = parse("[rules]\nat 1 : a0 |- BOT\n").unwrap();
    let mut run = ptr::null_mut();
    unsafe {
        assert_eq!(dialectic_system_run(sys, 4, 1, &mut run), DialecticStatus::Ok);
        let mut v = 0;
        assert_eq!(dialectic_run_token(run, 0, &mut v), DialecticStatus::Ok);
        assert_eq!(v, -1);
        dialectic_run_free(run);
        dialectic_system_free(sys);
    }
}

#[test]
fn canonical_text_round_trips() {
    let text = "variant q\n[rules]\nat 1 : a0 |- BOT\nat 2 : a1 |- CE\n[replacement]\na1 -> a4\n";
    let sys = parse(text).unwrap();
    assert_eq!(take(unsafe { dialectic_system_to_string(sys) }), text);
    unsafe { dialectic_system_free(sys) };
}

#[test]
fn errors_set_status_and_message() {
    assert_eq!(parse("[rules]\nat x : a0 |- CE\n"), Err(DialecticStatus::Parse));
    assert!(last_error().starts_with("2:4:"), "{}", last_error());

    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { dialectic_system_parse(ptr::null(), &mut out) },
        DialecticStatus::NullPointer
    );
    let bad = [0xffu8, 0];
    assert_eq!(
        unsafe { dialectic_system_parse(bad.as_ptr().cast(), &mut out) },
        DialecticStatus::InvalidUtf8
    );

    let sys = parse("[rules]\nat 2 : a1 |- CE\n").unwrap();
    let mut run = ptr::null_mut();
    unsafe {
        assert_eq!(dialectic_system_run(sys, 10, 1, &mut run), DialecticStatus::Run);
        assert!(run.is_null());
        assert!(last_error().contains("r(a1) is undefined"));
        assert_eq!(
            dialectic_system_run(sys, 0, 0, &mut run),
            DialecticStatus::InvalidArgument
        );
        assert_eq!(
            dialectic_system_run(sys, 5, 6, &mut run),
            DialecticStatus::InvalidArgument
        );
        assert_eq!(
            dialectic_system_run(ptr::null(), 5, 1, &mut run),
            DialecticStatus::NullPointer
        );
        dialectic_system_free(sys);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        dialectic_system_free(ptr::null_mut());
        dialectic_run_free(ptr::null_mut());
        dialectic_report_free(ptr::null_mut());
        dialectic_string_free(ptr::null_mut());
        assert_eq!(dialectic_system_variant(ptr::null()), 0);
        assert_eq!(dialectic_run_length(ptr::null()), 0);
        assert!(dialectic_run_trace(ptr::null()).is_null());
        assert_eq!(dialectic_report_verdict_count(ptr::null()), 0);
        assert_eq!(dialectic_report_passed(ptr::null()), 0);
        let mut v = 0;
        assert_eq!(
            dialectic_run_token(ptr::null(), 0, &mut v),
            DialecticStatus::NullPointer
        );
    }
}

#[test]
fn bundled_diagonalization() {
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(
            dialectic_diagonalize(ptr::null(), 10_000, 100, 10_000, &mut report),
            DialecticStatus::Ok
        );
        let verdicts: Vec<String> = (0..dialectic_report_verdict_count(report))
            .map(|i| take(dialectic_report_verdict(report, i)))
            .collect();
        assert_eq!(
            verdicts,
            [
                "opponent 0: S8done witness=a4",
                "opponent 1: S8done witness=a65",
                "opponent 2: S8done witness=a114",
                "opponent 3: PO2wait witness=-",
                "opponent 4: S2wait witness=a191",
            ]
        );
        assert!(dialectic_report_verdict(report, 5).is_null());
        assert_eq!(dialectic_report_passed(report), 1);
        assert!(take(dialectic_report_text(report)).contains("[checks]"));
        dialectic_report_free(report);
    }
}

#[test]
fn custom_family_and_bad_family() {
    let family = CString::new(
        "program id expr n\nprogram none staged\nprogram succ expr n + 1\nopponent quiet g=id h=none r=succ\n",
    )
    .unwrap();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(
            dialectic_diagonalize(family.as_ptr(), 500, 50, 0, &mut report),
            DialecticStatus::Ok
        );
        assert_eq!(dialectic_report_verdict_count(report), 1);
        dialectic_report_free(report);
        let bad = CString::new("opponent x g=a h=b r=c\n").unwrap();
        assert_eq!(
            dialectic_diagonalize(bad.as_ptr(), 500, 50, 0, &mut report),
            DialecticStatus::Parse
        );
        assert!(report.is_null());
        assert_eq!(
            dialectic_diagonalize(ptr::null(), 0, 0, 0, &mut report),
            DialecticStatus::InvalidArgument
        );
    }
}
