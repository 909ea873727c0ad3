use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use gedkit_ffi::*;

const CONLLU: &str = "# sent_id = s1
1\tWe\twe\tPRON\t_\t_\t2\tnsubj\t_\t_
2\tdiscussed\tdiscuss\tVERB\t_\t_\t0\troot\t_\t_
3\tthe\tthe\tDET\t_\t_\t4\tdet\t_\t_
4\tplan\tplan\tNOUN\t_\t_\t2\tobj\t_\t_
5\tyesterday\tyesterday\tNOUN\t_\t_\t2\tobl:tmod\t_\t_
6\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

# sent_id = s2
1\tThey\tthey\tPRON\t_\t_\t2\tnsubj\t_\t_
2\tagree\tagree\tVERB\t_\t_\t0\troot\t_\t_
3\twith\twith\tADP\t_\t_\t4\tcase\t_\t_
4\tus\twe\tPRON\t_\t_\t2\tobl\t_\t_
5\tnow\tnow\tADV\t_\t_\t2\tadvmod\t_\t_
6\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// Takes ownership of a library string.
unsafe fn take(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    ged_string_free(p);
    s
}

fn last_error() -> Option<String> {
    let p = ged_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn inject(seed: u64) -> String {
    let mut out = ptr::null_mut();
    let status = unsafe { ged_inject_conllu(c(CONLLU).as_ptr(), seed, &mut out) };
    assert_eq!(status, GedStatus::Ok, "{:?}", last_error());
    unsafe { take(out) }
}

#[test]
fn inject_matches_library() {
    let jsonl = inject(7);
    let doc = gedkit::parse_conllu(CONLLU.as_bytes(), "ffi").unwrap();
    let generation = gedkit::Injector::default().generate(&doc.sentences, 7).unwrap();
    let mut expected = Vec::new();
    gedkit::record::serialize_outcomes(&generation.outcomes, &mut expected).unwrap();
    assert_eq!(jsonl.as_bytes(), expected.as_slice());
    assert_eq!(jsonl.lines().count(), 2);
    assert_eq!(inject(7), jsonl);
    assert!(last_error().is_none());
}

#[test]
fn train_save_load_predict_score() {
    let data = c(&inject(3));
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(
            ged_model_train_jsonl(data.as_ptr(), ptr::null(), 5, 11, &mut model),
            GedStatus::Ok
        );

        let mut json = ptr::null_mut();
        assert_eq!(ged_model_save(model, &mut json), GedStatus::Ok);
        let json = c(&take(json));
        let mut reloaded = ptr::null_mut();
        assert_eq!(ged_model_load(json.as_ptr(), &mut reloaded), GedStatus::Ok);

        let predict_with = |m| {
            let mut out = ptr::null_mut();
            assert_eq!(ged_model_predict_jsonl(m, data.as_ptr(), &mut out), GedStatus::Ok);
            take(out)
        };
        let pred = predict_with(model);
        assert_eq!(pred, predict_with(reloaded));

        let mut report = ptr::null_mut();
        let pred = c(&pred);
        assert_eq!(
            ged_score_jsonl(pred.as_ptr(), data.as_ptr(), ptr::null(), &mut report),
            GedStatus::Ok
        );
        let report: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
        assert_eq!(report["micro"]["fn"], 0, "{report}");
        assert_eq!(report["micro"]["fp"], 0, "{report}");

        let mut binary = ptr::null_mut();
        let scheme = c("binary");
        assert_eq!(
            ged_score_jsonl(pred.as_ptr(), data.as_ptr(), scheme.as_ptr(), &mut binary),
            GedStatus::Ok
        );
        let binary: serde_json::Value = serde_json::from_str(&take(binary)).unwrap();
        assert_eq!(binary["per_label"].as_array().unwrap().len(), 1);

        let mut feedback = ptr::null_mut();
        assert_eq!(
            ged_feedback_jsonl(pred.as_ptr(), ptr::null(), &mut feedback),
            GedStatus::Ok
        );
        let feedback = take(feedback);
        assert!(
            feedback.contains("Transitive verbs do not take a preposition."),
            "{feedback}"
        );

        ged_model_free(model);
        ged_model_free(reloaded);
        ged_model_free(ptr::null_mut());
        ged_string_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(ged_inject_conllu(ptr::null(), 1, &mut out), GedStatus::NullPointer);
        assert!(last_error().unwrap().contains("null"));
        assert_eq!(
            ged_inject_conllu(c(CONLLU).as_ptr(), 1, ptr::null_mut()),
            GedStatus::NullPointer
        );

        let bad_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            ged_inject_conllu(bad_utf8.as_ptr().cast(), 1, &mut out),
            GedStatus::InvalidUtf8
        );

        let mut model = ptr::null_mut();
        assert_eq!(ged_model_load(c("{not json").as_ptr(), &mut model), GedStatus::Parse);
        assert!(model.is_null());
        assert_eq!(
            ged_model_train_jsonl(c("").as_ptr(), ptr::null(), 1, 1, &mut model),
            GedStatus::Contract
        );
        let scheme = c("ternary");
        let data = c(&inject(1));
        assert_eq!(
            ged_model_train_jsonl(data.as_ptr(), scheme.as_ptr(), 1, 1, &mut model),
            GedStatus::Contract
        );

        let mut report = ptr::null_mut();
        let first_line = c(&format!("{}\n", inject(1).lines().next().unwrap()));
        assert_eq!(
            ged_score_jsonl(first_line.as_ptr(), data.as_ptr(), ptr::null(), &mut report),
            GedStatus::Contract
        );
        assert!(report.is_null());

        let templates = c(r#"{"PrepSubject": "x"}"#);
        let mut fb = ptr::null_mut();
        assert_eq!(
            ged_feedback_jsonl(data.as_ptr(), templates.as_ptr(), &mut fb),
            GedStatus::Contract
        );

        // a successful call clears the message
        assert_eq!(ged_inject_conllu(c(CONLLU).as_ptr(), 1, &mut out), GedStatus::Ok);
        assert!(last_error().is_none());
        ged_string_free(out);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(ged_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/gedkit.h")).unwrap();
    for name in [
        "ged_last_error_message",
        "ged_version",
        "ged_inject_conllu",
        "ged_model_train_jsonl",
        "ged_model_load",
        "ged_model_save",
        "ged_model_free",
        "ged_model_predict_jsonl",
        "ged_score_jsonl",
        "ged_feedback_jsonl",
        "ged_string_free",
        "typedef struct GedModel GedModel",
        "GED_STATUS_CONTRACT = 4",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Builds tests/c/smoke.c against the header and static library, when a C
/// compiler and the archive are available.
#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let tmp = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let Some(profile_dir) = tmp.parent().map(|t| t.join("debug")) else {
        return;
    };
    let archive = profile_dir.join("libgedkit_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !archive.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping C smoke test: no {cc} or {}", archive.display());
        return;
    }
    let exe = tmp.join("gedkit_smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["micro"]["tp"].as_u64().unwrap() > 0);
}
