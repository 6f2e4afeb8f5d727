use std::path::Path;
use std::process::Command;

fn header() -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("vsc_lab.h");
    std::fs::read_to_string(p).expect("header generated by the build script")
}

#[test]
fn header_declares_the_exported_functions() {
    let h = header();
    for name in [
        "vsc_last_error_message",
        "vsc_field_from_coeffs",
        "vsc_field_free",
        "vsc_operator_near",
        "vsc_operator_evaluate",
        "vsc_data_values",
        "vsc_alpha_rule",
        "VSC_STATUS_NULL_POINTER",
        "typedef struct VscField VscField",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    let inc = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    std::fs::write(&src, "#include \"vsc_lab.h\"\nint main(void) { VscField *f = 0; return vsc_field_zeros(2, &f) == VSC_STATUS_OK ? 0 : 1; }\n")
        .unwrap();
    let Ok(out) = Command::new("cc").arg("-fsyntax-only").arg("-std=c99").arg("-I").arg(&inc).arg(&src).output() else {
        eprintln!("no C compiler available; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
