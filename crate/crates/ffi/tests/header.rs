use std::path::Path;
use std::process::Command;

#[test]
fn header_is_generated_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/facefuse.h");
    let text = std::fs::read_to_string(&header).expect("build script writes the header");
    for symbol in ["ff_image_load", "ff_template_enrol", "ff_match_local", "ff_dempster_combine", "ff_last_error_message", "FF_STATUS_TOTAL_CONFLICT"] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping compile check");
        return;
    };
    assert!(cc.status.success());
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
