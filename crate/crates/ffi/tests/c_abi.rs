use std::path::{Path, PathBuf};
use std::process::Command;

/// Directory holding the freshly built shared library.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/proofmatch.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct PmCorpus PmCorpus;"));
    assert!(header.contains("PM_STATUS_PANIC = 7"));
}

#[test]
fn c_program_links_and_runs() {
    let dir = artifact_dir();
    let lib = dir.join(if cfg!(target_os = "macos") { "libproofmatch_ffi.dylib" } else { "libproofmatch_ffi.so" });
    if cfg!(windows) || !lib.exists() {
        eprintln!("skipping: no shared library at {}", lib.display());
        return;
    }
    let Ok(cc) = which_cc() else {
        eprintln!("skipping: no C compiler");
        return;
    };
    let tmp = tempdir();
    let exe = tmp.join("smoke");
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let status = Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&dir)
        .arg("-lproofmatch_ffi")
        .arg("-lm")
        .arg(format!("-Wl,-rpath,{}", dir.display()))
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}

fn tempdir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_abi");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
