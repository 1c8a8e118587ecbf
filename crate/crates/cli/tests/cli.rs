use std::process::{Command, Output};

use arpshield_core::packet::{decode_trace, is_cross_layer_consistent, Opcode};

fn arpshield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arpshield"))
        .env_remove("ARPSHIELD_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn verify_lattice_prints_tables() {
    let o = arpshield(&["verify-lattice"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("bottom S top DDoS"));
    assert!(out.contains("0 of 128 entries differ"));
    assert_eq!(code(&arpshield(&["verify-lattice", "--strict"])), 1);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();
    let o = arpshield(&["run", "--scenario", "/nonexistent/s.toml", "--out", out]);
    assert_eq!(code(&o), 2);
    assert_eq!(String::from_utf8(o.stderr).unwrap().lines().count(), 1);
    assert_eq!(
        code(&arpshield(&["gen", "--class", "PKT12", "--out", out])),
        2
    );
    assert_eq!(code(&arpshield(&["frobnicate"])), 2);
    assert_eq!(code(&arpshield(&["report", "--in", out])), 2);

    let scen = dir.path().join("s.toml");
    let scen = scen.to_str().unwrap();
    assert_eq!(code(&arpshield(&["gen", "--paper-mix", "--out", scen])), 0);
    assert_eq!(
        code(&arpshield(&[
            "run",
            "--scenario",
            scen,
            "--detector",
            "nope",
            "--out",
            out
        ])),
        2
    );
    assert_eq!(
        code(&arpshield(&[
            "run",
            "--scenario",
            scen,
            "--format",
            "xml",
            "--out",
            out
        ])),
        2
    );
    let o = Command::new(env!("CARGO_BIN_EXE_arpshield"))
        .env("ARPSHIELD_SEED", "minus one")
        .args(["run", "--scenario", scen, "--out", out])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn gen_single_class_trace() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pkt2.bin");
    let o = arpshield(&[
        "gen",
        "--class",
        "PKT2",
        "--count",
        "3",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let bytes = std::fs::read(&p).unwrap();
    assert_eq!(bytes.len(), 3 * 50);
    for (_, f) in decode_trace(&bytes).unwrap() {
        assert_eq!(f.arp.opcode, Opcode::Request);
        assert!(!is_cross_layer_consistent(&f));
    }
}

#[test]
fn run_trace_and_rerender() {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    assert_eq!(
        code(&arpshield(&[
            "gen",
            "--paper-mix",
            "--seed",
            "4",
            "--out",
            &path("s.toml")
        ])),
        0
    );
    let o = arpshield(&[
        "run",
        "--scenario",
        &path("s.toml"),
        "--out",
        &path("r.json"),
        "--trace",
        &path("t.bin"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read(path("t.bin")).unwrap();
    assert!(trace.len() >= 1255 * 50);
    assert_eq!(trace.len() % 50, 0);

    let csv = arpshield(&["report", "--in", &path("r.json"), "--format", "csv"]);
    assert_eq!(code(&csv), 0);
    let csv = String::from_utf8(csv.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "class,sent,detected,accepted,ignored");
    assert_eq!(lines.len(), 14);
    assert!(lines[13].starts_with("PDR(%),8"));

    let jsonl = arpshield(&["report", "--in", &path("r.json"), "--format", "jsonl"]);
    assert_eq!(String::from_utf8(jsonl.stdout).unwrap().lines().count(), 13);
}

#[test]
fn compare_fails_on_swapped_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    arpshield(&["gen", "--paper-mix", "--out", &path("s.toml")]);
    arpshield(&[
        "run",
        "--scenario",
        &path("s.toml"),
        "--detector",
        "clcc",
        "--out",
        &path("c.json"),
    ]);
    arpshield(&[
        "run",
        "--scenario",
        &path("s.toml"),
        "--detector",
        "baseline",
        "--out",
        &path("b.json"),
    ]);
    let ok = arpshield(&[
        "compare",
        "--in",
        &path("c.json"),
        "--baseline",
        &path("b.json"),
        "--against",
        "table3",
    ]);
    assert_eq!(code(&ok), 0);
    let swapped = arpshield(&[
        "compare",
        "--in",
        &path("b.json"),
        "--baseline",
        &path("c.json"),
        "--against",
        "table3",
    ]);
    assert_eq!(code(&swapped), 1);
    assert!(String::from_utf8(swapped.stdout)
        .unwrap()
        .contains("FAIL clcc PDR in [70, 85]"));
}

#[test]
fn features_matrix() {
    let o = arpshield(&["features"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 7);
    assert!(out.lines().nth(3).unwrap().contains("Partial *"));
}
