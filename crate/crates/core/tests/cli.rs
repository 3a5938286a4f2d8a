use std::path::Path;
use std::process::Command;

fn choreo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_choreo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn synth_config(dir: &Path) -> String {
    let p = dir.join("synth.cfg");
    std::fs::write(&p, "clips=3\nseconds=2\ndancers_min=2\ndancers_max=3\n").unwrap();
    p.display().to_string()
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap().flatten() {
        let p = e.path();
        if p.is_dir() {
            out.extend(read_tree(&p));
        } else {
            out.push((
                p.strip_prefix(dir).unwrap().display().to_string(),
                std::fs::read(&p).unwrap(),
            ));
        }
    }
    out.sort();
    out
}

#[test]
fn synth_data_is_a_function_of_config_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for (out, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = choreo(&[
            "--config",
            &cfg,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
            "synth-data",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb, tc) = (read_tree(&a), read_tree(&b), read_tree(&c));
    assert!(ta.iter().any(|(name, _)| name == "manifest.tsv"));
    assert_eq!(ta, tb);
    assert_ne!(ta, tc);
}

#[test]
fn validation_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "clips=3\nclipz=4\n").unwrap();
    let out = tmp.path().join("out");
    let o = choreo(&[
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "synth-data",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("clipz"));

    // a referenced file that does not exist
    let cfg = tmp.path().join("tok.cfg");
    std::fs::write(
        &cfg,
        format!("manifest={}\n", tmp.path().join("nope.tsv").display()),
    )
    .unwrap();
    let o = choreo(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "train-tokenizer",
    ]);
    assert_eq!(o.status.code(), Some(2));

    // flags the parser rejects
    assert_eq!(
        choreo(&["--seed", "x", "synth-data"]).status.code(),
        Some(2)
    );
}

#[test]
fn runtime_errors_exit_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth_config(tmp.path());
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("out");
    let o = choreo(&[
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "synth-data",
    ]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
