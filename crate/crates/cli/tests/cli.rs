use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tlnmf_cli::artifacts::{read_matrix, ENERGY_HEADER, LOG_HEADER, PERMUTATION_HEADER, SYNTH_HEADER};

fn tlnmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlnmf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_wav(path: &Path, seconds: f64, sample_rate: u32) {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    let n = (seconds * f64::from(sample_rate)) as usize;
    for i in 0..n {
        let t = i as f64 / f64::from(sample_rate);
        let note = if (t * 4.0) as usize % 2 == 0 { 440.0 } else { 660.0 };
        let v = 0.4 * (2.0 * PI * note * t).sin() + 0.2 * (2.0 * PI * 3.0 * note * t).sin()
            + 0.01 * ((i * 7919 % 101) as f64 / 50.0 - 1.0);
        w.write_sample((v * 32767.0) as i16).unwrap();
    }
    w.finalize().unwrap();
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn run_small(wav: &Path, out: &Path, seed: &str) -> Output {
    ok(tlnmf(&[
        "--threads", "1", "run", s(wav), "--out-dir", s(out), "--seed", seed, "--frame-samples", "32",
        "--rank", "3", "--iters", "4", "--inner-tl-iters", "2",
    ]))
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    wav: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let wav = root.join("clip.wav");
    write_wav(&wav, 0.5, 8000);
    Fixture { _dir: dir, root, wav }
}

#[test]
fn golden_headers() {
    assert_eq!(
        LOG_HEADER,
        ["iteration", "objective", "fit", "penalty", "elapsed_s", "step_sizes", "grad_norm"]
    );
    assert_eq!(SYNTH_HEADER, ["iteration", "L", "elapsed_s", "step_sizes", "grad_norm"]);
    assert_eq!(ENERGY_HEADER, ["transform", "rank", "atom", "energy", "cumulative"]);
    assert_eq!(PERMUTATION_HEADER, ["position", "first_atom", "second_atom", "similarity"]);

    let f = fixture();
    let out = f.root.join("bench");
    ok(tlnmf(&[
        "synth-bench", "--m", "4", "--n", "20", "--iters", "3", "--out-dir", s(&out),
    ]));
    for alg in ["quasi-newton", "projected-gradient"] {
        let (header, rows) = csv_rows(&out.join(format!("synth_m4_{alg}.csv")));
        assert_eq!(header, SYNTH_HEADER);
        assert_eq!(rows[0][0], "0");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "synth-bench");
    assert_eq!(manifest["input"]["synthetic"]["n"], 20);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);

    let run = f.root.join("run");
    run_small(&f.wav, &run, "1");
    let (header, rows) = csv_rows(&run.join("log.csv"));
    assert_eq!(header, LOG_HEADER);
    assert_eq!(rows.len(), 5);
    let (header, _) = csv_rows(&{
        ok(tlnmf(&["analyze", s(&run)]));
        run.join("energy.csv")
    });
    assert_eq!(header, ENERGY_HEADER);
}

#[test]
fn unknown_algorithm_fails() {
    let f = fixture();
    let out = tlnmf(&[
        "synth-bench", "--m", "4", "--n", "10", "--algorithm", "jacobi", "--out-dir", s(&f.root.join("b")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("jacobi"));
    let out = tlnmf(&["run", s(&f.wav), "--algorithm", "newton", "--out-dir", s(&f.root.join("r"))]);
    assert!(!out.status.success());
}

#[test]
fn missing_inputs_fail() {
    let f = fixture();
    let out = tlnmf(&["run", s(&f.root.join("absent.wav")), "--out-dir", s(&f.root.join("r"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.wav"));
    let out = tlnmf(&["analyze", s(&f.root.join("no-run"))]);
    assert!(!out.status.success());
    let bad_config = f.root.join("bad.toml");
    std::fs::write(&bad_config, "[tlnmf]\nrank = \"ten\"\n").unwrap();
    let out = tlnmf(&["run", s(&f.wav), "--config", s(&bad_config), "--out-dir", s(&f.root.join("r"))]);
    assert!(!out.status.success());
}

#[test]
fn zero_perturbation_starts_converged() {
    let f = fixture();
    let out = f.root.join("bench");
    ok(tlnmf(&[
        "synth-bench", "--m", "5", "--n", "30", "--perturbation", "0", "--out-dir", s(&out),
    ]));
    for alg in ["quasi-newton", "projected-gradient"] {
        let (_, rows) = csv_rows(&out.join(format!("synth_m5_{alg}.csv")));
        assert_eq!(rows.len(), 1, "{alg}");
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    }
}

fn without_elapsed(path: &Path) -> Vec<Vec<String>> {
    let (header, mut rows) = csv_rows(path);
    let col = header.iter().position(|h| h == "elapsed_s").unwrap();
    for r in &mut rows {
        r.remove(col);
    }
    rows
}

#[test]
fn serial_runs_are_deterministic() {
    let f = fixture();
    let (a, b) = (f.root.join("a"), f.root.join("b"));
    run_small(&f.wav, &a, "7");
    run_small(&f.wav, &b, "7");
    assert_eq!(without_elapsed(&a.join("log.csv")), without_elapsed(&b.join("log.csv")));
    for name in ["transform.bin", "w.bin", "h.bin", "frames.bin", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    for dir in [&a, &b] {
        ok(tlnmf(&["--threads", "1", "analyze", s(dir), "--seed", "3"]));
    }
    assert_eq!(std::fs::read(a.join("energy.csv")).unwrap(), std::fs::read(b.join("energy.csv")).unwrap());

    let (sa, sb) = (f.root.join("sa"), f.root.join("sb"));
    for out in [&sa, &sb] {
        ok(tlnmf(&[
            "--threads", "1", "synth-bench", "--m", "6", "--n", "40", "--iters", "5", "--seed", "2", "--out-dir",
            s(out),
        ]));
    }
    for alg in ["quasi-newton", "projected-gradient"] {
        let name = format!("synth_m6_{alg}.csv");
        assert_eq!(without_elapsed(&sa.join(&name)), without_elapsed(&sb.join(&name)));
    }
}

#[test]
fn run_then_analyze() {
    let f = fixture();
    let run = f.root.join("run");
    let other = f.root.join("other");
    run_small(&f.wav, &run, "1");
    run_small(&f.wav, &other, "2");

    let phi = read_matrix(&run.join("transform.bin")).unwrap();
    let w = read_matrix(&run.join("w.bin")).unwrap();
    let h = read_matrix(&run.join("h.bin")).unwrap();
    let frames = read_matrix(&run.join("frames.bin")).unwrap();
    assert_eq!(phi.dim(), (32, 32));
    assert_eq!(w.dim(), (32, 3));
    assert_eq!(h.dim(), (3, frames.ncols()));
    let gram = phi.dot(&phi.t());
    for ((i, j), v) in gram.indexed_iter() {
        assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
    }
    let (_, rows) = csv_rows(&run.join("log.csv"));
    let objective: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(objective.windows(2).all(|p| p[1] <= p[0]), "{objective:?}");

    // self comparison
    let selfdir = f.root.join("self");
    ok(tlnmf(&["analyze", s(&run), s(&run), "--out-dir", s(&selfdir), "--count", "10"]));
    let (header, rows) = csv_rows(&selfdir.join("similarity.csv"));
    assert_eq!(header.len(), 10);
    assert_eq!(rows.len(), 10);
    for (i, r) in rows.iter().enumerate() {
        assert!(r[i].parse::<f64>().unwrap() >= 1.0 - 1e-10);
    }
    let (_, perm) = csv_rows(&selfdir.join("permutation.csv"));
    for (i, r) in perm.iter().enumerate() {
        assert_eq!(r[1], i.to_string());
    }

    let (_, energy) = csv_rows(&selfdir.join("energy.csv"));
    for transform in ["learned", "dct", "random"] {
        let rows: Vec<_> = energy.iter().filter(|r| r[0] == transform).collect();
        assert_eq!(rows.len(), 32);
        let last: f64 = rows[31][4].parse().unwrap();
        assert!((last - 1.0).abs() <= 1e-8);
        let cumulative: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
        assert!(cumulative.windows(2).all(|p| p[1] >= p[0]));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(selfdir.join("analysis_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    // two different initializations: the default count is clipped to M
    let cross = f.root.join("cross");
    ok(tlnmf(&["analyze", s(&run), s(&other), "--out-dir", s(&cross)]));
    let (header, _) = csv_rows(&cross.join("similarity.csv"));
    assert_eq!(header.len(), 32);
}

#[test]
fn config_file_and_flags() {
    let f = fixture();
    let config = f.root.join("c.toml");
    std::fs::write(
        &config,
        "[tlnmf]\nrank = 2\nn_outer = 2\nalgorithm = \"projected-gradient\"\n\n[framing]\nframe_samples = 16\nwindow = \"hann\"\n",
    )
    .unwrap();
    let out = f.root.join("run");
    ok(tlnmf(&["run", s(&f.wav), "--config", s(&config), "--rank", "4", "--out-dir", s(&out)]));
    assert_eq!(read_matrix(&out.join("w.bin")).unwrap().dim(), (16, 4));
    let (_, rows) = csv_rows(&out.join("log.csv"));
    assert_eq!(rows.len(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["tlnmf"]["rank"], 4);
    assert_eq!(manifest["config"]["tlnmf"]["algorithm"], "projected-gradient");
    assert_eq!(manifest["config"]["framing"]["window"], "hann");
}
