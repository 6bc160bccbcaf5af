use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pcsr::charts::text_chart;
use pcsr::image::io::save_pgm;
use pcsr::pipeline::{load_report, RunReport};

fn pcsr(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pcsr"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "\
corpus_dir = \"corpus\"
output_dir = \"out\"

[corpus]
evaluation_count = 1

[patch]
count = 300

[restore]
radius = 3
";

fn setup(config: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    for s in 0..3 {
        save_pgm(
            &text_chart(96, 96, 70 + s),
            corpus.join(format!("c{s}.pgm")),
        )
        .unwrap();
    }
    let cfg = dir.path().join("pcsr.toml");
    std::fs::write(&cfg, config).unwrap();
    (dir, cfg)
}

fn run_all(cfg: &Path, extra: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut args = vec!["all", "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = pcsr(&args, envs);
    assert!(out.status.success(), "{}", stderr(&out));
    out
}

fn report(root: &Path) -> RunReport {
    load_report(&root.join("report.json")).unwrap()
}

#[test]
fn missing_corpus_dir_exits_2_naming_the_field() {
    let (_dir, cfg) = setup("sr_factor = 2\n");
    let out = pcsr(&["simulate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("corpus_dir"), "{}", stderr(&out));
}

#[test]
fn unknown_key_exits_2_with_line() {
    let (_dir, cfg) = setup("corpus_dir = \"corpus\"\n[seeds]\nsynthesys = 4\n");
    let out = pcsr(&["simulate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.contains("pcsr.toml:3:") && err.contains("synthesys"),
        "{err}"
    );
}

#[test]
fn stage_failure_exits_1_with_stage_name() {
    let (_dir, cfg) = setup(SMALL);
    let out = pcsr(&["train-filter", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("stage train-filter failed"),
        "{}",
        stderr(&out)
    );

    let (_dir, cfg) = setup("corpus_dir = \"nowhere\"\n");
    let out = pcsr(&["simulate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("stage simulate failed"));
}

#[test]
fn stages_run_individually_and_evaluate_reproduces_report() {
    let (dir, cfg) = setup(SMALL);
    let c = cfg.to_str().unwrap();
    for stage in [
        "simulate",
        "train-basis",
        "register",
        "interpolate",
        "train-filter",
        "superresolve",
    ] {
        let out = pcsr(&[stage, "--config", c], &[]);
        assert!(out.status.success(), "{stage}: {}", stderr(&out));
    }
    let root = dir.path().join("out");
    for artifact in [
        "basis.pcsr",
        "filter.pcrf",
        "report.json",
        "timings.json",
        "sequences/c2/frame_04.pgm",
        "sequences/c2/frame_04.txt",
        "sequences/c2/goal.pfm",
        "registration/c0/frame_01.txt",
        "interpolated/c1.pfm",
        "interpolated/c1.json",
        "baseline/c2.pfm",
        "superresolved/c2.pfm",
        "superresolved/c2.pgm",
    ] {
        assert!(root.join(artifact).exists(), "missing {artifact}");
    }
    let rep = report(&root);
    assert_eq!(rep.evaluated, 1);
    assert_eq!(rep.sequences.len(), 1);
    let seq = &rep.sequences[0];
    assert_eq!(seq.name, "c2");
    assert!(seq.registration_rms_error.unwrap() < 0.2);
    let stored = seq.psnr.as_ref().unwrap().restored;

    let image = root.join("superresolved/c2.pfm");
    let goal = root.join("sequences/c2/goal.pfm");
    let out = pcsr(
        &[
            "evaluate",
            "--config",
            c,
            "--image",
            image.to_str().unwrap(),
            "--reference",
            goal.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let psnr: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("psnr "))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(psnr.to_bits(), stored.to_bits());

    let same = pcsr(
        &[
            "evaluate",
            "--config",
            c,
            "--image",
            goal.to_str().unwrap(),
            "--reference",
            goal.to_str().unwrap(),
        ],
        &[],
    );
    assert!(String::from_utf8(same.stdout)
        .unwrap()
        .contains("psnr 99.0"));

    let all = pcsr(&["evaluate", "--config", c], &[]);
    assert!(all.status.success());
    assert!(root.join("evaluation.json").exists());
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timings.json" {
                files.push((
                    p.strip_prefix(root).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn outputs_do_not_depend_on_thread_count_and_follow_seed() {
    let (dir, cfg) = setup(SMALL);
    let root = dir.path();
    run_all(
        &cfg,
        &["--output-dir", root.join("t1").to_str().unwrap()],
        &[("PCSR_THREADS", "1")],
    );
    run_all(
        &cfg,
        &["--output-dir", root.join("t3").to_str().unwrap()],
        &[("PCSR_THREADS", "3")],
    );
    assert_eq!(tree(&root.join("t1")), tree(&root.join("t3")));

    run_all(
        &cfg,
        &[
            "--output-dir",
            root.join("s9").to_str().unwrap(),
            "--seed",
            "9",
        ],
        &[],
    );
    let a = std::fs::read(root.join("t1/sequences/c0/frame_01.pgm")).unwrap();
    let b = std::fs::read(root.join("s9/sequences/c0/frame_01.pgm")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn real_sequence_mode_skips_ground_truth() {
    let (dir, _) = setup(SMALL);
    let root = dir.path();
    // frames come from an earlier synthetic run
    let (src, src_cfg) = setup(SMALL);
    let out = pcsr(&["simulate", "--config", src_cfg.to_str().unwrap()], &[]);
    assert!(out.status.success());
    let frames: Vec<String> = (0..4)
        .map(|k| {
            format!(
                "\"{}\"",
                src.path()
                    .join(format!("out/sequences/c1/frame_{k:02}.pgm"))
                    .display()
            )
        })
        .collect();
    let config = format!(
        "{SMALL}\n[registration]\nkind = \"affine\"\n\n[real]\nname = \"scan\"\nframes = [{}]\n",
        frames.join(", ")
    );
    let cfg = root.join("real.toml");
    std::fs::write(&cfg, config).unwrap();
    run_all(&cfg, &[], &[]);
    let rep = report(&root.join("out"));
    assert_eq!(rep.mode, "real");
    assert_eq!(rep.evaluated, 0);
    assert_eq!(rep.sequences.len(), 1);
    let seq = &rep.sequences[0];
    assert_eq!(seq.name, "scan");
    assert!(seq.psnr.is_none() && seq.registration_rms_error.is_none());
    assert_eq!(seq.registration.len(), 4);
    assert_eq!(seq.registration[1].params.len(), 6);
    assert!(root.join("out/superresolved/scan.pgm").exists());
}
