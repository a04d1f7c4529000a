//! CLI-level checks, including acceptance criterion 7: two identical synth
//! runs are checksum-identical, validate passes, corruption is caught, and
//! output is independent of the worker count.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_selfpair")
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_dataset(root: &Path, n: usize) {
    fs::create_dir_all(root.join("images")).unwrap();
    fs::create_dir_all(root.join("masks")).unwrap();
    for i in 0..n {
        let img = image::RgbImage::from_fn(96, 96, |x, y| {
            image::Rgb([
                ((x * 31 + y * 7 + i as u32 * 13) % 256) as u8,
                ((x * 17 + y * 23) % 256) as u8,
                ((x + y * 41 + i as u32) % 256) as u8,
            ])
        });
        img.save(root.join(format!("images/s{i:02}.png"))).unwrap();
        let mask = image::GrayImage::from_fn(96, 96, |x, y| {
            let inside = (10..16).contains(&((x + i as u32 * 5) % 32))
                && (8..14).contains(&(y % 32));
            image::Luma([u8::from(inside)])
        });
        mask.save(root.join(format!("masks/s{i:02}.png"))).unwrap();
    }
}

fn collect_checksums(out: &Path) -> Vec<(String, String)> {
    use sha2::{Digest, Sha256};
    let mut sums = Vec::new();
    for sub in ["t0", "t1", "change"] {
        let dir = out.join(sub);
        let mut files: Vec<_> = fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        for f in files {
            let bytes = fs::read(&f).unwrap();
            let mut h = Sha256::new();
            h.update(&bytes);
            sums.push((
                format!("{sub}/{}", f.file_name().unwrap().to_string_lossy()),
                format!("{:x}", h.finalize()),
            ));
        }
    }
    sums
}

fn synth_args<'a>(input: &'a str, output: &'a str) -> Vec<&'a str> {
    vec![
        "synth", "--input", input, "--output", output, "--seed", "7",
        "--crop-size", "32", "--samples-per-source", "2",
    ]
}

#[test]
fn criterion_07_determinism_and_validate() {
    let data = TempDir::new().unwrap();
    write_dataset(data.path(), 5);
    let out_a = TempDir::new().unwrap();
    let out_b = TempDir::new().unwrap();
    let input = data.path().to_str().unwrap();

    let a = run(&synth_args(input, out_a.path().to_str().unwrap()), &[]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&synth_args(input, out_b.path().to_str().unwrap()), &[]);
    assert!(b.status.success());

    let sums_a = collect_checksums(out_a.path());
    let sums_b = collect_checksums(out_b.path());
    assert!(!sums_a.is_empty());
    assert_eq!(sums_a, sums_b, "two identical runs differ");

    // validate both, with full re-derivation against the input
    for out in [&out_a, &out_b] {
        let v = run(
            &[
                "validate",
                "--output",
                out.path().to_str().unwrap(),
                "--input",
                input,
            ],
            &[],
        );
        assert!(
            v.status.success(),
            "validate failed: {}",
            String::from_utf8_lossy(&v.stderr)
        );
    }

    // multiset of outputs identical for --jobs 1 and --jobs 8
    let out_j1 = TempDir::new().unwrap();
    let out_j8 = TempDir::new().unwrap();
    let mut args1 = synth_args(input, out_j1.path().to_str().unwrap());
    args1.extend(["--jobs", "1"]);
    let mut args8 = synth_args(input, out_j8.path().to_str().unwrap());
    args8.extend(["--jobs", "8"]);
    assert!(run(&args1, &[]).status.success());
    assert!(run(&args8, &[]).status.success());
    assert_eq!(collect_checksums(out_j1.path()), collect_checksums(out_j8.path()));

    println!("criterion 7 (synth determinism, validate, jobs 1 vs 8): PASS");
}

#[test]
fn validate_detects_corruption_and_names_the_sample() {
    let data = TempDir::new().unwrap();
    write_dataset(data.path(), 2);
    let out = TempDir::new().unwrap();
    let input = data.path().to_str().unwrap();
    assert!(run(&synth_args(input, out.path().to_str().unwrap()), &[]).status.success());

    // corrupt one byte of one output file
    let victim = fs::read_dir(out.path().join("t1"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let sample_id = victim.file_stem().unwrap().to_string_lossy().to_string();
    let mut bytes = fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    fs::write(&victim, &bytes).unwrap();

    let v = run(
        &["validate", "--output", out.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(v.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&v.stderr);
    assert!(
        stderr.contains(&sample_id),
        "error does not name sample '{sample_id}': {stderr}"
    );
}

#[test]
fn unknown_flag_exits_2_with_usage() {
    let out = run(&["synth", "--definitely-not-a-flag"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "{stderr}");
}

#[test]
fn jobs_env_fallback_is_accepted() {
    let data = TempDir::new().unwrap();
    write_dataset(data.path(), 2);
    let out = TempDir::new().unwrap();
    let r = run(
        &synth_args(
            data.path().to_str().unwrap(),
            out.path().to_str().unwrap(),
        ),
        &[("SELF_PAIR_JOBS", "2")],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn preview_prints_paths() {
    let data = TempDir::new().unwrap();
    write_dataset(data.path(), 2);
    let out = TempDir::new().unwrap();
    let r = run(
        &[
            "preview",
            "--input",
            data.path().to_str().unwrap(),
            "--output",
            out.path().to_str().unwrap(),
            "--seed",
            "3",
            "--crop-size",
            "32",
        ],
        &[],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("pre:") && stdout.contains("change:"));
}

#[test]
fn metrics_reports_percentages() {
    let dir = TempDir::new().unwrap();
    let pred = dir.path().join("pred");
    let gt = dir.path().join("gt");
    fs::create_dir_all(&pred).unwrap();
    fs::create_dir_all(&gt).unwrap();
    // tp=1, fp=1, fn=1 -> IoU 33.33, F1 50.00
    let p = image::GrayImage::from_fn(2, 2, |x, y| {
        image::Luma([if y == 0 && x <= 1 { 255 } else { 0 }])
    });
    let g = image::GrayImage::from_fn(2, 2, |x, _| image::Luma([if x == 0 { 255 } else { 0 }]));
    p.save(pred.join("a.png")).unwrap();
    g.save(gt.join("a.png")).unwrap();
    let r = run(
        &[
            "metrics",
            "--pred",
            pred.to_str().unwrap(),
            "--gt",
            gt.to_str().unwrap(),
        ],
        &[],
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("33.33"), "{stdout}");
    assert!(stdout.contains("50.00"), "{stdout}");
}
