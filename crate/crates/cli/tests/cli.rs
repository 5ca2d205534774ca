use std::path::Path;

use hodiff::{hdiff2d, GreyImage};
use hodiff_cli::pgm::{self, PgmFormat};
use hodiff_cli::{EXIT_IO, EXIT_NOT_INVARIANT, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE};

struct Outcome {
    code: i32,
    stdout: Vec<u8>,
    stderr: String,
}

fn run(args: &[&str], stdin: &[u8]) -> Outcome {
    let mut input = stdin;
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = hodiff_cli::run_with_io(
        std::iter::once("hodiff").chain(args.iter().copied()),
        &mut input,
        &mut stdout,
        &mut stderr,
    );
    Outcome {
        code,
        stdout,
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
    }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(pattern: &str, extra: &[&str]) -> Vec<u8> {
    let mut args = vec!["gen", "--pattern", pattern];
    args.extend_from_slice(extra);
    let out = run(&args, b"");
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    out.stdout
}

#[test]
fn gen_then_check_checkerboard_is_invariant() {
    let img = gen("checkerboard", &["--n", "10"]);
    let out = run(&["check", "--gamma", "-8"], &img);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("invariant=true"), "{text}");
    assert!(text.contains("max_abs_r=0"));
}

#[test]
fn check_diagonal_reports_not_invariant() {
    let out = run(&["check", "--pattern", "diagonal", "--n", "20"], b"");
    assert_eq!(out.code, EXIT_NOT_INVARIANT);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("invariant=false"));
}

#[test]
fn check_with_pm_changes_checkerboard() {
    let out = run(&["check", "--pattern", "checkerboard", "--method", "pm"], b"");
    assert_eq!(out.code, EXIT_NOT_INVARIANT);
}

#[test]
fn check_ramp_1d() {
    let out = run(&["check", "--pattern", "ramp-1d", "--n", "9", "--v1", "200", "--v2", "100", "--gamma", "-4"], b"");
    assert_eq!(out.code, EXIT_NOT_INVARIANT);
    let out = run(&["check", "--pattern", "ramp-1d", "--method", "pm"], b"");
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn gen_formats_round_trip() {
    let ascii = gen("v-stripes", &["--n", "6", "--period", "2", "--format", "ascii"]);
    let binary = gen("v-stripes", &["--n", "6", "--period", "2"]);
    assert!(ascii.starts_with(b"P2"));
    assert!(binary.starts_with(b"P5"));
    assert_eq!(pgm::decode(&ascii).unwrap(), pgm::decode(&binary).unwrap());
}

#[test]
fn gen_ramp_writes_text_line() {
    let text = String::from_utf8(gen("ramp-1d", &["--n", "5", "--v1", "10", "--v2", "30"])).unwrap();
    let values: Vec<f64> = text.split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(values.len(), 5);
    assert_eq!(values[0], 10.0);
    assert_eq!(values[4], 30.0);
}

#[test]
fn step_matches_library_and_renormalizes() {
    let input = gen("diagonal", &["--n", "12"]);
    let out = run(&["step", "--gamma", "0.5"], &input);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let got = pgm::decode(&out.stdout).unwrap();
    let expected = hodiff::renormalize_palette(&hdiff2d::step(&pgm::decode(&input).unwrap(), 0.5).unwrap());
    assert_eq!(got, expected);
}

#[test]
fn step_trace_dump_writes_all_fields() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen("diagonal", &["--n", "8"]);
    let out = run(&["step", "--gamma", "1,-2", "--trace-dump", path(dir.path())], &input);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    for name in ["d_x.txt", "d_y.txt", "l.txt", "D.txt", "R_staggered.txt", "R_integer.txt"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(!text.trim().is_empty(), "{name} is empty");
    }
    let nodes = std::fs::read_to_string(dir.path().join("R_integer.txt")).unwrap();
    let rows: Vec<&str> = nodes.lines().collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split_whitespace().count() == 8));
}

#[test]
fn check_trace_dump_on_invariant_image_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["check", "--pattern", "checkerboard", "--n", "6", "--trace-dump", path(dir.path())], b"");
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let text = std::fs::read_to_string(dir.path().join("R_integer.txt")).unwrap();
    assert!(text.split_whitespace().all(|t| t.parse::<f64>().unwrap() == 0.0));
}

#[test]
fn pm_ten_steps_smooth_checkerboard() {
    let input = gen("checkerboard", &["--n", "10"]);
    let out = run(&["pm", "--a", "5", "--dt", "0.2", "--T", "2"], &input);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_ne!(pgm::decode(&out.stdout).unwrap(), pgm::decode(&input).unwrap());
}

#[test]
fn pm_warns_above_stability_bound() {
    let input = gen("checkerboard", &["--n", "6"]);
    let out = run(&["pm", "--dt", "0.5", "--T", "1"], &input);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stderr.to_lowercase().contains("stab"), "{}", out.stderr);
}

#[test]
fn edges_output_is_binary() {
    let input = gen("half-plane-x", &["--n", "16", "--v1", "40", "--v2", "220"]);
    let out = run(&["edges", "--gamma", "-8", "--tau", "162"], &input);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let img = pgm::decode(&out.stdout).unwrap();
    assert!(img.values().iter().all(|&v| v == 1.0 || v == 256.0));
}

#[test]
fn edges_rejects_bad_tau() {
    let input = gen("checkerboard", &["--n", "6"]);
    assert_eq!(run(&["edges", "--tau", "100"], &input).code, EXIT_NUMERIC);
}

#[test]
fn file_io_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.pgm");
    let img = GreyImage::from_fn(9, |i, j| ((i * 31 + j * 17) % 256 + 1) as f64).unwrap();
    pgm::write_path(&img, &src, PgmFormat::Ascii).unwrap();
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let dst = dir.path().join(format!("out{k}.pgm"));
            let out = run(&["step", "--in", path(&src), "--out", path(&dst), "--gamma", "-8", "--format", "ascii"], b"");
            assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
            std::fs::read(dst).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].starts_with(b"P2"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["bogus"], b"").code, EXIT_USAGE);
    assert_eq!(run(&["step"], b"").code, EXIT_USAGE);
    assert_eq!(run(&["--help"], b"").code, EXIT_OK);
    assert_eq!(run(&["step", "--in", "/nonexistent/x.pgm", "--gamma", "1"], b"").code, EXIT_IO);
    assert_eq!(run(&["step", "--gamma", "1"], b"P2 3 2 255\n1 2 3 4 5 6").code, EXIT_IO);
    assert_eq!(run(&["step", "--gamma", "1"], b"P2 2 2 255\n1 2 3 4").code, EXIT_NUMERIC);
    assert_eq!(run(&["check", "--pattern", "nonsense"], b"").code, EXIT_USAGE);
}
