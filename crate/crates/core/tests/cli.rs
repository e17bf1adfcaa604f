use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sqie::cli::{parse_transcript, render_transcript};

fn sqie(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqie"))
        .args(args)
        .env("SQIE_OUTPUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn run_writes_round_trippable_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqie(&["run", "--m", "2", "--n", "1", "--seed", "7"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = fs::read_to_string(dir.path().join("transcript.json")).unwrap();
    let transcript = parse_transcript(&text).unwrap();
    assert_eq!(
        (transcript.m, transcript.n, transcript.charlie_qubits),
        (2, 1, 4)
    );
    assert!(transcript.messages_well_ordered());
    assert!((transcript.fidelity_at_bob - 1.0).abs() < 1e-9);
    assert!((transcript.fidelity_at_alice - 1.0).abs() < 1e-9);
    assert_eq!(render_transcript(&transcript), text);
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = sqie(
            &["run", "--seed", "11", "--output", path.to_str().unwrap()],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn run_reads_amplitude_files() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("xi.txt");
    fs::write(&input, "qubits: 1\n0.6 0\n0 0.8\n").unwrap();
    let out = sqie(&["run", "--input-a", input.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 0);
    let transcript =
        parse_transcript(&fs::read_to_string(dir.path().join("transcript.json")).unwrap()).unwrap();
    assert!((transcript.input_xi[0].re - 0.6).abs() < 1e-15);
    assert!((transcript.input_xi[1].im - 0.8).abs() < 1e-15);
}

#[test]
fn run_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "qubits: 1\n1 0\n1 0\n").unwrap();
    assert_eq!(
        code(&sqie(
            &["run", "--input-a", bad.to_str().unwrap()],
            dir.path()
        )),
        2
    );

    let wrong_size = dir.path().join("two.txt");
    fs::write(&wrong_size, "qubits: 2\n1 0\n0 0\n0 0\n0 0\n").unwrap();
    assert_eq!(
        code(&sqie(
            &["run", "--input-a", wrong_size.to_str().unwrap()],
            dir.path()
        )),
        2
    );
    assert_eq!(
        code(&sqie(&["run", "--input-a", "missing.txt"], dir.path())),
        2
    );
    assert_eq!(code(&sqie(&["run", "--phi", "0,0,1,2"], dir.path())), 2);
    assert_eq!(code(&sqie(&["run", "--m", "0"], dir.path())), 2);
    assert_eq!(code(&sqie(&["run", "--bogus"], dir.path())), 2);
}

#[test]
fn run_accepts_a_relabeling() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqie(&["run", "--phi", "3,1,0,2", "--seed", "5"], dir.path());
    assert_eq!(code(&out), 0);
}

#[test]
fn size_and_constructibility_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&sqie(&["run", "--m", "3", "--n", "2"], dir.path())), 3);
    assert_eq!(code(&sqie(&["run", "--l", "3", "--m", "2"], dir.path())), 4);
    assert_eq!(
        code(&sqie(
            &["sweep-security", "--l", "3", "--m", "2"],
            dir.path()
        )),
        4
    );
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqie(
        &[
            "sweep-security",
            "--l",
            "0..5",
            "--trials",
            "2000",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("security.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "l,exact,mc,mc_stderr,bound");
    assert_eq!(lines.len(), 7);
    let expected = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.0625];
    for (line, want) in lines[1..].iter().zip(expected) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 5);
        assert!((cols[1] - want).abs() < 1e-9);
        assert!((cols[4] - want).abs() < 1e-9);
        // Loose window: 2000 trials over six rows; the 3σ check runs at 10^5 trials in the acceptance suite.
        assert!((cols[2] - want).abs() <= 5.0 * cols[3]);
    }

    let again = dir.path().join("again.csv");
    let out = sqie(
        &[
            "sweep-security",
            "--l",
            "0..5",
            "--trials",
            "2000",
            "--seed",
            "3",
            "--output",
            again.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(again).unwrap(), text);
}

#[test]
fn sweep_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqie(
        &[
            "sweep-security",
            "--l",
            "4",
            "--trials",
            "500",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let report: sqie::SecurityReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("security.json")).unwrap())
            .unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!((report.rows[0].exact - 0.0625).abs() < 1e-12);
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqie(&["verify"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.contains("all checks passed"));
}
