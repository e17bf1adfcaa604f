//! Command-line harness.
//!
//! Three commands: `run` (one controlled exchange, JSON transcript),
//! `sweep-security` (bypass probability per Charlie register size, CSV or
//! JSON), and `verify` (the built-in consistency suite).
//!
//! Exit codes: 0 success, 1 failed check or imperfect exchange, 2 bad input,
//! 3 too many qubits, 4 no resource for the requested parameters.
//!
//! Amplitude files are plain text: a header line `qubits: k`, then `2^k` lines
//! `re im` in big-endian basis order. Blank lines and lines starting with `#`
//! are ignored.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{family_size, gbs_basis, table_matches_matrices, ProductTable, PRODUCT_TABLE};
use crate::protocol::{
    enumerate_branches, run_exchange, verify_rewrite_identity, ExchangeChoice, ExchangeTranscript,
    Side,
};
use crate::qstate::{maximally_mixed, trace_distance, QuantumState, RegisterMap, MAX_QUBITS};
use crate::resource::{
    build_resource, build_security_variant, build_sse, Permutation, Resource, ResourceSpec,
    MAX_VARIANT_QUBITS,
};
use crate::rng::{stream, stream_seed};
use crate::security::{security_sweep, SecurityReport, SUCCESS_TOLERANCE};

/// Overrides the directory for output files when `--output` is absent.
pub const OUTPUT_DIR_ENV: &str = "SQIE_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_TOO_LARGE: i32 = 3;
pub const EXIT_UNCONSTRUCTIBLE: i32 = 4;

/// Repetitions per `(side, k, i)` in the identity suite.
pub const IDENTITY_REPETITIONS: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "sqie",
    version,
    about = "Secure quantum information exchange simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one controlled exchange and write its transcript.
    Run(RunConfig),
    /// Exact, Monte Carlo and closed-form bypass probabilities per Charlie register size.
    SweepSecurity(RunConfig),
    /// Run the consistency suite.
    Verify(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Qubits Alice sends.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Qubits Bob sends.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Charlie qubits: a count (`4`) or inclusive range (`0..5`). Defaults to 2·max(m, n).
    #[arg(long)]
    pub l: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// `identity` or a comma-separated permutation of 0..2^l.
    #[arg(long, default_value = "identity")]
    pub phi: String,
    /// Alice's input: `random` or an amplitude file.
    #[arg(long, default_value = "random")]
    pub input_a: String,
    /// Bob's input: `random` or an amplitude file.
    #[arg(long, default_value = "random")]
    pub input_b: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 1,
            n: 1,
            l: None,
            seed: 0,
            trials: 10_000,
            phi: "identity".into(),
            input_a: "random".into(),
            input_b: "random".into(),
            output: None,
            format: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub code: i32,
    pub stdout: String,
    pub written: Option<PathBuf>,
}

impl CommandOutput {
    fn failure(error: &Error) -> Self {
        Self {
            code: exit_code(error),
            stdout: format!("error: {error}\n"),
            written: None,
        }
    }
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::TooManyQubits { .. } => EXIT_TOO_LARGE,
        Error::Unconstructible(_) => EXIT_UNCONSTRUCTIBLE,
        Error::Parse(_)
        | Error::NotPowerOfTwo(_)
        | Error::NotNormalized(_)
        | Error::ZeroVector
        | Error::InvalidPermutation(_)
        | Error::LengthMismatch { .. }
        | Error::DimensionMismatch { .. } => EXIT_BAD_INPUT,
        _ => EXIT_FAILED,
    }
}

/// Parses arguments, dispatches, prints, and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let out = match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::SweepSecurity(c) => cmd_sweep_security(&c),
        Command::Verify(c) => cmd_verify(&c),
    };
    print!("{}", out.stdout);
    out.code
}

/// Parses `4`, `0..5` or `0..=5` (both ranges inclusive).
pub fn parse_l_range(text: &str) -> Result<Vec<usize>> {
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad Charlie qubit count {s:?}")))
    };
    match text.split_once("..") {
        None => Ok(vec![num(text)?]),
        Some((lo, hi)) => {
            let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
            if lo > hi {
                return Err(Error::Parse(format!("empty range {text:?}")));
            }
            Ok((lo..=hi).collect())
        }
    }
}

pub fn parse_phi(text: &str, len: usize) -> Result<Permutation> {
    if text.trim() == "identity" {
        return Ok(Permutation::identity(len));
    }
    let values = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad permutation entry {v:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != len {
        return Err(Error::InvalidPermutation(format!(
            "expected {len} entries, got {}",
            values.len()
        )));
    }
    Permutation::new(values)
}

pub fn parse_amplitudes(text: &str) -> Result<QuantumState> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty amplitude file".into()))?;
    let k = header
        .strip_prefix("qubits:")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| Error::Parse(format!("expected `qubits: k` header, got {header:?}")))?;
    if k > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: k,
            limit: MAX_QUBITS,
        });
    }
    let amplitudes = lines
        .map(|line| {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number {s:?}")))
            };
            match parts.as_slice() {
                [re, im] => Ok(Complex64::new(parse(re)?, parse(im)?)),
                _ => Err(Error::Parse(format!("expected `re im`, got {line:?}"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if amplitudes.len() != 1 << k {
        return Err(Error::Parse(format!(
            "header says {k} qubits but found {} amplitudes",
            amplitudes.len()
        )));
    }
    QuantumState::new(amplitudes, RegisterMap::unlabeled())
}

pub fn render_amplitudes(state: &QuantumState) -> String {
    let mut out = format!("qubits: {}\n", state.num_qubits());
    for a in state.amplitudes() {
        let _ = writeln!(out, "{:e} {:e}", a.re, a.im);
    }
    out
}

fn load_input(source: &str, qubits: usize, seed: u64, stream_index: u64) -> Result<QuantumState> {
    let state = if source == "random" {
        QuantumState::random(qubits, &mut stream(seed, stream_index))?
    } else {
        let text = fs::read_to_string(source)
            .map_err(|e| Error::Parse(format!("cannot read {source}: {e}")))?;
        parse_amplitudes(&text)?
    };
    if state.num_qubits() != qubits {
        return Err(Error::DimensionMismatch {
            left: state.num_qubits(),
            right: qubits,
        });
    }
    Ok(state)
}

pub fn render_transcript(transcript: &ExchangeTranscript) -> String {
    let mut s = serde_json::to_string_pretty(transcript).expect("transcript serializes");
    s.push('\n');
    s
}

pub fn parse_transcript(text: &str) -> Result<ExchangeTranscript> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Twelve significant digits, '.' separator, no exponent.
pub fn format_probability(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.11}", x);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{:.*}", decimals, x)
}

pub fn render_report_csv(report: &SecurityReport) -> String {
    let mut out = String::from("l,exact,mc,mc_stderr,bound\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.l,
            format_probability(row.exact),
            format_probability(row.mc),
            format_probability(row.mc_stderr),
            format_probability(row.bound)
        );
    }
    out
}

fn output_path(config: &RunConfig, default_name: &str) -> PathBuf {
    config.output.clone().unwrap_or_else(|| {
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        dir.join(default_name)
    })
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| Error::Parse(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))
}

fn run_resource(config: &RunConfig) -> Result<Resource> {
    let (m, n) = (config.m, config.n);
    let spec = ResourceSpec::new(m, n).map_err(|e| match e {
        Error::Unconstructible(msg) => Error::Parse(msg),
        other => other,
    })?;
    let l = match &config.l {
        None => spec.charlie_qubits,
        Some(text) => match parse_l_range(text)?.as_slice() {
            [l] => *l,
            _ => {
                return Err(Error::Parse(
                    "run takes a single Charlie qubit count".into(),
                ))
            }
        },
    };
    let total = 3 * m + 3 * n + l;
    if total > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            requested: total,
            limit: MAX_QUBITS,
        });
    }
    if l == spec.charlie_qubits {
        let phi = parse_phi(&config.phi, 1 << l)?;
        return build_resource(&spec.with_phi(phi)?);
    }
    if m == 1 && n == 1 && l <= MAX_VARIANT_QUBITS {
        if config.phi.trim() != "identity" {
            return Err(Error::Parse(
                "--phi applies only to the standard resource".into(),
            ));
        }
        return build_security_variant(l);
    }
    Err(Error::Unconstructible(format!(
        "no resource with {l} Charlie qubits for m={m}, n={n}"
    )))
}

/// Inputs use RNG streams 0 (Alice) and 1 (Bob) of `--seed`; the exchange
/// samples with `stream_seed(seed, 2)`.
pub fn cmd_run(config: &RunConfig) -> CommandOutput {
    let result = (|| -> Result<(ExchangeTranscript, PathBuf)> {
        if config.format == Some(Format::Csv) {
            return Err(Error::Parse("run writes JSON transcripts only".into()));
        }
        let resource = run_resource(config)?;
        let xi = load_input(&config.input_a, config.m, config.seed, 0)?;
        let eta = load_input(&config.input_b, config.n, config.seed, 1)?;
        let transcript = run_exchange(
            &resource,
            &xi,
            &eta,
            ExchangeChoice::Seeded(stream_seed(config.seed, 2)),
        )?;
        let path = output_path(config, "transcript.json");
        write_output(&path, &render_transcript(&transcript))?;
        Ok((transcript, path))
    })();
    match result {
        Err(e) => CommandOutput::failure(&e),
        Ok((t, path)) => {
            let ok = t.succeeded(SUCCESS_TOLERANCE);
            CommandOutput {
                code: if ok { EXIT_OK } else { EXIT_FAILED },
                stdout: format!(
                    "r={} s={} c={} channel=({}, {}) fidelity_at_bob={:.12} fidelity_at_alice={:.12}\nwrote {}\n",
                    t.alice_outcome,
                    t.bob_outcome,
                    t.charlie_outcome,
                    t.channel.forward,
                    t.channel.backward,
                    t.fidelity_at_bob,
                    t.fidelity_at_alice,
                    path.display()
                ),
                written: Some(path),
            }
        }
    }
}

pub fn cmd_sweep_security(config: &RunConfig) -> CommandOutput {
    let result = (|| -> Result<(SecurityReport, PathBuf)> {
        let ls = match &config.l {
            Some(text) => parse_l_range(text)?,
            None if config.m == 1 && config.n == 1 => (0..=MAX_VARIANT_QUBITS).collect(),
            None => vec![2 * config.m.max(config.n)],
        };
        if config.m == 0 || config.n == 0 {
            return Err(Error::Parse("m and n must be at least 1".into()));
        }
        if config.trials == 0 {
            return Err(Error::Parse("--trials must be at least 1".into()));
        }
        let report = security_sweep(config.m, config.n, &ls, config.trials, config.seed)?;
        let (text, name) = match config.format.unwrap_or(Format::Csv) {
            Format::Csv => (render_report_csv(&report), "security.csv"),
            Format::Json => (
                serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                "security.json",
            ),
        };
        let path = output_path(config, name);
        write_output(&path, &text)?;
        Ok((report, path))
    })();
    match result {
        Err(e) => CommandOutput::failure(&e),
        Ok((report, path)) => CommandOutput {
            code: EXIT_OK,
            stdout: render_report_csv(&report) + &format!("wrote {}\n", path.display()),
            written: Some(path),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// The consistency suite, with the Pauli product table passed in so a
/// corrupted table can be fed through the same path.
pub fn verify_suite(table: &ProductTable, seed: u64) -> Result<Vec<CheckResult>> {
    let mut checks = Vec::new();

    let mismatch = table_matches_matrices(table);
    checks.push(check(
        "pauli product table vs 2x2 matrices",
        mismatch.is_none(),
        match mismatch {
            None => "16 entries match".to_string(),
            Some((a, b)) => format!("entry ({a}, {b}) disagrees"),
        },
    ));

    let mut gram_dev = 0.0f64;
    for k in 1..=3 {
        let basis = gbs_basis(k)?;
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                let g: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                gram_dev = gram_dev.max((g - e).norm());
            }
        }
    }
    checks.push(check(
        "GBS orthonormality (k <= 3)",
        gram_dev < 1e-12,
        format!("max Gram deviation {gram_dev:.3e}"),
    ));

    let mut identity_dev = 0.0f64;
    let mut rng = stream(seed, 0);
    for side in [Side::Alice, Side::Bob] {
        for k in 1..=2 {
            for i in 0..family_size(k) {
                for _ in 0..IDENTITY_REPETITIONS {
                    let psi = QuantumState::random(k, &mut rng)?;
                    identity_dev = identity_dev.max(verify_rewrite_identity(side, k, i, &psi)?);
                }
            }
        }
    }
    checks.push(check(
        "BSM rewrite identity (k <= 2, all i)",
        identity_dev < 1e-10,
        format!("max deviation {identity_dev:.3e} over {IDENTITY_REPETITIONS} states per case"),
    ));

    let mut resources = (0..=MAX_VARIANT_QUBITS)
        .map(build_security_variant)
        .collect::<Result<Vec<_>>>()?;
    for (m, n) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        resources.push(build_resource(&ResourceSpec::new(m, n)?)?);
    }
    let mut mixed_dev = 0.0f64;
    for r in resources.iter().filter(|r| r.channels.is_injective()) {
        let c = r.charlie_positions();
        if c.is_empty() {
            continue;
        }
        let rho = r.state.reduced_density(&c)?;
        mixed_dev = mixed_dev.max(trace_distance(&rho, &maximally_mixed(1 << c.len())));
    }
    checks.push(check(
        "Charlie marginal is maximally mixed (injective assignments)",
        mixed_dev < 1e-10,
        format!("max trace distance {mixed_dev:.3e}"),
    ));

    let sse = build_sse(&Permutation::identity(4))?;
    let general = build_resource(&ResourceSpec::new(1, 1)?)?;
    let amp_dev = sse
        .state
        .amplitudes()
        .iter()
        .zip(general.state.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    checks.push(check(
        "generalized resource reduces to six-qubit resource",
        amp_dev < 1e-15,
        format!("max amplitude difference {amp_dev:.3e}"),
    ));

    let mut rng = stream(seed, 1);
    let xi = QuantumState::random(1, &mut rng)?;
    let eta = QuantumState::random(1, &mut rng)?;
    let branches = enumerate_branches(&sse, &xi, &eta)?;
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let worst = branches
        .iter()
        .map(|b| {
            b.transcript
                .fidelity_at_bob
                .min(b.transcript.fidelity_at_alice)
        })
        .fold(1.0, f64::min);
    checks.push(check(
        "exhaustive single-qubit branches",
        branches.len() == 64 && (total - 1.0).abs() < 1e-9 && (1.0 - worst) < 1e-10,
        format!(
            "{} branches, total probability {total:.12}, worst fidelity {worst:.12}",
            branches.len()
        ),
    ));

    Ok(checks)
}

pub fn cmd_verify(config: &RunConfig) -> CommandOutput {
    verify_with_table(config, &PRODUCT_TABLE)
}

pub fn verify_with_table(config: &RunConfig, table: &ProductTable) -> CommandOutput {
    let checks = match verify_suite(table, config.seed) {
        Ok(c) => c,
        Err(e) => return CommandOutput::failure(&e),
    };
    let mut stdout = String::new();
    for c in &checks {
        let _ = writeln!(
            stdout,
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let code = match checks.iter().find(|c| !c.passed) {
        None => {
            stdout.push_str("all checks passed\n");
            EXIT_OK
        }
        Some(first) => {
            let _ = writeln!(stdout, "first failure: {}", first.name);
            EXIT_FAILED
        }
    };
    CommandOutput {
        code,
        stdout,
        written: None,
    }
}
