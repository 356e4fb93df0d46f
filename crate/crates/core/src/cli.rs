//! Command-line front end.
//!
//! stdout carries machine-readable results only; diagnostics go to stderr.
//! Exit codes: 0 success, 1 audit failure, 2 usage, 3 I/O or bind,
//! 4 protocol or worker failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::cost::{self, fmt_rational};
use crate::field::PrimeField;
use crate::grid::DenseMatrix;
use crate::harness::{self, HarnessError, RemoteOptions, WorkerEndpoint};
use crate::scheme::{
    self, make_plan, minimal_valid_n, plan_with_modulus, theorem1_n, NChoice, PartitionParams,
    SchemeError, SchemePlan, Side,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Worker(String),
    #[error("audit failed")]
    AuditFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::AuditFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Worker(_) => 4,
        }
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<cost::CostError> for CliError {
    fn from(e: cost::CostError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Worker { .. } => CliError::Worker(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "sdmm",
    version,
    about = "Secure distributed matrix multiplication"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resolve N, q and alpha and print the exponent layout.
    Plan(PlanArgs),
    /// Multiply two matrix files through N simulated or remote servers.
    Multiply(MultiplyArgs),
    /// Print communication and computation costs.
    Costs(CostsArgs),
    /// Check T-security of a plan.
    Audit(AuditArgs),
    /// Run a worker that answers COMPUTE frames.
    Serve(ServeArgs),
}

/// `minimal`, `theorem1` or an explicit server count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NArg(pub NChoice);

impl FromStr for NArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minimal" => Ok(NArg(NChoice::Minimal)),
            "theorem1" => Ok(NArg(NChoice::Theorem1)),
            other => other
                .parse::<u64>()
                .map(|n| NArg(NChoice::Explicit(n)))
                .map_err(|_| format!("expected minimal, theorem1 or an integer, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// Row bands of A.
    #[arg(long = "t")]
    pub t: usize,
    /// Column bands of A / row bands of B.
    #[arg(long = "s")]
    pub s: usize,
    /// Column bands of B.
    #[arg(long = "d")]
    pub d: usize,
    /// Number of colluding servers tolerated.
    #[arg(long = "T")]
    pub security: usize,
    /// Server count: minimal, theorem1 or an integer.
    #[arg(long = "n", default_value = "minimal")]
    pub n: NArg,
}

impl SchemeArgs {
    fn params(&self) -> Result<PartitionParams, CliError> {
        Ok(PartitionParams::new(self.t, self.s, self.d, self.security)?)
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Lower bound for the field modulus.
    #[arg(long = "min-q", default_value_t = 2)]
    pub min_q: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Local,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct MultiplyArgs {
    #[arg(long = "a-file")]
    pub a_file: PathBuf,
    #[arg(long = "b-file")]
    pub b_file: PathBuf,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long = "min-q", default_value_t = 2)]
    pub min_q: u64,
    #[arg(long, value_enum, default_value = "local")]
    pub mode: Mode,
    /// Comma-separated host:port list, one per server (remote mode).
    #[arg(long)]
    pub workers: Option<String>,
    /// Threads for the local simulation (defaults to available cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Zero-pad inputs to divisible shapes and truncate the result.
    #[arg(long)]
    pub pad: bool,
    /// Write the product here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-worker timeout in seconds (remote mode).
    #[arg(long = "timeout-secs", default_value_t = 30)]
    pub timeout_secs: u64,
}

#[derive(Debug, Args)]
pub struct CostsArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long)]
    pub a: u64,
    #[arg(long)]
    pub b: u64,
    #[arg(long)]
    pub c: u64,
    /// Also print the comparison against the outer/inner partition baselines.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Field modulus to audit over (prime, with N | q - 1).
    #[arg(long)]
    pub q: Option<u64>,
    /// Coalition size to test (defaults to T).
    #[arg(long)]
    pub collude: Option<usize>,
    /// Cap on share evaluations per exhaustive check.
    #[arg(long, default_value_t = scheme::DEFAULT_ENUMERATION_BUDGET)]
    pub budget: u128,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TCP port; 0 picks a free one.
    #[arg(long)]
    pub port: u64,
    #[arg(long, default_value = "0.0.0.0")]
    pub host: String,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return e.exit_code();
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Plan(args) => cmd_plan(&args, out),
        Command::Multiply(args) => cmd_multiply(&args, out, err),
        Command::Costs(args) => cmd_costs(&args, out),
        Command::Audit(args) => cmd_audit(&args, out, err),
        Command::Serve(args) => cmd_serve(&args, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn cmd_plan(args: &PlanArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = args.scheme.params()?;
    let minimal = minimal_valid_n(params)?;
    let closed = theorem1_n(params);
    let plan = make_plan(params, args.scheme.n.0, args.min_q)?;
    let selected = match args.scheme.n.0 {
        NChoice::Minimal => "minimal",
        NChoice::Theorem1 => "theorem1",
        NChoice::Explicit(_) => "explicit",
    };
    let mut text = format!(
        "N(minimal)={minimal}, N(theorem1)={closed}, q={}\n",
        plan.field().modulus()
    );
    text.push_str(&format!("selected N={} ({selected})\n", plan.n()));
    text.push_str(&format!("alpha={}\n", plan.root().alpha()));
    text.push_str(&format!(
        "rate(a=b=c)={}\n",
        fmt_rational(&cost::square_rate(params, plan.n()))
    ));
    text.push_str(&degree_table(&plan));
    write_out(out, &text)
}

/// Exponents of `h = f_A f_B`: columns follow `f_A`, rows follow `f_B`;
/// desired exponents are bracketed.
fn degree_table(plan: &SchemePlan) -> String {
    let layout = plan.layout();
    let a_terms = layout.a_terms();
    let b_terms = layout.b_terms();
    let params = plan.params();
    let mut desired = Vec::new();
    for i in 0..params.row_parts {
        for j in 0..params.col_parts {
            desired.push(layout.desired(i, j));
        }
    }
    let n = plan.n() as i64;
    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["+".to_string()];
    header.extend(a_terms.iter().map(|&(_, e)| e.to_string()));
    cells.push(header);
    for &(b_term, b_exp) in &b_terms {
        let mut row = vec![b_exp.to_string()];
        for &(a_term, a_exp) in &a_terms {
            let e = a_exp + b_exp;
            let contributes = matches!(
                (a_term, b_term),
                (scheme::ATerm::Block { col: l1, .. }, scheme::BTerm::Block { row: l2, .. }) if l1 == l2
            );
            row.push(if contributes && desired.contains(&e) {
                format!("[{e}]")
            } else {
                e.to_string()
            });
        }
        cells.push(row);
    }
    let cols = cells[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut text = String::from("degree table (rows f_B, columns f_A, [desired]):\n");
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        text.push_str(line.join(" ").trim_end());
        text.push('\n');
    }
    text.push_str("decode weights (block: delta mod N):\n");
    for i in 0..params.row_parts {
        for j in 0..params.col_parts {
            let delta = plan.decode_exponent(i, j);
            text.push_str(&format!(
                "  ({},{}): {}\n",
                i + 1,
                j + 1,
                delta.rem_euclid(n)
            ));
        }
    }
    text
}

/// Reads a matrix file, reducing entries into `field` with a warning.
pub fn read_matrix(path: &Path, field: PrimeField) -> Result<DenseMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_matrix(&text, field).map_err(|e| io_err(path, e))
}

pub fn parse_matrix(text: &str, field: PrimeField) -> Result<DenseMatrix, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty matrix file")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad header {header:?}")))
        .collect::<Result<_, _>>()?;
    let [rows, cols] = dims[..] else {
        return Err(format!("header must be \"rows cols\", got {header:?}"));
    };
    if rows == 0 || cols == 0 {
        return Err("matrix dimensions must be positive".into());
    }
    let mut entries = Vec::with_capacity(rows * cols);
    let mut reduced = 0usize;
    for r in 0..rows {
        let line = lines
            .next()
            .ok_or(format!("expected {rows} rows, got {r}"))?;
        let row: Vec<u64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| format!("bad entry {t:?} in row {}", r + 1))
            })
            .collect::<Result<_, _>>()?;
        if row.len() != cols {
            return Err(format!(
                "row {} has {} entries, expected {cols}",
                r + 1,
                row.len()
            ));
        }
        reduced += row.iter().filter(|&&v| v >= field.modulus()).count();
        entries.extend(row);
    }
    if lines.next().is_some() {
        return Err(format!("more than {rows} rows"));
    }
    if reduced > 0 {
        warn!(
            "{reduced} entries >= q = {} were reduced; integer-exact products need q above the largest entry of AB",
            field.modulus()
        );
    }
    DenseMatrix::new(field, rows, cols, entries).map_err(|e| e.to_string())
}

pub fn format_matrix(m: &DenseMatrix) -> String {
    format!("{} {}\n{m}", m.rows(), m.cols())
}

fn pad(m: &DenseMatrix, row_mult: usize, col_mult: usize) -> DenseMatrix {
    let rows = m.rows().next_multiple_of(row_mult);
    let cols = m.cols().next_multiple_of(col_mult);
    if (rows, cols) == m.shape() {
        return m.clone();
    }
    DenseMatrix::from_fn(m.field(), rows, cols, |r, c| {
        if r < m.rows() && c < m.cols() {
            m.get(r, c)
        } else {
            0
        }
    })
}

fn cmd_multiply(
    args: &MultiplyArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let params = args.scheme.params()?;
    let plan = make_plan(params, args.scheme.n.0, args.min_q)?;
    let field = plan.field();
    let a = read_matrix(&args.a_file, field)?;
    let b = read_matrix(&args.b_file, field)?;
    if a.cols() != b.rows() {
        return Err(CliError::Usage(format!(
            "A is {}x{} but B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (rows, cols) = (a.rows(), b.cols());
    let (a, b) = if args.pad {
        (
            pad(&a, params.row_parts, params.inner_parts),
            pad(&b, params.inner_parts, params.col_parts),
        )
    } else {
        (a, b)
    };

    let seed = args.seed.unwrap_or_else(|| rand::rngs::OsRng.next_u64());
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (product, _log) = match args.mode {
        Mode::Local => {
            let threads = args
                .threads
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            harness::run_local(&a, &b, &plan, &mut rng, threads)?
        }
        Mode::Remote => {
            let list = args
                .workers
                .as_deref()
                .ok_or_else(|| CliError::Usage("--mode remote needs --workers".into()))?;
            let endpoints = list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse)
                .collect::<Result<Vec<WorkerEndpoint>, _>>()?;
            let options = RemoteOptions {
                timeout: Duration::from_secs(args.timeout_secs),
            };
            harness::run_remote(&a, &b, &plan, &mut rng, &endpoints, options)?
        }
    };
    let product = product.submatrix(0, 0, rows, cols);

    let report = cost::communication_costs(
        params,
        plan.n(),
        a.rows() as u64,
        a.cols() as u64,
        b.cols() as u64,
    )?;
    let _ = writeln!(
        err,
        "N={} q={} seed={seed} upload={} download={}",
        plan.n(),
        field.modulus(),
        fmt_rational(&report.upload_elements),
        fmt_rational(&report.download_elements)
    );
    let text = format_matrix(&product);
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => write_out(out, &text),
    }
}

fn cmd_costs(args: &CostsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = args.scheme.params()?;
    let n = match args.scheme.n.0 {
        NChoice::Minimal => minimal_valid_n(params)?,
        NChoice::Theorem1 => theorem1_n(params),
        NChoice::Explicit(n) => {
            if !scheme::is_valid_n(params, n) {
                return Err(CliError::Usage(format!(
                    "N = {n} is not valid for {params}"
                )));
            }
            n
        }
    };
    if args.compare
        && (
            params.row_parts,
            params.inner_parts,
            params.col_parts,
            params.security,
        ) != (2, 2, 2, 1)
    {
        return Err(CliError::Usage(
            "--compare uses baseline constants that exist only for t=s=d=2, T=1".into(),
        ));
    }
    let report = cost::communication_costs(params, n, args.a, args.b, args.c)?;
    let sym = cost::symbolic_costs(params, n);
    let rows = [
        ("upload", sym.upload, report.upload_elements),
        ("download", sym.download, report.download_elements),
        ("encode", sym.encode, report.encode_ops),
        ("decode", sym.decode, report.decode_ops),
    ];
    let mut text = String::new();
    match args.format {
        Format::Text => {
            text.push_str(&format!("N={n}\n"));
            for (name, s, v) in rows {
                text.push_str(&format!("{name:<9}{s} = {}\n", fmt_rational(&v)));
            }
            text.push_str(&format!("rate     {}\n", fmt_rational(&report.total_rate)));
        }
        Format::Csv => {
            text.push_str("N,upload,download,encode,decode,rate\n");
            text.push_str(&format!(
                "{n},{},{},{},{},{}\n",
                fmt_rational(&report.upload_elements),
                fmt_rational(&report.download_elements),
                fmt_rational(&report.encode_ops),
                fmt_rational(&report.decode_ops),
                fmt_rational(&report.total_rate)
            ));
        }
    }
    if args.compare {
        let table = cost::comparison_table(args.a, args.b, args.c)?;
        text.push('\n');
        text.push_str(&match args.format {
            Format::Text => cost::render_table(&table),
            Format::Csv => cost::render_csv(&table),
        });
    }
    write_out(out, &text)
}

fn subsets(n: u64, k: usize) -> Vec<Vec<u64>> {
    fn go(start: u64, n: u64, k: usize, cur: &mut Vec<u64>, acc: &mut Vec<Vec<u64>>) {
        if cur.len() == k {
            acc.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            go(i + 1, n, k, cur, acc);
            cur.pop();
        }
    }
    let mut acc = Vec::new();
    go(1, n, k, &mut Vec::new(), &mut acc);
    acc
}

fn cmd_audit(args: &AuditArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let params = args.scheme.params()?;
    let plan = match args.q {
        Some(q) => {
            let n = match args.scheme.n.0 {
                NChoice::Minimal => minimal_valid_n(params)?,
                NChoice::Theorem1 => theorem1_n(params),
                NChoice::Explicit(n) => n,
            };
            plan_with_modulus(params, n, q)?
        }
        None => make_plan(params, args.scheme.n.0, 2)?,
    };
    let k = args.collude.unwrap_or(params.security);
    if k > params.security {
        return Err(CliError::Usage(format!(
            "--collude {k} exceeds T = {}; the scheme only promises security up to T",
            params.security
        )));
    }
    let mut text = format!(
        "plan {params} N={} q={} alpha={} coalition size {k}\n",
        plan.n(),
        plan.field().modulus(),
        plan.root().alpha()
    );
    let mut all_pass = true;
    if k == 0 {
        text.push_str("empty coalition: nothing observed, pass\n");
        write_out(out, &text)?;
        return Ok(());
    }
    let coalitions = subsets(plan.n(), k);
    for side in [Side::A, Side::B] {
        for set in &coalitions {
            let m = scheme::mask_matrix(&plan, set, side)?;
            let ok = m.rank() == set.len();
            all_pass &= ok;
            text.push_str(&format!(
                "rank {side:?} {set:?}: {}\n",
                if ok { "pass" } else { "FAIL" }
            ));
        }
    }
    let mut skipped = false;
    for set in &coalitions {
        match scheme::exhaustive_security_check(&plan, set, args.budget) {
            Ok(ok) => {
                all_pass &= ok;
                text.push_str(&format!(
                    "uniform {set:?}: {}\n",
                    if ok { "pass" } else { "FAIL" }
                ));
            }
            Err(SchemeError::BudgetExceeded { needed, budget }) => {
                let _ = writeln!(
                    err,
                    "notice: exhaustive check skipped ({needed} evaluations per coalition exceed budget {budget})"
                );
                skipped = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if skipped {
        text.push_str("uniform: skipped (budget)\n");
    }
    text.push_str(if all_pass {
        "result: pass\n"
    } else {
        "result: FAIL\n"
    });
    write_out(out, &text)?;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::AuditFailed)
    }
}

fn cmd_serve(args: &ServeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let port = u16::try_from(args.port)
        .map_err(|_| CliError::Io(format!("cannot bind port {}: out of range", args.port)))?;
    let worker = harness::Worker::bind((args.host.as_str(), port))
        .map_err(|e| CliError::Io(format!("cannot bind {}:{port}: {e}", args.host)))?;
    let addr = worker
        .local_addr()
        .map_err(|e| CliError::Io(e.to_string()))?;
    write_out(out, &format!("listening on {addr}\n"))?;
    worker.serve().map_err(|e| CliError::Io(e.to_string()))
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("sdmm").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn plan_worked_example() {
        let (code, out, _) = run_capture(&["plan", "--t", "2", "--s", "2", "--d", "2", "--T", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("N(minimal)=13, N(theorem1)=15, q=53"), "{out}");
        assert!(out.contains("rate(a=b=c)=4/39"));
        assert!(out.contains("(1,2): 5"));
    }

    #[test]
    fn plan_outer_partition() {
        let (code, out, _) = run_capture(&["plan", "--t", "2", "--s", "1", "--d", "2", "--T", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("N(minimal)=8"));
    }

    #[test]
    fn plan_rejects_zero_security() {
        let (code, _, err) = run_capture(&["plan", "--t", "1", "--s", "1", "--d", "1", "--T", "0"]);
        assert_eq!(code, 2);
        assert!(err.contains("T must be at least 1"));
        let (code, _, _) = run_capture(&[
            "plan", "--t", "2", "--s", "2", "--d", "2", "--T", "1", "--n", "12",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn costs_compare() {
        let (code, out, _) = run_capture(&[
            "costs",
            "--t",
            "2",
            "--s",
            "2",
            "--d",
            "2",
            "--T",
            "1",
            "--a",
            "4",
            "--b",
            "4",
            "--c",
            "4",
            "--compare",
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("Proposed"));
        assert!(out.contains("GASP"));
        assert!(out.contains("Inner-product"));
        assert!(out.contains("13/4(ab+bc) = 104"));
        let (code, _, err) = run_capture(&[
            "costs",
            "--t",
            "1",
            "--s",
            "2",
            "--d",
            "1",
            "--T",
            "1",
            "--a",
            "4",
            "--b",
            "4",
            "--c",
            "4",
            "--compare",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("only for t=s=d=2"));
    }

    #[test]
    fn costs_rate_is_rational() {
        let (code, out, _) = run_capture(&[
            "costs", "--t", "1", "--s", "2", "--d", "1", "--T", "1", "--a", "2", "--b", "2", "--c",
            "2",
        ]);
        assert_eq!(code, 0);
        // N = 4: (4 (2/4 + 2/4 + 1))^-1
        assert!(out.contains("rate     1/8"), "{out}");
        let (_, csv, _) = run_capture(&[
            "costs", "--t", "1", "--s", "2", "--d", "1", "--T", "1", "--a", "2", "--b", "2", "--c",
            "2", "--format", "csv",
        ]);
        assert_eq!(
            csv,
            "N,upload,download,encode,decode,rate\n4,16,16,64,20,1/8\n"
        );
    }

    #[test]
    fn audit_commands() {
        let (code, out, _) =
            run_capture(&["audit", "--t", "1", "--s", "2", "--d", "1", "--T", "1"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("result: pass"));
        assert!(out.contains("uniform [4]: pass"));
        let (code, out, _) =
            run_capture(&["audit", "--t", "2", "--s", "2", "--d", "2", "--T", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.matches("rank A").count(), 13);
        let (code, out, _) = run_capture(&[
            "audit",
            "--t",
            "1",
            "--s",
            "2",
            "--d",
            "1",
            "--T",
            "1",
            "--collude",
            "0",
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("pass"));
        let (code, _, _) = run_capture(&[
            "audit",
            "--t",
            "1",
            "--s",
            "2",
            "--d",
            "1",
            "--T",
            "1",
            "--collude",
            "2",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn matrix_file_parsing() {
        let f = PrimeField::new(5).unwrap();
        let m = parse_matrix("2 2\n1 2\n3 7\n", f).unwrap();
        assert_eq!(m.entries(), &[1, 2, 3, 2]);
        assert_eq!(format_matrix(&m), "2 2\n1 2\n3 2\n");
        assert!(parse_matrix("2 2\n1 2\n", f).is_err());
        assert!(parse_matrix("2 2\n1 2 3\n4 5\n", f).is_err());
        assert!(parse_matrix("1 1\n-1\n", f).is_err());
        assert!(parse_matrix("", f).is_err());
    }

    #[test]
    fn padding_keeps_values() {
        let f = PrimeField::new(7).unwrap();
        let m = DenseMatrix::new(f, 1, 3, vec![1, 2, 3]).unwrap();
        let p = pad(&m, 2, 2);
        assert_eq!(p.shape(), (2, 4));
        assert_eq!(p.entries(), &[1, 2, 3, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn subsets_count() {
        assert_eq!(subsets(5, 2).len(), 10);
        assert_eq!(subsets(3, 0), vec![Vec::<u64>::new()]);
    }

    #[test]
    fn serve_rejects_bad_port() {
        let (code, _, err) = run_capture(&["serve", "--port", "70000"]);
        assert_eq!(code, 3);
        assert!(err.contains("cannot bind"));
    }
}
