//! The `semicircle` command line tool.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! `--check` threshold is missed.

mod table;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use table::{format_float, Cell, CsvData, Table};

use crate::ensembles::EnsembleSpec;
use crate::error::Error;
use crate::nc_partitions::{
    build_adopted_sequence, catalan, enumerate_nc_pair_partitions, verify_adopted, AdoptedGraph,
};
use crate::relations::{block_relation, condition_counts, growth_report, wigner_relation, EquivalenceRelation};
use crate::spectra::{empirical_moments, histogram, ks_distance, pooled_spectrum, variance_decay};
use crate::tree_integrals::{moment_table, theoretical_moment};
use crate::weights::{is_phi_constant, midpoints, WeightFn, DEFAULT_GRID};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "SEMICIRCLE_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

const MOMENT_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(
    name = "semicircle",
    version,
    about = "Limit moments of weighted random matrices: tree integrals and Monte Carlo"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Seed for Monte Carlo commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: $SEMICIRCLE_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the command's CSV here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Compare results against the built-in thresholds; exit 2 on failure.
    #[arg(long, global = true)]
    check: bool,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the non-crossing pair partitions of {1..k}.
    Partitions(PartitionsArgs),
    /// φ profile of a weight and the constant-φ verdict.
    Phi(PhiArgs),
    /// Limit moments from tree integrals.
    Theory(TheoryArgs),
    /// Monte Carlo trace moments.
    Simulate(SimulateArgs),
    /// Pooled eigenvalue histogram against the semicircle density.
    Spectrum(SpectrumArgs),
    /// Decay of Var(Y^(k)) along a family of sizes.
    Variance(VarianceArgs),
    /// Equivalence relation audits.
    Relation {
        #[command(subcommand)]
        action: RelationCommand,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Emit {
    Sequences,
    Graphs,
}

#[derive(Debug, Args)]
struct PartitionsArgs {
    #[arg(long)]
    k: usize,
    /// Also print adopted sequences (and, with `graphs`, tree edges).
    #[arg(long, value_enum)]
    emit: Option<Emit>,
}

#[derive(Debug, Args)]
struct PhiArgs {
    /// constant:<c>, band:<rho>, periodic:<rho> or table:<path>
    #[arg(long)]
    weight: String,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    #[arg(long)]
    weight: String,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Divide μ_k by φ₀^{k/2}.
    #[arg(long)]
    normalized: bool,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// Shorthand (wigner, band:0.25, periodic:0.25, slow:0.7, weighted:<weight>,
    /// with optional block:/block-minus: prefix and :gaussian suffix), a JSON
    /// object, or a path to a JSON file.
    #[arg(long)]
    ensemble: String,
    /// Matrix dimension (total dimension for block ensembles).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 32)]
    trials: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long)]
    normalized: bool,
    /// `--check` bound on |mean − theory| / max(1, |theory|).
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Histogram range `lo,hi`.
    #[arg(long, value_delimiter = ',', default_values_t = [-2.5, 2.5], allow_negative_numbers = true)]
    range: Vec<f64>,
    /// Divide eigenvalues by √φ₀.
    #[arg(long)]
    normalized: bool,
    /// `--check` bound on the Kolmogorov distance.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
}

#[derive(Debug, Args)]
struct VarianceArgs {
    /// Ensemble shorthand or JSON; its dimension is replaced by each of `--ns`.
    #[arg(long)]
    ensemble_family: String,
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    trials: usize,
    /// `--check` requires a fitted slope at most this.
    #[arg(long, default_value_t = -0.8, allow_negative_numbers = true)]
    max_slope: f64,
}

#[derive(Debug, Subcommand)]
enum RelationCommand {
    /// Condition counts for one relation, optionally over a size sweep.
    Check(RelationArgs),
}

#[derive(Debug, Args)]
struct RelationArgs {
    /// wigner, block, block-minus or table:<path>
    #[arg(long)]
    relation: String,
    /// Size (block size for block relations).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    band: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,
}

/// What a command produced.
#[derive(Debug, Default)]
struct Outcome {
    summary: Vec<String>,
    table: Option<Table>,
    /// Raw text output (used instead of a table by `partitions`).
    text: Option<String>,
    failures: Vec<String>,
}

impl Outcome {
    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

type CmdResult = Result<Outcome, String>;

fn err(e: Error) -> String {
    e.to_string()
}

/// Runs the tool on `argv` (including the program name). Returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{rendered}")
            } else {
                write!(stdout, "{rendered}")
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(outcome) if outcome.failures.is_empty() => EXIT_OK,
        Ok(outcome) => {
            for f in &outcome.failures {
                let _ = writeln!(stderr, "check failed: {f}");
            }
            EXIT_CHECK_FAILED
        }
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}

/// [`run`] on the process arguments and standard streams.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

fn configure_threads(threads: Option<usize>) -> Result<(), String> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("{THREADS_ENV}=`{v}` is not a thread count"))?,
            ),
            Err(_) => None,
        },
    };
    if threads == Some(0) {
        return Err("--threads must be at least 1".into());
    }
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        // A global pool can only be installed once per process; later calls
        // keep the first configuration.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<Outcome, String> {
    let g = cli.global;
    configure_threads(g.threads)?;
    // Fail on an unwritable output path before any computation.
    let out_file = match &g.out {
        Some(path) => Some(
            File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        ),
        None => None,
    };

    let mut outcome = match cli.command {
        Command::Partitions(a) => partitions(a)?,
        Command::Phi(a) => phi(a)?,
        Command::Theory(a) => theory(a)?,
        Command::Simulate(a) => simulate(a, g.seed)?,
        Command::Spectrum(a) => spectrum(a, g.seed)?,
        Command::Variance(a) => variance(a, g.seed)?,
        Command::Relation {
            action: RelationCommand::Check(a),
        } => relation_check(a)?,
    };

    if let (Some(file), Some(path)) = (out_file, &g.out) {
        let mut w = BufWriter::new(file);
        let written = match (&outcome.table, &outcome.text) {
            (Some(t), _) => t.write_to(&mut w).map_err(err),
            (None, Some(text)) => w.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            (None, None) => Ok(()),
        };
        written
            .and_then(|_| w.flush().map_err(|e| e.to_string()))
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    if g.check {
        if let Some(t) = &outcome.table {
            let replay = match &g.out {
                Some(path) => CsvData::read(path).map_err(err)?,
                None => CsvData::parse(&t.to_csv_string()).map_err(err)?,
            };
            if let Err(e) = t.matches_replay(&replay) {
                outcome.failures.push(format!("CSV replay: {e}"));
            }
        }
    } else {
        outcome.failures.clear();
    }

    if !g.quiet {
        let mut body = String::new();
        if g.out.is_none() {
            if let Some(text) = &outcome.text {
                body.push_str(text);
            }
        }
        for line in &outcome.summary {
            body.push_str(line);
            body.push('\n');
        }
        if g.check && outcome.failures.is_empty() {
            body.push_str("check passed\n");
        }
        stdout.write_all(body.as_bytes()).map_err(|e| e.to_string())?;
    }
    Ok(outcome)
}

fn parse_weight(spec: &str) -> Result<WeightFn, String> {
    WeightFn::parse(spec).map_err(err)
}

fn parse_ensemble(text: &str, n: Option<usize>, seed: Option<u64>) -> Result<EnsembleSpec, String> {
    let trimmed = text.trim();
    let from_json = trimmed.starts_with('{');
    let from_file = !from_json && trimmed.ends_with(".json") && Path::new(trimmed).exists();
    let mut spec = if from_json || from_file {
        let mut spec = if from_json {
            EnsembleSpec::from_json(trimmed)
        } else {
            EnsembleSpec::from_json_file(Path::new(trimmed))
        }
        .map_err(err)?;
        if let Some(n) = n {
            spec = spec.with_n(n).map_err(err)?;
        }
        spec
    } else {
        let n = n.ok_or("--n is required with a shorthand ensemble")?;
        EnsembleSpec::from_shorthand(trimmed, n, crate::ensembles::DEFAULT_SEED).map_err(err)?
    };
    if let Some(seed) = seed {
        spec = spec.with_seed(seed);
    }
    Ok(spec)
}

fn partitions(a: PartitionsArgs) -> CmdResult {
    let parts = enumerate_nc_pair_partitions(a.k).map_err(err)?;
    let mut text = String::new();
    let mut verified = true;
    for pi in &parts {
        let seq = build_adopted_sequence(pi).map_err(err)?;
        verified &= verify_adopted(pi, &seq);
        text.push_str(&pi.to_string());
        match a.emit {
            None => {}
            Some(Emit::Sequences) => text.push_str(&format!("\t{seq}")),
            Some(Emit::Graphs) => {
                let graph = AdoptedGraph::from_sequence(&seq);
                verified &= graph.is_tree();
                text.push_str(&format!("\t{seq}\t{graph}"));
            }
        }
        text.push('\n');
    }
    let expected = catalan(a.k / 2).map_err(err)?;
    let mut outcome = Outcome {
        summary: Vec::new(),
        text: Some(text),
        ..Default::default()
    };
    outcome.expect(
        parts.len() as u64 == expected,
        format!("{} partitions, expected C_{} = {expected}", parts.len(), a.k / 2),
    );
    outcome.expect(verified, "an adopted sequence failed verification");
    Ok(outcome)
}

fn phi(a: PhiArgs) -> CmdResult {
    let w = parse_weight(&a.weight)?;
    let report = is_phi_constant(&w, a.tol, a.grid).map_err(err)?;
    let mu4 = theoretical_moment(4, &w, a.grid, true).map_err(err)?;
    let mut table = Table::new(&["x", "phi", "phi0", "deviation"]);
    for (x, &p) in midpoints(a.grid).zip(&report.phi_values) {
        table.push(vec![x.into(), p.into(), report.phi0.into(), (p - report.phi0).into()]);
    }
    let verdict = if report.constant_verdict { "CONSTANT" } else { "NOT CONSTANT" };
    let mut outcome = Outcome {
        summary: vec![
            format!("weight {w}"),
            format!("verdict {verdict}"),
            format!("phi0 {}", format_float(report.phi0)),
            format!("max_deviation {}", format_float(report.max_deviation)),
            format!("normalized_mu4 {}", format_float(mu4)),
        ],
        table: Some(table),
        ..Default::default()
    };
    // φ constant exactly when the normalized fourth moment is Catalan.
    if report.constant_verdict {
        outcome.expect((mu4 - 2.0).abs() <= MOMENT_TOL, format!("φ constant but normalized μ4 = {mu4}"));
    } else {
        outcome.expect(mu4 > 2.0, format!("φ not constant but normalized μ4 = {mu4}"));
    }
    Ok(outcome)
}

fn theory(a: TheoryArgs) -> CmdResult {
    let w = parse_weight(&a.weight)?;
    if a.k_max == 0 {
        return Err(err(Error::out_of_range("k_max", 0, "1..=16")));
    }
    let t = moment_table(a.k_max, &w, a.grid, a.normalized).map_err(err)?;
    let mut table = Table::new(&["k", "mu_theory", "catalan", "gap"]);
    let mut summary = vec![format!("weight {w}  phi0 {}", format_float(t.phi0)), "k mu_theory catalan gap".into()];
    for e in &t.entries {
        table.push(vec![e.k.into(), e.mu.into(), e.catalan.into(), e.gap().into()]);
        summary.push(format!("{} {} {} {}", e.k, format_float(e.mu), e.catalan, format_float(e.gap())));
    }
    let mut outcome = Outcome {
        summary,
        table: Some(table),
        ..Default::default()
    };
    let scl = is_phi_constant(&w, MOMENT_TOL, a.grid).map_err(err)?.constant_verdict;
    let normalized = if a.normalized {
        t
    } else {
        moment_table(a.k_max, &w, a.grid, true).map_err(err)?
    };
    for e in normalized.entries.iter().filter(|e| e.k % 2 == 0) {
        if scl {
            outcome.expect(e.gap().abs() <= MOMENT_TOL, format!("normalized μ{} = {} is not Catalan", e.k, e.mu));
        } else if e.k >= 4 {
            outcome.expect(e.gap() > 0.0, format!("normalized μ{} = {} does not exceed Catalan", e.k, e.mu));
        }
    }
    Ok(outcome)
}

fn simulate(a: SimulateArgs, seed: Option<u64>) -> CmdResult {
    let spec = parse_ensemble(&a.ensemble.ensemble, a.ensemble.n, seed)?;
    let report = empirical_moments(&spec, a.k_max, a.trials, a.normalized).map_err(err)?;
    let mut table = Table::new(&["k", "theory", "empirical_mean", "empirical_var", "abs_err"]);
    let mut summary = vec![
        format!("ensemble {spec}  trials {}  seed {}", a.trials, spec.seed),
        "k theory empirical_mean empirical_var abs_err".into(),
    ];
    let mut outcome = Outcome::default();
    for r in &report.rows {
        table.push(vec![r.k.into(), r.theory.into(), r.mean.into(), r.variance.into(), r.abs_gap.into()]);
        let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), format_float);
        summary.push(format!(
            "{} {} {} {} {}",
            r.k,
            opt(r.theory),
            format_float(r.mean),
            format_float(r.variance),
            opt(r.abs_gap)
        ));
        if let (Some(t), Some(gap)) = (r.theory, r.abs_gap) {
            let bound = a.tol * t.abs().max(1.0);
            outcome.expect(gap <= bound, format!("k = {}: |mean − theory| = {gap:.4} > {bound:.4}", r.k));
        }
    }
    outcome.summary = summary;
    outcome.table = Some(table);
    Ok(outcome)
}

fn spectrum(a: SpectrumArgs, seed: Option<u64>) -> CmdResult {
    let spec = parse_ensemble(&a.ensemble.ensemble, a.ensemble.n, seed)?;
    let range = match a.range.as_slice() {
        &[lo, hi] => (lo, hi),
        _ => return Err("--range takes two values `lo,hi`".into()),
    };
    if a.bins < crate::spectra::MIN_BINS {
        return Err(err(Error::out_of_range("bins", a.bins, ">= 8")));
    }
    let eigs = pooled_spectrum(&spec, a.trials, a.normalized).map_err(err)?;
    let bins = histogram(&eigs, a.bins, range).map_err(err)?;
    let ks = ks_distance(&eigs).map_err(err)?;
    let mut table = Table::new(&["bin_left", "bin_right", "empirical_density", "semicircle_density"]);
    for b in &bins {
        table.push(vec![b.left.into(), b.right.into(), b.empirical_density.into(), b.semicircle_density.into()]);
    }
    let mut outcome = Outcome {
        summary: vec![
            format!("ensemble {spec}  trials {}  seed {}", a.trials, spec.seed),
            format!("eigenvalues {}", eigs.len()),
            format!("ks_distance {}", format_float(ks)),
        ],
        table: Some(table),
        ..Default::default()
    };
    outcome.expect(ks <= a.tol, format!("Kolmogorov distance {ks:.4} > {}", a.tol));
    Ok(outcome)
}

fn variance(a: VarianceArgs, seed: Option<u64>) -> CmdResult {
    let first = *a.ns.first().ok_or("--ns is empty")?;
    let family = parse_ensemble(&a.ensemble_family, Some(first), seed)?;
    let decay = variance_decay(&family, &a.ns, a.k, a.trials).map_err(err)?;
    let mut table = Table::new(&["n", "axis_value", "mean", "variance"]);
    let mut summary = vec![format!("family {family}  k {}  trials {}", a.k, a.trials)];
    for r in &decay.rows {
        table.push(vec![r.n.into(), r.axis_value.into(), r.mean.into(), r.variance.into()]);
        summary.push(format!("n {} axis {} variance {}", r.n, r.axis_value, format_float(r.variance)));
    }
    summary.push(format!("slope {} (log variance vs log {:?})", format_float(decay.slope), decay.axis));
    let mut outcome = Outcome {
        summary,
        table: Some(table),
        ..Default::default()
    };
    outcome.expect(decay.slope <= a.max_slope, format!("slope {:.3} > {}", decay.slope, a.max_slope));
    Ok(outcome)
}

fn build_relation(name: &str, n: Option<usize>) -> Result<Box<dyn Fn(usize) -> EquivalenceRelation>, String> {
    Ok(match name {
        "wigner" => Box::new(wigner_relation),
        "block" => Box::new(|n| block_relation(n, false)),
        "block-minus" => Box::new(|n| block_relation(n, true)),
        other => {
            let path = other
                .strip_prefix("table:")
                .ok_or_else(|| format!("unknown relation `{other}` (wigner, block, block-minus, table:<path>)"))?;
            let rel = EquivalenceRelation::from_table_file(Path::new(path)).map_err(err)?;
            if let Some(n) = n {
                if n != rel.size() {
                    return Err(format!("--n {n} does not match the table size {}", rel.size()));
                }
            }
            Box::new(move |_| rel.clone())
        }
    })
}

fn relation_check(a: RelationArgs) -> CmdResult {
    let is_table = a.relation.starts_with("table:");
    let build = build_relation(&a.relation, a.n)?;
    let sizes: Vec<usize> = match (&a.sweep, a.n) {
        (Some(s), _) if !s.is_empty() => {
            if is_table {
                return Err("--sweep does not apply to table relations".into());
            }
            s.clone()
        }
        (_, Some(n)) => vec![n],
        (_, None) if is_table => vec![0],
        _ => return Err("--n or --sweep is required".into()),
    };
    if sizes.iter().any(|&n| n == 0) && !is_table {
        return Err(err(Error::out_of_range("n", 0, ">= 1")));
    }
    let mut table = Table::new(&["n", "c1_max", "c2_max", "c3_count", "c1_ratio", "c3_ratio"]);
    let mut summary = vec![format!("relation {}", a.relation), "n c1_max c2_max c3_count c1_ratio c3_ratio".into()];
    for &n in &sizes {
        let r = condition_counts(&build(n), a.band).map_err(err)?;
        table.push(vec![
            r.n.into(),
            r.c1_max.into(),
            r.c2_max.into(),
            r.c3_count.into(),
            r.c1_ratio.into(),
            r.c3_ratio.into(),
        ]);
        summary.push(format!(
            "{} {} {} {} {} {}",
            r.n,
            r.c1_max,
            r.c2_max,
            r.c3_count,
            format_float(r.c1_ratio),
            format_float(r.c3_ratio)
        ));
    }
    let mut outcome = Outcome {
        summary,
        table: Some(table),
        ..Default::default()
    };
    if sizes.len() >= 2 {
        let growth = growth_report(&build, &sizes).map_err(err)?;
        outcome.expect(growth.c1_decreasing, "c1_max / N² is not strictly decreasing");
        outcome.expect(growth.c3_nonincreasing, "c3 / N² is increasing");
    }
    Ok(outcome)
}
