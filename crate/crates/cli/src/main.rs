use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use framekit::certify::{certify, CertifyRow};
use framekit::oracle::{kernel_pair_search, minimality_scan};
use framekit::properties::{
    complement_property, cross_product_recoverable, does_phase_retrieval, does_weak_phaseless, extend_to_full_spark,
    is_full_spark, spark, weak_pr_verdict, DEFAULT_ENUMERATION_CAP,
};
use framekit::reconstruction::{fmt_vector, reconstruct};
use framekit::{
    fixtures, io, Error, Evidence, Frame, FrameReport, KernelSearchReport, MinimalityReport, PartitionWitness,
    SearchBudget, Status, Tolerance, Verdict, WeakSolution,
};

#[derive(Parser)]
#[command(name = "framekit", version, about = "Phase retrieval diagnostics for finite real frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frame bounds, spark, complement property and weak phase retrieval verdict.
    Analyze {
        #[command(flatten)]
        source: FrameSource,
        #[command(flatten)]
        common: Common,
    },
    /// Recover a signal up to sign from squared magnitudes.
    Reconstruct {
        #[command(flatten)]
        source: FrameSource,
        /// One measurement per line.
        #[arg(long, required_unless_present = "signal")]
        measurements: Option<PathBuf>,
        /// Measurement file holds magnitudes rather than squared magnitudes.
        #[arg(long)]
        unsquared: bool,
        /// Measure this comma-separated signal instead of reading a file.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "measurements")]
        signal: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Replay the built-in fixture suite.
    Certify {
        #[arg(long)]
        fixture: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Minimality scan over random frames and/or full-spark extension.
    Search {
        #[arg(long)]
        minimality: bool,
        #[arg(short = 'm', long = "dim", default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        extend: bool,
        #[command(flatten)]
        source: FrameSource,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct FrameSource {
    /// Frame file (CSV or JSON) or a built-in fixture name.
    #[arg(long)]
    frame: Option<String>,
    #[arg(long, conflicts_with = "frame")]
    fixture: Option<String>,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    eps_rank: Option<f64>,
    #[arg(long)]
    eps_val: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    grid: usize,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn range(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InconsistentMeasurements { .. } | Error::InconsistentSigns(..) => 4,
            Error::Precondition(_) | Error::InsufficientVectors { .. } | Error::BudgetExhausted(_) => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

impl Common {
    fn tolerance(&self) -> CliResult<Tolerance> {
        let d = Tolerance::default();
        let tol = Tolerance {
            eps_rank: self.eps_rank.unwrap_or(d.eps_rank),
            eps_val: self.eps_val.unwrap_or(d.eps_val),
            ..d
        };
        Ok(tol.validated()?)
    }

    fn budget(&self) -> SearchBudget {
        SearchBudget {
            seed: self.seed,
            grid: self.grid,
            ..SearchBudget::default()
        }
    }
}

impl FrameSource {
    fn load(&self, tol: Tolerance) -> CliResult<Frame> {
        if let Some(name) = &self.fixture {
            return fixtures::by_name(name, tol).ok_or_else(|| {
                Failure::input(format!(
                    "unknown fixture {name:?}; known: {}",
                    fixtures::FIXTURE_NAMES.join(", ")
                ))
            });
        }
        let Some(spec) = &self.frame else {
            return Err(Failure::input("no frame given; use --frame PATH or --fixture NAME"));
        };
        let path = Path::new(spec);
        if !path.exists() {
            if let Some(f) = fixtures::by_name(spec, tol) {
                return Ok(f);
            }
        }
        Ok(io::load_frame(path, tol)?)
    }
}

fn enumeration_cap() -> CliResult<usize> {
    match std::env::var("FRAMEKIT_MAX_N") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("FRAMEKIT_MAX_N must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_ENUMERATION_CAP),
    }
}

fn emit<T: Serialize>(output: Output, value: &T, text: impl FnOnce(&T) -> String) {
    match output {
        Output::Json => println!("{}", serde_json::to_string_pretty(value).expect("report serializes")),
        Output::Text => print!("{}", text(value)),
    }
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct AnalysisReport {
    m: usize,
    n: usize,
    tolerance: Tolerance,
    frame: FrameReport,
    spark: usize,
    full_spark: Option<bool>,
    complement_property: bool,
    cp_witness: Option<PartitionWitness>,
    phase_retrieval: bool,
    weak_phaseless: bool,
    cross_product_recoverable: bool,
    kernel: KernelSearchReport,
    verdict: Verdict,
}

fn verdict_text(v: &Verdict) -> String {
    let status = match v.status {
        Status::Proven => "Proven",
        Status::Disproven => "Disproven",
        Status::Unknown => "Unknown",
    };
    let evidence = match &v.evidence {
        Evidence::CardinalityBound { n, required } => format!("{n} vectors, at least {required} needed"),
        Evidence::NotFullSparkAtMinimal { dependent } => format!("2m - 2 vectors, {dependent:?} is not a basis"),
        Evidence::CrossProductRecovery => "cross products recoverable".into(),
        Evidence::StandardBasisShortcut => "cross products recoverable, standard basis present".into(),
        Evidence::ComplementProperty => "complement property".into(),
        Evidence::CounterexamplePair { x, y } => {
            format!("equal measurements for {} and {}", fmt_vector(x), fmt_vector(y))
        }
        Evidence::None => "no decision".into(),
    };
    format!("{status} ({evidence})")
}

fn analyze(source: &FrameSource, common: &Common) -> CliResult<()> {
    let tol = common.tolerance()?;
    let f = source.load(tol)?;
    let cap = enumeration_cap()?;
    if f.len() > cap {
        return Err(Failure::range(format!(
            "frame has {} vectors, enumeration cap is {cap} (set FRAMEKIT_MAX_N to raise it)",
            f.len()
        )));
    }
    let (cp, witness) = complement_property(&f);
    let report = AnalysisReport {
        m: f.dim(),
        n: f.len(),
        tolerance: tol,
        frame: f.classify(),
        spark: spark(&f),
        full_spark: is_full_spark(&f).ok(),
        complement_property: cp,
        cp_witness: witness,
        phase_retrieval: does_phase_retrieval(&f),
        weak_phaseless: does_weak_phaseless(&f),
        cross_product_recoverable: cross_product_recoverable(&f).0,
        kernel: kernel_pair_search(&f, common.grid, common.seed),
        verdict: weak_pr_verdict(&f, &common.budget()),
    };
    emit(common.output, &report, |r| {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<28}{v}\n"));
        line("dimension", format!("m = {}, n = {}", r.m, r.n));
        line("frame bounds", format!("A = {:.6}, B = {:.6}", r.frame.lower_bound, r.frame.upper_bound));
        line("frame", r.frame.is_frame.to_string());
        line("tight", r.frame.is_tight.to_string());
        line("parseval", r.frame.is_parseval.to_string());
        line("equal norm", r.frame.is_equal_norm.to_string());
        line("unit norm", r.frame.is_unit_norm.to_string());
        line("spark", r.spark.to_string());
        line(
            "full spark",
            r.full_spark.map_or("n/a (n < m)".into(), |b| b.to_string()),
        );
        line(
            "complement property",
            match &r.cp_witness {
                None => r.complement_property.to_string(),
                Some(w) => format!("false (I = {:?}, I^c = {:?})", w.subset, w.complement),
            },
        );
        line("phase retrieval", r.phase_retrieval.to_string());
        line("weak phaseless", r.weak_phaseless.to_string());
        line("cross products recoverable", r.cross_product_recoverable.to_string());
        line(
            "lift kernel",
            format!(
                "dim {}, {} rank-two elements scanned{}",
                r.kernel.kernel_dim,
                r.kernel.pairs_found,
                if r.kernel.counterexample.is_some() { ", counterexample found" } else { "" }
            ),
        );
        line("weak phase retrieval", verdict_text(&r.verdict));
        s
    });
    Ok(())
}

fn reconstruct_cmd(
    source: &FrameSource,
    measurements: Option<&Path>,
    unsquared: bool,
    signal: Option<&[f64]>,
    common: &Common,
) -> CliResult<()> {
    let tol = common.tolerance()?;
    let f = source.load(tol)?;
    let y = match (signal, measurements) {
        (Some(x), _) => f.measure(x)?,
        (None, Some(path)) => io::load_measurements(path, !unsquared)?,
        (None, None) => return Err(Failure::input("give --measurements PATH or --signal")),
    };
    if y.len() != f.len() {
        return Err(Failure::input(format!(
            "frame has {} vectors but {} measurements were given",
            f.len(),
            y.len()
        )));
    }
    let solution = reconstruct(&f, &y)?;
    emit(common.output, &solution, |s: &WeakSolution| {
        let comps: Vec<String> = s.components.iter().map(|c| format!("{c:?}")).collect();
        format!(
            "kind            {:?}\nrepresentative  {}\ncomponents      {}\nnote            {}\n",
            s.kind,
            fmt_vector(&s.representative),
            comps.join(" "),
            s.note
        )
    });
    Ok(())
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct CertifyReport {
    passed: bool,
    rows: Vec<CertifyRow>,
}

fn certify_cmd(fixture: Option<&str>, common: &Common) -> CliResult<bool> {
    let tol = common.tolerance()?;
    let rows = certify(tol, fixture).map_err(|e| Failure::input(e.to_string()))?;
    let report = CertifyReport {
        passed: rows.iter().all(|r| r.pass),
        rows,
    };
    emit(common.output, &report, |r| {
        let mut s = format!("{:<22} {:<52} {:<28} {:<28} result\n", "fixture", "check", "expected", "got");
        for row in &r.rows {
            s.push_str(&format!(
                "{:<22} {:<52} {:<28} {:<28} {}\n",
                row.fixture,
                row.check,
                row.expected,
                row.got,
                if row.pass { "PASS" } else { "FAIL" }
            ));
        }
        let failed = r.rows.iter().filter(|row| !row.pass).count();
        s.push_str(&format!("{} checks, {failed} failed\n", r.rows.len()));
        s
    });
    Ok(report.passed)
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct ExtensionReport {
    m: usize,
    n: usize,
    psi: Vec<f64>,
    extended_full_spark: bool,
    extended_complement_property: bool,
    seed: u64,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct SearchReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    minimality: Option<MinimalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extension: Option<ExtensionReport>,
}

fn search(minimality: bool, m: usize, trials: usize, extend: bool, source: &FrameSource, common: &Common) -> CliResult<()> {
    if !minimality && !extend {
        return Err(Failure::input("search needs --minimality and/or --extend"));
    }
    let tol = common.tolerance()?;
    let mut report = SearchReport {
        minimality: None,
        extension: None,
    };
    if minimality {
        if !(2..=4).contains(&m) {
            return Err(Failure::range(format!("minimality scan needs 2 <= m <= 4, got {m}")));
        }
        report.minimality = Some(minimality_scan(m, trials, common.seed)?);
    }
    if extend {
        let f = source.load(tol)?;
        let psi = extend_to_full_spark(&f, common.seed)?;
        let mut vectors = f.vectors().to_vec();
        vectors.push(psi.clone());
        let g = Frame::with_tolerance(vectors, tol)?;
        report.extension = Some(ExtensionReport {
            m: f.dim(),
            n: f.len(),
            psi,
            extended_full_spark: is_full_spark(&g)?,
            extended_complement_property: complement_property(&g).0,
            seed: common.seed,
        });
    }
    emit(common.output, &report, |r| {
        let mut s = String::new();
        if let Some(mr) = &r.minimality {
            s.push_str(&format!(
                "minimality scan  m = {}, n = {}, {} trials, seed {}\n  disproven {}, kernel counterexamples {}, partition counterexamples {}\n  survivors {}\n",
                mr.m,
                mr.n,
                mr.trials,
                mr.seed,
                mr.disproven,
                mr.kernel_counterexamples,
                mr.partition_counterexamples,
                if mr.survivors.is_empty() { "none".to_string() } else { format!("{:?}", mr.survivors) }
            ));
        }
        if let Some(er) = &r.extension {
            s.push_str(&format!(
                "extension  psi = {}\n  extended frame full spark {}, complement property {}\n",
                fmt_vector(&er.psi),
                er.extended_full_spark,
                er.extended_complement_property
            ));
        }
        s
    });
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    match &cli.command {
        Command::Analyze { source, common } => analyze(source, common).map(|_| true),
        Command::Reconstruct {
            source,
            measurements,
            unsquared,
            signal,
            common,
        } => reconstruct_cmd(source, measurements.as_deref(), *unsquared, signal.as_deref(), common).map(|_| true),
        Command::Certify { fixture, common } => certify_cmd(fixture.as_deref(), common),
        Command::Search {
            minimality,
            m,
            trials,
            extend,
            source,
            common,
        } => search(*minimality, *m, *trials, *extend, source, common).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
