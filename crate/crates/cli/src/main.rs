mod output;

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fsindex::alphabet::PROTEIN_LETTERS;
use fsindex::baselines::flat_build;
use fsindex::bench::{run_bench, spot_audit, BenchConfig, BenchQuery, RadiusSource};
use fsindex::ingest::{background_frequencies, sample_queries, QuerySource};
use fsindex::partition::presets;
use fsindex::query::{distance_query, parse_pssm, similarity_threshold_to_radius, Orientation, QueryFunction};
use fsindex::{
    extract_fragments, parse_fasta, Alphabet, DistanceMatrix, FsIndex, PartitionScheme, ScoreMatrix, SearchMode,
    Symmetrization, Value,
};

#[derive(Parser)]
#[command(name = "fsindex", version, about = "Exact similarity search over protein fragments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index all length-m fragments of a FASTA file
    Build(BuildArgs),
    /// Range or nearest-neighbour search of one query
    Search(SearchArgs),
    /// Run the kNN-then-range benchmark protocol
    Bench(BenchArgs),
    /// Check whether a score matrix induces a quasi-metric
    VerifyMatrix(VerifyArgs),
    /// Summarize an index file
    Stats(StatsArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    fasta: PathBuf,
    /// Partition: a preset name (SPEQ06, SPEQ09, SPEQ12, SPNA09, SPNB09),
    /// a spec like "TSAN,ILVM,KR,DEQ,WFYH,GPC", or @FILE
    #[arg(long)]
    partition: String,
    /// Fragment length
    #[arg(long, short)]
    m: usize,
    #[arg(long, default_value = PROTEIN_LETTERS)]
    alphabet: String,
    /// Score matrix that must cover the alphabet
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Also index suffixes shorter than m
    #[arg(long)]
    suffix: bool,
    /// Shortest suffix kept in suffix mode
    #[arg(long, default_value_t = 1, requires = "suffix")]
    suffix_floor: usize,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// D(a,b) = S(a,a) - S(a,b)
    Quasi,
    /// max(D(a,b), D(b,a))
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum PssmOrientation {
    /// Higher is better; values are negated into costs
    Score,
    /// Lower is better
    Cost,
}

#[derive(Args)]
struct QueryArgs {
    /// Score matrix for literal queries
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "quasi")]
    metric: Metric,
    /// Literal query fragment
    #[arg(long, conflicts_with = "pssm")]
    query: Option<String>,
    /// Position-specific matrix file: a letter header, one row per position
    #[arg(long)]
    pssm: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "score")]
    orientation: PssmOrientation,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, short)]
    index: PathBuf,
    #[command(flatten)]
    query: QueryArgs,
    /// Range radius in query units
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["k", "similarity_threshold"])]
    epsilon: Option<Value>,
    /// Range search for s(query, x) >= T; literal queries with --metric quasi only
    #[arg(long, allow_hyphen_values = true, conflicts_with = "k")]
    similarity_threshold: Option<Value>,
    /// Number of nearest neighbours
    #[arg(long, short)]
    k: Option<usize>,
    /// Return every hit tied with the k-th value
    #[arg(long, requires = "k")]
    all_ties: bool,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    /// Hits re-evaluated directly after the search
    #[arg(long, default_value_t = 32)]
    audit_sample: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, short)]
    index: PathBuf,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum, default_value = "quasi")]
    metric: Metric,
    /// Number of random queries
    #[arg(long, default_value_t = 100)]
    queries: usize,
    /// FASTA file to draw held-out query windows from; letters are drawn
    /// from background frequencies otherwise
    #[arg(long)]
    held_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated k values; each sets a range radius
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<usize>,
    /// Comma-separated fixed radii, run in addition to --k
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    epsilon: Vec<Value>,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    /// Also run the single-bin comparison scan
    #[arg(long)]
    flat: bool,
    /// Check every result against a linear scan
    #[arg(long)]
    oracle: bool,
    /// Report oracle mismatches instead of failing
    #[arg(long, requires = "oracle")]
    no_assert: bool,
    /// Run queries on all cores
    #[arg(long)]
    parallel: bool,
    /// Per-query rows as TSV
    #[arg(long)]
    tsv: Option<PathBuf>,
    /// JSON report (stdout when absent)
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    matrix: PathBuf,
    /// Letters to check; the file may hold more
    #[arg(long, default_value = PROTEIN_LETTERS, conflicts_with = "all_letters")]
    alphabet: String,
    /// Check every letter in the file
    #[arg(long)]
    all_letters: bool,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, short)]
    index: PathBuf,
    /// Also verify every structural invariant
    #[arg(long)]
    audit: bool,
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_matrix(path: &Path, alphabet: Option<&Alphabet>) -> anyhow::Result<ScoreMatrix> {
    ScoreMatrix::parse(&read_text(path)?, alphabet).with_context(|| format!("in {}", path.display()))
}

fn load_index(path: &Path) -> anyhow::Result<FsIndex> {
    FsIndex::load(path).with_context(|| format!("loading {}", path.display()))
}

fn partition_text(arg: &str) -> anyhow::Result<String> {
    if let Some(path) = arg.strip_prefix('@') {
        return read_text(Path::new(path));
    }
    Ok(presets::lookup(arg).map_or_else(|| arg.to_string(), str::to_string))
}

fn distance(score: &ScoreMatrix, metric: Metric) -> anyhow::Result<DistanceMatrix> {
    let d = DistanceMatrix::from_score(score)?;
    Ok(match metric {
        Metric::Quasi => d,
        Metric::Max => d.symmetrize(Symmetrization::Maximum),
    })
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn cmd_build(args: BuildArgs) -> anyhow::Result<()> {
    let alphabet = Alphabet::new(&args.alphabet)?;
    if let Some(path) = &args.matrix {
        load_matrix(path, Some(&alphabet))?;
    }
    let scheme = PartitionScheme::parse(&partition_text(&args.partition)?, &alphabet, args.m)?;
    let file = fs::File::open(&args.fasta).with_context(|| format!("opening {}", args.fasta.display()))?;
    let db = parse_fasta(BufReader::new(file)).with_context(|| format!("in {}", args.fasta.display()))?;
    let floor = args.suffix.then_some(args.suffix_floor);
    let dataset = extract_fragments(&db, &alphabet, args.m, floor)?;
    let manifest = dataset.manifest();
    let index = FsIndex::build(dataset, &scheme)?;
    index
        .save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let bytes = fs::metadata(&args.out)?.len();
    emit(None, &output::build_manifest(&manifest, &index.summary(), bytes))
}

/// The score matrix and encoded fragment behind a literal query.
type Literal = (ScoreMatrix, Vec<u8>);

fn query_function(index: &FsIndex, args: &QueryArgs) -> anyhow::Result<(QueryFunction, Option<Literal>)> {
    let alphabet = index.scheme().alphabet();
    if let Some(path) = &args.pssm {
        let orientation = match args.orientation {
            PssmOrientation::Score => Orientation::Score,
            PssmOrientation::Cost => Orientation::Cost,
        };
        let f =
            parse_pssm(&read_text(path)?, alphabet, orientation).with_context(|| format!("in {}", path.display()))?;
        return Ok((f, None));
    }
    let Some(text) = &args.query else {
        bail!("give a literal --query or a --pssm file");
    };
    let Some(matrix) = &args.matrix else {
        bail!("literal queries need --matrix");
    };
    let score = load_matrix(matrix, Some(alphabet))?;
    let omega = alphabet.encode(text.as_bytes()).context("query")?;
    let f = distance_query(&distance(&score, args.metric)?, &omega);
    Ok((f, Some((score, omega))))
}

fn cmd_search(args: SearchArgs) -> anyhow::Result<()> {
    let index = load_index(&args.index)?;
    let (f, literal) = query_function(&index, &args.query)?;
    let (mode, epsilon) = match (args.k, args.epsilon, args.similarity_threshold) {
        (Some(k), None, None) => (
            SearchMode::Knn {
                k,
                all_ties: args.all_ties,
            },
            None,
        ),
        (None, Some(e), None) => (SearchMode::Range(e), Some(e)),
        (None, None, Some(t)) => {
            let Some((score, omega)) = &literal else {
                bail!("--similarity-threshold needs a literal query");
            };
            if !matches!(args.query.metric, Metric::Quasi) {
                bail!("--similarity-threshold needs --metric quasi");
            }
            let e = similarity_threshold_to_radius(score, omega, t);
            (SearchMode::Range(e), Some(e))
        }
        _ => bail!("give exactly one of --epsilon, --similarity-threshold or -k"),
    };
    let outcome = index.search(&f, mode)?;
    spot_audit(&index, &f, &outcome.hits, args.audit_sample)?;
    let label = args.query.query.clone().unwrap_or_else(|| {
        args.query
            .pssm
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default()
    });
    let text = match args.format {
        Format::Tsv => output::hits_tsv(&index, &outcome, f.len(), epsilon),
        Format::Json => output::hits_json(&index, &outcome, &label, f.len(), mode, epsilon)?,
    };
    emit(args.out.as_deref(), &text)
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<()> {
    let index = load_index(&args.index)?;
    let alphabet = index.scheme().alphabet().clone();
    let score = load_matrix(&args.matrix, Some(&alphabet))?;
    let d = distance(&score, args.metric)?;
    let m = index.m();
    let omegas = match &args.held_out {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let db = parse_fasta(BufReader::new(file)).with_context(|| format!("in {}", path.display()))?;
            sample_queries(QuerySource::HeldOut(&db), &alphabet, m, args.queries, args.seed)?
        }
        None => {
            let freqs = background_frequencies(&alphabet)?;
            sample_queries(QuerySource::Background(&freqs), &alphabet, m, args.queries, args.seed)?
        }
    };
    let queries: Vec<BenchQuery> = omegas
        .iter()
        .map(|w| BenchQuery {
            label: alphabet.decode(w),
            function: distance_query(&d, w),
        })
        .collect();
    let mut radii: Vec<RadiusSource> = args.k.iter().map(|&k| RadiusSource::Knn(k)).collect();
    radii.extend(args.epsilon.iter().map(|&e| RadiusSource::Fixed(e)));
    if radii.contains(&RadiusSource::Knn(0)) {
        bail!("k must be at least 1");
    }
    let flat = args.flat.then(|| flat_build(&index));
    let config = BenchConfig {
        radii,
        repetitions: args.repetitions,
        oracle: args.oracle,
        no_assert: args.no_assert,
        parallel: args.parallel,
    };
    let report = run_bench(&index, flat.as_ref(), &queries, &config)?;
    if let Some(path) = &args.tsv {
        fs::write(path, report.rows_tsv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    emit(args.out.as_deref(), &json)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<()> {
    let alphabet = if args.all_letters {
        None
    } else {
        Some(Alphabet::new(&args.alphabet)?)
    };
    let score = load_matrix(&args.matrix, alphabet.as_ref())?;
    let name = args
        .matrix
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = match DistanceMatrix::from_score(&score) {
        Ok(d) => {
            let report = d.check_quasi_metric();
            match args.format {
                Format::Tsv => output::matrix_report_text(&name, &score, &d, &report),
                Format::Json => output::matrix_report_json(&name, &score, &report)?,
            }
        }
        Err(e) => format!("matrix: {name}\nquasi-metric: no\nreason: {e}\n"),
    };
    emit(None, &text)
}

fn cmd_stats(args: StatsArgs) -> anyhow::Result<()> {
    let index = load_index(&args.index)?;
    if args.audit {
        index.audit()?;
    }
    let mut json = serde_json::to_string_pretty(&index.summary())?;
    json.push('\n');
    emit(None, &json)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Search(a) => cmd_search(a),
        Command::Bench(a) => cmd_bench(a),
        Command::VerifyMatrix(a) => cmd_verify(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<fsindex::Error>() {
                Some(fsindex::Error::Assertion(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
