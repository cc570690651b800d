use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geomlens::affine::{self, Preset};
use geomlens::cde;
use geomlens::embio::{load_embeddings, save_embeddings, EmbeddingSet, Format};
use geomlens::error::{Error, Result};
use geomlens::evalkit::{run_suite, SuiteManifest};
use geomlens::nne::{self, GraphMode};
use geomlens::pipeline::{
    emit_plot_data, run_pipeline, validate_config, write_results_csv, TransformSpec, VectorParam,
};
use geomlens::randenc::{random_encode, RandomSpec};

#[derive(Parser)]
#[command(name = "geomlens", version, about = "Geometry-obfuscating transformations for word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one transformation to an embedding file
    Transform(TransformArgs),
    /// Evaluate an embedding file against a dataset suite
    Eval(EvalArgs),
    /// Execute a full (source x transform x dataset) comparison grid
    Run(RunArgs),
    /// Out-degree histogram of a dumped nearest-neighbor graph
    GraphStats(GraphStatsArgs),
}

#[derive(Args)]
struct TransformArgs {
    /// translation | translation-null | reflection | rotation | homothety |
    /// dilation | identity | cde | nne | random
    #[arg(long)]
    op: String,
    /// Use the fixed built-in parameterization for the affine op
    #[arg(long)]
    preset: Option<String>,
    /// Vector parameter: a file with one float per line, or v_diag / v_diagNeg
    #[arg(long)]
    vector_file: Option<String>,
    /// Second vector parameter (rotation plane), same forms as --vector-file
    #[arg(long)]
    vector_file2: Option<String>,
    /// Rotation angle in radians
    #[arg(long)]
    theta: Option<f64>,
    /// Skip orthonormalization of the rotation plane basis
    #[arg(long)]
    raw_basis: bool,
    /// Scaling ratio (dilation / homothety)
    #[arg(long)]
    lambda: Option<f64>,
    /// Anchor count for cde
    #[arg(long)]
    anchors: Option<usize>,
    /// Training epochs for cde
    #[arg(long, default_value_t = cde::DEFAULT_EPOCHS)]
    epochs: usize,
    /// Write the cde distance-profile matrix (text-with-header format)
    #[arg(long)]
    dump_profiles: Option<PathBuf>,
    /// Graph mode for nne: thresholded | weighted | unweighted
    #[arg(long)]
    mode: Option<String>,
    /// Neighbors per node for nne
    #[arg(long, default_value_t = nne::DEFAULT_K)]
    k: usize,
    /// Similarity threshold for thresholded nne
    #[arg(long, default_value_t = nne::DEFAULT_T)]
    t: f64,
    /// Write the nne graph as "source_word target_word weight" lines
    #[arg(long)]
    dump_graph: Option<PathBuf>,
    /// Half-width of the random-encoding interval (default 0.5/d)
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Input format: word2vec-binary | text-with-header | text-bare
    #[arg(long, default_value = "text-with-header")]
    format: String,
    /// Output format (defaults to the input format)
    #[arg(long)]
    out_format: Option<String>,
    /// Keep only the first N words
    #[arg(long)]
    max_vocab: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// TSV manifest: one "task<TAB>path" line per dataset
    #[arg(long)]
    suite: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "text-with-header")]
    format: String,
    #[arg(long)]
    max_vocab: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct GraphStatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

fn parse_vector(s: &str) -> VectorParam {
    match s {
        "v_diag" => VectorParam::VDiag,
        "v_diagNeg" => VectorParam::VDiagNeg,
        path => VectorParam::File(PathBuf::from(path)),
    }
}

fn dump_profiles(set: &EmbeddingSet, m: usize, path: &PathBuf) -> Result<()> {
    use std::io::Write;
    let profiles = cde::build_distance_profiles(set, m)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{} {}", set.len(), m).map_err(|e| Error::io(path, e))?;
    for i in 0..set.len() {
        write!(w, "{}", set.word(i)).map_err(|e| Error::io(path, e))?;
        for v in profiles.profile(i) {
            write!(w, " {v}").map_err(|e| Error::io(path, e))?;
        }
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn transform(args: &TransformArgs) -> Result<()> {
    let in_format: Format = args.format.parse()?;
    let out_format = match &args.out_format {
        Some(f) => f.parse()?,
        None => in_format,
    };
    let set = load_embeddings(&args.input, in_format, args.max_vocab)?;

    if let Some(preset) = &args.preset {
        if preset != "paper" {
            return Err(Error::InvalidArg(format!("unknown preset '{preset}'")));
        }
        let preset: Preset = args.op.parse()?;
        let out = affine::apply_preset(&set, preset)?;
        return save_embeddings(&out, &args.out, out_format);
    }

    let vector = args.vector_file.as_deref().map(parse_vector);
    let spec = match args.op.as_str() {
        "identity" => TransformSpec::Identity,
        "translation" => TransformSpec::Translation { offset: vector },
        "translation-null" => TransformSpec::TranslationNull,
        "reflection" => TransformSpec::Reflection { normal: vector },
        "rotation" => TransformSpec::Rotation {
            u: vector,
            x: args.vector_file2.as_deref().map(parse_vector),
            theta: args.theta,
            raw_basis: args.raw_basis,
        },
        "dilation" => TransformSpec::Dilation { lambda: args.lambda },
        "homothety" => TransformSpec::Homothety {
            center: vector,
            lambda: args.lambda,
        },
        "cde" => {
            let m = args.anchors.unwrap_or(cde::DEFAULT_ANCHORS).min(set.len());
            if let Some(path) = &args.dump_profiles {
                dump_profiles(&set, m, path)?;
            }
            TransformSpec::Cde {
                anchors: Some(m),
                epochs: args.epochs,
                learning_rate: 1e-3,
                batch_size: 128,
            }
        }
        "nne" => {
            let mode: GraphMode = args
                .mode
                .as_deref()
                .ok_or_else(|| Error::InvalidArg("--mode is required for --op nne".into()))?
                .parse()?;
            if let Some(path) = &args.dump_graph {
                let graph = nne::knn_graph(
                    &set,
                    mode,
                    args.k,
                    (mode == GraphMode::Thresholded).then_some(args.t),
                )?;
                graph.dump(&set, path)?;
            }
            let mut params = nne::NneParams::new(mode, args.seed);
            params.k = args.k;
            params.t = args.t;
            let out = nne::nne_encode(&set, &params)?;
            return save_embeddings(&out, &args.out, out_format);
        }
        "random" => {
            let out = random_encode(&set, &RandomSpec { seed: args.seed, scale: args.scale })?;
            return save_embeddings(&out, &args.out, out_format);
        }
        other => return Err(Error::InvalidArg(format!("unknown op '{other}'"))),
    };
    let out = spec.apply(&set, args.seed)?;
    save_embeddings(&out, &args.out, out_format)
}

/// Returns the number of failed suite rows.
fn eval(args: &EvalArgs) -> Result<usize> {
    let format: Format = args.format.parse()?;
    let set = load_embeddings(&args.embeddings, format, args.max_vocab)?;
    let manifest = SuiteManifest::load(&args.suite)?;
    let rows = run_suite(&set, &manifest, args.seed);
    let mut out = String::from("embedding_name,task,dataset,metric,value,coverage\n");
    let mut failures = 0;
    for row in &rows {
        if let Some(err) = &row.error {
            eprintln!("{}/{}: {err}", row.task, row.dataset);
            failures += 1;
        }
        out.push_str(&format!(
            "{},{},{},{},{},{:.6}\n",
            set.name,
            row.task,
            row.dataset,
            row.metric,
            row.value.map(|v| format!("{v:.6}")).unwrap_or_default(),
            row.coverage,
        ));
    }
    std::fs::write(&args.out, out).map_err(|e| Error::io(&args.out, e))?;
    Ok(failures)
}

fn graph_stats(args: &GraphStatsArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let mut degrees = std::collections::HashMap::new();
    let mut edges = 0usize;
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let (src, tgt, w) = (parts.next(), parts.next(), parts.next());
        if src.is_none() && tgt.is_none() {
            continue;
        }
        let (src, _tgt) = match (src, tgt, w) {
            (Some(s), Some(t), Some(_)) => (s, t),
            _ => {
                return Err(Error::FormatLine {
                    path: args.input.clone(),
                    line: i + 1,
                    detail: "expected 'source_word target_word weight'".into(),
                })
            }
        };
        *degrees.entry(src.to_string()).or_insert(0usize) += 1;
        edges += 1;
    }
    let mut histogram = std::collections::BTreeMap::new();
    for &d in degrees.values() {
        *histogram.entry(d).or_insert(0usize) += 1;
    }
    println!("nodes with outgoing edges: {}", degrees.len());
    println!("edges: {edges}");
    println!("out_degree\tnodes");
    for (d, c) in histogram {
        println!("{d}\t{c}");
    }
    Ok(())
}

fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("GEOMLENS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring invalid GEOMLENS_THREADS value '{v}'"),
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match cli.command {
        Command::Transform(args) => match transform(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Eval(args) => match eval(&args) {
            Ok(0) => ExitCode::SUCCESS,
            Ok(_) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run(args) => {
            let config = match validate_config(&args.config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(1);
                }
            };
            let report = match run_pipeline(&config) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let results = config.out_dir.join("results.csv");
            let plot = config.out_dir.join("plot.csv");
            if let Err(e) = write_results_csv(&report, &results).and_then(|()| emit_plot_data(&report, &plot)) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            for (source, transform, secs) in &report.cell_times {
                eprintln!("{source} x {transform}: {secs:.2}s");
            }
            let failed = report.failed_cells();
            if failed > 0 {
                eprintln!("{failed} cell(s) failed; see {}", results.display());
                ExitCode::from(2)
            } else {
                eprintln!("wrote {}", results.display());
                ExitCode::SUCCESS
            }
        }
        Command::GraphStats(args) => match graph_stats(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
