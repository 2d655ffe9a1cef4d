use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use embed_audit::audit::{run_audit, AuditConfig, ReportFormat, DEFAULT_TOP_K};
use embed_audit::embedding_io::{load_embeddings, save_embeddings};
use embed_audit::report::{write_report, AuditReport};
use embed_audit::resampling::{
    BootstrapConfig, DEFAULT_CONFIDENCE, DEFAULT_NULL_TRIALS, DEFAULT_RESAMPLES,
};
use embed_audit::taxonomy::{expand_prompts, load_taxonomy};
use embed_audit::tools::{
    compare_reports, plot_data, render_comparison, validate_paths, FileStatus, PlotKind,
};
use embed_audit::{Error, Result};

/// Caps the number of worker threads used for resampling.
const THREADS_ENV: &str = "EMBED_AUDIT_THREADS";

#[derive(Parser)]
#[command(
    name = "embed-audit",
    version,
    about = "Group association audits for image/text embedding galleries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full audit and write the report files.
    Run(RunArgs),
    /// Check embedding files, taxonomies or reports and summarize them.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Emit plot-ready CSV from a JSON report.
    Plotdata {
        #[arg(long)]
        report: PathBuf,
        /// `category` or `topk`.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare several reports over the same taxonomy.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the expanded prompts of a taxonomy as CSV.
    Prompts {
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a CSV gallery into a manifest + binary payload pair.
    Convert {
        #[arg(long)]
        input: PathBuf,
        /// Manifest path; the payload is written next to it with a `.bin` extension.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model_id: Option<String>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    texts: PathBuf,
    #[arg(long)]
    taxonomy: PathBuf,
    /// Group whose association counts as positive.
    #[arg(long)]
    group_a: String,
    #[arg(long)]
    group_b: String,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    bootstrap: usize,
    #[arg(long, default_value_t = DEFAULT_NULL_TRIALS)]
    null_trials: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json")]
    format: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// The single machine-readable line printed on failure.
fn error_line(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Validate { paths } => Ok(cmd_validate(&paths)),
        Command::Plotdata { report, kind, out } => {
            let kind: PlotKind = kind.parse()?;
            let csv = plot_data(&AuditReport::load(&report)?, kind)?;
            emit(&csv, out.as_deref())
        }
        Command::Compare { reports, out } => cmd_compare(&reports, out.as_deref()),
        Command::Prompts { taxonomy, out } => {
            let taxonomy = load_taxonomy(&taxonomy)?;
            let mut csv = String::from("statement_id,template_index,prompt\n");
            for p in expand_prompts(&taxonomy) {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    quote(&p.statement_id),
                    p.template_index,
                    quote(&p.text)
                ));
            }
            emit(&csv, out.as_deref())
        }
        Command::Convert {
            input,
            out,
            model_id,
        } => {
            let (matrix, mut manifest) = load_embeddings(&input)?;
            if let Some(id) = model_id {
                manifest.model_id = id;
            }
            save_embeddings(&matrix, &manifest, &out)?;
            Ok(0)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let formats = args
        .format
        .iter()
        .map(|f| f.parse::<ReportFormat>())
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = AuditConfig::new(
        args.images,
        args.texts,
        args.taxonomy,
        args.group_a,
        args.group_b,
    );
    cfg.bootstrap = BootstrapConfig {
        resamples: args.bootstrap,
        confidence: args.confidence,
        seed: args.seed,
    };
    cfg.null_trials = args.null_trials;
    cfg.top_k = args.top_k;
    cfg.output_dir = args.out;
    cfg.formats = formats;

    let pool = thread_pool(std::env::var(THREADS_ENV).ok().as_deref())?;
    let report = pool.install(|| run_audit(&cfg))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for path in write_report(&report, &cfg.output_dir, &cfg.formats)? {
        println!("{}", path.display());
    }
    Ok(0)
}

fn thread_pool(threads: Option<&str>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(value) = threads {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "{THREADS_ENV} must be a positive integer, got {value:?}"
                ))
            })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker threads: {e}")))
}

fn cmd_validate(paths: &[PathBuf]) -> u8 {
    let checks = validate_paths(paths);
    for c in &checks {
        println!("{}", c.render());
    }
    if checks.iter().any(|c| c.status == FileStatus::Error) {
        2
    } else {
        0
    }
}

fn cmd_compare(paths: &[PathBuf], out: Option<&Path>) -> Result<u8> {
    let mut reports = Vec::with_capacity(paths.len());
    for p in paths {
        let report = AuditReport::load(p)?;
        reports.push((report.inputs.image_model_id.clone(), report));
    }
    // Disambiguate reports produced by the same model.
    let duplicated: Vec<bool> = reports
        .iter()
        .map(|(name, _)| reports.iter().filter(|(n, _)| n == name).count() > 1)
        .collect();
    for ((entry, path), dup) in reports.iter_mut().zip(paths).zip(duplicated) {
        if dup {
            entry.0 = format!("{} ({})", entry.0, path.display());
        }
    }
    let rows = compare_reports(&reports)?;
    let first = &reports[0].1.config;
    emit(
        &render_comparison(&rows, &first.group_a, &first.group_b),
        out,
    )
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<u8> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })?,
        None => print!("{text}"),
    }
    Ok(0)
}
