//! `fairlint`: validate templates, evaluate record batches, apply repairs
//! and serve the review API.
//!
//! Exit codes: 0 success with every record passing, 1 when at least one
//! record fails (or a template has error diagnostics), 2 for usage, config
//! and parse errors, 3 for I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairlint_core::record::ManifestError;
use fairlint_core::repair::{repair_records, MANIFEST_FILE};
use fairlint_core::report::render_report;
use fairlint_core::template::{has_errors, Severity};
use fairlint_core::terms::load_vocabulary;
use fairlint_core::*;
use fairlint_service::{AppState, ServiceConfig};

#[derive(Parser)]
#[command(name = "fairlint", version, about = "Metadata template validation, evaluation and repair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a template and report diagnostics.
    ValidateTemplate {
        #[command(flatten)]
        template: TemplateArgs,
    },
    /// Turn a reporting checklist into a template document.
    Author {
        /// Checklist file.
        checklist: PathBuf,
        #[arg(long, default_value = "urn:template:authored")]
        id: String,
        #[arg(long, default_value = "")]
        name: String,
        #[arg(long, default_value = "")]
        description: String,
        /// Write the template here instead of standard output.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a batch of records against a template.
    Evaluate {
        #[command(flatten)]
        template: TemplateArgs,
        #[command(flatten)]
        records: RecordArgs,
        /// Write the report here.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Format of the `--out` file: json, text or html.
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        /// Evaluation threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Apply repairs and write cleaned records with provenance sidecars.
    Repair {
        #[command(flatten)]
        template: TemplateArgs,
        #[command(flatten)]
        records: RecordArgs,
        /// Use the issues of an earlier evaluation instead of re-evaluating.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "review")]
        policy: Policy,
        /// Reviewer decisions: a JSON list of {issue_id, action, value?}.
        #[arg(long)]
        decisions: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Re-render a JSON report as text or html.
    Report {
        /// JSON report file.
        report: PathBuf,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Serve the job API and, optionally, the review UI bundle.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        /// Vocabulary files offered to jobs, as `PATH` or `ID=PATH`.
        #[arg(short = 'v', long = "vocab")]
        vocabs: Vec<String>,
        /// Base directory for relative manifest locators.
        #[arg(long)]
        records_base: Option<PathBuf>,
        /// Root directory for repaired output.
        #[arg(long, default_value = "fairlint-output")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Args)]
struct TemplateArgs {
    /// Template document.
    #[arg(short, long)]
    template: PathBuf,
    /// Vocabulary files, as `PATH` (id is the file stem) or `ID=PATH`.
    #[arg(short = 'v', long = "vocab")]
    vocabs: Vec<String>,
}

#[derive(Args)]
struct RecordArgs {
    /// Directory of `*.json` records.
    #[arg(short = 'r', long = "records", conflicts_with_all = ["manifest", "dir"])]
    records: Option<PathBuf>,
    /// Manifest of `ref<TAB>locator` lines.
    #[arg(long, conflicts_with = "dir")]
    manifest: Option<PathBuf>,
    /// Records directory, as an alternative to `-r`.
    dir: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ValidateTemplate { template } => validate(&template),
        Command::Author { checklist, id, name, description, out } => {
            author(&checklist, AuthorOptions { id, name, description }, out.as_deref())
        }
        Command::Evaluate { template, records, out, format, jobs } => {
            evaluate(&template, &records, out.as_deref(), format, jobs)
        }
        Command::Repair { template, records, report, policy, decisions, out_dir, jobs } => {
            repair(&template, &records, report.as_deref(), policy, decisions.as_deref(), &out_dir, jobs)
        }
        Command::Report { report, format, out } => rerender(&report, format, out.as_deref()),
        Command::Serve { port, host, ui_dir, vocabs, records_base, out_dir, jobs } => {
            serve(&host, port, ui_dir, &vocabs, records_base, out_dir, jobs)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn load_template(path: &Path) -> Result<Template, Failure> {
    parse_template(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_vocabularies(args: &[String]) -> Result<Vec<Vocabulary>, Failure> {
    let mut out = Vec::new();
    for arg in args {
        let (id, path) = match arg.split_once('=') {
            Some((id, path)) => (id.to_owned(), PathBuf::from(path)),
            None => {
                let path = PathBuf::from(arg);
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, path)
            }
        };
        let (v, diagnostics) =
            load_vocabulary(&id, &read(&path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        for d in diagnostics {
            eprintln!("warning: {d}");
        }
        out.push(v);
    }
    Ok(out)
}

/// Loads the template and vocabularies and checks they fit together.
fn load_inputs(args: &TemplateArgs) -> Result<(Template, TermIndex), Failure> {
    let template = load_template(&args.template)?;
    let vocabularies = load_vocabularies(&args.vocabs)?;
    let known: Vec<String> = vocabularies.iter().map(|v| v.id().to_owned()).collect();
    let diagnostics = validate_template(&template, &known);
    for d in &diagnostics {
        eprintln!("{d}");
    }
    if has_errors(&diagnostics) {
        return Err(Failure::usage(format!("{}: template has error diagnostics", args.template.display())));
    }
    let index = TermIndex::new(vocabularies).map_err(|e| Failure::usage(e.to_string()))?;
    if let Err(errors) = Evaluator::new(&template, &index) {
        let list: Vec<String> = errors.iter().map(ToString::to_string).collect();
        return Err(Failure::usage(list.join("; ")));
    }
    Ok((template, index))
}

fn validate(args: &TemplateArgs) -> Outcome {
    let template = load_template(&args.template)?;
    // Without vocabularies only the template's own structure is checked.
    let known: Vec<String> = if args.vocabs.is_empty() {
        template.vocabulary_refs().into_iter().collect()
    } else {
        let vocabularies = load_vocabularies(&args.vocabs)?;
        let known = vocabularies.iter().map(|v| v.id().to_owned()).collect();
        let index = TermIndex::new(vocabularies).map_err(|e| Failure::usage(e.to_string()))?;
        if let Err(errors) = Evaluator::new(&template, &index) {
            for e in &errors {
                eprintln!("error: {e}");
            }
            return Ok(1);
        }
        known
    };
    let diagnostics = validate_template(&template, &known);
    for d in &diagnostics {
        eprintln!("{d}");
    }
    let fields = template.flatten_fields();
    let required = fields.iter().filter(|f| f.spec.required).count();
    let errors = diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
    println!(
        "{}: {} fields ({} required), {} errors, {} warnings",
        args.template.display(),
        fields.len(),
        required,
        errors,
        diagnostics.len() - errors
    );
    Ok(u8::from(errors > 0))
}

fn author(checklist: &Path, options: AuthorOptions, out: Option<&Path>) -> Outcome {
    let template =
        author_template(&read(checklist)?, &options).map_err(|e| Failure::usage(format!("{}: {e}", checklist.display())))?;
    let doc = emit_template(&template);
    match out {
        Some(path) => {
            write(path, &doc)?;
            println!("wrote {} ({} fields)", path.display(), template.flatten_fields().len());
        }
        None => print!("{doc}"),
    }
    Ok(0)
}

fn record_source(args: &RecordArgs) -> Result<RecordManifest, Failure> {
    let path = args
        .records
        .as_ref()
        .or(args.manifest.as_ref())
        .or(args.dir.as_ref())
        .ok_or_else(|| Failure::usage("no records given: use -r DIR, --manifest FILE or a directory argument"))?;
    if args.records.is_some() && !path.is_dir() {
        return Err(Failure::io(format!("{}: not a directory", path.display())));
    }
    RecordManifest::load(path).map_err(|e| match e {
        ManifestError::Io { .. } => Failure::io(e.to_string()),
        other => Failure::usage(format!("{}: {other}", path.display())),
    })
}

fn fetch_records(args: &RecordArgs) -> Result<Vec<Result<MetadataRecord, FetchFailure>>, Failure> {
    let manifest = record_source(args)?;
    let items = resolve_manifest(&manifest, &FileFetcher::new());
    for failure in items.iter().filter_map(|r| r.as_ref().err()) {
        eprintln!("warning: {failure}");
    }
    Ok(items)
}

fn evaluate(args: &TemplateArgs, records: &RecordArgs, out: Option<&Path>, format: ReportFormat, jobs: usize) -> Outcome {
    let (template, index) = load_inputs(args)?;
    let items = fetch_records(records)?;
    let evaluator = Evaluator::new(&template, &index).expect("checked in load_inputs");
    let report = evaluator.evaluate_fetched(&items, jobs);
    if let Some(path) = out {
        write(path, &render_report(&report, format))?;
    }
    print!("{}", render_report(&report, ReportFormat::Text));
    Ok(u8::from(report.summary.pass_count < report.summary.record_count))
}

fn repair(
    args: &TemplateArgs,
    records: &RecordArgs,
    report_path: Option<&Path>,
    policy: Policy,
    decisions: Option<&Path>,
    out_dir: &Path,
    jobs: usize,
) -> Outcome {
    let (template, index) = load_inputs(args)?;
    let items = fetch_records(records)?;
    let evaluator = Evaluator::new(&template, &index).expect("checked in load_inputs");
    let report = match report_path {
        Some(path) => parse_report(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        None => evaluator.evaluate_fetched(&items, jobs),
    };
    let mut session = RepairSession::from_report(&report, policy);
    if let Some(path) = decisions {
        let list = parse_decisions(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        session.decide(&list, "cli", &evaluator).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }

    let fetched: Vec<MetadataRecord> = items.into_iter().filter_map(Result::ok).collect();
    let set = repair_records(&fetched, &session).map_err(|e| Failure::usage(e.to_string()))?;
    let outcome = persist_output(&set, &template, out_dir);
    for (record, applied) in set.records.iter().zip(&set.provenance) {
        println!("{}\t{} repairs applied", record.record_ref, applied.len());
    }
    println!("wrote {} records to {} ({})", outcome.written.len(), out_dir.display(), MANIFEST_FILE);
    if outcome.failures.is_empty() {
        Ok(0)
    } else {
        for f in &outcome.failures {
            eprintln!("error: {f}");
        }
        Ok(3)
    }
}

fn rerender(path: &Path, format: ReportFormat, out: Option<&Path>) -> Outcome {
    let report = parse_report(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let text = render_report(&report, format);
    match out {
        Some(dest) => write(dest, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn serve(
    host: &str,
    port: u16,
    ui_dir: Option<PathBuf>,
    vocabs: &[String],
    record_base: Option<PathBuf>,
    output_root: PathBuf,
    jobs: usize,
) -> Outcome {
    let vocabularies = load_vocabularies(vocabs)?;
    let state = AppState::new(ServiceConfig { vocabularies, record_base, output_root, ui_dir, jobs });
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io(e.to_string()))?;
    runtime.block_on(async {
        let listener =
            tokio::net::TcpListener::bind((host, port)).await.map_err(|e| Failure::io(format!("{host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure::io(e.to_string()))?;
        println!("listening on http://{addr}");
        fairlint_service::serve(listener, state).await.map_err(|e| Failure::io(e.to_string()))?;
        Ok(0)
    })
}
