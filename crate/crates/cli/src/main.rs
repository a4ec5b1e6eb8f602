use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conbrowse_core::ingest::{corpus_to_json, ingest, load_sources, read_corpus};
use conbrowse_core::oracle::{check_all, check_element, OracleMode, Verdict};
use conbrowse_core::relation::FormalContext;
use conbrowse_core::snapshot::{snapshot_build, BuildOptions};
use conbrowse_core::tree::ConceptTree;
use conbrowse_core::Error;
use conbrowse_service::{serve, ServiceConfig};

/// Browse news headlines as a tree of keyword concepts.
#[derive(Debug, Parser)]
#[command(name = "conbrowse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch all configured sources into one unified corpus file.
    Fetch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the keyword tree of a corpus file.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
    },
    /// Print a tree file.
    Tree {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Serve the latest snapshot over HTTP.
    Serve {
        #[arg(long)]
        snapshot_dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Source configuration enabling `POST /v1/refresh`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        build: BuildArgs,
    },
    /// Check optimal rectangles against exhaustive search.
    Oracle {
        #[arg(long)]
        context: PathBuf,
        /// Incidence pair as `object,attribute`, by label or 0-based index.
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        element: Option<String>,
        /// Check every incidence pair.
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value_t = Mode::Rectangles)]
        mode: Mode,
    },
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long, default_value_t = 3)]
    arity: usize,
    /// Add article descriptions as extra sentence units.
    #[arg(long)]
    include_descriptions: bool,
    /// Stopword list, one word per line.
    #[arg(long)]
    stoplist: Option<PathBuf>,
}

impl BuildArgs {
    fn options(&self) -> Result<BuildOptions, Failure> {
        if self.arity < 2 {
            return Err(Failure::Usage(format!("--arity must be at least 2, got {}", self.arity)));
        }
        Ok(BuildOptions {
            arity: self.arity,
            include_descriptions: self.include_descriptions,
            stoplist_path: self.stoplist.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    /// Every rectangle inside the relation (contexts up to 5×5).
    Rectangles,
    /// Every formal concept (contexts up to 8×8).
    Concepts,
}

impl From<Mode> for OracleMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Rectangles => OracleMode::AllRectangles,
            Mode::Concepts => OracleMode::AllConcepts,
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Capacity { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Fetch { config, out } => fetch(&config, &out),
        Command::Analyze { input, out, build } => analyze(&input, &out, &build.options()?),
        Command::Tree { input, format } => tree(&input, format),
        Command::Serve {
            snapshot_dir,
            port,
            config,
            build,
        } => serve_dir(snapshot_dir, port, config, build.options()?),
        Command::Oracle {
            context,
            element,
            all,
            mode,
        } => oracle(&context, element.as_deref(), all, mode.into()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn fetch(config: &Path, out: &Path) -> Result<(), Failure> {
    let sources = load_sources(config)?;
    let ingested = ingest(&sources)?;
    let mut stdout = std::io::stdout().lock();
    let mut fetched = 0;
    for r in &ingested.reports {
        match &r.error {
            Some(err) => eprintln!("warning: source {} failed: {err}", r.name),
            None => {
                fetched += r.articles;
                if r.dropped > 0 {
                    eprintln!("warning: source {} dropped {} malformed entries", r.name, r.dropped);
                }
                let _ = writeln!(stdout, "{}: {} articles, {} dropped", r.name, r.articles, r.dropped);
            }
        }
    }
    write_file(out, &corpus_to_json(&ingested.articles))?;
    let _ = writeln!(
        stdout,
        "wrote {} articles ({} duplicate urls merged) to {}",
        ingested.articles.len(),
        fetched - ingested.articles.len(),
        out.display()
    );
    Ok(())
}

fn analyze(input: &Path, out: &Path, options: &BuildOptions) -> Result<(), Failure> {
    let corpus = read_corpus(input).map_err(|e| match e {
        Error::Storage { .. } | Error::Parse { .. } => Failure::Runtime(format!("{}: {e}", input.display())),
        other => other.into(),
    })?;
    let snapshot = snapshot_build(corpus, options)?;
    write_file(out, &snapshot.tree.to_json())?;
    println!(
        "{} articles, {} dropped, {} concepts, {} nodes",
        snapshot.stats.article_count,
        snapshot.stats.dropped_count,
        snapshot.stats.concept_count,
        snapshot.tree.nodes.len()
    );
    Ok(())
}

fn tree(input: &Path, format: Format) -> Result<(), Failure> {
    let bytes = fs::read(input).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", input.display())))?;
    let tree = ConceptTree::from_json(&bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", input.display())))?;
    let text = match format {
        Format::Text => tree.render_text(),
        Format::Json => tree.to_json(),
    };
    print!("{text}");
    Ok(())
}

fn serve_dir(dir: PathBuf, port: u16, config: Option<PathBuf>, build: BuildOptions) -> Result<(), Failure> {
    if !dir.is_dir() {
        return Err(Failure::Usage(format!("snapshot directory {} does not exist", dir.display())));
    }
    let mut service = ServiceConfig::new(dir, port);
    service.sources = config.as_deref().map(load_sources).transpose()?;
    service.build = build;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Runtime(e.to_string()))?;
    runtime.block_on(async {
        let handle = serve(service).await.map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("listening on http://{}", handle.local_addr());
        handle.wait().await.map_err(|e| Failure::Runtime(e.to_string()))
    })
}

fn resolve(labels: &[String], token: &str, what: &str) -> Result<usize, Failure> {
    let token = token.trim();
    labels
        .iter()
        .position(|l| l == token)
        .or_else(|| token.parse::<usize>().ok().filter(|&i| i < labels.len()))
        .ok_or_else(|| Failure::Usage(format!("unknown {what} {token:?}")))
}

fn parse_element(context: &FormalContext, pair: &str) -> Result<(usize, usize), Failure> {
    let (o, a) = pair
        .split_once(',')
        .ok_or_else(|| Failure::Usage(format!("--element expects object,attribute, got {pair:?}")))?;
    Ok((resolve(context.objects(), o, "object")?, resolve(context.attributes(), a, "attribute")?))
}

fn report(context: &FormalContext, v: &Verdict) -> String {
    let element = format!("{},{}", context.objects()[v.element.0], context.attributes()[v.element.1]);
    if v.agrees() {
        format!(
            "{element}: agrees {} gain {} ({} maximizer{})",
            v.actual.display(context),
            v.max_gain,
            v.maximizers,
            if v.maximizers == 1 { "" } else { "s" }
        )
    } else {
        format!(
            "{element}: DISAGREES expected {} got {} (max gain {})",
            v.expected.display(context),
            v.actual.display(context),
            v.max_gain
        )
    }
}

fn oracle(path: &Path, element: Option<&str>, all: bool, mode: OracleMode) -> Result<(), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let context =
        FormalContext::from_json(&bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    mode.check_bounds(&context)?;
    let verdicts = if all {
        check_all(&context, mode)?
    } else {
        let pair = element.expect("clap requires --element without --all");
        vec![check_element(&context, parse_element(&context, pair)?, mode)?]
    };
    let agreeing = verdicts.iter().filter(|v| v.agrees()).count();
    for v in &verdicts {
        println!("{}", report(&context, v));
    }
    println!("{agreeing}/{} agree ({mode})", verdicts.len());
    if agreeing == verdicts.len() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} element(s) disagree", verdicts.len() - agreeing)))
    }
}
