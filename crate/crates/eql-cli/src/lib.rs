//! EQL command line and interactive shell.

mod render;
mod session;

pub use render::{render_card_csv, render_card_text, render_result, OutputMode};
pub use session::{Session, StepOutcome};

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use eql_core::eval::{EvalOptions, DEFAULT_PAGE_SIZE};
use eql_core::kgt;
use eql_core::parser;
use eql_core::revision::{self, RevisionQueue, SuggestionState, Verdict};
use eql_core::store::{Resolution, Store};

#[derive(Parser)]
#[command(
    name = "eql",
    about = "EQL knowledge-graph query engine",
    long_about = "Query a knowledge graph of qualified s : p : o statements with EQL."
)]
struct Cli {
    /// Knowledge graph file(s) to load (KGT). Defaults to $EQL_KG_PATH.
    #[arg(long = "kg", global = true)]
    kg: Vec<PathBuf>,

    /// Rows per result page.
    #[arg(long = "page-size", global = true, default_value_t = DEFAULT_PAGE_SIZE)]
    page_size: usize,

    /// Render lambda output with ASCII glyphs.
    #[arg(long = "ascii-lambda", global = true)]
    ascii_lambda: bool,

    /// Disable fuzzy name suggestions.
    #[arg(long = "no-fuzzy", global = true)]
    no_fuzzy: bool,

    /// Suggestion journal file.
    #[arg(long = "journal", global = true, default_value = "eql-suggestions.journal")]
    journal: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load KGT files and print the load report.
    Load { files: Vec<PathBuf> },
    /// Run one EQL query (inline text or -f FILE).
    Query {
        /// Query text.
        text: Option<String>,
        /// Read the query from a file.
        #[arg(short = 'f', long = "file")]
        file: Option<PathBuf>,
        /// Output mode: table, csv, or jsonl.
        #[arg(long = "mode", default_value = "table")]
        mode: String,
    },
    /// Interactive shell.
    Repl,
    /// Print the knowledge card of an entity (by name or id).
    Card {
        entity: String,
        /// Emit CSV (one row per fact, qualifiers flattened to columns).
        #[arg(long)]
        csv: bool,
    },
    /// Inspect and review the suggestion queue.
    #[command(name = "suggest-queue")]
    SuggestQueue {
        #[command(subcommand)]
        action: QueueAction,
    },
    /// Print the lambda-calculus rendering of a query.
    Lambda { text: String },
}

#[derive(Subcommand)]
enum QueueAction {
    /// List suggestions and their states.
    List {
        /// Filter: pending, approved, or rejected.
        #[arg(long)]
        state: Option<String>,
    },
    /// Approve a pending suggestion and apply it to the graph.
    Approve {
        id: u32,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// Reject a pending suggestion.
    Reject {
        id: u32,
        #[arg(long, default_value = "")]
        note: String,
    },
}

fn kg_paths(cli: &Cli) -> Vec<PathBuf> {
    if !cli.kg.is_empty() {
        return cli.kg.clone();
    }
    match std::env::var_os("EQL_KG_PATH") {
        Some(path) => vec![PathBuf::from(path)],
        None => Vec::new(),
    }
}

fn load_store(paths: &[PathBuf]) -> Result<Store> {
    let mut store = Store::new();
    for path in paths {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let report = kgt::load_graph(&mut store, &bytes)
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        for (line, msg) in &report.errors {
            eprintln!("{}:{line}: {msg}", path.display());
        }
    }
    Ok(store)
}

fn load_queue(store: &Store, path: &Path) -> Result<(RevisionQueue, Store)> {
    // replay onto a snapshot so the queue state matches the journal;
    // the returned store reflects every approved revision
    let mut snapshot = Store::new();
    let saved = kgt::save_graph(store);
    kgt::load_graph_str(&mut snapshot, &saved);
    if !path.exists() {
        return Ok((RevisionQueue::new(), snapshot));
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading journal {}", path.display()))?;
    let events = revision::parse_journal(&text)?;
    let queue = revision::replay(&mut snapshot, &events)?;
    Ok((queue, snapshot))
}

fn append_journal(path: &Path, text: &str) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening journal {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn now_epoch() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn parse_mode(mode: &str) -> Result<OutputMode> {
    match mode {
        "table" => Ok(OutputMode::Table),
        "csv" => Ok(OutputMode::Csv),
        "jsonl" => Ok(OutputMode::JsonLines),
        other => bail!("unknown output mode {other:?} (use table, csv, or jsonl)"),
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Load { files } => {
            let mut paths = kg_paths(cli);
            paths.extend(files.iter().cloned());
            if paths.is_empty() {
                bail!("no graph files given (use arguments, --kg, or EQL_KG_PATH)");
            }
            let mut store = Store::new();
            for path in &paths {
                let bytes =
                    std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                let report = kgt::load_graph(&mut store, &bytes)
                    .map_err(|e| anyhow!("{}: {e}", path.display()))?;
                println!("{}: {report}", path.display());
                for (line, msg) in &report.errors {
                    println!("  line {line}: {msg}");
                }
            }
            Ok(())
        }
        Command::Query { text, file, mode } => {
            let mode = parse_mode(mode)?;
            let text = match (text, file) {
                (Some(t), None) => t.clone(),
                (None, Some(f)) => std::fs::read_to_string(f)
                    .with_context(|| format!("reading {}", f.display()))?,
                _ => bail!("give the query inline or with -f FILE, not both"),
            };
            let store = load_store(&kg_paths(cli))?;
            let mut session = Session::new(store, session_options(cli), mode);
            let output = session.eval_and_render(&text)?;
            print!("{output}");
            if session.took_suggestion() {
                let (queue_events, ack) = session.take_suggestion_events();
                append_journal(&cli.journal, &queue_events)?;
                println!("{ack}");
            }
            Ok(())
        }
        Command::Repl => {
            let store = load_store(&kg_paths(cli))?;
            let mut session = Session::new(store, session_options(cli), OutputMode::Table);
            session.set_journal(cli.journal.clone());
            repl_loop(&mut session)
        }
        Command::Card { entity, csv } => {
            let store = load_store(&kg_paths(cli))?;
            let id = match store.resolve_name(entity) {
                Resolution::Exact(id) | Resolution::Alias(id) => id,
                Resolution::Ambiguous { default, .. } => default,
                Resolution::NotFound { .. } => {
                    // maybe it is an entity id
                    match eql_core::entity::EntityId::new(entity) {
                        Ok(id) if store.entity(&id).is_some() => id,
                        _ => bail!("unknown entity {entity:?}"),
                    }
                }
            };
            let card = store.knowledge_card(&id).map_err(|e| anyhow!("{e}"))?;
            if *csv {
                print!("{}", render_card_csv(&store, &card));
            } else {
                print!("{}", render_card_text(&store, &card));
            }
            Ok(())
        }
        Command::SuggestQueue { action } => {
            let paths = kg_paths(cli);
            let store = load_store(&paths)?;
            let (mut queue, mut live) = load_queue(&store, &cli.journal)?;
            match action {
                QueueAction::List { state } => {
                    let filter = match state.as_deref() {
                        None => None,
                        Some("pending") => Some(SuggestionState::Pending),
                        Some("approved") => Some(SuggestionState::Approved),
                        Some("rejected") => Some(SuggestionState::Rejected),
                        Some(other) => bail!("unknown state filter {other:?}"),
                    };
                    for s in queue.list(filter) {
                        println!(
                            "#{} [{}] {}",
                            s.id,
                            s.state,
                            parser::print_suggestion(&s.ast)
                        );
                        if s.duplicate_of.is_some() {
                            println!("    note: duplicates an existing statement");
                        }
                    }
                    Ok(())
                }
                QueueAction::Approve { id, note } | QueueAction::Reject { id, note } => {
                    let verdict = match action {
                        QueueAction::Approve { .. } => Verdict::Approve,
                        _ => Verdict::Reject,
                    };
                    let outcome = queue
                        .review(&mut live, *id, verdict, note)
                        .map_err(|e| anyhow!("{e}"))?;
                    let event = queue.events().last().expect("review appended an event");
                    append_journal(&cli.journal, &revision::journal_lines(event))?;
                    println!("suggestion #{id}: {outcome:?}");
                    // reviews that touch the store persist to the first graph file
                    if verdict == Verdict::Approve {
                        if let Some(path) = paths.first() {
                            std::fs::write(path, kgt::save_graph(&live))
                                .with_context(|| format!("saving {}", path.display()))?;
                            println!("graph saved to {}", path.display());
                        }
                    }
                    Ok(())
                }
            }
        }
        Command::Lambda { text } => {
            let paths = kg_paths(cli);
            let query = parser::parse_query(text).map_err(|e| anyhow!("{e}"))?;
            let rendered = if paths.is_empty() {
                eql_core::lambda::to_lambda_text(&query, None, cli.ascii_lambda)
            } else {
                let store = load_store(&paths)?;
                eql_core::lambda::to_lambda_text(&query, Some(&store), cli.ascii_lambda)
            };
            println!("{rendered}");
            Ok(())
        }
    }
}

fn session_options(cli: &Cli) -> SessionOptions {
    SessionOptions { page_size: cli.page_size, fuzzy: !cli.no_fuzzy, ascii_lambda: cli.ascii_lambda }
}

#[derive(Debug, Clone, Copy)]
pub struct SessionOptions {
    pub page_size: usize,
    pub fuzzy: bool,
    pub ascii_lambda: bool,
}

impl SessionOptions {
    pub fn eval_options(&self) -> EvalOptions<'static> {
        EvalOptions { page_size: self.page_size, fuzzy: self.fuzzy, ..EvalOptions::default() }
    }
}

fn repl_loop(session: &mut Session) -> Result<()> {
    use std::io::{BufRead, Write};
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    loop {
        write!(out, "eql> ")?;
        out.flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            break;
        }
        match session.step(line.trim_end_matches(['\n', '\r'])) {
            StepOutcome::Quit => break,
            StepOutcome::Output(text) => {
                write!(out, "{text}")?;
                out.flush()?;
            }
        }
    }
    Ok(())
}
