//! `pql`: store, check, index and query process models.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use pql::config::Config;
use pql::index::{index_stored_model, run_bot, BotOptions, RelationIndex};
use pql::query::{dump_parse_tree, evaluate, parse, Attribute, EvalOptions, Location, Query};
use pql::repository::{IndexStatus, RepoError, Store, STORE_VERSION};
use pql::soundness::check_soundness;
use pql::statespace::{AnalysisError, Limits};
use pql::unfolding::build_prefix;

#[derive(Parser)]
#[command(
    name = "pql",
    version,
    about = "Behavioural queries over a repository of process models"
)]
struct Cli {
    /// Configuration file (key=value lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store directory, overriding store.path
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Store a PNML file, or every *.pnml file of a directory
    Store {
        #[arg(long)]
        pnml: PathBuf,
        /// Model id; defaults to the file name
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value = "/")]
        location: String,
        /// Extra attribute, KEY=VALUE; repeatable
        #[arg(long = "attr", value_parser = parse_attr)]
        attrs: Vec<(String, String)>,
    },
    /// Check that a stored model is a sound workflow system
    Check {
        #[arg(long)]
        id: String,
    },
    /// Print the complete prefix of a stored model's unfolding
    Prefix {
        #[arg(long)]
        id: String,
    },
    /// Index a stored model now
    Index {
        #[arg(long)]
        id: String,
    },
    /// Delete a model and its index
    Delete {
        #[arg(long)]
        id: String,
    },
    /// List stored models and their index status
    List,
    /// Show the parse tree of a query file
    Parse {
        #[arg(long)]
        pql: PathBuf,
    },
    /// Execute a query file
    Query {
        #[arg(long)]
        pql: PathBuf,
        /// Ignore the index and compute every predicate afresh
        #[arg(long)]
        no_index: bool,
    },
    /// Delete every stored model and index
    Reset,
    /// Print tool and store format versions
    Version,
    /// Run an indexing bot
    Bot {
        #[arg(short, long, default_value = "bot")]
        name: String,
        /// Seconds to sleep when there are no pending jobs
        #[arg(short, long)]
        sleep: Option<f64>,
        /// Maximum seconds to spend indexing one model
        #[arg(short, long)]
        index: Option<f64>,
        /// Stop after this many consecutive rounds without a job
        #[arg(long)]
        idle_rounds: Option<usize>,
    },
    /// Time template queries over a generated collection
    Bench {
        /// Template category: 1, 2, 3 or all
        #[arg(long, default_value = "all")]
        templates: String,
        #[arg(long, default_value_t = 16)]
        models: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Read queries from standard input, each ending with `;`
    Repl,
}

fn parse_attr(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))
}

enum Failure {
    /// Unsound model, parse error and the like.
    Domain(String),
    Store(String),
}

impl From<RepoError> for Failure {
    fn from(e: RepoError) -> Self {
        match e {
            RepoError::UnknownModel(_)
            | RepoError::Duplicate(_)
            | RepoError::InvalidId(_)
            | RepoError::InvalidLocation(_)
            | RepoError::Pnml { .. } => Failure::Domain(e.to_string()),
            _ => Failure::Store(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = if matches!(cli.command, Command::Bot { .. }) {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("PQL_LOG")
        .format_target(false)
        .init();
    let mut config = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(s) = cli.store {
        config.store_path = s;
    }
    match run(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Store(m)) => {
            eprintln!("store error: {m}");
            ExitCode::from(3)
        }
    }
}

fn limits(config: &Config) -> Limits {
    Limits::states(config.state_budget)
}

fn run(command: Command, config: &Config) -> Outcome {
    if let Command::Version = command {
        println!("pql {} ({STORE_VERSION})", env!("CARGO_PKG_VERSION"));
        return Ok(());
    }
    if let Command::Bench {
        templates,
        models,
        threads,
        seed,
    } = command
    {
        return bench(&templates, models, threads, seed, config);
    }
    let store = Store::open(&config.store_path)?;
    match command {
        Command::Store {
            pnml,
            id,
            location,
            attrs,
        } => store_models(&store, &pnml, id, &location, attrs),
        Command::Check { id } => check(&store, &id, config),
        Command::Prefix { id } => {
            let repo = store.load()?;
            let m = repo
                .get(&id)
                .ok_or_else(|| Failure::Domain(format!("unknown model {id:?}")))?;
            let prefix = build_prefix(&m.net, &limits(config))
                .map_err(|e| Failure::Domain(format!("{id}: {e}")))?;
            print!("{}", prefix.dump());
            Ok(())
        }
        Command::Index { id } => index(&store, &id, config),
        Command::Delete { id } => {
            store.delete(&id)?;
            println!("Deleted model {id}");
            Ok(())
        }
        Command::List => {
            for m in store.load()?.models() {
                println!("{}\t{}\t{}", m.id, m.location, m.status.label());
            }
            Ok(())
        }
        Command::Parse { pql } => {
            let q = parse_file(&pql)?;
            println!("PQL query:  {q}");
            print!("{}", dump_parse_tree(&q));
            Ok(())
        }
        Command::Query { pql, no_index } => {
            let q = parse_file(&pql)?;
            let text = query_output(&store, &q, config, !no_index)?;
            print!("{text}");
            Ok(())
        }
        Command::Reset => {
            store.reset()?;
            println!("Store reset");
            Ok(())
        }
        Command::Bot {
            name,
            sleep,
            index,
            idle_rounds,
        } => {
            let opts = BotOptions {
                sleep: Duration::from_secs_f64(sleep.unwrap_or(config.bot_sleep_seconds)),
                max_index: Duration::from_secs_f64(index.unwrap_or(config.max_index_seconds)),
                thresholds: config.indexed_thresholds.clone(),
                state_budget: config.state_budget,
                max_idle_rounds: idle_rounds,
                ..BotOptions::new(name)
            };
            let report = run_bot(&store, &opts)?;
            println!(
                "Indexed: {}; cannot index: {}",
                report.indexed.len(),
                report.cannot_index.len()
            );
            Ok(())
        }
        Command::Repl => repl(&store, config),
        Command::Version | Command::Bench { .. } => unreachable!("handled above"),
    }
}

fn store_models(
    store: &Store,
    path: &Path,
    id: Option<String>,
    location: &str,
    attrs: Vec<(String, String)>,
) -> Outcome {
    if path.is_dir() {
        if id.is_some() {
            return Err(Failure::Domain(
                "--id cannot be used with a directory".into(),
            ));
        }
        let mut failed = false;
        for (id, result) in store.store_dir(path, location)? {
            match result {
                Ok(()) => println!("Stored model {id}"),
                Err(e) => {
                    failed = true;
                    eprintln!("Could not store {id}: {e}");
                }
            }
        }
        return if failed {
            Err(Failure::Domain("some models were not stored".into()))
        } else {
            Ok(())
        };
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Domain(format!("cannot read {}: {e}", path.display())))?;
    let id = match id {
        Some(id) => id,
        None => path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string(),
    };
    let attrs: BTreeMap<String, String> = attrs.into_iter().collect();
    for w in store.store_model(&id, &text, location, attrs)? {
        eprintln!("warning: {w}");
    }
    println!("Stored model {id}");
    Ok(())
}

fn check(store: &Store, id: &str, config: &Config) -> Outcome {
    let repo = store.load()?;
    let m = repo
        .get(id)
        .ok_or_else(|| Failure::Domain(format!("unknown model {id:?}")))?;
    if let Some(v) = &m.workflow_violation {
        return Err(Failure::Domain(format!(
            "{id} is not a workflow system: {v}"
        )));
    }
    match check_soundness(&m.net, &limits(config)) {
        Ok(r) if r.sound => {
            println!(
                "{id} is a sound workflow system ({} reachable markings)",
                r.states
            );
            Ok(())
        }
        Ok(r) => {
            println!("{id} is not sound");
            println!("  option to complete: {}", r.option_to_complete);
            println!("  proper completion:  {}", r.proper_completion);
            let dead: Vec<&str> = r.dead_transitions.iter().map(String::as_str).collect();
            println!("  dead transitions:   [{}]", dead.join(", "));
            Err(Failure::Domain(format!("{id} is not sound")))
        }
        Err(AnalysisError::Unbounded { witness }) => {
            println!(
                "{id} is not sound: unbounded after firing [{}]",
                witness.join(", ")
            );
            Err(Failure::Domain(format!("{id} is not sound")))
        }
        Err(e) => Err(Failure::Domain(format!(
            "soundness of {id} could not be decided: {e}"
        ))),
    }
}

fn index(store: &Store, id: &str, config: &Config) -> Outcome {
    let repo = store.load()?;
    let m = repo
        .get(id)
        .ok_or_else(|| Failure::Domain(format!("unknown model {id:?}")))?;
    let budget = Duration::from_secs_f64(config.max_index_seconds);
    let status = index_stored_model(
        store,
        &repo,
        m,
        &config.indexed_thresholds,
        budget,
        config.state_budget,
    )?;
    store.set_status(id, status.clone())?;
    match status {
        IndexStatus::CannotIndex { reason } => {
            Err(Failure::Domain(format!("{id} cannot be indexed: {reason}")))
        }
        other => {
            println!("{id}: {}", other.label());
            Ok(())
        }
    }
}

fn parse_file(path: &Path) -> Result<Query, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Domain(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn quoted_list<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    let quoted: Vec<String> = items.into_iter().map(|s| quote(s)).collect();
    format!("[{}]", quoted.join(","))
}

/// Double-quoted with `"` and `\` escaped.
fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn query_output(
    store: &Store,
    q: &Query,
    config: &Config,
    use_index: bool,
) -> Result<String, Failure> {
    let repo = store.load()?;
    let index = if use_index {
        Some(RelationIndex::load(store)?)
    } else {
        None
    };
    let opts = EvalOptions {
        default_threshold: config.default_threshold,
        threads: config.query_threads,
        use_index,
        limits: limits(config),
    };
    let r =
        evaluate(q, &repo, index.as_ref(), &opts).map_err(|e| Failure::Domain(e.to_string()))?;
    let mut out = String::new();
    out.push_str(&format!(
        "PQL query:  {}\n",
        q.to_string().replace('\n', " ")
    ));
    let atts: Vec<String> = q
        .atts
        .iter()
        .map(|a| match a {
            Attribute::Universe => "UNIVERSE".to_string(),
            Attribute::Name(n) => quote(n),
        })
        .collect();
    let locs: Vec<String> = q
        .locs
        .iter()
        .map(|l| match l {
            Location::Universe => "UNIVERSE".to_string(),
            Location::Path(p) => quote(p),
        })
        .collect();
    out.push_str(&format!("Attributes: [{}]\n", atts.join(",")));
    out.push_str(&format!("Locations:  [{}]\n", locs.join(",")));
    for (task, resolved) in &r.task_resolutions {
        out.push_str(&format!(
            "Task:       {task} -> {}\n",
            quoted_list(resolved.labels())
        ));
    }
    for (id, e) in &r.errors {
        out.push_str(&format!("Error:      {id}: {e}\n"));
    }
    out.push_str(&format!("Result:     [{}]\n", r.model_ids().join(", ")));
    for row in &r.rows {
        let cells: Vec<String> = row
            .attributes
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        if !cells.is_empty() {
            out.push_str(&format!("  {}\n", cells.join("\t")));
        }
    }
    Ok(out)
}

fn repl(store: &Store, config: &Config) -> Outcome {
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    let mut buffer = String::new();
    let prompt = |out: &mut std::io::Stdout, more: bool| {
        let _ = write!(out, "{}", if more { "...> " } else { "pql> " });
        let _ = out.flush();
    };
    prompt(&mut stdout, false);
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| Failure::Store(format!("stdin: {e}")))?;
        if buffer.is_empty() && matches!(line.trim(), ".quit" | ".exit") {
            break;
        }
        buffer.push_str(&line);
        buffer.push('\n');
        let complete = buffer.trim_end().ends_with(';') && buffer.contains("SELECT");
        if complete {
            match parse(&buffer) {
                Ok(q) => match query_output(store, &q, config, true) {
                    Ok(text) => print!("{text}"),
                    Err(Failure::Domain(m) | Failure::Store(m)) => println!("error: {m}"),
                },
                Err(e) => println!("error: {e}"),
            }
            buffer.clear();
        }
        prompt(&mut stdout, !buffer.trim().is_empty());
    }
    println!();
    Ok(())
}

fn bench(templates: &str, models: usize, threads: usize, seed: u64, config: &Config) -> Outcome {
    let category = match templates {
        "all" => None,
        "1" | "2" | "3" => templates.parse().ok(),
        other => {
            return Err(Failure::Domain(format!(
                "unknown template category {other:?}; expected 1, 2, 3 or all"
            )))
        }
    };
    let cfg = pql::bench::BenchConfig {
        category,
        models,
        threads: threads.max(1),
        seed,
        thresholds: config.indexed_thresholds.clone(),
        ..Default::default()
    };
    let report = pql::bench::run(&cfg).map_err(|e| Failure::Domain(e.to_string()))?;
    print!("{}", report.render());
    Ok(())
}
