//! Command-line commands.
//!
//! Exit codes: 0 success, 1 domain diagnostics (model, compile, query or
//! check findings), 2 environment failures (I/O, unparsable documents or
//! data, ports).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cim_core::fixtures::{olympic, random::random_instance, Dataset};
use cim_core::model::{validate_cdl, validate_mdl, validate_sdl, Diagnostic};
use cim_core::query::{parse_cql, CqlQuery, QueryOptions};
use cim_core::warehouse::validate_and_compile;
use cim_core::xml::{serialize_cdl, serialize_mdl, serialize_sdl};
use cim_core::{Relation, Warehouse};
use clap::{Parser, Subcommand, ValueEnum};

use crate::report::render_check;
use crate::service::{router, AppState};
use crate::workspace::{LoadError, Manifest, Workspace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_ENVIRONMENT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cim",
    version,
    about = "Conceptual integration models over an embedded warehouse"
)]
pub struct Cli {
    /// Workspace directory or manifest file.
    #[arg(short, long, global = true, default_value = ".")]
    pub workspace: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the three models and their cross references.
    Validate,
    /// Compile the mapping into views.
    Compile {
        /// Write the view set as JSON to this path (`-` for stdout).
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Answer a CQL query, given as text or as its JSON encoding.
    Query {
        /// The query, or a path when `--file` is set.
        query: String,
        #[arg(long)]
        file: bool,
        #[arg(long, value_enum, default_value_t = QueryFormat::Table)]
        format: QueryFormat,
        /// Group by the bottom key of every dimension the query leaves out.
        #[arg(long)]
        keep_unmentioned: bool,
    },
    /// Check foreign keys, exclusivity, cardinalities and summarizability.
    Check {
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Write a workspace with generated models and data.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = olympic::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = olympic::DEFAULT_SCALE)]
        scale: usize,
        /// Generate a random instance from `--seed` instead of the Olympic models.
        #[arg(long)]
        random: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QueryFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn render(relation: &Relation, format: QueryFormat) -> String {
    match format {
        QueryFormat::Table => format!("{relation}\n"),
        QueryFormat::Csv => relation.to_csv(),
        QueryFormat::Json => format!("{}\n", relation.to_json()),
    }
}

fn print_diagnostics(err: &mut dyn Write, diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        let _ = writeln!(err, "{d}");
    }
}

fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}

fn fail(err: &mut dyn Write, message: impl std::fmt::Display, code: i32) -> i32 {
    let _ = writeln!(err, "error: {message}");
    code
}

fn load(workspace: &Path, err: &mut dyn Write) -> Result<Warehouse, i32> {
    let ws = Workspace::open(workspace).map_err(|e| fail(err, e, EXIT_ENVIRONMENT))?;
    ws.load_warehouse().map_err(|e| match e {
        LoadError::Workspace(e) => fail(err, e, EXIT_ENVIRONMENT),
        LoadError::Invalid(cim_core::warehouse::WarehouseError::Invalid(diagnostics)) => {
            print_diagnostics(err, &diagnostics);
            EXIT_DIAGNOSTICS
        }
        LoadError::Invalid(e) => fail(err, e, EXIT_ENVIRONMENT),
    })
}

/// Runs one command, writing results to `out` and diagnostics to `err`, and
/// returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let ws = cli.workspace.as_path();
    match cli.command {
        Command::Validate => validate(ws, err),
        Command::Compile { emit } => compile(ws, emit.as_deref(), out, err),
        Command::Query {
            query,
            file,
            format,
            keep_unmentioned,
        } => {
            let text = if file {
                match std::fs::read_to_string(&query) {
                    Ok(t) => t,
                    Err(e) => return fail(err, format_args!("{query}: {e}"), EXIT_ENVIRONMENT),
                }
            } else {
                query
            };
            run_query(ws, &text, format, QueryOptions { keep_unmentioned }, out, err)
        }
        Command::Check { format } => check(ws, format, out, err),
        Command::Serve { port, host } => serve(ws, &host, port, out, err),
        Command::Generate {
            out: dir,
            seed,
            scale,
            random,
        } => generate(&dir, seed, scale, random, out, err),
    }
}

fn validate(ws: &Path, err: &mut dyn Write) -> i32 {
    let models = Workspace::open(ws).and_then(|w| w.load_models());
    let (cdl, sdl, mdl) = match models {
        Ok(m) => m,
        Err(e) => return fail(err, e, EXIT_ENVIRONMENT),
    };
    let mut diagnostics = validate_cdl(&cdl);
    diagnostics.extend(validate_sdl(&sdl));
    diagnostics.extend(validate_mdl(&cdl, &sdl, &mdl));
    print_diagnostics(err, &diagnostics);
    if has_errors(&diagnostics) {
        EXIT_DIAGNOSTICS
    } else {
        EXIT_OK
    }
}

fn compile(ws: &Path, emit: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let models = Workspace::open(ws).and_then(|w| w.load_models());
    let (cdl, sdl, mdl) = match models {
        Ok(m) => m,
        Err(e) => return fail(err, e, EXIT_ENVIRONMENT),
    };
    let (views, diagnostics) = validate_and_compile(&cdl, &sdl, &mdl);
    print_diagnostics(err, &diagnostics);
    if has_errors(&diagnostics) {
        return EXIT_DIAGNOSTICS;
    }
    let document = format!("{:#}\n", views.to_json());
    match emit {
        Some(p) if p == Path::new("-") => {
            let _ = out.write_all(document.as_bytes());
        }
        Some(p) => {
            if let Err(e) = std::fs::write(p, document) {
                return fail(err, format_args!("{}: {e}", p.display()), EXIT_ENVIRONMENT);
            }
        }
        None => {}
    }
    if emit.is_none_or(|p| p != Path::new("-")) {
        let _ = writeln!(out, "compiled {} view(s)", views.len());
    }
    EXIT_OK
}

fn parse_query(text: &str) -> Result<CqlQuery, cim_core::query::QueryError> {
    let text = text.trim();
    if text.starts_with('{') {
        CqlQuery::from_json(text)
    } else {
        parse_cql(text)
    }
}

fn run_query(
    ws: &Path,
    text: &str,
    format: QueryFormat,
    options: QueryOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let query = match parse_query(text) {
        Ok(q) => q,
        Err(e) => return fail(err, e, EXIT_DIAGNOSTICS),
    };
    let warehouse = match load(ws, err) {
        Ok(w) => w,
        Err(code) => return code,
    };
    match warehouse.query(&query, options) {
        Ok(r) => {
            let _ = out.write_all(render(&r, format).as_bytes());
            EXIT_OK
        }
        Err(e) => fail(err, e, EXIT_DIAGNOSTICS),
    }
}

fn check(ws: &Path, format: ReportFormat, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let warehouse = match load(ws, err) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let report = match warehouse.check() {
        Ok(r) => r,
        Err(e) => return fail(err, e, EXIT_ENVIRONMENT),
    };
    let text = match format {
        ReportFormat::Text => render_check(&report),
        ReportFormat::Json => format!("{:#}\n", serde_json::to_value(&report).expect("reports serialize")),
    };
    let _ = out.write_all(text.as_bytes());
    if report.is_clean() {
        EXIT_OK
    } else {
        EXIT_DIAGNOSTICS
    }
}

fn serve(ws: &Path, host: &str, port: u16, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let workspace = match Workspace::open(ws) {
        Ok(w) => w,
        Err(e) => return fail(err, e, EXIT_ENVIRONMENT),
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return fail(err, e, EXIT_ENVIRONMENT),
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) => return fail(err, format_args!("cannot bind {host}:{port}: {e}"), EXIT_ENVIRONMENT),
        };
        if let Ok(addr) = listener.local_addr() {
            let _ = writeln!(out, "listening on http://{addr}");
            let _ = out.flush();
        }
        let state = AppState::new();
        let loader_state = Arc::clone(&state);
        let loader = tokio::task::spawn_blocking(move || {
            let w = workspace.load_warehouse()?;
            loader_state.set_ready(w);
            Ok::<(), LoadError>(())
        });
        let (failed_tx, failed_rx) = tokio::sync::oneshot::channel();
        tokio::spawn(async move {
            if let Ok(Err(e)) = loader.await {
                let _ = failed_tx.send(e);
            }
        });
        let failure = Arc::new(std::sync::Mutex::new(None));
        let slot = Arc::clone(&failure);
        let shutdown = async move {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => {}
                Ok(e) = failed_rx => *slot.lock().expect("unpoisoned") = Some(e),
            }
        };
        if let Err(e) = axum::serve(listener, router(state))
            .with_graceful_shutdown(shutdown)
            .await
        {
            return fail(err, e, EXIT_ENVIRONMENT);
        }
        let failure = failure.lock().expect("unpoisoned").take();
        match failure {
            None => EXIT_OK,
            Some(LoadError::Invalid(cim_core::warehouse::WarehouseError::Invalid(diagnostics))) => {
                print_diagnostics(err, &diagnostics);
                EXIT_DIAGNOSTICS
            }
            Some(e) => fail(err, e, EXIT_ENVIRONMENT),
        }
    })
}

fn generate(dir: &Path, seed: u64, scale: usize, random: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (documents, data): ([Vec<u8>; 3], Dataset) = if random {
        let r = random_instance(seed);
        (
            [serialize_cdl(&r.cdl), serialize_sdl(&r.sdl), serialize_mdl(&r.mdl)],
            r.data,
        )
    } else {
        let documents = [olympic::CDL_XML, olympic::SDL_XML, olympic::MDL_XML].map(|d| d.as_bytes().to_vec());
        (documents, olympic::generate_data(seed, scale))
    };
    let documents = [
        documents[0].as_slice(),
        documents[1].as_slice(),
        documents[2].as_slice(),
    ];
    match Workspace::write(dir, documents, &data, &Manifest::default()) {
        Ok(_) => {
            let _ = writeln!(out, "wrote {} rows to {}", data.row_count(), dir.display());
            EXIT_OK
        }
        Err(e) => fail(err, e, EXIT_ENVIRONMENT),
    }
}
