use std::fs;
use std::io::{self, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use kopl_cli::report::{run_bench, summary, BenchParams};
use kopl_cli::service::{serve, ServeOptions, ServiceConfig};
use kopl_core::induction::ParserBinding;
use kopl_core::synth::{generate_dump, SynthConfig};
use kopl_core::{
    build_indices, load_kb, parse_program, parse_program_str, validate, Engine, EngineConfig, ExecOptions,
    IndexBackendKind, Program,
};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "kopl", version, about = "Query, validate and benchmark KoPL programs over a knowledge base")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "VISKOP_KB")]
        kb: PathBuf,
        #[arg(long, env = "VISKOP_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Items kept per trace preview.
        #[arg(long, env = "VISKOP_PREVIEW_K", default_value_t = 100)]
        preview_k: usize,
        #[arg(long, default_value = "hashing")]
        backend: IndexBackendKind,
        /// Remote question parser; built-in templates when absent.
        #[arg(long, env = "VISKOP_PARSER_URL")]
        parser_url: Option<String>,
        #[arg(long, default_value_t = 10)]
        parser_timeout_secs: u64,
    },
    /// Execute a program file and print the answer.
    Run {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        program: PathBuf,
        /// Also print the per-operator trace as JSON.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value = "hashing")]
        backend: IndexBackendKind,
        #[arg(long)]
        no_fusion: bool,
        #[arg(long, default_value_t = 100)]
        preview_k: usize,
    },
    /// Validate a program file; exits 1 when it has errors.
    Validate {
        #[arg(long)]
        program: PathBuf,
    },
    /// Compare index backends, fusion and latency on a workload.
    Bench {
        /// Knowledge base to load; a synthetic one is generated otherwise.
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        entities: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// JSON list of programs to use instead of a generated workload.
        #[arg(long)]
        workload: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        programs: usize,
        #[arg(long, default_value_t = 100)]
        fusion_programs: usize,
        #[arg(long, default_value_t = 10)]
        max_nodes: usize,
        #[arg(long, default_value_t = 20)]
        buckets: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a synthetic knowledge base dump.
    GenKb {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        entities: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print knowledge base statistics.
    Stats {
        #[arg(long)]
        kb: PathBuf,
    },
}

fn read_program(path: &Path) -> anyhow::Result<Program> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_program_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Returns whether the command succeeded; errors are reported by the caller.
fn dispatch(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Serve {
            kb,
            port,
            host,
            preview_k,
            backend,
            parser_url,
            parser_timeout_secs,
        } => {
            let parser = match parser_url {
                Some(endpoint) => ParserBinding::External {
                    endpoint,
                    timeout: Duration::from_secs(parser_timeout_secs),
                },
                None => ParserBinding::default(),
            };
            let options = ServeOptions {
                kb_path: kb,
                addr: SocketAddr::new(host, port),
                backend,
                config: ServiceConfig {
                    preview_limit: preview_k,
                    parser,
                },
            };
            tokio::runtime::Runtime::new()?.block_on(serve(options))?;
            Ok(true)
        }
        Command::Run {
            kb,
            program,
            trace,
            backend,
            no_fusion,
            preview_k,
        } => {
            let program = read_program(&program)?;
            let kb = load_kb(&kb)?;
            let idx = build_indices(&kb, backend);
            let engine = Engine::new(&kb, &idx).with_config(EngineConfig {
                preview_limit: preview_k,
                fusion: !no_fusion,
            });
            let options = ExecOptions {
                trace,
                keep_outputs: false,
            };
            let result = engine.execute(&program, options)?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{}", result.answer)?;
            if let Some(trace) = result.trace {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&trace)?)?;
            }
            Ok(true)
        }
        Command::Validate { program } => {
            let report = validate(&read_program(&program)?);
            println!("{}", serde_json::to_string_pretty(&report)?);
            for d in report.errors() {
                match d.node {
                    Some(n) => eprintln!("node {n}: {}", d.message),
                    None => eprintln!("{}", d.message),
                }
            }
            Ok(report.ok)
        }
        Command::Bench {
            kb,
            entities,
            seed,
            workload,
            programs,
            fusion_programs,
            max_nodes,
            buckets,
            out,
        } => {
            let kb = match kb {
                Some(path) => load_kb(&path)?,
                None => {
                    eprintln!("generating {entities} entities (seed {seed})");
                    kopl_core::synth::generate_kb(&SynthConfig::new(entities as usize, seed))
                }
            };
            let workload = match workload {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let doc: serde_json::Value = serde_json::from_str(&text)?;
                    let Some(list) = doc.as_array() else {
                        bail!("{}: expected a JSON list of programs", path.display());
                    };
                    Some(list.iter().map(parse_program).collect::<Result<Vec<_>, _>>()?)
                }
                None => None,
            };
            let params = BenchParams {
                programs,
                fusion_programs,
                max_nodes,
                seed,
                histogram_buckets: buckets,
            };
            let report = run_bench(&kb, workload, &params);
            eprint!("{}", summary(&report));
            let mut json = serde_json::to_vec_pretty(&report)?;
            json.push(b'\n');
            emit(out.as_deref(), &json)?;
            Ok(true)
        }
        Command::GenKb { entities, seed, out } => {
            let dump = generate_dump(&SynthConfig::new(entities as usize, seed));
            let mut json = serde_json::to_vec(&dump)?;
            json.push(b'\n');
            emit(out.as_deref(), &json)?;
            Ok(true)
        }
        Command::Stats { kb } => {
            let kb = load_kb(&kb)?;
            println!("{}", serde_json::to_string_pretty(&kb.stats())?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(io::stderr)
        .init();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
