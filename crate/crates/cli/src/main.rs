use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use topo_core::io::{self, load_manifest, parse_map, read_space};
use topo_core::lod::{validate, validate_chain, Dataset};
use topo_core::oracle::{enumerate_topology, oracle_axiom_check, oracle_is_continuous, SizeGuard};
use topo_core::script::run_script;
use topo_core::{find_homeomorphism, Space, SpaceMap, DEFAULT_HOMEOMORPHISM_BOUND};

/// Finite topological spaces: validation, queries and brute-force checks.
#[derive(Parser)]
#[command(name = "topo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the foreign-key constraints of a dataset manifest.
    Validate {
        manifest: PathBuf,
        /// Also check this chain of maps, comma separated, finest first.
        #[arg(long, value_delimiter = ',')]
        chain: Vec<String>,
    },
    /// Run a query script. Paths in the script are relative to the script.
    Run {
        script: PathBuf,
        /// Make the spaces and maps of a manifest available by name.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Dimension of a space, or of one element.
    Dim { space: PathBuf, element: Option<String> },
    /// Smallest closed set containing the given elements.
    Closure {
        space: PathBuf,
        #[arg(required = true)]
        elements: Vec<String>,
    },
    /// Smallest open set containing the given elements.
    Star {
        space: PathBuf,
        #[arg(required = true)]
        elements: Vec<String>,
    },
    /// Search for a homeomorphism between two spaces.
    Homeo {
        left: PathBuf,
        right: PathBuf,
        /// Refuse spaces with more elements than this.
        #[arg(long, default_value_t = DEFAULT_HOMEOMORPHISM_BOUND)]
        bound: usize,
    },
    /// Rewrite a space file in canonical form on stdout.
    Fmt { space: PathBuf },
    /// Brute-force checks for small spaces.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
        /// Largest space the oracle will enumerate.
        #[arg(long, global = true, default_value_t = SizeGuard::ENUMERATION.max_elements)]
        max_elements: usize,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// List every open set.
    Topology { space: PathBuf },
    /// Check the topology axioms on the enumerated open sets.
    Axioms { space: PathBuf },
    /// Check continuity of a map by testing preimages of open sets.
    Continuous {
        map: PathBuf,
        domain: PathBuf,
        codomain: PathBuf,
    },
}

enum Status {
    Ok,
    CheckFailed,
}

fn load_space(path: &Path) -> Result<Arc<Space>> {
    let space = read_space(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Arc::new(space))
}

fn format_set<'a>(ids: impl IntoIterator<Item = &'a topo_core::ElementId>) -> String {
    ids.into_iter()
        .map(|i| i.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

fn status(passed: bool) -> Status {
    if passed {
        Status::Ok
    } else {
        Status::CheckFailed
    }
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Validate { manifest, chain } => {
            let dataset = load_manifest(&manifest)
                .with_context(|| format!("loading {}", manifest.display()))?;
            let report = validate(&dataset)?;
            println!("{report}");
            let mut passed = report.passed();
            if !chain.is_empty() {
                let chain = validate_chain(&dataset, &chain)?;
                println!("{chain}");
                passed &= chain.passed();
            }
            Ok(status(passed))
        }
        Command::Run { script, manifest } => {
            let text = fs::read_to_string(&script)
                .with_context(|| format!("reading {}", script.display()))?;
            let dataset = match manifest {
                Some(m) => load_manifest(&m).with_context(|| format!("loading {}", m.display()))?,
                None => Dataset::new(),
            };
            let base = script.parent().unwrap_or(Path::new("."));
            let result = run_script(&text, dataset, base)
                .with_context(|| format!("running {}", script.display()))?;
            print!("{result}");
            Ok(status(result.passed()))
        }
        Command::Dim { space, element } => {
            let s = load_space(&space)?;
            match element {
                Some(e) => println!("{}", s.dimension(&e)?),
                None => println!("{}", s.space_dimension()),
            }
            Ok(Status::Ok)
        }
        Command::Closure { space, elements } => {
            println!("{}", format_set(&load_space(&space)?.closure(&elements)?));
            Ok(Status::Ok)
        }
        Command::Star { space, elements } => {
            println!("{}", format_set(&load_space(&space)?.star(&elements)?));
            Ok(Status::Ok)
        }
        Command::Homeo { left, right, bound } => {
            let x = load_space(&left)?;
            let y = load_space(&right)?;
            match find_homeomorphism(&x, &y, bound)? {
                Some(h) => {
                    for (a, b) in h.pairs() {
                        println!("{a} {b}");
                    }
                    Ok(Status::Ok)
                }
                None => {
                    println!("not homeomorphic");
                    Ok(Status::CheckFailed)
                }
            }
        }
        Command::Fmt { space } => {
            print!("{}", io::serialize_space(&*load_space(&space)?));
            Ok(Status::Ok)
        }
        Command::Oracle {
            command,
            max_elements,
        } => {
            let guard = SizeGuard::new(max_elements)?;
            match command {
                OracleCommand::Topology { space } => {
                    let family = enumerate_topology(&*load_space(&space)?, guard)?;
                    for set in family.sets() {
                        println!("{{{}}}", format_set(&set));
                    }
                    println!("{} open sets", family.len());
                    Ok(Status::Ok)
                }
                OracleCommand::Axioms { space } => {
                    let report = oracle_axiom_check(&*load_space(&space)?, guard)?;
                    for v in &report.violations {
                        println!("violation: {v}");
                    }
                    println!(
                        "{} open sets, {} violations",
                        report.open_sets,
                        report.violations.len()
                    );
                    Ok(status(report.passed()))
                }
                OracleCommand::Continuous {
                    map,
                    domain,
                    codomain,
                } => {
                    let text = fs::read_to_string(&map)
                        .with_context(|| format!("reading {}", map.display()))?;
                    let table = parse_map(&text)
                        .with_context(|| format!("reading {}", map.display()))?
                        .table;
                    let f = SpaceMap::new(
                        load_space(&domain)?,
                        load_space(&codomain)?,
                        table.pairs.iter().map(|(a, b)| (a, b)),
                    )?;
                    let continuous = oracle_is_continuous(&f, guard)?;
                    println!("{}", if continuous { "continuous" } else { "not continuous" });
                    Ok(status(continuous))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
