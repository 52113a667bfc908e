//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 topology or configuration error,
//! 3 internal invariant violation.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::algorithms::AlgorithmId;
use crate::error::{Error, Result};
use crate::forest::{metrics, MulticastSession};
use crate::harness::{
    parse_list, spt_comparison, sweep_group_size, sweep_mc_count, with_jobs, ExperimentConfig,
    McPolicy,
};
use crate::network::{parse_topology, NetworkGraph, NodeId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "mibroute",
    version,
    about = "Multicast light-tree routing in sparse-splitting WDM networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a topology file and print its size and MC set
    Validate { topology: PathBuf },
    /// Route one multicast session and print the forest and its metrics
    Route {
        topology: PathBuf,
        /// MIBPro, MIBPro2, R2S, R2A or MO
        #[arg(long)]
        algo: AlgorithmId,
        #[arg(long)]
        source: u32,
        /// Comma-separated destination ids
        #[arg(long)]
        dests: String,
        /// Comma-separated MC node ids, replacing the file's MC set
        #[arg(long)]
        mc: Option<String>,
    },
    /// Compare MIB counts and link stress of Dijkstra and DijkstraPro trees
    SptCompare {
        topology: PathBuf,
        /// source | degree:<k> | random:<count> | explicit:<ids> | <ids>
        #[arg(long)]
        mc: String,
        /// Comma-separated member ids (default: every node)
        #[arg(long)]
        members: Option<String>,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the multicast group size
    SweepGroup {
        config: PathBuf,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Overrides the config's `out`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the number of MC nodes
    SweepMc {
        config: PathBuf,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Overrides the config's `out`
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Diagnostics go to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invariant(_) => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

fn load(path: &Path) -> Result<NetworkGraph> {
    parse_topology(&std::fs::read_to_string(path)?)
}

fn ids(text: &str) -> Result<BTreeSet<NodeId>> {
    Ok(parse_list(text)?
        .into_iter()
        .map(|v| NodeId(v as u32))
        .collect())
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Validate { topology } => {
            let g = load(&topology)?;
            let mc: Vec<String> = g.mc_nodes().iter().map(|v| v.to_string()).collect();
            writeln!(
                out,
                "nodes={} edges={} mc={}",
                g.node_count(),
                g.edge_count(),
                mc.join(",")
            )?;
        }
        Command::Route {
            topology,
            algo,
            source,
            dests,
            mc,
        } => {
            let mut g = load(&topology)?;
            if let Some(mc) = mc {
                let mc = ids(&mc)?;
                if let Some(v) = mc.iter().find(|v| !g.contains(**v)) {
                    return Err(Error::Session(format!(
                        "MC node {v} is not in the topology"
                    )));
                }
                g = g.with_mc_set(&mc);
            }
            let ms = MulticastSession::new(&g, NodeId(source), ids(&dests)?)?;
            let forest = algo.run(&g, &ms)?;
            forest.validate(&g).map_err(Error::Invariant)?;
            write!(out, "{forest}")?;
            writeln!(out, "{}", metrics(&forest, &g)?)?;
        }
        Command::SptCompare {
            topology,
            mc,
            members,
            out: path,
        } => {
            let g = load(&topology)?;
            let policy = McPolicy::parse(&mc)?;
            let members = match members {
                Some(m) => ids(&m)?,
                None => g.node_ids().collect(),
            };
            if let Some(v) = members.iter().find(|v| !g.contains(**v)) {
                return Err(Error::Session(format!("member {v} is not in the topology")));
            }
            emit(
                &spt_comparison(&g, &policy, &members).to_csv(),
                path.as_deref(),
                out,
            )?;
        }
        Command::SweepGroup {
            config,
            jobs,
            out: path,
        } => sweep(&config, jobs, path, out, sweep_group_size)?,
        Command::SweepMc {
            config,
            jobs,
            out: path,
        } => sweep(&config, jobs, path, out, sweep_mc_count)?,
    }
    Ok(())
}

type SweepFn = fn(&ExperimentConfig, &NetworkGraph) -> Result<crate::harness::SweepResult>;

fn sweep(
    config: &Path,
    jobs: usize,
    path: Option<PathBuf>,
    out: &mut dyn Write,
    f: SweepFn,
) -> Result<()> {
    let cfg = ExperimentConfig::parse(&std::fs::read_to_string(config)?)?;
    // relative paths in a config are taken from the config file's directory
    let dir = config.parent().unwrap_or(Path::new(""));
    let g = load(&dir.join(&cfg.topology))?;
    let result = with_jobs(jobs, || f(&cfg, &g))??;
    let target = path.or_else(|| cfg.out.as_ref().map(|o| dir.join(o)));
    emit(&result.to_csv(), target.as_deref(), out)
}
