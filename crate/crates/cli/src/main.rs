use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};
use finehyp::cli::{execute, Command, Format, GraphSource, RunConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Delta,
    Audit,
    Verify,
    Report,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fmt {
    Json,
    Csv,
}

/// Audits fine hyperbolic graphs and verifies the basepoint-change machinery
/// on finite and truncated examples.
#[derive(Debug, Parser)]
#[command(name = "finehyp", version)]
#[command(group(ArgGroup::new("source").args(["graph", "gen"])))]
struct Args {
    command: Cmd,
    /// Graph file: JSON (`{"n": .., "edges": [[u, v], ..]}`) or an edge list.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Generator: `tree:N`, `path:N`, `cycle:N`, `star:N`, `regular:Q`, or a
    /// free product such as `Z*Z` or `Z2*Z3` (coned-off ball).
    #[arg(long)]
    gen: Option<String>,
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long)]
    base: Option<usize>,
    /// Group word for the representation checks, e.g. `ab` or `a^-1b`.
    #[arg(long)]
    word: Option<String>,
    /// Overrides the scale of every angle and distance threshold.
    #[arg(long)]
    delta: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Fmt,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5_000)]
    budget_vertices: usize,
    #[arg(long, default_value_t = 1_000_000)]
    budget_loops: u64,
    /// Largest sphere radius of the classes checked at the basepoint.
    #[arg(long, default_value_t = 3)]
    max_n: u32,
    /// Largest distance between compared basepoints.
    #[arg(long, default_value_t = 2)]
    max_displacement: u32,
    /// Loop length for the fineness audit.
    #[arg(long, default_value_t = 5)]
    loop_len: u32,
    /// Cross-check partitions and decompositions against tree formulas.
    #[arg(long)]
    tree_oracle: bool,
    /// Include wall-clock timings (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
}

impl Args {
    fn into_config(self) -> RunConfig {
        let command = match self.command {
            Cmd::Delta => Command::Delta,
            Cmd::Audit => Command::Audit,
            Cmd::Verify => Command::Verify,
            Cmd::Report => Command::Report,
        };
        let source = match (self.graph, self.gen) {
            (Some(p), _) => Some(GraphSource::File(p)),
            (None, Some(s)) => Some(GraphSource::Gen(s)),
            (None, None) => None,
        };
        let mut cfg = RunConfig::new(command, source);
        cfg.radius = self.radius;
        cfg.base = self.base;
        cfg.word = self.word;
        cfg.delta = self.delta;
        cfg.out = self.out;
        cfg.format = match self.format {
            Fmt::Json => Format::Json,
            Fmt::Csv => Format::Csv,
        };
        cfg.seed = self.seed;
        cfg.budget_vertices = self.budget_vertices;
        cfg.budget_loops = self.budget_loops;
        cfg.max_n = self.max_n;
        cfg.max_displacement = self.max_displacement;
        cfg.loop_len = self.loop_len;
        cfg.tree_oracle = self.tree_oracle;
        cfg.timing = self.timing;
        cfg
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cfg = args.into_config();
    match execute(&cfg) {
        Ok((report, text)) => {
            if cfg.out.is_none() {
                print!("{text}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
