//! Command-line driver.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O or other failure |
//! | 2 | bad command line |
//! | 3 | bad project config |
//! | 10..=17 | step failed: parse, extract, resolve, build, filter, communities, layout, export |
//! | 20 | replay: ledger or alias-log integrity failure |
//! | 21 | replay: recomputed digest differs from the ledger |
//! | 22 | replay: a recorded step could not be re-executed |
//! | 23 | serve failed |
//! | 24 | fixture-gen failed |
//! | 25 | stats: required step outputs missing |
//! | 26 | decision rejected |

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use capta_core::graph::FilterCriterion;
use capta_core::provenance::StepKind;
use capta_core::resolution::Decision;
use capta_core::synth::SynthParams;
use clap::{Args, Parser, Subcommand};

use crate::config::{ExportFormat, PROJECT_ENV};
use crate::pipeline::{replay, run_steps, PipelineError, ReplayError, PIPELINE};
use crate::project::{submit_decision, Project, StoreError};

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_STEP_BASE: u8 = 10;
pub const EXIT_REPLAY_INTEGRITY: u8 = 20;
pub const EXIT_REPLAY_DIVERGENCE: u8 = 21;
pub const EXIT_REPLAY_STEP: u8 = 22;
pub const EXIT_SERVE: u8 = 23;
pub const EXIT_FIXTURE: u8 = 24;
pub const EXIT_STATS: u8 = 25;
pub const EXIT_DECISION: u8 = 26;

pub fn step_exit_code(step: StepKind) -> u8 {
    PIPELINE
        .iter()
        .position(|s| *s == step)
        .map_or(EXIT_IO, |i| EXIT_STEP_BASE + i as u8)
}

#[derive(Debug, Parser)]
#[command(name = "capta", version, about = "Diary transcriptions to curated co-occurrence networks")]
pub struct Cli {
    /// Project directory.
    #[arg(long, global = true, env = PROJECT_ENV, default_value = ".")]
    pub project: PathBuf,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate the corpus files.
    Ingest,
    /// Find person mentions in parsed entries.
    Extract,
    /// Resolve mentions against the alias table and write the review queue.
    Resolve(ResolveArgs),
    /// Build the co-occurrence network and apply the configured filter.
    Build(BuildArgs),
    /// Detect communities on the full and filtered networks.
    Communities(CommunityArgs),
    /// Lay out the filtered network and separate labels.
    Layout(LayoutArgs),
    /// Write GEXF and CSV network exports.
    Export(ExportArgs),
    /// Run every step from parse to export.
    Run(RunArgs),
    /// Print corpus statistics and write `exports/report.txt`.
    Stats,
    /// Verify the ledger and re-derive every recorded artifact.
    Replay(ReplayArgs),
    /// Serve the curation API on a local address.
    Serve(ServeArgs),
    /// Create a project around a synthetic corpus.
    FixtureGen(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    /// JSON file holding one decision or an array of decisions, applied before resolving.
    #[arg(long)]
    pub apply: Vec<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct BuildArgs {
    /// Keep persons mentioned on at least this many days.
    #[arg(long, conflicts_with = "top_n")]
    pub min_days: Option<u32>,
    /// Keep the N most frequently mentioned persons.
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Count co-mentions up to this many days apart.
    #[arg(long)]
    pub window_days: Option<u32>,
    /// Entity ids to leave out of the network; replaces the configured list.
    #[arg(long)]
    pub ego: Vec<String>,
}

#[derive(Debug, Args, Default)]
pub struct CommunityArgs {
    #[arg(long = "community-seed", id = "community_seed")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct LayoutArgs {
    #[arg(long = "layout-seed", id = "layout_seed")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iterations: Option<u32>,
    #[arg(long)]
    pub repulsion: Option<f64>,
    #[arg(long)]
    pub gravity: Option<f64>,
    #[arg(long)]
    pub linlog: bool,
    #[arg(long)]
    pub strong_gravity: bool,
}

#[derive(Debug, Args, Default)]
pub struct ExportArgs {
    /// Formats to write; replaces the configured list.
    #[arg(long = "format", value_parser = parse_format)]
    pub formats: Vec<ExportFormat>,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[command(flatten)]
    pub build: BuildArgs,
    #[command(flatten)]
    pub communities: CommunityArgs,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[command(flatten)]
    pub export: ExportArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Where to write re-derived artifacts; defaults to `exports/`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Verify only; write nothing.
    #[arg(long, conflicts_with = "out")]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = crate::service::DEFAULT_ADDR)]
    pub addr: SocketAddr,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Directory to create the project in; defaults to the project directory.
    pub dir: Option<PathBuf>,
    #[arg(long, default_value_t = 240)]
    pub days: u32,
    #[arg(long, default_value_t = 420)]
    pub persons: usize,
    #[arg(long, default_value_t = 7.5)]
    pub mean: f64,
    #[arg(long, default_value_t = 5.5)]
    pub sd: f64,
    #[arg(long, default_value_t = 1891)]
    pub seed: u64,
    #[arg(long, default_value = "vol01")]
    pub volume_id: String,
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    match s {
        "gexf" => Ok(ExportFormat::Gexf),
        "csv" => Ok(ExportFormat::Csv),
        other => Err(format!("unknown format {other:?}; expected gexf or csv")),
    }
}

impl BuildArgs {
    fn apply(&self, p: &mut Project) {
        let g = &mut p.config.graph;
        if let Some(k) = self.min_days {
            g.filter = FilterCriterion::MinDays(k);
        }
        if let Some(n) = self.top_n {
            g.filter = FilterCriterion::TopN(n);
        }
        if let Some(w) = self.window_days {
            g.window_days = w;
        }
        if !self.ego.is_empty() {
            g.ego = self.ego.iter().map(|s| s.as_str().into()).collect();
        }
    }
}

impl CommunityArgs {
    fn apply(&self, p: &mut Project) {
        if let Some(s) = self.seed {
            p.config.communities.seed = s;
        }
        if let Some(g) = self.gamma {
            p.config.communities.gamma = g;
        }
    }
}

impl LayoutArgs {
    fn apply(&self, p: &mut Project) {
        let l = &mut p.config.layout;
        if let Some(s) = self.seed {
            l.seed = s;
        }
        if let Some(n) = self.max_iterations {
            l.forces.max_iterations = n;
        }
        if let Some(r) = self.repulsion {
            l.forces.repulsion = r;
        }
        if let Some(g) = self.gravity {
            l.forces.gravity = g;
        }
        l.forces.linlog |= self.linlog;
        l.forces.strong_gravity |= self.strong_gravity;
    }
}

impl ExportArgs {
    fn apply(&self, p: &mut Project) {
        if !self.formats.is_empty() {
            p.config.export.formats = self.formats.clone();
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Self::new(step_exit_code(e.step), e)
    }
}

impl From<ReplayError> for Failure {
    fn from(e: ReplayError) -> Self {
        let code = match &e {
            ReplayError::Integrity(_) => EXIT_REPLAY_INTEGRITY,
            ReplayError::Divergence { .. } => EXIT_REPLAY_DIVERGENCE,
            ReplayError::Step { .. } => EXIT_REPLAY_STEP,
            ReplayError::Write(_) => EXIT_IO,
        };
        Self::new(code, e)
    }
}

fn open(cli: &Cli) -> Result<Project, Failure> {
    let p = Project::open(&cli.project).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    Ok(p)
}

fn validated(p: Project) -> Result<Project, Failure> {
    p.config.validate().map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    Ok(p)
}

fn steps(p: &Project, steps: &[StepKind]) -> Result<(), Failure> {
    let (summary, _) = run_steps(p, steps)?;
    for s in &summary.steps {
        println!("{:<12} {}", s.step.as_str(), s.output_digest);
    }
    Ok(())
}

fn read_decisions(path: &PathBuf) -> Result<Vec<Decision>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_DECISION, format!("{}: {e}", path.display())))?;
    let list = match value {
        serde_json::Value::Array(items) => items,
        one => vec![one],
    };
    list.into_iter()
        .map(|v| serde_json::from_value(v).map_err(|e| Failure::new(EXIT_DECISION, format!("{}: {e}", path.display()))))
        .collect()
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Ingest => {
            let p = open(&cli)?;
            steps(&p, &[StepKind::Parse])?;
            let report = std::fs::read_to_string(p.exports_dir().join("validation.json")).unwrap_or_default();
            print!("{report}");
        }
        Command::Extract => steps(&open(&cli)?, &[StepKind::Extract])?,
        Command::Resolve(args) => {
            let p = open(&cli)?;
            if !args.apply.is_empty() {
                let store = |e: StoreError| match e {
                    StoreError::Rejected(r) => Failure::new(EXIT_DECISION, r),
                    other => Failure::new(EXIT_IO, other),
                };
                let mut log = p.load_decisions().map_err(store)?;
                let mut ledger = p.load_ledger().map_err(store)?;
                for path in &args.apply {
                    for d in read_decisions(path)? {
                        let r = submit_decision(&p, &mut log, &mut ledger, d).map_err(store)?;
                        println!("decision {} -> alias version {}", r.seq, log.table().version());
                    }
                }
            }
            steps(&p, &[StepKind::Resolve])?;
            let queue = std::fs::read(p.exports_dir().join("queue.json")).unwrap_or_default();
            let items: Vec<serde_json::Value> = serde_json::from_slice(&queue).unwrap_or_default();
            println!("review queue: {} forms", items.len());
        }
        Command::Build(args) => {
            let mut p = open(&cli)?;
            args.apply(&mut p);
            steps(&validated(p)?, &[StepKind::Build, StepKind::Filter])?;
        }
        Command::Communities(args) => {
            let mut p = open(&cli)?;
            args.apply(&mut p);
            steps(&validated(p)?, &[StepKind::Communities])?;
        }
        Command::Layout(args) => {
            let mut p = open(&cli)?;
            args.apply(&mut p);
            steps(&validated(p)?, &[StepKind::Layout])?;
        }
        Command::Export(args) => {
            let mut p = open(&cli)?;
            args.apply(&mut p);
            steps(&p, &[StepKind::Export])?;
        }
        Command::Run(args) => {
            let mut p = open(&cli)?;
            args.build.apply(&mut p);
            args.communities.apply(&mut p);
            args.layout.apply(&mut p);
            args.export.apply(&mut p);
            steps(&validated(p)?, &PIPELINE)?;
        }
        Command::Stats => {
            let p = open(&cli)?;
            let report = crate::report::stats_report(&p).map_err(|e| Failure::new(EXIT_STATS, e))?;
            let text = report.to_text();
            crate::project::write_atomic(&p.exports_dir().join("report.txt"), text.as_bytes())
                .map_err(|e| Failure::new(EXIT_IO, e))?;
            print!("{text}");
        }
        Command::Replay(args) => {
            let p = open(&cli)?;
            let out = match (&args.out, args.check) {
                (_, true) => None,
                (Some(dir), false) => Some(dir.clone()),
                (None, false) => Some(p.exports_dir()),
            };
            let (summary, _) = replay(&p, out.as_deref())?;
            println!(
                "replayed {} records: {} steps re-executed, {} decisions checked, {} files written",
                summary.records,
                summary.steps_executed,
                summary.decisions_checked,
                summary.written.len()
            );
        }
        Command::Serve(args) => {
            let p = open(&cli)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new(EXIT_SERVE, e))?;
            rt.block_on(crate::service::serve(p, args.addr))
                .map_err(|e| Failure::new(EXIT_SERVE, e))?;
        }
        Command::FixtureGen(args) => {
            let dir = args.dir.clone().unwrap_or_else(|| cli.project.clone());
            let params = SynthParams {
                days: args.days,
                persons: args.persons,
                mean_per_day: args.mean,
                sd_per_day: args.sd,
                seed: args.seed,
                volume_id: args.volume_id.clone(),
                ..SynthParams::default()
            };
            let corpus = crate::fixture::write_fixture_project(&dir, &params).map_err(|e| Failure::new(EXIT_FIXTURE, e))?;
            println!(
                "wrote {} days, {} persons to {}",
                corpus.truth.len(),
                corpus.persons.len(),
                dir.display()
            );
        }
    }
    Ok(())
}

/// Parse `args`, run, and map failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn step_codes_follow_pipeline_order() {
        assert_eq!(step_exit_code(StepKind::Parse), 10);
        assert_eq!(step_exit_code(StepKind::Export), 17);
    }

    #[test]
    fn run_accepts_both_seeds() {
        let cli = Cli::try_parse_from(["capta", "run", "--community-seed", "3", "--layout-seed", "4", "--top-n", "5"]).unwrap();
        match cli.command {
            Command::Run(a) => {
                assert_eq!(a.communities.seed, Some(3));
                assert_eq!(a.layout.seed, Some(4));
                assert_eq!(a.build.top_n, Some(5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn filters_are_exclusive() {
        assert!(Cli::try_parse_from(["capta", "build", "--min-days", "2", "--top-n", "5"]).is_err());
    }
}
