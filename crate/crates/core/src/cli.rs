//! Command-line front end: `run`, `heatmap`, `table` and `validate`.
//!
//! Exit codes: 0 success, 2 config or input error, 3 numeric failure,
//! 4 aggregation error.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::experiment::{
    load_agents, run, seed_heatmap, write_run_dir, ExperimentConfig, ExperimentError, Heatmap, Mode, ModeRun, ResultTable, RunLog,
    CONFIG_FILE,
};
use crate::grid::optimal_returns;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_AGGREGATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ot-distill", version, about = "Multi-task gridworld RL with optimal-transport reward sharing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every seed of a config and write a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated seed list, replaces the config's seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// ot_sharing, distral or no_sharing.
        #[arg(long)]
        mode: Option<String>,
        /// Environment steps per task.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Proxy-reward heatmap (CSV and SVG) from the checkpoints of run directories.
    Heatmap {
        /// Run directories written by `run` with checkpoints enabled.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Seeds to average over; defaults to all seeds of each run.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Final-return table over run directories of one environment.
    Table {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Also write `table_<env>.txt` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and its map, and print the optimal returns.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

pub fn exit_code(e: &ExperimentError) -> i32 {
    match e {
        ExperimentError::Config(_) | ExperimentError::Input { .. } | ExperimentError::Output(_) => EXIT_INPUT,
        ExperimentError::Numeric(_) => EXIT_NUMERIC,
        ExperimentError::Aggregation(_) => EXIT_AGGREGATION,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: Command) -> Result<(), ExperimentError> {
    match cmd {
        Command::Run { config, out, seeds, mode, steps } => cmd_run(&config, &out, seeds, mode.as_deref(), steps),
        Command::Heatmap { runs, out, seeds } => cmd_heatmap(&runs, &out, seeds.as_deref()),
        Command::Table { runs, out } => cmd_table(&runs, out.as_deref()),
        Command::Validate { config } => cmd_validate(&config),
    }
}

fn load_with_overrides(
    config: &Path,
    seeds: Option<Vec<u64>>,
    mode: Option<&str>,
    steps: Option<usize>,
) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    if let Some(m) = mode {
        cfg.mode = Mode::parse(m).ok_or_else(|| ExperimentError::Config(format!("--mode: unknown mode {m:?}")))?;
    }
    if let Some(n) = steps {
        cfg.timesteps = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_run(config: &Path, out: &Path, seeds: Option<Vec<u64>>, mode: Option<&str>, steps: Option<usize>) -> Result<(), ExperimentError> {
    let cfg = load_with_overrides(config, seeds, mode, steps)?;
    log::info!("{} / {}: {} seeds × {} steps", cfg.env_name, cfg.mode.name(), cfg.seeds.len(), cfg.timesteps);
    let output = run(&cfg)?;
    write_run_dir(&cfg, &output, out)?;
    log::info!("wrote {}", out.display());
    Ok(())
}

fn load_run(dir: &Path) -> Result<ModeRun, ExperimentError> {
    let cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
    let log = RunLog::read(dir)?;
    Ok(ModeRun { cfg, log })
}

pub fn cmd_table(runs: &[PathBuf], out: Option<&Path>) -> Result<(), ExperimentError> {
    let runs: Vec<ModeRun> = runs.iter().map(|d| load_run(d)).collect::<Result<_, _>>()?;
    let first = &runs[0].cfg;
    let map = first.load_map()?;
    let scheme = first.reward_scheme(&map);
    let n = first.task_count(&map);
    let opt: Vec<f64> = optimal_returns(&map, &scheme, first.sac.gamma, first.horizon)
        .iter()
        .take(n)
        .map(|o| o.undiscounted)
        .collect();
    let table = ResultTable::build(&runs, &opt)?;
    let text = table.render();
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| ExperimentError::Output(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("table_{}.txt", table.env_name));
        fs::write(&path, &text).map_err(|e| ExperimentError::Output(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn cmd_heatmap(runs: &[PathBuf], out: &Path, seeds: Option<&[u64]>) -> Result<(), ExperimentError> {
    fs::create_dir_all(out).map_err(|e| ExperimentError::Output(format!("{}: {e}", out.display())))?;
    for dir in runs {
        let cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
        let map = Arc::new(cfg.load_map()?);
        let n = cfg.task_count(&map);
        let seeds = seeds.map(<[u64]>::to_vec).unwrap_or_else(|| cfg.seeds.clone());
        let mut maps = Vec::new();
        for &seed in &seeds {
            let agents = load_agents(dir, &cfg, seed, n)?;
            maps.push(seed_heatmap(&cfg, &map, &agents, seed)?);
        }
        let avg = Heatmap::average(&maps).ok_or_else(|| ExperimentError::Config("no seeds selected".into()))?;
        let stem = format!("heatmap_{}_{}", cfg.env_name, cfg.mode.name());
        let title = format!("{} ({}), {} seeds", cfg.env_name, cfg.mode.name(), seeds.len());
        let write = |name: String, body: String| {
            let p = out.join(name);
            fs::write(&p, body).map_err(|e| ExperimentError::Output(format!("{}: {e}", p.display())))
        };
        write(format!("{stem}.csv"), avg.to_csv())?;
        write(format!("{stem}.svg"), avg.to_svg(cfg.proxy.sigma, &title))?;
        log::info!("wrote {stem}.csv and {stem}.svg");
    }
    Ok(())
}

pub fn cmd_validate(config: &Path) -> Result<(), ExperimentError> {
    let cfg = ExperimentConfig::load(config)?;
    let map = cfg.load_map()?;
    cfg.validate_with_map(&map)?;
    let scheme = cfg.reward_scheme(&map);
    let n = cfg.task_count(&map);
    println!(
        "{}: {}×{} map, {} free cells, {} tasks, mode {}, {} seeds × {} steps",
        cfg.env_name,
        map.height(),
        map.width(),
        map.n_states(),
        n,
        cfg.mode.name(),
        cfg.seeds.len(),
        cfg.timesteps
    );
    println!(
        "rewards: step {} wall {} goal {}",
        scheme.step_penalty, scheme.wall_penalty, scheme.goal_reward
    );
    for o in optimal_returns(&map, &scheme, cfg.sac.gamma, cfg.horizon).iter().take(n) {
        println!("task {}: optimal return {:.3} (discounted {:.3})", o.task + 1, o.undiscounted, o.discounted);
    }
    Ok(())
}
