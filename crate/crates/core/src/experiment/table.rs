use std::fmt::Write as _;

use super::stats::{final_scores, mean_and_std};
use super::{ExperimentConfig, ExperimentError, Mode, RunLog};

/// One completed run: its resolved config and its log.
#[derive(Debug, Clone)]
pub struct ModeRun {
    pub cfg: ExperimentConfig,
    pub log: RunLog,
}

fn mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::NoSharing => "No-share",
        Mode::Distral => "Distral",
        Mode::OtSharing => "OT-sharing",
    }
}

/// Fails unless every configured seed has every task trained to the budget.
pub fn check_complete(run: &ModeRun, n_tasks: usize) -> Result<(), ExperimentError> {
    let missing: Vec<String> = run
        .cfg
        .seeds
        .iter()
        .flat_map(|&s| (0..n_tasks).map(move |t| (s, t)))
        .filter(|&(s, t)| run.log.series(s, t).last().is_none_or(|e| e.env_steps < run.cfg.timesteps))
        .map(|(s, t)| format!("seed {s} task {}", t + 1))
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ExperimentError::Aggregation(format!(
            "{} run incomplete: {}",
            run.cfg.mode.name(),
            missing.join(", ")
        )))
    }
}

/// Final-return table: one column per run, one row per task plus the
/// task average, each cell `mean±std` over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub env_name: String,
    pub columns: Vec<String>,
    /// `(row label, per-column (mean, std))`; the last row is `avg`.
    pub rows: Vec<(String, Vec<(f64, f64)>)>,
    /// Optimal return per row, same order as `rows`.
    pub opt: Vec<f64>,
    pub n_seeds: Vec<usize>,
}

impl ResultTable {
    /// `opt` holds the oracle return of each task.
    pub fn build(runs: &[ModeRun], opt: &[f64]) -> Result<Self, ExperimentError> {
        let first = runs.first().ok_or_else(|| ExperimentError::Aggregation("no runs to tabulate".into()))?;
        let env = &first.cfg.env_name;
        if let Some(other) = runs.iter().find(|r| &r.cfg.env_name != env) {
            return Err(ExperimentError::Aggregation(format!(
                "runs mix environments {env:?} and {:?}",
                other.cfg.env_name
            )));
        }
        let n_tasks = opt.len();
        let mut order: Vec<&ModeRun> = runs.iter().collect();
        order.sort_by_key(|r| Mode::ALL.iter().position(|&m| m == r.cfg.mode));
        let mut columns = Vec::new();
        let mut per_column = Vec::new();
        let mut n_seeds = Vec::new();
        for run in &order {
            check_complete(run, n_tasks)?;
            let dup = order.iter().filter(|r| r.cfg.mode == run.cfg.mode).count() > 1;
            let mut label = mode_label(run.cfg.mode).to_string();
            if dup && run.cfg.mode == Mode::OtSharing {
                write!(label, " β={}", run.cfg.proxy.beta).unwrap();
            }
            columns.push(label);
            let scores = final_scores(&run.log, n_tasks, run.cfg.timesteps, run.cfg.final_window);
            if scores.len() < 2 {
                log::warn!("{}: single seed, std reported as 0.0", run.cfg.mode.name());
            }
            n_seeds.push(scores.len());
            let mut cells: Vec<(f64, f64)> = (0..n_tasks)
                .map(|t| {
                    let xs: Vec<f64> = scores.iter().map(|s| s.per_task[t]).collect();
                    mean_and_std(&xs)
                })
                .collect();
            let avg: Vec<f64> = scores.iter().map(|s| s.avg).collect();
            cells.push(mean_and_std(&avg));
            per_column.push(cells);
        }
        let mut rows = Vec::new();
        for r in 0..=n_tasks {
            let label = if r < n_tasks { (r + 1).to_string() } else { "avg".to_string() };
            rows.push((label, per_column.iter().map(|c| c[r]).collect()));
        }
        let mut opt_rows = opt.to_vec();
        opt_rows.push(opt.iter().sum::<f64>() / n_tasks.max(1) as f64);
        Ok(Self { env_name: env.clone(), columns, rows, opt: opt_rows, n_seeds })
    }

    /// Aligned plain text, one line per row.
    pub fn render(&self) -> String {
        let mut header = vec![format!("{:<12}", "Env"), format!("{:<5}", "Task")];
        header.extend(self.columns.iter().map(|c| format!("{c:>16}")));
        header.push(format!("{:>8}", "Opt"));
        let mut out = header.join(" ").trim_end().to_string();
        out.push('\n');
        out.push_str(&"-".repeat(out.trim_end().chars().count()));
        out.push('\n');
        for (i, (label, cells)) in self.rows.iter().enumerate() {
            let env = if i == 0 { self.env_name.as_str() } else { "" };
            let mut line = vec![format!("{env:<12}"), format!("{label:<5}")];
            line.extend(cells.iter().map(|(m, s)| format!("{:>16}", format!("{m:.1}±{s:.1}"))));
            line.push(format!("{:>8.1}", self.opt[i]));
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::EpisodeRecord;

    fn run(mode: Mode, env: &str, seeds: &[u64], ret: f64) -> ModeRun {
        let mut cfg = ExperimentConfig::new(env, "x.map", mode);
        cfg.seeds = seeds.to_vec();
        cfg.timesteps = 100;
        let mut episodes = Vec::new();
        for &seed in seeds {
            for task in 0..2 {
                episodes.push(EpisodeRecord {
                    seed,
                    task,
                    episode: 0,
                    env_steps: 100,
                    ret: ret + seed as f64,
                    proxy_mean: 0.0,
                    length: 100,
                    reached_goal: false,
                    updates: 0,
                    critic_loss: 0.0,
                    policy_loss: 0.0,
                    entropy: 0.0,
                });
            }
        }
        ModeRun { cfg, log: RunLog { episodes, evals: vec![] } }
    }

    #[test]
    fn columns_follow_fixed_order() {
        let runs = [run(Mode::OtSharing, "z", &[0, 2], 1.0), run(Mode::NoSharing, "z", &[0, 2], -1.0), run(Mode::Distral, "z", &[0, 2], 0.0)];
        let t = ResultTable::build(&runs, &[6.0, 7.0]).unwrap();
        assert_eq!(t.columns, vec!["No-share", "Distral", "OT-sharing"]);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[2].0, "avg");
        assert_eq!(t.rows[0].1[2], (2.0, 2f64.sqrt()));
        assert_eq!(t.opt[2], 6.5);
        let text = t.render();
        assert!(text.contains("OT-sharing") && text.contains("2.0±1.4") && text.contains("6.5"));
    }

    #[test]
    fn single_seed_std_is_zero() {
        let t = ResultTable::build(&[run(Mode::NoSharing, "z", &[3], 0.5)], &[1.0, 1.0]).unwrap();
        assert_eq!(t.rows[2].1[0], (3.5, 0.0));
    }

    #[test]
    fn mismatched_envs_rejected() {
        let runs = [run(Mode::OtSharing, "a", &[0], 1.0), run(Mode::NoSharing, "b", &[0], 1.0)];
        assert!(matches!(ResultTable::build(&runs, &[1.0, 1.0]), Err(ExperimentError::Aggregation(_))));
    }

    #[test]
    fn missing_seed_is_reported() {
        let mut r = run(Mode::NoSharing, "z", &[0, 1], 0.0);
        r.log.episodes.retain(|e| e.seed == 0);
        let err = ResultTable::build(&[r], &[1.0, 1.0]).unwrap_err().to_string();
        assert!(err.contains("seed 1 task 1") && err.contains("seed 1 task 2"), "{err}");
    }
}
