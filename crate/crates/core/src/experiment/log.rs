use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// One training episode of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub task: usize,
    pub episode: usize,
    /// Environment steps of this task up to and including this episode.
    pub env_steps: usize,
    /// Undiscounted environment return, shaping excluded.
    #[serde(rename = "return")]
    pub ret: f64,
    /// Mean per-step shaping reward added to this episode.
    pub proxy_mean: f64,
    pub length: usize,
    pub reached_goal: bool,
    /// Gradient updates run after this episode.
    pub updates: usize,
    pub critic_loss: f64,
    pub policy_loss: f64,
    pub entropy: f64,
}

/// Greedy evaluation of one task's policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub seed: u64,
    pub task: usize,
    pub env_steps: usize,
    pub mean_return: f64,
    pub std_return: f64,
}

/// Per-episode training records and periodic evaluations of a run, ordered
/// by seed, then task, then time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub episodes: Vec<EpisodeRecord>,
    pub evals: Vec<EvalRecord>,
}

fn write_records<T: Serialize>(rows: &[T], out: impl Write) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| ExperimentError::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| ExperimentError::Output(e.to_string()))?;
    Ok(())
}

fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ExperimentError> {
    let input = |msg: String| ExperimentError::Input { path: path.to_path_buf(), msg };
    let mut r = csv::Reader::from_path(path).map_err(|e| input(e.to_string()))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| input(e.to_string()))
}

impl RunLog {
    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.episodes.iter().map(|e| e.seed).collect();
        s.dedup();
        s
    }

    pub fn n_tasks(&self) -> usize {
        self.episodes.iter().map(|e| e.task + 1).max().unwrap_or(0)
    }

    /// Episodes of one (seed, task) in time order.
    pub fn series(&self, seed: u64, task: usize) -> impl Iterator<Item = &EpisodeRecord> {
        self.episodes.iter().filter(move |e| e.seed == seed && e.task == task)
    }

    pub fn episodes_csv(&self) -> Result<String, ExperimentError> {
        let mut buf = Vec::new();
        write_records(&self.episodes, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// Writes `episodes.csv` and, when there are evaluations, `evals.csv`.
    pub fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        let create = |name: &str| {
            File::create(dir.join(name)).map_err(|e| ExperimentError::Output(format!("{}: {e}", dir.join(name).display())))
        };
        write_records(&self.episodes, create("episodes.csv")?)?;
        if !self.evals.is_empty() {
            write_records(&self.evals, create("evals.csv")?)?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, ExperimentError> {
        let episodes = read_records(&dir.join("episodes.csv"))?;
        let evals_path = dir.join("evals.csv");
        let evals = if evals_path.exists() { read_records(&evals_path)? } else { Vec::new() };
        Ok(Self { episodes, evals })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seed: u64, task: usize, env_steps: usize, ret: f64) -> EpisodeRecord {
        EpisodeRecord {
            seed,
            task,
            episode: 0,
            env_steps,
            ret,
            proxy_mean: 0.01,
            length: 10,
            reached_goal: true,
            updates: 10,
            critic_loss: 0.5,
            policy_loss: -1.25,
            entropy: 1.3,
        }
    }

    #[test]
    fn csv_round_trip() {
        let log = RunLog {
            episodes: vec![rec(0, 0, 10, 1.0 / 3.0), rec(0, 1, 10, -10.2), rec(1, 0, 10, 0.1 + 0.2)],
            evals: vec![EvalRecord { seed: 0, task: 0, env_steps: 10, mean_return: 1.5, std_return: 0.0 }],
        };
        let dir = tempfile::tempdir().unwrap();
        log.write(dir.path()).unwrap();
        let back = RunLog::read(dir.path()).unwrap();
        assert_eq!(back, log);
        let text = log.episodes_csv().unwrap();
        assert!(text.starts_with("seed,task,episode,env_steps,return,proxy_mean"));
        assert_eq!(log.seeds(), vec![0, 1]);
        assert_eq!(log.n_tasks(), 2);
    }

    #[test]
    fn missing_file_is_input_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(RunLog::read(dir.path()), Err(ExperimentError::Input { .. })));
    }
}
