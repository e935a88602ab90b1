use statrs::distribution::{ContinuousCDF, StudentsT};

use super::runner::mean_std;
use super::RunLog;

/// Mean return of the episodes of one (seed, task) that end inside the
/// trailing `window` steps of a `timesteps` budget.
pub fn final_return(log: &RunLog, seed: u64, task: usize, timesteps: usize, window: usize) -> Option<f64> {
    let start = timesteps.saturating_sub(window);
    let rets: Vec<f64> = log.series(seed, task).filter(|e| e.env_steps > start).map(|e| e.ret).collect();
    (!rets.is_empty()).then(|| rets.iter().sum::<f64>() / rets.len() as f64)
}

/// Per-seed final returns of each task plus their task average.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedScore {
    pub seed: u64,
    pub per_task: Vec<f64>,
    pub avg: f64,
}

pub fn final_scores(log: &RunLog, n_tasks: usize, timesteps: usize, window: usize) -> Vec<SeedScore> {
    log.seeds()
        .into_iter()
        .filter_map(|seed| {
            let per_task: Option<Vec<f64>> = (0..n_tasks).map(|t| final_return(log, seed, t, timesteps, window)).collect();
            per_task.map(|per_task| {
                let avg = per_task.iter().sum::<f64>() / n_tasks as f64;
                SeedScore { seed, per_task, avg }
            })
        })
        .collect()
}

/// Area under the training curve, normalized by its length: each episode's
/// return weighted by the steps it took.
pub fn area_under_curve(log: &RunLog, seed: u64, task: usize) -> Option<f64> {
    let (mut area, mut steps) = (0.0, 0usize);
    for e in log.series(seed, task) {
        area += e.ret * e.length as f64;
        steps += e.length;
    }
    (steps > 0).then(|| area / steps as f64)
}

/// Per-seed training-curve area averaged over tasks.
pub fn seed_areas(log: &RunLog, n_tasks: usize) -> Vec<f64> {
    log.seeds()
        .into_iter()
        .filter_map(|s| {
            let v: Option<Vec<f64>> = (0..n_tasks).map(|t| area_under_curve(log, s, t)).collect();
            v.map(|v| v.iter().sum::<f64>() / n_tasks as f64)
        })
        .collect()
}

pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    mean_std(xs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Welch's unequal-variance t-test. Needs at least two samples per group.
pub fn welch_test(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let (va, vb) = (sa * sa / a.len() as f64, sb * sb / b.len() as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        let p = if ma == mb { 1.0 } else { 0.0 };
        return Some(WelchTest { t: if ma == mb { 0.0 } else { f64::INFINITY.copysign(ma - mb) }, df: f64::INFINITY, p });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Some(WelchTest { t, df, p })
}
