//! Exact finite-horizon dynamic programming over `(free cell, steps left)`.

use super::{Action, GridMap, RewardScheme};

/// Expected return of the optimal policy under the uniform start distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalReturn {
    pub task: usize,
    /// Objective the policy was optimized for (`gamma`-discounted).
    pub discounted: f64,
    /// Plain episode return of that same policy; what training curves report.
    pub undiscounted: f64,
}

/// Value tables for one task, indexed `[steps_left][state]`.
#[derive(Debug, Clone)]
pub struct TaskValues {
    pub task: usize,
    pub value: Vec<Vec<f64>>,
    pub episode_return: Vec<Vec<f64>>,
    pub policy: Vec<Vec<Action>>,
}

impl TaskValues {
    /// Optimal action with `steps_left ≥ 1` remaining (ties → lowest index).
    pub fn action(&self, state: usize, steps_left: usize) -> Action {
        self.policy[steps_left][state]
    }
}

pub fn optimal_values(
    map: &GridMap,
    scheme: &RewardScheme,
    task: usize,
    gamma: f64,
    horizon: usize,
) -> TaskValues {
    let n = map.n_states();
    let goal = map.state_of(map.goal(task)).expect("goal is free");
    let mut value = vec![vec![0.0; n]];
    let mut episode_return = vec![vec![0.0; n]];
    let mut policy = vec![vec![Action::Up; n]];
    for k in 1..=horizon {
        let (prev_v, prev_r) = (&value[k - 1], &episode_return[k - 1]);
        let mut v = vec![0.0; n];
        let mut ret = vec![0.0; n];
        let mut pi = vec![Action::Up; n];
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in Action::ALL {
                let (next, collided) = map.transition(s, a);
                let terminal = next == goal;
                let r = scheme.reward(terminal, collided);
                let (q, u) = if terminal {
                    (r, r)
                } else {
                    (r + gamma * prev_v[next], r + prev_r[next])
                };
                if q > best {
                    best = q;
                    v[s] = q;
                    ret[s] = u;
                    pi[s] = a;
                }
            }
        }
        value.push(v);
        episode_return.push(ret);
        policy.push(pi);
    }
    TaskValues {
        task,
        value,
        episode_return,
        policy,
    }
}

/// Optimal expected return per task, averaged over uniform non-goal starts.
/// A task whose goal is the only free cell has no starts and scores 0.
pub fn optimal_returns(
    map: &GridMap,
    scheme: &RewardScheme,
    gamma: f64,
    horizon: usize,
) -> Vec<OptimalReturn> {
    (0..map.n_tasks())
        .map(|task| {
            let tables = optimal_values(map, scheme, task, gamma, horizon);
            let goal = map.state_of(map.goal(task)).unwrap();
            let starts: Vec<usize> = (0..map.n_states()).filter(|&s| s != goal).collect();
            if starts.is_empty() {
                return OptimalReturn {
                    task,
                    discounted: 0.0,
                    undiscounted: 0.0,
                };
            }
            let mean = |table: &[f64]| starts.iter().map(|&s| table[s]).sum::<f64>() / starts.len() as f64;
            OptimalReturn {
                task,
                discounted: mean(&tables.value[horizon]),
                undiscounted: mean(&tables.episode_return[horizon]),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corridor_values_by_hand() {
        // goal at the left end; from distance d the return is -0.1·(d-1) + goal
        let map = GridMap::parse("######\n#1...#\n######").unwrap();
        let scheme = RewardScheme { step_penalty: -0.1, wall_penalty: -0.1, goal_reward: 5.0 };
        let v = optimal_values(&map, &scheme, 0, 1.0, 10);
        for d in 1..=3 {
            let s = map.state_of((1, 1 + d)).unwrap();
            let expected = -0.1 * (d as f64 - 1.0) + 5.0;
            assert!((v.value[10][s] - expected).abs() < 1e-12);
            assert_eq!(v.action(s, 10), Action::Left);
        }
        let opt = optimal_returns(&map, &scheme, 1.0, 10)[0];
        let expected = (5.0 + 4.9 + 4.8) / 3.0;
        assert!((opt.undiscounted - expected).abs() < 1e-12);
    }

    #[test]
    fn too_short_horizon_means_wandering() {
        let map = GridMap::parse("######\n#1...#\n######").unwrap();
        let scheme = RewardScheme { step_penalty: -0.1, wall_penalty: -0.1, goal_reward: 5.0 };
        let v = optimal_values(&map, &scheme, 0, 1.0, 2);
        let far = map.state_of((1, 4)).unwrap();
        assert!((v.value[2][far] - (-0.2)).abs() < 1e-12);
    }

    #[test]
    fn goal_only_map_scores_zero() {
        let map = GridMap::parse("###\n#1#\n###").unwrap();
        let scheme = RewardScheme::for_map(&map);
        let opt = optimal_returns(&map, &scheme, 0.99, 100);
        assert_eq!(opt[0].undiscounted, 0.0);
        assert_eq!(opt[0].discounted, 0.0);
    }
}
