use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Action, GridError, GridMap, Observation};

/// Per-step rewards of a task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardScheme {
    pub step_penalty: f64,
    /// Added on top of `step_penalty` when a move is blocked by a wall.
    pub wall_penalty: f64,
    /// Paid instead of the step penalty on entering the goal.
    pub goal_reward: f64,
}

impl RewardScheme {
    pub const STEP_PENALTY: f64 = -0.1;
    pub const WALL_PENALTY: f64 = -0.1;

    /// Default scheme: `-0.1` per step, `-0.1` extra per collision and a goal
    /// reward of `0.1 × diameter + 5`, so larger maps pay more on success.
    pub fn for_map(map: &GridMap) -> Self {
        Self {
            step_penalty: Self::STEP_PENALTY,
            wall_penalty: Self::WALL_PENALTY,
            goal_reward: 0.1 * map.diameter() as f64 + 5.0,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.step_penalty) && self.step_penalty < 0.0) {
            return Err(GridError::BadScheme(format!(
                "step_penalty must be negative, got {}",
                self.step_penalty
            )));
        }
        if !(ok(self.wall_penalty) && self.wall_penalty < 0.0) {
            return Err(GridError::BadScheme(format!(
                "wall_penalty must be negative, got {}",
                self.wall_penalty
            )));
        }
        if !(ok(self.goal_reward) && self.goal_reward > 0.0) {
            return Err(GridError::BadScheme(format!(
                "goal_reward must be positive, got {}",
                self.goal_reward
            )));
        }
        Ok(())
    }

    /// Reward of one transition.
    pub fn reward(&self, reached_goal: bool, collided: bool) -> f64 {
        if reached_goal {
            self.goal_reward
        } else if collided {
            self.step_penalty + self.wall_penalty
        } else {
            self.step_penalty
        }
    }
}

/// Outcome of [`GridEnv::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub obs: Observation,
    pub reward: f64,
    /// Episode over, either at the goal or at the horizon.
    pub done: bool,
    /// Episode ended by entering the goal (no bootstrapping past this step).
    pub terminal: bool,
    pub collided: bool,
}

/// One task on a shared map. Not synchronized: drive each instance from one thread.
#[derive(Debug, Clone)]
pub struct GridEnv {
    map: Arc<GridMap>,
    task: usize,
    scheme: RewardScheme,
    horizon: usize,
    starts: Vec<usize>,
    goal_state: usize,
    state: Option<usize>,
    t: usize,
    done: bool,
}

impl GridEnv {
    pub fn new(
        map: Arc<GridMap>,
        task: usize,
        scheme: RewardScheme,
        horizon: usize,
    ) -> Result<Self, GridError> {
        if task >= map.n_tasks() {
            return Err(GridError::NoSuchTask {
                task,
                n_tasks: map.n_tasks(),
            });
        }
        scheme.validate()?;
        let goal_state = map.state_of(map.goal(task)).expect("goals are free");
        let starts = (0..map.n_states()).filter(|&s| s != goal_state).collect();
        Ok(Self {
            map,
            task,
            scheme,
            horizon,
            starts,
            goal_state,
            state: None,
            t: 0,
            done: false,
        })
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn task(&self) -> usize {
        self.task
    }

    pub fn scheme(&self) -> &RewardScheme {
        &self.scheme
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Start states: every free cell except this task's goal.
    pub fn start_states(&self) -> &[usize] {
        &self.starts
    }

    pub fn goal_state(&self) -> usize {
        self.goal_state
    }

    pub fn state(&self) -> Option<usize> {
        self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn observe(&self, state: usize) -> Observation {
        Observation::of_cell(&self.map, self.map.cell_of(state))
    }

    /// Places the agent uniformly on a non-goal free cell.
    ///
    /// On a map whose only free cell is the goal the agent starts there and
    /// the episode is already over.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Observation {
        if self.starts.is_empty() {
            let obs = self.reset_to(self.goal_state);
            self.done = true;
            return obs;
        }
        let s = self.starts[rng.random_range(0..self.starts.len())];
        self.reset_to(s)
    }

    /// Starts an episode from a given state id.
    pub fn reset_to(&mut self, state: usize) -> Observation {
        assert!(state < self.map.n_states(), "state {state} out of range");
        self.state = Some(state);
        self.t = 0;
        self.done = state == self.goal_state || self.horizon == 0;
        self.observe(state)
    }

    pub fn step(&mut self, action: Action) -> Result<Step, GridError> {
        let state = self.state.ok_or(GridError::NotStarted)?;
        if self.done {
            return Err(GridError::EpisodeFinished);
        }
        let (next, collided) = self.map.transition(state, action);
        let terminal = next == self.goal_state;
        self.state = Some(next);
        self.t += 1;
        self.done = terminal || self.t >= self.horizon;
        Ok(Step {
            obs: self.observe(next),
            reward: self.scheme.reward(terminal, collided),
            done: self.done,
            terminal,
            collided,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn env(text: &str, task: usize) -> GridEnv {
        let map = Arc::new(GridMap::parse(text).unwrap());
        let scheme = RewardScheme::for_map(&map);
        GridEnv::new(map, task, scheme, 100).unwrap()
    }

    const HALL: &str = "#######\n#1...2#\n#######";

    #[test]
    fn entering_goal_terminates_with_goal_reward() {
        let mut e = env(HALL, 0);
        let s = e.map().state_of((1, 2)).unwrap();
        e.reset_to(s);
        let step = e.step(Action::Left).unwrap();
        assert_eq!(step.reward, e.scheme().goal_reward);
        assert!(step.done && step.terminal && !step.collided);
        assert!(matches!(e.step(Action::Left), Err(GridError::EpisodeFinished)));
    }

    #[test]
    fn wall_bump_stays_and_pays_both_penalties() {
        let mut e = env(HALL, 0);
        let s = e.map().state_of((1, 3)).unwrap();
        let before = e.reset_to(s);
        let step = e.step(Action::Up).unwrap();
        assert_eq!(step.obs, before);
        assert!(step.collided && !step.done);
        assert!((step.reward - (-0.2)).abs() < 1e-15);
    }

    #[test]
    fn wandering_without_collisions_returns_minus_ten() {
        let mut e = env(HALL, 0);
        e.reset_to(e.map().state_of((1, 3)).unwrap());
        let mut ret = 0.0;
        let mut n = 0;
        loop {
            let a = if n % 2 == 0 { Action::Right } else { Action::Left };
            let s = e.step(a).unwrap();
            ret += s.reward;
            n += 1;
            if s.done {
                assert!(!s.terminal);
                break;
            }
        }
        assert_eq!(n, 100);
        assert!((ret - (-10.0)).abs() < 1e-9, "{ret}");
    }

    #[test]
    fn one_cell_map_spawns_on_the_only_cell() {
        let mut e = env("###\n#1#\n###", 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..5 {
            let obs = e.reset(&mut rng);
            assert_eq!(obs, Observation { row: 1.0 / 3.0, col: 1.0 / 3.0 });
            assert!(e.is_done());
        }
    }

    #[test]
    fn tasks_share_dynamics() {
        let mut a = env(HALL, 0);
        let mut b = env(HALL, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in 0..a.map().n_states() {
            for act in Action::ALL {
                a.reset_to(s);
                b.reset_to(s);
                if a.is_done() || b.is_done() {
                    continue;
                }
                let (sa, sb) = (a.step(act).unwrap(), b.step(act).unwrap());
                assert_eq!(sa.obs, sb.obs);
                assert_eq!(sa.collided, sb.collided);
            }
        }
        // identical seed + actions → identical rollouts
        let roll = |rng: &mut ChaCha8Rng| {
            let mut e = env(HALL, 1);
            let mut out = vec![e.reset(rng)];
            for k in 0..10 {
                if e.is_done() {
                    break;
                }
                out.push(e.step(Action::ALL[k % 4]).unwrap().obs);
            }
            out
        };
        let mut r2 = rng.clone();
        assert_eq!(roll(&mut rng), roll(&mut r2));
    }

    #[test]
    fn spawn_is_uniform_over_non_goal_cells() {
        // 11 free cells, one is the goal → 10 start cells
        let mut e = env("#############\n#1..........#\n#############", 0);
        assert_eq!(e.start_states().len(), 10);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 11];
        let n = 10_000;
        for _ in 0..n {
            e.reset(&mut rng);
            counts[e.state().unwrap()] += 1;
        }
        assert_eq!(counts[e.goal_state()], 0);
        let expected = n as f64 / 10.0;
        let chi2: f64 = e
            .start_states()
            .iter()
            .map(|&s| (counts[s] as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2={chi2} p={p}");
    }

    #[test]
    fn rewards_take_three_values() {
        let mut e = env("######\n#1...#\n#.##.#\n#...2#\n######", 1);
        let s = e.scheme().to_owned();
        let allowed = [s.step_penalty, s.step_penalty + s.wall_penalty, s.goal_reward];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            e.reset(&mut rng);
            while !e.is_done() {
                let a = Action::ALL[rng.random_range(0..4)];
                let step = e.step(a).unwrap();
                assert!(allowed.contains(&step.reward));
            }
        }
    }

    #[test]
    fn scheme_validation() {
        let mut s = RewardScheme { step_penalty: -0.1, wall_penalty: -0.1, goal_reward: 5.0 };
        assert!(s.validate().is_ok());
        s.wall_penalty = 0.0;
        assert!(s.validate().is_err());
    }
}
