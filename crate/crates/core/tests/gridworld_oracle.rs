use ot_distill::grid::{optimal_values, Action, GridEnv, GridMap, RewardScheme};
use std::sync::Arc;

// every open-loop action sequence is a policy here, since moves are deterministic
fn best_by_enumeration(env: &mut GridEnv, start: usize, horizon: usize, gamma: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for code in 0..4usize.pow(horizon as u32) {
        env.reset_to(start);
        let (mut ret, mut disc, mut c) = (0.0, 1.0, code);
        for _ in 0..horizon {
            if env.is_done() {
                break;
            }
            let step = env.step(Action::ALL[c % 4]).unwrap();
            c /= 4;
            ret += disc * step.reward;
            disc *= gamma;
        }
        best = best.max(ret);
    }
    best
}

#[test]
fn dynamic_programming_matches_exhaustive_search() {
    let maps = ["#####\n#.1.#\n#..2#\n#####", "######\n#1...#\n##.###\n######", "#####\n#1#2#\n#.#.#\n#####"];
    for text in maps {
        let map = Arc::new(GridMap::parse(text).unwrap());
        assert!(map.n_states() <= 6);
        let scheme = RewardScheme::for_map(&map);
        for task in 0..map.n_tasks() {
            for horizon in 1..=6 {
                for gamma in [1.0, 0.9] {
                    let tables = optimal_values(&map, &scheme, task, gamma, horizon);
                    let mut env = GridEnv::new(map.clone(), task, scheme, horizon).unwrap();
                    let goal = map.state_of(map.goal(task)).unwrap();
                    for s in (0..map.n_states()).filter(|&s| s != goal) {
                        let brute = best_by_enumeration(&mut env, s, horizon, gamma);
                        let dp = tables.value[horizon][s];
                        assert!((dp - brute).abs() < 1e-9, "map {text:?} task {task} T={horizon} γ={gamma} s={s}: {dp} vs {brute}");
                    }
                }
            }
        }
    }
}

#[test]
fn following_the_oracle_policy_earns_its_return() {
    let map = Arc::new(GridMap::parse("#######\n#1....#\n#.###.#\n#....2#\n#######").unwrap());
    let scheme = RewardScheme::for_map(&map);
    for task in 0..2 {
        let tables = optimal_values(&map, &scheme, task, 0.99, 20);
        let mut env = GridEnv::new(map.clone(), task, scheme, 20).unwrap();
        let goal = map.state_of(map.goal(task)).unwrap();
        for s in (0..map.n_states()).filter(|&s| s != goal) {
            env.reset_to(s);
            let mut ret = 0.0;
            while !env.is_done() {
                let left = 20 - env.steps_taken();
                ret += env.step(tables.action(env.state().unwrap(), left)).unwrap().reward;
            }
            assert!((ret - tables.episode_return[20][s]).abs() < 1e-9);
        }
    }
}
