//! Trains a single discrete SAC agent on the 5×5 room and compares its greedy
//! return with the optimum.
//!
//! `cargo run --release --example sac_room -- [steps]`

use std::path::Path;

use ot_distill::experiment::{evaluate_all_starts, run, ExperimentConfig};
use ot_distill::grid::{optimal_returns, GridEnv};

fn main() {
    let steps = std::env::args().nth(1).map_or(50_000, |s| s.parse().expect("steps"));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/configs/room5.toml");
    let mut cfg = ExperimentConfig::load(&path).unwrap();
    cfg.seeds = vec![0];
    cfg.timesteps = steps;

    let map = std::sync::Arc::new(cfg.load_map().unwrap());
    let scheme = cfg.reward_scheme(&map);
    let opt = optimal_returns(&map, &scheme, cfg.sac.gamma, cfg.horizon)[0].undiscounted;

    let out = run(&cfg).unwrap();
    for e in out.log.evals.iter() {
        println!("step {:>6}: eval return {:.3} ± {:.3}", e.env_steps, e.mean_return, e.std_return);
    }
    let env = GridEnv::new(map, 0, scheme, cfg.horizon).unwrap();
    let greedy = evaluate_all_starts(&out.seeds[0].agents[0], &env).unwrap();
    println!("greedy return over all starts {greedy:.3}, optimum {opt:.3}");
}
