//! Short runs of all three modes on one environment, summarized as a table.
//!
//! `cargo run --release --example multitask_compare -- [env] [steps] [seeds]`

use std::path::Path;

use ot_distill::experiment::{run, ExperimentConfig, Mode, ModeRun, ResultTable};
use ot_distill::grid::optimal_returns;

fn main() {
    let mut args = std::env::args().skip(1);
    let env = args.next().unwrap_or_else(|| "zigzag".into());
    let steps = args.next().map_or(10_000, |s| s.parse().expect("steps"));
    let seeds: u64 = args.next().map_or(2, |s| s.parse().expect("seeds"));

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("assets/configs/{env}.toml"));
    let base = ExperimentConfig::load(&path).unwrap();
    let mut runs = Vec::new();
    for mode in Mode::ALL {
        let mut cfg = base.clone();
        cfg.mode = mode;
        cfg.timesteps = steps;
        cfg.seeds = (0..seeds).collect();
        cfg.sac.hidden_width = 64;
        cfg.eval_cadence = 0;
        cfg.final_window = cfg.final_window.min(steps);
        eprintln!("running {} ...", mode.name());
        let out = run(&cfg).unwrap();
        runs.push(ModeRun { cfg, log: out.log });
    }
    let map = base.load_map().unwrap();
    let opt: Vec<f64> = optimal_returns(&map, &base.reward_scheme(&map), base.sac.gamma, base.horizon)
        .iter()
        .take(base.task_count(&map))
        .map(|o| o.undiscounted)
        .collect();
    print!("{}", ResultTable::build(&runs, &opt).unwrap().render());
}
