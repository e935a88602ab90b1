//! Trains OT-sharing agents on the zigzag map and renders where the proxy
//! reward is high.
//!
//! `cargo run --release --example heatmap -- [steps] [out_dir]`

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ot_distill::experiment::{run, seed_heatmap, ExperimentConfig, Mode};

fn main() {
    let mut args = std::env::args().skip(1);
    let steps = args.next().map_or(20_000, |s| s.parse().expect("steps"));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "heatmap_out".into()));

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/configs/zigzag.toml");
    let mut cfg = ExperimentConfig::load(&path).unwrap();
    cfg.mode = Mode::OtSharing;
    cfg.seeds = vec![0];
    cfg.timesteps = steps;
    cfg.sac.hidden_width = 64;
    cfg.eval_cadence = 0;
    cfg.final_window = cfg.final_window.min(steps);

    let map = Arc::new(cfg.load_map().unwrap());
    let result = run(&cfg).unwrap();
    let heat = seed_heatmap(&cfg, &map, &result.seeds[0].agents, 0).unwrap();

    if let Some(corridor) = map.region("corridor") {
        let inside = heat.mean_over(corridor).unwrap();
        let outside: Vec<_> = map.free_cells().iter().copied().filter(|c| !corridor.contains(c)).collect();
        println!("mean proxy reward: corridor {inside:.4}, elsewhere {:.4}", heat.mean_over(&outside).unwrap());
    }
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join("heatmap.csv"), heat.to_csv()).unwrap();
    std::fs::write(out.join("heatmap.svg"), heat.to_svg(cfg.proxy.sigma, "zigzag")).unwrap();
    println!("wrote {}", out.display());
}
