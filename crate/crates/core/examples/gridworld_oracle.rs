//! Prints every bundled map with its optimal returns from exact dynamic programming.

use std::path::Path;

use ot_distill::grid::{optimal_returns, GridMap, RewardScheme};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/maps");
    for name in ["room5", "zigzag", "separated", "maze"] {
        let map = GridMap::load(&dir.join(format!("{name}.map"))).unwrap();
        let scheme = RewardScheme::for_map(&map);
        println!("== {name}: {}×{}, {} free cells, diameter {}", map.height(), map.width(), map.n_states(), map.diameter());
        print!("{}", map.to_ascii());
        println!("goal reward {:.2}", scheme.goal_reward);
        for o in optimal_returns(&map, &scheme, 0.99, 100) {
            println!("  task {}: return {:.3}, discounted {:.3}", o.task + 1, o.undiscounted, o.discounted);
        }
        println!();
    }
}
