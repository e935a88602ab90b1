//! Two hand-made trajectories, their transport plan, and the proxy rewards
//! each step earns.

use ot_distill::grid::{Action, Observation};
use ot_distill::ot::{build_atoms, proxy_rewards, sinkhorn, ProxyRewardConfig, SinkhornConfig};
use ot_distill::trajectory::{Trajectory, Transition};

fn walk(task: usize, cells: &[(f32, f32)], actions: &[Action]) -> Trajectory {
    let steps = cells
        .iter()
        .zip(actions)
        .map(|(&(row, col), &action)| {
            let obs = Observation { row, col };
            Transition { obs, action, reward: -0.1, next_obs: obs, terminal: false, done: false }
        })
        .collect();
    Trajectory { task, steps }
}

fn main() {
    // both walk right along the top row, then one turns down and the other up
    let a = walk(
        0,
        &[(0.1, 0.1), (0.1, 0.2), (0.1, 0.3), (0.2, 0.3)],
        &[Action::Right, Action::Right, Action::Down, Action::Down],
    );
    let b = walk(
        1,
        &[(0.1, 0.1), (0.1, 0.2), (0.1, 0.3), (0.0, 0.3)],
        &[Action::Right, Action::Right, Action::Up, Action::Up],
    );
    let (sa, sb) = (build_atoms(&a).unwrap(), build_atoms(&b).unwrap());
    let plan = sinkhorn(&sa, &sb, &SinkhornConfig { epsilon: 0.5, ..SinkhornConfig::default() }).unwrap();
    println!(
        "Sinkhorn: {} iterations, marginal error {:.2e}, transport cost {:.4}",
        plan.iterations,
        plan.marginal_error,
        plan.transport_cost()
    );

    let (ca, cb) = plan.contributions();
    let cfg = ProxyRewardConfig { sigma: 0.1, beta: 5.0, horizon: a.len(), state_dim: 2, action_dim: 4 };
    let (ra, rb) = (proxy_rewards(&ca, &cfg), proxy_rewards(&cb, &cfg));
    println!("{:>4} {:>12} {:>10} {:>12} {:>10}", "step", "contrib(a)", "reward(a)", "contrib(b)", "reward(b)");
    for t in 0..a.len() {
        println!("{t:>4} {:>12.5} {:>10.5} {:>12.5} {:>10.5}", ca.values()[t], ra[t], cb.values()[t], rb[t]);
    }
}
