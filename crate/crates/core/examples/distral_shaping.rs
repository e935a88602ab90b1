//! The Distral reward shaping and the distillation of a shared policy from two
//! tasks that disagree on one state.

use ot_distill::distral::{augmented_reward, DistralConfig, DistilledPolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let cfg = DistralConfig::default();
    let uniform = 0.25_f64.ln();
    println!(
        "shaped reward of -0.1 when both policies are uniform: {:.4}",
        augmented_reward(-0.1, uniform, uniform, &cfg)
    );
    println!(
        "  ... when the task policy is sure (p = 0.97) and the default is not: {:.4}",
        augmented_reward(-0.1, 0.97_f64.ln(), uniform, &cfg)
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut p0 = DistilledPolicy::new(&[2, 32, 32, 4], 1e-2, &mut rng).unwrap();
    let obs = vec![[0.5_f32, 0.5]; 64];
    // task 1 always goes Up, task 2 always goes Down
    let actions: Vec<usize> = (0..64).map(|i| if i % 2 == 0 { 0 } else { 1 }).collect();
    for step in 0..=300 {
        let loss = p0.distill_update(&obs, &actions).unwrap();
        if step % 100 == 0 {
            println!("step {step:>3}: cross-entropy {loss:.4}");
        }
    }
    let p = p0.probs(&[0.5, 0.5]).unwrap();
    println!("distilled policy at the contested state: {:?}", p.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>());
}
