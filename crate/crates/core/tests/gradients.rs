use ndarray::{Array2, ArrayView2};
use ot_distill::nn::Mlp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss(net: &Mlp<f64>, x: &Array2<f64>, g: &Array2<f64>) -> f64 {
    (net.forward(x.view()).unwrap() * g).sum()
}

#[test]
fn backward_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut net: Mlp<f64> = Mlp::new(&[6, 32, 32, 4], &mut rng).unwrap();
    let x = Array2::from_shape_fn((5, 6), |_| rng.random_range(-1.0..1.0));
    let g = Array2::from_shape_fn((5, 4), |_| rng.random_range(-1.0..1.0));
    let acts = net.forward_cached(x.view()).unwrap();
    let grads = net.backward(&acts, ArrayView2::from(&g)).unwrap().flatten();
    let params = net.flat_params();
    assert_eq!(grads.len(), params.len());

    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(0..params.len());
        let mut p = params.clone();
        p[k] = params[k] + h;
        net.set_flat_params(&p);
        let up = loss(&net, &x, &g);
        p[k] = params[k] - h;
        net.set_flat_params(&p);
        let down = loss(&net, &x, &g);
        net.set_flat_params(&params);
        let numeric = (up - down) / (2.0 * h);
        let rel = (grads[k] - numeric).abs() / grads[k].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn single_sample_wrapper_agrees_with_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net: Mlp<f64> = Mlp::new(&[2, 8, 3], &mut rng).unwrap();
    let x = [0.3, -0.7];
    let g = [1.0, -2.0, 0.5];
    let a = net.gradients(&x, &g).unwrap().flatten();
    let xb = Array2::from_shape_vec((1, 2), x.to_vec()).unwrap();
    let gb = Array2::from_shape_vec((1, 3), g.to_vec()).unwrap();
    let b = net.backward(&net.forward_cached(xb.view()).unwrap(), gb.view()).unwrap().flatten();
    assert_eq!(a, b);
}
