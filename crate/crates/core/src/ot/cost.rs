use ndarray::{concatenate, Array1, Array2, Axis};

use super::{AtomSet, OtError};

/// Pairwise Euclidean distances after z-scoring every coordinate over the
/// union of both atom sets.
///
/// A coordinate with (numerically) zero spread over the union is only
/// mean-centered; it then contributes nothing to any distance.
pub fn cost_matrix(a: &AtomSet, b: &AtomSet) -> Result<Array2<f64>, OtError> {
    if a.dim() != b.dim() {
        return Err(OtError::DimensionMismatch(a.dim(), b.dim()));
    }
    let union = concatenate(Axis(0), &[a.atoms().view(), b.atoms().view()]).expect("dims match");
    let n = union.nrows() as f64;
    let d = a.dim();
    let mut mean = Array1::zeros(d);
    let mut inv_std = Array1::ones(d);
    for (j, col) in union.columns().into_iter().enumerate() {
        let mu = col.sum() / n;
        let var = col.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
        let scale = col.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
        let std = var.sqrt();
        mean[j] = mu;
        if scale > 0.0 && std > 1e-12 * scale {
            inv_std[j] = 1.0 / std;
        }
    }
    let normalize = |x: &Array2<f64>| (x - &mean) * &inv_std;
    let za = normalize(a.atoms());
    let zb = normalize(b.atoms());
    let mut cost = Array2::zeros((a.len(), b.len()));
    for (i, ra) in za.rows().into_iter().enumerate() {
        for (j, rb) in zb.rows().into_iter().enumerate() {
            let sq: f64 = ra.iter().zip(rb.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
            cost[[i, j]] = sq.sqrt();
        }
    }
    Ok(cost)
}
