use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use ndarray::{Array1, Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::{cost_matrix, AtomSet, ContributionVector, OtError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkhornConfig {
    /// Entropic regularization strength, on the scale of the (normalized) costs.
    pub epsilon: f64,
    pub max_iters: usize,
    /// L1 marginal error below which iteration stops.
    pub tolerance: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            max_iters: 2000,
            tolerance: 1e-6,
        }
    }
}

/// Solution of the entropic transport problem between two weighted atom sets.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub cost: Array2<f64>,
    pub coupling: Array2<f64>,
    pub epsilon: f64,
    pub iterations: usize,
    /// `max(row L1 error, column L1 error)` of the returned coupling.
    pub marginal_error: f64,
    /// Whether `marginal_error` reached the requested tolerance.
    pub converged: bool,
}

/// Entropic OT between two atom sets on their joint-normalized cost matrix.
pub fn sinkhorn(a: &AtomSet, b: &AtomSet, cfg: &SinkhornConfig) -> Result<TransportPlan, OtError> {
    let cost = cost_matrix(a, b)?;
    TransportPlan::solve(cost, a.weights(), b.weights(), cfg)
}

// scalings are folded into the potentials once they leave [e^-LOG_BOUND, e^LOG_BOUND]
const LOG_BOUND: f64 = 50.0;

impl TransportPlan {
    /// Sinkhorn iterations in the log-stabilized form: the kernel is kept as
    /// `exp((f_i + g_j - M_ij)/ε)` with dual potentials `f, g`, and the scaling
    /// vectors are absorbed into the potentials whenever they grow large.
    /// Equivalent to plain Sinkhorn on `exp(-M/ε)` without its underflow.
    ///
    /// Not converging within `max_iters` is not an error: the plan comes back
    /// with `converged == false` and its actual marginal error.
    pub fn solve(
        cost: Array2<f64>,
        a: &Array1<f64>,
        b: &Array1<f64>,
        cfg: &SinkhornConfig,
    ) -> Result<Self, OtError> {
        let (m, k) = cost.dim();
        if m != a.len() || k != b.len() || m == 0 || k == 0 {
            return Err(OtError::CostShape { rows: m, cols: k, m: a.len(), k: b.len() });
        }
        let eps = cfg.epsilon;
        if !(eps.is_finite() && eps > 0.0) {
            return Err(OtError::BadEpsilon(eps));
        }
        if let Some(((i, j), _)) = cost.indexed_iter().find(|(_, &c)| !(c.is_finite() && c >= 0.0)) {
            return Err(OtError::BadCost(i, j));
        }
        for w in [a, b] {
            let sum = w.sum();
            if w.iter().any(|&x| x.is_nan() || x < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(OtError::BadWeights { sum });
            }
        }

        // Start from potentials that put a 1 in every row and column of the kernel.
        let mut f: Array1<f64> = cost.map_axis(Axis(1), |row| row.fold(f64::INFINITY, |m, &x| m.min(x)));
        let mut g: Array1<f64> = Array1::from_shape_fn(k, |j| {
            (0..m).fold(f64::INFINITY, |acc, i| acc.min(cost[[i, j]] - f[i]))
        });
        let mut kernel = stabilized_kernel(&cost, &f, &g, eps);
        let mut u = Array1::<f64>::ones(m);
        let mut v = Array1::<f64>::ones(k);
        let mut kv = kernel.dot(&v);
        let mut iterations = 0;

        for it in 1..=cfg.max_iters {
            iterations = it;
            Zip::from(&mut u).and(a).and(&kv).for_each(|u, &a, &kv| *u = if a > 0.0 { a / kv } else { 0.0 });
            let ktu = kernel.t().dot(&u);
            Zip::from(&mut v).and(b).and(&ktu).for_each(|v, &b, &ktu| *v = if b > 0.0 { b / ktu } else { 0.0 });
            kv = kernel.dot(&v);

            if !(u.iter().chain(v.iter()).all(|x| x.is_finite())) {
                return Err(OtError::NonFiniteKernel { iterations: it });
            }
            let row_err: f64 = Zip::from(&u).and(&kv).and(a).fold(0.0, |s, &u, &kv, &a| s + (u * kv - a).abs());
            if row_err < cfg.tolerance {
                break;
            }

            let out_of_range = |x: &f64| *x > 0.0 && x.ln().abs() > LOG_BOUND;
            if u.iter().any(out_of_range) || v.iter().any(out_of_range) {
                Zip::from(&mut f).and(&u).for_each(|f, &u| if u > 0.0 { *f += eps * u.ln() });
                Zip::from(&mut g).and(&v).for_each(|g, &v| if v > 0.0 { *g += eps * v.ln() });
                kernel = stabilized_kernel(&cost, &f, &g, eps);
                u.fill(1.0);
                v.fill(1.0);
                kv = kernel.dot(&v);
            }
        }

        let mut coupling = kernel;
        for (mut row, &ui) in coupling.rows_mut().into_iter().zip(u.iter()) {
            Zip::from(&mut row).and(&v).for_each(|p, &vj| *p *= ui * vj);
        }
        if coupling.iter().any(|p| !p.is_finite()) {
            return Err(OtError::NonFiniteKernel { iterations });
        }
        let marginal_error = marginal_errors(&coupling, a, b);
        Ok(Self {
            cost,
            coupling,
            epsilon: eps,
            iterations,
            marginal_error,
            converged: marginal_error <= cfg.tolerance,
        })
    }

    /// `⟨P, M⟩`, the transport part of the Sinkhorn objective.
    pub fn transport_cost(&self) -> f64 {
        Zip::from(&self.coupling).and(&self.cost).fold(0.0, |s, &p, &c| s + p * c)
    }

    /// Per-atom shares of the transport cost: row sums (source) and column
    /// sums (target) of `P ⊙ M`.
    pub fn contributions(&self) -> (ContributionVector, ContributionVector) {
        let weighted = &self.coupling * &self.cost;
        (
            ContributionVector::new(weighted.sum_axis(Axis(1))),
            ContributionVector::new(weighted.sum_axis(Axis(0))),
        )
    }

    /// Writes `cost.csv`, `coupling.csv` and `contributions.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("cost.csv"), matrix_csv(&self.cost))?;
        fs::write(dir.join("coupling.csv"), matrix_csv(&self.coupling))?;
        let (src, tgt) = self.contributions();
        let mut s = String::from("side,index,contribution\n");
        for (side, c) in [("source", &src), ("target", &tgt)] {
            for (i, v) in c.values().iter().enumerate() {
                writeln!(s, "{side},{i},{v}").unwrap();
            }
        }
        fs::write(dir.join("contributions.csv"), s)
    }
}

fn stabilized_kernel(cost: &Array2<f64>, f: &Array1<f64>, g: &Array1<f64>, eps: f64) -> Array2<f64> {
    let inv = 1.0 / eps;
    Array2::from_shape_fn(cost.dim(), |(i, j)| ((f[i] + g[j] - cost[[i, j]]) * inv).exp())
}

fn marginal_errors(p: &Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let rows = p.sum_axis(Axis(1));
    let cols = p.sum_axis(Axis(0));
    let l1 = |x: &Array1<f64>, y: &Array1<f64>| x.iter().zip(y).map(|(x, y)| (x - y).abs()).sum::<f64>();
    l1(&rows, a).max(l1(&cols, b))
}

fn matrix_csv(m: &Array2<f64>) -> String {
    let mut s = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn uniform(n: usize) -> Array1<f64> {
        Array1::from_elem(n, 1.0 / n as f64)
    }

    #[test]
    fn two_by_two_swap_cost() {
        let cost = array![[0.0, 1.0], [1.0, 0.0]];
        let cfg = SinkhornConfig { epsilon: 0.01, max_iters: 1000, tolerance: 1e-9 };
        let plan = TransportPlan::solve(cost, &uniform(2), &uniform(2), &cfg).unwrap();
        assert!(plan.converged);
        assert!((plan.coupling[[0, 0]] - 0.5).abs() < 1e-9);
        assert!((plan.coupling[[1, 1]] - 0.5).abs() < 1e-9);
        assert!(plan.coupling[[0, 1]] < 1e-30);
        assert!(plan.transport_cost() < 1e-30);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = SinkhornConfig::default();
        let c = array![[0.0, 1.0]];
        assert!(matches!(
            TransportPlan::solve(c.clone(), &uniform(1), &uniform(2), &SinkhornConfig { epsilon: 0.0, ..cfg }),
            Err(OtError::BadEpsilon(_))
        ));
        assert!(matches!(
            TransportPlan::solve(array![[0.0, f64::NAN]], &uniform(1), &uniform(2), &cfg),
            Err(OtError::BadCost(0, 1))
        ));
        assert!(matches!(
            TransportPlan::solve(c, &uniform(2), &uniform(2), &cfg),
            Err(OtError::CostShape { .. })
        ));
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let cost = array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]];
        let a = array![0.6, 0.3, 0.1];
        let b = array![0.1, 0.3, 0.6];
        let cfg = SinkhornConfig { epsilon: 0.001, max_iters: 1, tolerance: 1e-12 };
        let plan = TransportPlan::solve(cost, &a, &b, &cfg).unwrap();
        assert!(!plan.converged);
        assert!(plan.marginal_error > 1e-12);
        assert_eq!(plan.iterations, 1);
    }

    #[test]
    fn tiny_epsilon_stays_finite() {
        // exp(-M/ε) underflows to zero everywhere off the diagonal here
        let cost = array![[0.0, 50.0, 80.0], [50.0, 3.0, 60.0], [80.0, 60.0, 1.0]];
        let cfg = SinkhornConfig { epsilon: 1e-3, max_iters: 10_000, tolerance: 1e-9 };
        let plan = TransportPlan::solve(cost, &uniform(3), &uniform(3), &cfg).unwrap();
        assert!(plan.converged);
        assert!((plan.transport_cost() - 4.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn csv_dump_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let plan = TransportPlan::solve(array![[0.0, 1.0], [1.0, 0.0]], &uniform(2), &uniform(2), &SinkhornConfig::default()).unwrap();
        plan.write_csv(dir.path()).unwrap();
        for f in ["cost.csv", "coupling.csv", "contributions.csv"] {
            assert!(dir.path().join(f).exists());
        }
        let c = fs::read_to_string(dir.path().join("contributions.csv")).unwrap();
        assert_eq!(c.lines().count(), 5);
    }
}
