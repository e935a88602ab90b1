//! Exact (unregularized) optimal transport for small instances.

use ndarray::{Array1, Array2};

use super::{cost_matrix, AtomSet, OtError};

pub const MAX_ORACLE_ATOMS: usize = 8;

const CAP_EPS: f64 = 1e-13;

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Minimum of `⟨P, M⟩` over all couplings with marginals `a`, `b`.
///
/// Successive shortest augmenting paths on the source → rows → columns → sink
/// network (Bellman-Ford, since residual arcs carry negative costs).
pub fn exact_ot(cost: &Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) -> Result<f64, OtError> {
    let (m, k) = cost.dim();
    if m != a.len() || k != b.len() || m == 0 || k == 0 {
        return Err(OtError::CostShape { rows: m, cols: k, m: a.len(), k: b.len() });
    }
    let n = m + k + 2;
    let (source, sink) = (0, m + k + 1);
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add = |edges: &mut Vec<Edge>, from: usize, to: usize, cap: f64, cost: f64| {
        adj[from].push(edges.len());
        edges.push(Edge { to, cap, cost });
        adj[to].push(edges.len());
        edges.push(Edge { to: from, cap: 0.0, cost: -cost });
    };
    for i in 0..m {
        add(&mut edges, source, 1 + i, a[i], 0.0);
    }
    for i in 0..m {
        for j in 0..k {
            add(&mut edges, 1 + i, 1 + m + j, f64::INFINITY, cost[[i, j]]);
        }
    }
    for j in 0..k {
        add(&mut edges, 1 + m + j, sink, b[j], 0.0);
    }

    let target = a.sum().min(b.sum());
    let mut flow = 0.0;
    let mut total = 0.0;
    for _ in 0..100_000 {
        if flow >= target - CAP_EPS {
            break;
        }
        // Bellman-Ford from the source
        let mut dist = vec![f64::INFINITY; n];
        let mut via = vec![usize::MAX; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > CAP_EPS && dist[u] + edge.cost < dist[edge.to] - 1e-15 {
                        dist[edge.to] = dist[u] + edge.cost;
                        via[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == f64::INFINITY {
            break;
        }
        let mut push = target - flow;
        let mut v = sink;
        while v != source {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        flow += push;
        total += push * dist[sink];
    }
    Ok(total)
}

/// Exact OT cost between two small atom sets on the same normalized cost
/// matrix that [`super::sinkhorn`] uses.
pub fn exact_ot_oracle(a: &AtomSet, b: &AtomSet) -> Result<f64, OtError> {
    if a.len() > MAX_ORACLE_ATOMS || b.len() > MAX_ORACLE_ATOMS {
        return Err(OtError::TooLarge { m: a.len(), k: b.len(), max: MAX_ORACLE_ATOMS });
    }
    let cost = cost_matrix(a, b)?;
    exact_ot(&cost, a.weights(), b.weights())
}

/// Exact OT for a square cost matrix with uniform weights by enumerating
/// every permutation (Heap's algorithm). For uniform equal-size marginals the
/// optimum is attained at a permutation matrix.
pub fn permutation_ot(cost: &Array2<f64>) -> Result<f64, OtError> {
    let (m, k) = cost.dim();
    if m != k || m == 0 {
        return Err(OtError::CostShape { rows: m, cols: k, m, k });
    }
    if m > MAX_ORACLE_ATOMS {
        return Err(OtError::TooLarge { m, k, max: MAX_ORACLE_ATOMS });
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let score = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum::<f64>();
    let mut best = score(&perm);
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(score(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best / m as f64)
}
