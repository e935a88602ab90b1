use std::fmt::Write as _;

use ndarray::Array2;
use rand::Rng;

use super::runner::rollout;
use super::ExperimentError;
use crate::grid::{Action, Cell, GridEnv, GridMap, Observation, RewardScheme};
use crate::ot::{build_atoms, proxy_reward, sinkhorn, state_action_atom, AtomSet, ProxyRewardConfig, SinkhornConfig};
use crate::sac::SacAgent;

/// Per-cell values over a map; `None` on walls.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Option<f64>>,
}

impl Heatmap {
    pub fn get(&self, (r, c): Cell) -> Option<f64> {
        self.values[r * self.width + c]
    }

    /// Mean over the given cells, skipping walls.
    pub fn mean_over(&self, cells: &[Cell]) -> Option<f64> {
        let v: Vec<f64> = cells.iter().filter_map(|&c| self.get(c)).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Cellwise mean of same-shaped heatmaps.
    pub fn average(maps: &[Heatmap]) -> Option<Heatmap> {
        let first = maps.first()?;
        if maps.iter().any(|m| m.width != first.width || m.height != first.height) {
            return None;
        }
        let values = (0..first.values.len())
            .map(|i| {
                let v: Option<Vec<f64>> = maps.iter().map(|m| m.values[i]).collect();
                v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect();
        Some(Heatmap { width: first.width, height: first.height, values })
    }

    /// One CSV line per map row; walls are empty fields.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for r in 0..self.height {
            let row: Vec<String> = (0..self.width).map(|c| self.get((r, c)).map(|v| v.to_string()).unwrap_or_default()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// Cells shaded from white (0) to dark red (`scale`); walls are blank.
    pub fn to_svg(&self, scale: f64, title: &str) -> String {
        const PX: usize = 24;
        let (w, h) = (self.width * PX, self.height * PX + 20);
        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
        writeln!(s, r#"<text x="2" y="14" font-family="sans-serif" font-size="12">{title}</text>"#).unwrap();
        for r in 0..self.height {
            for c in 0..self.width {
                let (x, y) = (c * PX, r * PX + 20);
                match self.get((r, c)) {
                    None => writeln!(s, r##"<rect x="{x}" y="{y}" width="{PX}" height="{PX}" fill="#333333"/>"##).unwrap(),
                    Some(v) => {
                        let t = if scale > 0.0 { (v / scale).clamp(0.0, 1.0) } else { 0.0 };
                        let g = (255.0 * (1.0 - t)).round() as u8;
                        let red = (255.0 - 100.0 * t).round() as u8;
                        writeln!(
                            s,
                            r#"<rect x="{x}" y="{y}" width="{PX}" height="{PX}" fill="rgb({red},{g},{g})"><title>({r},{c}) {v:.4}</title></rect>"#
                        )
                        .unwrap();
                    }
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Proxy reward of every free cell against what the trained task policies do.
///
/// Each task policy samples `rollouts` fresh episodes from random starts; all
/// of them are pooled into one target distribution. The probe set holds one
/// atom per (free cell, action) with uniform mass and is transported onto the
/// target in a single Sinkhorn solve. A probe's contribution is rescaled by
/// `probes / horizon` so that it carries the mass of one step of a
/// `horizon`-step trajectory, mapped to a reward, and averaged over the four
/// actions of its cell.
#[allow(clippy::too_many_arguments)]
pub fn ot_heatmap<R: Rng + ?Sized>(
    agents: &[SacAgent],
    map: &std::sync::Arc<GridMap>,
    scheme: RewardScheme,
    reward_cfg: &ProxyRewardConfig,
    sinkhorn_cfg: &SinkhornConfig,
    rollouts: usize,
    rng: &mut R,
) -> Result<Heatmap, ExperimentError> {
    if agents.is_empty() {
        return Err(ExperimentError::Config("heatmap needs at least one policy".into()));
    }
    if agents.iter().all(|a| a.updates() == 0) {
        log::warn!("heatmap from untrained policies");
    }
    let numeric = |e: crate::ot::OtError| ExperimentError::Numeric(e.to_string());
    let mut sets = Vec::new();
    for (task, agent) in agents.iter().enumerate() {
        let mut env = GridEnv::new(map.clone(), task, scheme, reward_cfg.horizon).map_err(|e| ExperimentError::Config(e.to_string()))?;
        for _ in 0..rollouts.max(1) {
            let traj = rollout(agent, &mut env, rng)?;
            sets.push(build_atoms(&traj).map_err(numeric)?);
        }
    }
    let target = AtomSet::pooled(&sets).map_err(numeric)?;

    let cells = map.free_cells();
    let n_probe = cells.len() * Action::COUNT;
    let dim = Observation::DIM + Action::COUNT;
    let probes = Array2::from_shape_fn((n_probe, dim), |(i, j)| {
        let cell = cells[i / Action::COUNT];
        state_action_atom(Observation::of_cell(map, cell), Action::ALL[i % Action::COUNT])[j]
    });
    let source = AtomSet::uniform(probes).map_err(numeric)?;
    let plan = sinkhorn(&source, &target, sinkhorn_cfg).map_err(numeric)?;
    if !plan.converged {
        log::warn!("heatmap transport stopped at marginal error {:.2e}", plan.marginal_error);
    }
    let (c, _) = plan.contributions();
    let rescale = n_probe as f64 / reward_cfg.horizon as f64;

    let mut values = vec![None; map.width() * map.height()];
    for (k, &(r, col)) in cells.iter().enumerate() {
        let s: f64 = (0..Action::COUNT)
            .map(|a| proxy_reward(c.values()[k * Action::COUNT + a] * rescale, reward_cfg))
            .sum();
        values[r * map.width() + col] = Some(s / Action::COUNT as f64);
    }
    Ok(Heatmap { width: map.width(), height: map.height(), values })
}

/// Random stream for heatmap rollouts, disjoint from every training stream.
pub const HEATMAP_STREAM: u64 = (1 << 40) + 2;

/// [`ot_heatmap`] for one seed's trained agents under `cfg`, with one fresh
/// episode per task drawn from the seed's heatmap stream.
pub fn seed_heatmap(
    cfg: &super::ExperimentConfig,
    map: &std::sync::Arc<GridMap>,
    agents: &[SacAgent],
    seed: u64,
) -> Result<Heatmap, ExperimentError> {
    let reward_cfg = ProxyRewardConfig {
        sigma: cfg.proxy.sigma,
        beta: cfg.proxy.beta,
        horizon: cfg.horizon,
        state_dim: Observation::DIM,
        action_dim: Action::COUNT,
    };
    let mut rng = super::stream_rng(seed, HEATMAP_STREAM);
    ot_heatmap(agents, map, cfg.reward_scheme(map), &reward_cfg, &cfg.sinkhorn, 1, &mut rng)
}
