use ndarray::{concatenate, Array1, Array2, Axis};

use super::OtError;
use crate::grid::{Action, Observation};
use crate::trajectory::Trajectory;

/// Weighted point cloud: one row of `atoms` per Dirac mass.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSet {
    atoms: Array2<f64>,
    weights: Array1<f64>,
}

const WEIGHT_TOL: f64 = 1e-9;

impl AtomSet {
    pub fn new(atoms: Array2<f64>, weights: Array1<f64>) -> Result<Self, OtError> {
        if atoms.nrows() == 0 {
            return Err(OtError::EmptyAtoms);
        }
        if weights.len() != atoms.nrows() {
            return Err(OtError::CostShape {
                rows: atoms.nrows(),
                cols: atoms.ncols(),
                m: weights.len(),
                k: weights.len(),
            });
        }
        let sum = weights.sum();
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) || (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(OtError::BadWeights { sum });
        }
        Ok(Self { atoms, weights })
    }

    /// Equal mass `1/m` on each of the `m` rows.
    pub fn uniform(atoms: Array2<f64>) -> Result<Self, OtError> {
        let m = atoms.nrows();
        if m == 0 {
            return Err(OtError::EmptyAtoms);
        }
        Self::new(atoms, Array1::from_elem(m, 1.0 / m as f64))
    }

    pub fn atoms(&self) -> &Array2<f64> {
        &self.atoms
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.atoms.ncols()
    }

    /// Pools several sets into one with uniform weights over all atoms.
    pub fn pooled<'a>(sets: impl IntoIterator<Item = &'a AtomSet>) -> Result<Self, OtError> {
        let views: Vec<_> = sets.into_iter().map(|s| s.atoms.view()).collect();
        if views.is_empty() {
            return Err(OtError::EmptyAtoms);
        }
        let d = views[0].ncols();
        if let Some(v) = views.iter().find(|v| v.ncols() != d) {
            return Err(OtError::DimensionMismatch(d, v.ncols()));
        }
        let atoms = concatenate(Axis(0), &views).expect("dims checked");
        Self::uniform(atoms)
    }
}

/// Feature vector of one state-action pair: normalized coordinates then one-hot action.
pub fn state_action_atom(obs: Observation, action: Action) -> [f64; Observation::DIM + Action::COUNT] {
    let mut v = [0.0; Observation::DIM + Action::COUNT];
    v[0] = obs.row as f64;
    v[1] = obs.col as f64;
    v[Observation::DIM + action.index()] = 1.0;
    v
}

/// One uniformly weighted atom per step, terminal step included.
pub fn build_atoms(traj: &Trajectory) -> Result<AtomSet, OtError> {
    if traj.is_empty() {
        return Err(OtError::EmptyTrajectory);
    }
    let d = Observation::DIM + Action::COUNT;
    let mut atoms = Array2::zeros((traj.len(), d));
    for (mut row, step) in atoms.rows_mut().into_iter().zip(&traj.steps) {
        row.assign(&Array1::from(state_action_atom(step.obs, step.action).to_vec()));
    }
    AtomSet::uniform(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Transition;
    use ndarray::array;

    fn step(r: f32, c: f32, a: Action) -> Transition {
        let obs = Observation { row: r, col: c };
        Transition { obs, action: a, reward: -0.1, next_obs: obs, terminal: false, done: false }
    }

    #[test]
    fn one_step_one_atom() {
        let traj = Trajectory { task: 0, steps: vec![step(0.25, 0.5, Action::Left)] };
        let set = build_atoms(&traj).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.weights(), &array![1.0]);
        assert_eq!(set.atoms().row(0).to_vec(), vec![0.25, 0.5, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn trajectory_atoms_have_dim_six() {
        let steps = (0..100).map(|t| step(t as f32 / 100.0, 0.1, Action::ALL[t % 4])).collect();
        let traj = Trajectory { task: 1, steps };
        let set = build_atoms(&traj).unwrap();
        assert_eq!((set.len(), set.dim()), (100, 6));
        assert!((set.weights().sum() - 1.0).abs() < 1e-12);
        assert_eq!(build_atoms(&traj).unwrap(), set);
    }

    #[test]
    fn empty_trajectory_rejected() {
        assert!(matches!(build_atoms(&Trajectory::new(0)), Err(OtError::EmptyTrajectory)));
    }

    #[test]
    fn bad_weights_rejected() {
        let atoms = array![[0.0], [1.0]];
        assert!(AtomSet::new(atoms.clone(), array![0.7, 0.7]).is_err());
        assert!(AtomSet::new(atoms.clone(), array![1.5, -0.5]).is_err());
        assert!(AtomSet::new(atoms, array![0.3, 0.7]).is_ok());
    }

    #[test]
    fn pooling_reweights_uniformly() {
        let a = AtomSet::uniform(array![[0.0, 0.0]]).unwrap();
        let b = AtomSet::uniform(array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let p = AtomSet::pooled([&a, &b]).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.weights().iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }
}
