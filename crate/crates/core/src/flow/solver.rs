//! Euler solvers for the flow ODE and the straightness diagnostic.

use crate::error::{Error, Result};
use crate::flow::{CouplingBatch, FlowModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Forward Euler step count.
    pub steps: usize,
    /// Seed for z0 draws where the caller samples the prior.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { steps: 100, seed: 0 }
    }
}

/// A simulated path: states at every grid time, z0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn endpoint(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn start(&self) -> &[f64] {
        &self.states[0]
    }
}

/// Forward Euler: z_{t+1/N} = z_t + (1/N) v(z_t, t) for t in {0,..,N-1}/N.
/// Returns the whole trajectory (N+1 states).
pub fn sample_forward(model: &FlowModel, z0: &[f64], steps: usize) -> Result<Trajectory> {
    if steps < 1 {
        return Err(Error::InvalidFlowInput("steps below 1".into()));
    }
    if z0.len() != model.state_dim() {
        return Err(Error::InvalidFlowInput(format!(
            "state dim {} for model dim {}",
            z0.len(),
            model.state_dim()
        )));
    }
    let h = 1.0 / steps as f64;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(z0.to_vec());
    let mut z = z0.to_vec();
    for i in 0..steps {
        let t = i as f64 * h;
        let v = model.velocity_raw(&z, t);
        for (zi, vi) in z.iter_mut().zip(&v) {
            *zi += h * vi;
        }
        if !z.iter().all(|c| c.is_finite()) {
            return Err(Error::SolverBlowUp { step: i });
        }
        states.push(z.clone());
    }
    Ok(Trajectory { states })
}

/// Reverse Euler: z_{t-1/N} = z_t - (1/N) v(z_t, t) with t running from 1
/// down to 1/N. Exact inverse of the forward recursion for fields constant
/// in x.
pub fn sample_reverse(model: &FlowModel, z1: &[f64], steps: usize) -> Result<Vec<f64>> {
    if steps < 1 {
        return Err(Error::InvalidFlowInput("steps below 1".into()));
    }
    if z1.len() != model.state_dim() {
        return Err(Error::InvalidFlowInput(format!(
            "state dim {} for model dim {}",
            z1.len(),
            model.state_dim()
        )));
    }
    let h = 1.0 / steps as f64;
    let mut z = z1.to_vec();
    for i in (1..=steps).rev() {
        let t = i as f64 * h;
        let v = model.velocity_raw(&z, t);
        for (zi, vi) in z.iter_mut().zip(&v) {
            *zi -= h * vi;
        }
        if !z.iter().all(|c| c.is_finite()) {
            return Err(Error::SolverBlowUp { step: i });
        }
    }
    Ok(z)
}

/// Trajectory straightness: simulate forward from each pair's x0 on a
/// K-point grid and average ||(z1 - z0) - v(z_t, t)||^2 over pairs and grid
/// times, where z1 is the simulated endpoint. Zero iff every simulated
/// trajectory is an exact straight line. The batch's x1 side is not
/// consulted; straightness is a property of the field, not of a coupling.
pub fn straightness(model: &FlowModel, batch: &CouplingBatch, t_grid: usize) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if t_grid < 1 {
        return Err(Error::InvalidFlowInput("t_grid below 1".into()));
    }
    let h = 1.0 / t_grid as f64;
    let mut total = 0.0;
    for (x0, _) in &batch.pairs {
        if x0.len() != model.state_dim() {
            return Err(Error::InvalidFlowInput(format!(
                "state dim {} for model dim {}",
                x0.len(),
                model.state_dim()
            )));
        }
        // one pass storing the velocities used on the grid
        let mut z = x0.clone();
        let mut velocities = Vec::with_capacity(t_grid);
        for i in 0..t_grid {
            let t = i as f64 * h;
            let v = model.velocity_raw(&z, t);
            for (zi, vi) in z.iter_mut().zip(&v) {
                *zi += h * vi;
            }
            if !z.iter().all(|c| c.is_finite()) {
                return Err(Error::SolverBlowUp { step: i });
            }
            velocities.push(v);
        }
        let displacement: Vec<f64> = z.iter().zip(x0).map(|(e, s)| e - s).collect();
        for v in &velocities {
            total += displacement
                .iter()
                .zip(v)
                .map(|(d, vi)| (d - vi) * (d - vi))
                .sum::<f64>();
        }
    }
    Ok(total / (batch.len() * t_grid) as f64)
}
