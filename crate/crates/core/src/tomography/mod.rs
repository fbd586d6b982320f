//! Stern-Gerlach tomography: probabilities, shot-noise simulation, pointwise
//! and band-limited reconstruction, density recovery and ensemble studies.

mod density;
mod ensemble;
mod grid;
mod sampling;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::parity::ParityOperator;
use crate::phasespace::{rotated_populations, PhasePoint};
use crate::spinstates::DensityMatrix;

pub use density::{
    conditioning_report, reconstruct_density, reconstruct_density_from_probs, ConditioningReport,
    DensityEstimate, DensityQuadrature, TracePolicy,
};
pub use ensemble::{
    run_ensemble_experiment, CompareCell, CompareReport, EnsembleErrorReport, EnsembleKind,
    ErrorSample, ExperimentConfig, ExperimentMode, NrReport, Repetitions, ScalingReport,
};
pub use grid::{dh_weights, full_tomography, grid_probabilities, grid_values, GridSpec};
pub use sampling::{sample_counts, sample_multinomial, stream_rng, stream_seed};

/// Most negative population accepted before clamping to zero.
pub const NEGATIVE_PROBABILITY_TOL: f64 = 1e-12;
/// Allowed deviation of Σ p_m from one before renormalising.
pub const PROBABILITY_SUM_TOL: f64 = 1e-10;

/// Outcome counts N_m (m = J..−J) of N_r Stern-Gerlach runs at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SternGerlachRecord {
    pub theta: f64,
    pub phi: f64,
    pub counts: Vec<u64>,
    pub repetitions: u64,
}

impl SternGerlachRecord {
    pub fn point(&self) -> PhasePoint {
        PhasePoint {
            theta: self.theta,
            phi: self.phi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.counts.iter().sum();
        if total != self.repetitions || self.repetitions == 0 {
            return Err(Error::integrity(
                Module::Tomography,
                format!("counts sum to {total}, expected N_r = {}", self.repetitions),
            ));
        }
        Ok(())
    }

    /// N_m / N_r.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.repetitions as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// p_m(Ω) = ⟨Jm|U†ρU|Jm⟩, clamped at zero and renormalised.
pub fn probabilities(rho: &DensityMatrix, point: &PhasePoint) -> Result<Vec<f64>> {
    let mut p = rotated_populations(rho.matrix(), rho.j(), point)?;
    for x in &mut p {
        if *x < -NEGATIVE_PROBABILITY_TOL {
            return Err(Error::integrity(
                Module::Tomography,
                format!("negative probability {x:e}"),
            ));
        }
        *x = x.max(0.0);
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::integrity(
            Module::Tomography,
            format!("probabilities sum to {total}"),
        ));
    }
    for x in &mut p {
        *x /= total;
    }
    Ok(p)
}

/// F̂ = Σ_m [M_s]_mm x_m for frequencies or exact probabilities x.
pub fn pointwise_reconstruct(parity: &ParityOperator, frequencies: &[f64]) -> Result<f64> {
    if frequencies.len() != parity.diag().len() {
        return Err(Error::domain(
            Module::Tomography,
            format!(
                "{} outcomes supplied, J = {} has {}",
                frequencies.len(),
                parity.j(),
                parity.diag().len()
            ),
        ));
    }
    Ok(parity.contract(frequencies))
}
