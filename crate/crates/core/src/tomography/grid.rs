//! Equiangular grids and exact band-limited reconstruction from them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::probabilities;
use crate::error::{Error, Module, Result};
use crate::parity::ParityOperator;
use crate::phasespace::{coeff_index, PhasePoint, SphericalFunction};
use crate::specialfn::{HalfInteger, LegendreTable};
use crate::spinstates::DensityMatrix;

/// θ_k = πk/N_p, φ_q = 2πq/N_p for k, q < N_p; the south pole is excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    n_p: usize,
}

impl GridSpec {
    /// Requires an even N_p ≥ 4J + 2.
    pub fn new(n_p: usize, j: HalfInteger) -> Result<Self> {
        if !n_p.is_multiple_of(2) || n_p < 2 {
            return Err(Error::domain(
                Module::Tomography,
                format!("N_p must be even and positive, got {n_p}"),
            ));
        }
        let min = 2 * j.twice().max(0) as usize + 2;
        if n_p < min {
            return Err(Error::domain(
                Module::Tomography,
                format!("N_p = {n_p} is below 4J + 2 = {min} for J = {j}"),
            ));
        }
        Ok(GridSpec { n_p })
    }

    /// Smallest admissible grid, N_p = 4J + 2.
    pub fn minimal(j: HalfInteger) -> Self {
        GridSpec {
            n_p: 2 * j.twice().max(0) as usize + 2,
        }
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn len(&self) -> usize {
        self.n_p * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.n_p == 0
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_p).map(|k| PI * k as f64 / self.n_p as f64).collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_p)
            .map(|q| 2.0 * PI * q as f64 / self.n_p as f64)
            .collect()
    }

    /// Points row-major in k then q.
    pub fn points(&self) -> Vec<PhasePoint> {
        let phis = self.phis();
        self.thetas()
            .into_iter()
            .flat_map(|theta| phis.iter().map(move |&phi| PhasePoint { theta, phi }))
            .collect()
    }
}

/// α_k = (2√2/N_p) sin θ_k Σ_{l<N_p/2} sin((2l+1)θ_k)/(2l+1).
pub fn dh_weights(n_p: usize) -> Result<Vec<f64>> {
    if !n_p.is_multiple_of(2) || n_p < 2 {
        return Err(Error::domain(
            Module::Tomography,
            format!("weights need an even N_p ≥ 2, got {n_p}"),
        ));
    }
    let n = n_p as f64;
    Ok((0..n_p)
        .map(|k| {
            let theta = PI * k as f64 / n;
            let sum: f64 = (0..n_p / 2)
                .map(|l| {
                    let odd = (2 * l + 1) as f64;
                    (odd * theta).sin() / odd
                })
                .sum();
            2.0 * 2f64.sqrt() / n * theta.sin() * sum
        })
        .collect())
}

/// c_jm = (2π√2/N_p) Σ_k Σ_q α_k F(θ_k, φ_q) Y_jm(θ_k, φ_q)*, row-major
/// samples in k then q.
pub fn full_tomography(
    values: &[f64],
    grid: &GridSpec,
    j: HalfInteger,
    s: Option<f64>,
) -> Result<SphericalFunction> {
    if grid.n_p() < 2 * j.twice().max(0) as usize + 2 {
        return Err(Error::domain(Module::Tomography, "grid too coarse for J"));
    }
    if values.len() != grid.len() {
        return Err(Error::domain(
            Module::Tomography,
            format!("grid needs {} samples, got {}", grid.len(), values.len()),
        ));
    }
    let band = j.twice() as usize;
    let n_p = grid.n_p();
    let alpha = dh_weights(n_p)?;
    let phis = grid.phis();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); (band + 1) * (band + 1)];
    let mut fourier = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
    for (k, theta) in grid.thetas().into_iter().enumerate() {
        if alpha[k] == 0.0 {
            continue;
        }
        let row = &values[k * n_p..(k + 1) * n_p];
        for (idx, b) in fourier.iter_mut().enumerate() {
            let m = idx as f64 - band as f64;
            *b = row
                .iter()
                .zip(&phis)
                .map(|(v, phi)| Complex64::from_polar(*v, -m * phi))
                .sum();
        }
        let table = LegendreTable::new(band, theta);
        for rank in 0..=band {
            for m in -(rank as i32)..=rank as i32 {
                let y = table.harmonic(rank, m, 0.0).conj();
                coeffs[coeff_index(rank, m)] += fourier[(m + band as i32) as usize] * y * alpha[k];
            }
        }
    }
    let scale = 2.0 * PI * 2f64.sqrt() / n_p as f64;
    for c in &mut coeffs {
        *c *= scale;
    }
    SphericalFunction::new(j, coeffs, s)
}

/// Exact probabilities at every grid point, row-major.
pub fn grid_probabilities(rho: &DensityMatrix, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    grid.points().iter().map(|p| probabilities(rho, p)).collect()
}

/// Σ_m [M]_mm x_m at every grid point.
pub fn grid_values(parity: &ParityOperator, per_point: &[Vec<f64>]) -> Vec<f64> {
    per_point.iter().map(|x| parity.contract(x)).collect()
}
