//! Density-matrix recovery ρ = ∫ F(Ω, s) U M_{−s} U† dΩ by exact product
//! quadrature, from coefficients or directly from probabilities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::linalg::{self, CMatrix};
use crate::parity::{parity_operator, sphere_radius, ParityOperator};
use crate::phasespace::{evaluate_grid, PhasePoint, SphericalFunction};
use crate::quadrature::gauss_legendre;
use crate::specialfn::{coherent_rotation, HalfInteger, RotationAngles};
use crate::spinstates::DensityMatrix;

/// Reconstruction kernels whose largest weight exceeds the Wigner kernel's
/// by more than this factor are reported as precarious.
pub const PRECARIOUS_AMPLIFICATION: f64 = 1e3;

/// Gauss-Legendre in cos θ (2J+1 nodes) times uniform φ (4J+1 nodes);
/// weights include the R² area factor.
#[derive(Debug, Clone)]
pub struct DensityQuadrature {
    j: HalfInteger,
    thetas: Vec<f64>,
    phis: Vec<f64>,
    theta_weights: Vec<f64>,
}

impl DensityQuadrature {
    pub fn new(j: HalfInteger) -> Result<Self> {
        if j.twice() <= 0 {
            return Err(Error::domain(Module::Tomography, "density quadrature needs J > 0"));
        }
        let band = j.twice() as usize;
        let (x, w) = gauss_legendre(band + 1);
        let n_phi = 2 * band + 1;
        let r2 = sphere_radius(j).powi(2);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        Ok(DensityQuadrature {
            j,
            thetas: x.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect(),
            phis: (0..n_phi).map(|q| dphi * q as f64).collect(),
            theta_weights: w.iter().map(|wi| wi * dphi * r2).collect(),
        })
    }

    pub fn j(&self) -> HalfInteger {
        self.j
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    /// Nodes row-major in θ then φ.
    pub fn points(&self) -> Vec<PhasePoint> {
        self.thetas
            .iter()
            .flat_map(|&theta| self.phis.iter().map(move |&phi| RotationAngles { theta, phi }))
            .collect()
    }

    /// Weights matching [`Self::points`]; they sum to 4πR².
    pub fn weights(&self) -> Vec<f64> {
        self.theta_weights
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w, self.phis.len()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum TracePolicy {
    /// Fail when |Tr ρ̂ − 1| exceeds `tol`.
    Check { tol: f64 },
    /// Divide by the trace; meant for shot-noise data.
    Normalize,
}

impl Default for TracePolicy {
    fn default() -> Self {
        TracePolicy::Check { tol: 1e-6 }
    }
}

/// Size of the reconstruction kernel M_{−s} relative to the Wigner kernel M_0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningReport {
    pub s: f64,
    pub kernel_s: f64,
    pub kernel_max_abs: f64,
    pub wigner_max_abs: f64,
    pub amplification: f64,
    pub precarious: bool,
}

pub fn conditioning_report(j: HalfInteger, s: f64) -> Result<ConditioningReport> {
    let kernel = parity_operator(j, -s)?;
    let wigner = parity_operator(j, 0.0)?;
    let kernel_max_abs = kernel.max_abs_weight();
    let wigner_max_abs = wigner.max_abs_weight();
    let amplification = kernel_max_abs / wigner_max_abs;
    Ok(ConditioningReport {
        s,
        kernel_s: -s,
        kernel_max_abs,
        wigner_max_abs,
        amplification,
        // M_{s'} with s' ≥ 1 grows without bound in J
        precarious: -s >= 1.0 || amplification > PRECARIOUS_AMPLIFICATION,
    })
}

#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub j: HalfInteger,
    /// Hermitised estimate, after the trace policy.
    pub matrix: CMatrix,
    /// Trace before any normalisation.
    pub raw_trace: f64,
    pub conditioning: ConditioningReport,
}

impl DensityEstimate {
    /// Validates the estimate as a physical state.
    pub fn into_density(self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.j, self.matrix)
    }

    /// Projects onto the physical states first; shot noise routinely
    /// leaves small negative eigenvalues.
    pub fn into_physical_density(self) -> Result<DensityMatrix> {
        let m = linalg::project_psd(&self.matrix).ok_or_else(|| {
            Error::integrity(Module::Tomography, "estimate has no positive spectrum")
        })?;
        DensityMatrix::new(self.j, m)
    }

    pub fn frobenius_distance(&self, rho: &DensityMatrix) -> f64 {
        linalg::frobenius_norm(&(&self.matrix - rho.matrix()))
    }

    /// ⟨ψ|ρ̂|ψ⟩ for a pure reference given by its amplitudes.
    pub fn overlap(&self, psi: &nalgebra::DVector<Complex64>) -> f64 {
        (psi.adjoint() * &self.matrix * psi)[(0, 0)].re
    }
}

fn assemble(
    quad: &DensityQuadrature,
    kernel: &ParityOperator,
    values: &[f64],
    policy: TracePolicy,
    s: f64,
) -> Result<DensityEstimate> {
    let j = quad.j();
    let d = j.dim();
    let mut acc = CMatrix::zeros(d, d);
    let weights = quad.weights();
    for ((point, w), value) in quad.points().iter().zip(&weights).zip(values) {
        let u = coherent_rotation(j, point);
        let scale = w * value;
        // U M U† = Σ_m M_mm u_m u_m†
        for (m, km) in kernel.diag().iter().enumerate() {
            let c = scale * km;
            if c == 0.0 {
                continue;
            }
            let col = u.column(m);
            for a in 0..d {
                let ua = col[a] * c;
                for b in 0..d {
                    acc[(a, b)] += ua * col[b].conj();
                }
            }
        }
    }
    let mut matrix = linalg::hermitian_part(&acc);
    let raw_trace: f64 = (0..d).map(|k| matrix[(k, k)].re).sum();
    match policy {
        TracePolicy::Check { tol } => {
            if (raw_trace - 1.0).abs() > tol {
                return Err(Error::integrity(
                    Module::Tomography,
                    format!("reconstructed trace {raw_trace} deviates from 1"),
                ));
            }
        }
        TracePolicy::Normalize => {
            if !(raw_trace > 0.0) {
                return Err(Error::integrity(
                    Module::Tomography,
                    format!("reconstructed trace {raw_trace} cannot be normalised"),
                ));
            }
            matrix /= Complex64::new(raw_trace, 0.0);
        }
    }
    Ok(DensityEstimate {
        j,
        matrix,
        raw_trace,
        conditioning: conditioning_report(j, s)?,
    })
}

/// ρ̂ from the coefficients of F(·, s); `f` must carry its s tag.
pub fn reconstruct_density(f: &SphericalFunction, policy: TracePolicy) -> Result<DensityEstimate> {
    let s = f.s_tag().ok_or_else(|| {
        Error::contract(Module::Tomography, "density reconstruction needs an s-tagged function")
    })?;
    let quad = DensityQuadrature::new(f.j())?;
    let values = evaluate_grid(f, quad.thetas(), quad.phis())?;
    let kernel = parity_operator(f.j(), -s)?;
    assemble(&quad, &kernel, &values, policy, s)
}

/// ρ̂ from probabilities (or frequencies) at the nodes of `quad`, combining
/// F̂ = Σ_m [M_s]_mm p_m with the quadrature in one pass.
pub fn reconstruct_density_from_probs(
    quad: &DensityQuadrature,
    s: f64,
    probs: &[Vec<f64>],
    policy: TracePolicy,
) -> Result<DensityEstimate> {
    let j = quad.j();
    if probs.len() != quad.len() {
        return Err(Error::domain(
            Module::Tomography,
            format!("quadrature has {} nodes, got {} records", quad.len(), probs.len()),
        ));
    }
    if probs.iter().any(|p| p.len() != j.dim()) {
        return Err(Error::domain(Module::Tomography, "record length differs from 2J + 1"));
    }
    let direct = parity_operator(j, s)?;
    let values: Vec<f64> = probs.iter().map(|p| direct.contract(p)).collect();
    let kernel = parity_operator(j, -s)?;
    assemble(quad, &kernel, &values, policy, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::to_spherical_coeffs;
    use crate::spinstates::{random_hs, random_pure};
    use crate::tomography::{probabilities, sample_counts, stats, stream_rng};

    fn h(t: i32) -> HalfInteger {
        HalfInteger::from_twice(t)
    }

    #[test]
    fn quadrature_weights_cover_sphere() {
        let q = DensityQuadrature::new(h(5)).unwrap();
        let r2 = sphere_radius(h(5)).powi(2);
        let total: f64 = q.weights().iter().sum();
        assert!((total - 4.0 * std::f64::consts::PI * r2).abs() < 1e-12);
        assert_eq!(q.len(), 6 * 11);
    }

    #[test]
    fn round_trip_through_wigner() {
        for tj in 1..=10 {
            let rho = random_hs(h(tj), 100 + tj as u64);
            for s in [-0.5, 0.0, 0.5] {
                let f = to_spherical_coeffs(&rho, s).unwrap();
                let est = reconstruct_density(&f, TracePolicy::default()).unwrap();
                assert!(est.frobenius_distance(&rho) < 1e-10, "2J = {tj}, s = {s}");
            }
        }
    }

    #[test]
    fn maximally_mixed_round_trip() {
        let j = h(4);
        let rho = DensityMatrix::maximally_mixed(j).unwrap();
        let est = reconstruct_density(&to_spherical_coeffs(&rho, 0.0).unwrap(), TracePolicy::default()).unwrap();
        let out = est.into_density().unwrap();
        assert!(linalg::frobenius_norm(&(out.matrix() - rho.matrix())) < 1e-12);
    }

    #[test]
    fn q_route_is_flagged() {
        for tj in [2, 5, 10] {
            let j = h(tj);
            let rho = random_hs(j, 7);
            let q = to_spherical_coeffs(&rho, -1.0).unwrap();
            let est = reconstruct_density(&q, TracePolicy::default()).unwrap();
            assert!(est.conditioning.precarious, "2J = {tj}");
            for s in [-0.5, 0.0, 0.5] {
                assert!(!conditioning_report(j, s).unwrap().precarious, "2J = {tj}, s = {s}");
            }
        }
    }

    #[test]
    fn probability_route_matches_coefficient_route() {
        let j = h(5);
        let rho = random_hs(j, 8);
        let quad = DensityQuadrature::new(j).unwrap();
        let probs: Vec<Vec<f64>> = quad.points().iter().map(|p| probabilities(&rho, p).unwrap()).collect();
        for s in [-0.5, 0.0, 0.5] {
            let a = reconstruct_density_from_probs(&quad, s, &probs, TracePolicy::default()).unwrap();
            let b = reconstruct_density(&to_spherical_coeffs(&rho, s).unwrap(), TracePolicy::default()).unwrap();
            assert!(linalg::frobenius_norm(&(&a.matrix - &b.matrix)) < 1e-10);
        }
        assert!(reconstruct_density_from_probs(&quad, 0.0, &probs[1..], TracePolicy::default()).is_err());
    }

    #[test]
    fn shot_noise_error_scaling_and_fidelity() {
        let j = h(3);
        let quad = DensityQuadrature::new(j).unwrap();
        let points = quad.points();
        let nrs = [100u64, 1000, 10_000, 100_000];
        let mut mean_err = Vec::new();
        let mut fidelity = Vec::new();
        for (ni, &nr) in nrs.iter().enumerate() {
            let mut errs = Vec::new();
            let mut fids = Vec::new();
            for state in 0..40u64 {
                let psi = random_pure(j, state);
                let rho = psi.density();
                let probs: Vec<Vec<f64>> = points
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let mut rng = stream_rng(77, &[state, ni as u64, k as u64]);
                        sample_counts(&rho, p, nr, &mut rng).unwrap().frequencies()
                    })
                    .collect();
                let est = reconstruct_density_from_probs(&quad, 0.0, &probs, TracePolicy::Normalize).unwrap();
                errs.push(est.frobenius_distance(&rho));
                fids.push(est.overlap(psi.amplitudes()));
            }
            mean_err.push(stats::mean(&errs));
            fidelity.push(stats::mean(&fids));
        }
        let x: Vec<f64> = nrs.iter().map(|&n| n as f64).collect();
        let slope = stats::loglog_slope(&x, &mean_err).unwrap();
        assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
        assert!(fidelity.windows(2).all(|w| (1.0 - w[1]).abs() < (1.0 - w[0]).abs()));
        assert!((1.0 - fidelity[3]).abs() < 0.01);
    }
}
