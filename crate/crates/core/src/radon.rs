//! Spherical (Funk) Radon transform as a harmonic multiplier, its inverse on
//! the point-symmetric subspace, and a direct great-circle quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Module, Result};
use crate::parity::radon_parity;
use crate::phasespace::{evaluate_series, rotated_populations, PhasePoint, SphericalFunction};
use crate::specialfn::{legendre_unchecked, RotationAngles};
use crate::spinstates::DensityMatrix;

/// Relative odd-rank content above which [`radon_inverse`] refuses its input.
pub const ODD_CONTENT_TOL: f64 = 1e-9;

fn legendre_at_zero(band: usize) -> Vec<f64> {
    (0..=band).map(|rank| legendre_unchecked(rank, 0.0)).collect()
}

/// Great-circle mean: c_jm ↦ P_j(0) c_jm.
pub fn radon_forward(f: &SphericalFunction) -> SphericalFunction {
    f.scale_ranks(&legendre_at_zero(f.band()), f.s_tag())
}

/// √(odd-rank energy / total energy).
pub fn odd_content(f: &SphericalFunction) -> f64 {
    let total = f.coeff_norm();
    if total == 0.0 {
        return 0.0;
    }
    f.odd_rank_energy().sqrt() / total
}

/// Inverts [`radon_forward`] on even ranks; the result is the point-symmetric
/// part of any preimage.
pub fn radon_inverse(g: &SphericalFunction) -> Result<SphericalFunction> {
    let odd = odd_content(g);
    if odd > ODD_CONTENT_TOL {
        return Err(Error::contract(
            Module::Radon,
            format!("input has odd-rank content {odd:e}; it is not a Radon image"),
        ));
    }
    let weights: Vec<f64> = legendre_at_zero(g.band())
        .into_iter()
        .map(|p| if p == 0.0 { 0.0 } else { 1.0 / p })
        .collect();
    Ok(g.scale_ranks(&weights, g.s_tag()))
}

/// (f(Ω) + f(−Ω))/2: keeps even ranks, drops odd ones.
pub fn antipodal_symmetrize(f: &SphericalFunction) -> SphericalFunction {
    let weights: Vec<f64> = (0..=f.band())
        .map(|rank| if rank % 2 == 0 { 1.0 } else { 0.0 })
        .collect();
    f.scale_ranks(&weights, f.s_tag())
}

/// Mean of f over the great circle orthogonal to Ω by the trapezoid rule.
pub fn great_circle_average(f: &SphericalFunction, point: &PhasePoint, nodes: usize) -> Result<f64> {
    if nodes < 64 {
        return Err(Error::domain(
            Module::Radon,
            format!("great-circle quadrature needs at least 64 nodes, got {nodes}"),
        ));
    }
    let n = point.unit_vector();
    // e1 ⟂ n in the meridian plane, e2 = n × e1
    let (st, ct) = point.theta.sin_cos();
    let (sp, cp) = point.phi.sin_cos();
    let e1 = [ct * cp, ct * sp, -st];
    let e2 = [
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];
    let mut acc = 0.0;
    for k in 0..nodes {
        let t = 2.0 * PI * k as f64 / nodes as f64;
        let (s, c) = t.sin_cos();
        let v = [
            c * e1[0] + s * e2[0],
            c * e1[1] + s * e2[1],
            c * e1[2] + s * e2[2],
        ];
        acc += evaluate_series(f, &RotationAngles::from_unit_vector(v))?;
    }
    Ok(acc / nodes as f64)
}

/// Σ_m [M^R_s]_mm p_m(Ω): the Radon image of F_ρ(·, s) read off directly
/// from Stern-Gerlach probabilities.
pub fn radon_direct(rho: &DensityMatrix, point: &PhasePoint, s: f64) -> Result<f64> {
    let parity = radon_parity(rho.j(), s)?;
    let p = rotated_populations(rho.matrix(), rho.j(), point)?;
    Ok(parity.contract(&p))
}
