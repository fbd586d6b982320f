//! Spherical convolution with axially symmetric kernels, done in harmonic
//! space, and the s-parameter transformation it induces.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Module, Result};
use crate::parity::{check_log_weight, gamma};
use crate::phasespace::SphericalFunction;
use crate::specialfn::HalfInteger;

/// Relative size of m ≠ 0 kernel coefficients tolerated as "axial".
pub const AXIAL_TOL: f64 = 1e-12;

/// (K ∗ f)_jm = c_jm · k_j0 · R² √(4π/(2j+1)).
pub fn convolve(kernel: &SphericalFunction, f: &SphericalFunction) -> Result<SphericalFunction> {
    if kernel.twice_j() != f.twice_j() {
        return Err(Error::domain(
            Module::Convolution,
            format!(
                "kernel has 2J = {}, function has 2J = {}",
                kernel.twice_j(),
                f.twice_j()
            ),
        ));
    }
    let axial_scale = (0..=kernel.band())
        .map(|rank| kernel.coeff(rank, 0).norm())
        .fold(0.0, f64::max);
    let off_axis = kernel
        .iter()
        .filter(|(_, m, _)| *m != 0)
        .map(|(_, _, c)| c.norm())
        .fold(0.0, f64::max);
    if off_axis > AXIAL_TOL * axial_scale {
        return Err(Error::contract(
            Module::Convolution,
            format!("kernel is not axially symmetric (|k_jm|, m ≠ 0, up to {off_axis:e})"),
        ));
    }
    let r2 = f.radius() * f.radius();
    let factors: Vec<Complex64> = (0..=f.band())
        .map(|rank| kernel.coeff(rank, 0) * (r2 * (4.0 * PI / (2 * rank + 1) as f64).sqrt()))
        .collect();
    let triples = f
        .iter()
        .map(|(rank, m, c)| (rank, m, c * factors[rank]));
    let s_tag = match (kernel.s_tag(), f.s_tag()) {
        (Some(sk), Some(sf)) => Some(sf + sk - 1.0),
        _ => None,
    };
    SphericalFunction::from_triples(f.j(), triples, s_tag)
}

/// γ_j^{1−s'} for j = 0..=2J.
pub fn transform_weights(j: HalfInteger, s_prime: f64) -> Result<Vec<f64>> {
    let g = gamma(j)?;
    (0..g.len())
        .map(|rank| {
            let l = (1.0 - s_prime) * g.ln_value(rank);
            check_log_weight(l, rank, Module::Convolution)?;
            Ok(l.exp())
        })
        .collect()
}

/// Convolution with the spin-up kernel of parameter s': turns an
/// s-function into an (s + s' − 1)-function.
pub fn transform_s(f: &SphericalFunction, s_prime: f64) -> Result<SphericalFunction> {
    let s = f.s_tag().ok_or_else(|| {
        Error::contract(
            Module::Convolution,
            "transform_s needs a function tagged with its s parameter",
        )
    })?;
    let weights = transform_weights(f.j(), s_prime)?;
    Ok(f.scale_ranks(&weights, Some(s + s_prime - 1.0)))
}

/// max_j γ_j^{1−s'} / min_j γ_j^{1−s'}: worst-case relative amplification
/// of rank-wise noise by [`transform_s`].
pub fn condition_number(j: HalfInteger, s_prime: f64) -> Result<f64> {
    let g = gamma(j)?;
    let logs: Vec<f64> = (0..g.len()).map(|r| (1.0 - s_prime) * g.ln_value(r)).collect();
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    check_log_weight(hi - lo, g.len() - 1, Module::Convolution)?;
    Ok((hi - lo).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::{evaluate_series, kernel_function, to_spherical_coeffs};
    use crate::quadrature::SphereQuadrature;
    use crate::specialfn::RotationAngles;
    use crate::spinstates::random_hs;

    fn h(t: i32) -> HalfInteger {
        HalfInteger::from_twice(t)
    }

    fn max_coeff_diff(a: &SphericalFunction, b: &SphericalFunction) -> f64 {
        a.coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn delta_kernel_is_identity() {
        for tj in [1, 4, 9] {
            let j = h(tj);
            let f = to_spherical_coeffs(&random_hs(j, 3), 0.0).unwrap();
            let delta = kernel_function(j, 1.0).unwrap();
            let out = convolve(&delta, &f).unwrap();
            assert!(max_coeff_diff(&out, &f) < 1e-13);
            assert_eq!(out.s_tag(), Some(0.0));
        }
    }

    #[test]
    fn wigner_of_spin_up_maps_w_to_q() {
        for tj in 1..=10 {
            let j = h(tj);
            let rho = random_hs(j, tj as u64);
            let w = to_spherical_coeffs(&rho, 0.0).unwrap();
            let q = to_spherical_coeffs(&rho, -1.0).unwrap();
            let k = kernel_function(j, 0.0).unwrap();
            let out = convolve(&k, &w).unwrap();
            assert!(max_coeff_diff(&out, &q) < 1e-10);
            assert_eq!(out.s_tag(), Some(-1.0));
        }
    }

    #[test]
    fn kernel_convolution_equals_transform() {
        for tj in [2, 5, 10] {
            let j = h(tj);
            let f = to_spherical_coeffs(&random_hs(j, 1), 0.5).unwrap();
            for sp in [-0.5, 0.0, 0.7, 1.0, 1.6] {
                let a = convolve(&kernel_function(j, sp).unwrap(), &f).unwrap();
                let b = transform_s(&f, sp).unwrap();
                let scale = b.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
                assert!(max_coeff_diff(&a, &b) <= 1e-12 * scale);
                assert_eq!(a.s_tag(), b.s_tag());
            }
        }
    }

    #[test]
    fn integral_definition_oracle() {
        // (K ∗ f)(Ω) = ∫ K(∠(Ω, Ω')) f(Ω') dΩ', evaluated by exact quadrature
        let j = h(4);
        let f = to_spherical_coeffs(&random_hs(j, 21), 0.0).unwrap();
        let r2 = f.radius() * f.radius();
        let mut constant = SphericalFunction::zeros(j, None).unwrap();
        constant
            .set(0, 0, Complex64::new(1.0 / (r2 * (4.0 * PI).sqrt()), 0.0))
            .unwrap();
        for kernel in [kernel_function(j, 0.3).unwrap(), constant] {
            let conv = convolve(&kernel, &f).unwrap();
            let rule = SphereQuadrature::for_band_limit(j.twice() as usize);
            for omega in [
                RotationAngles::new(0.3, 1.2).unwrap(),
                RotationAngles::new(2.5, 4.0).unwrap(),
            ] {
                let n = omega.unit_vector();
                let quad: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| {
                        let v = p.unit_vector();
                        let cosg = (n[0] * v[0] + n[1] * v[1] + n[2] * v[2]).clamp(-1.0, 1.0);
                        let k = evaluate_series(&kernel, &RotationAngles::new(cosg.acos(), 0.0).unwrap())
                            .unwrap();
                        w * r2 * k * evaluate_series(&f, p).unwrap()
                    })
                    .sum();
                let direct = evaluate_series(&conv, &omega).unwrap();
                assert!((quad - direct).abs() < 1e-6, "{quad} vs {direct}");
            }
        }
    }

    #[test]
    fn non_axial_kernel_rejected() {
        let j = h(3);
        let f = to_spherical_coeffs(&random_hs(j, 2), 0.0).unwrap();
        let mut k = kernel_function(j, 0.0).unwrap();
        k.set(2, 1, Complex64::new(1e-3, 0.0)).unwrap();
        assert!(matches!(convolve(&k, &f), Err(Error::Contract { .. })));
        let other = kernel_function(h(4), 0.0).unwrap();
        assert!(matches!(convolve(&other, &f), Err(Error::Domain { .. })));
    }

    #[test]
    fn transform_round_trip_and_untagged() {
        for tj in 1..=20 {
            let j = h(tj);
            let w = to_spherical_coeffs(&random_hs(j, 40 + tj as u64), 0.0).unwrap();
            let back = transform_s(&transform_s(&w, 0.0).unwrap(), 2.0).unwrap();
            assert!(max_coeff_diff(&back, &w) < 1e-9);
            assert_eq!(back.s_tag(), Some(0.0));
        }
        let untagged = SphericalFunction::zeros(h(2), None).unwrap();
        assert!(transform_s(&untagged, 0.0).is_err());
    }

    #[test]
    fn condition_number_grows_with_deconvolution() {
        let j = h(5);
        assert!((condition_number(j, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let g = gamma(j).unwrap();
        let expect = g.value(0) / g.value(5);
        assert!((condition_number(j, 0.0).unwrap() - expect).abs() < 1e-9 * expect);
        assert!(condition_number(j, 2.0).unwrap() > 1.0);
        let big = kernel_function(h(100), 0.0).unwrap();
        assert!(matches!(transform_s(&big, 400.0), Err(Error::Conditioning { .. })));
    }
}
