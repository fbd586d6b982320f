//! Counter-based random streams and multinomial shot-noise sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::{probabilities, SternGerlachRecord};
use crate::error::{Error, Module, Result};
use crate::phasespace::PhasePoint;
use crate::spinstates::DensityMatrix;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream addressed by `coords` under `master`. Distinct
/// coordinate tuples give unrelated seeds, independent of evaluation order.
pub fn stream_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix(master), |acc, &c| splitmix(acc ^ splitmix(c)))
}

pub fn stream_rng(master: u64, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, coords))
}

/// Multinomial draw of `n` trials over `p` by sequential conditional
/// binomials.
pub fn sample_multinomial(p: &[f64], n: u64, rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::domain(Module::Tomography, "probabilities must be finite and non-negative"));
    }
    let mut counts = vec![0u64; p.len()];
    let mut left = n;
    let mut mass: f64 = p.iter().sum();
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, q)
            .map_err(|e| Error::domain(Module::Tomography, e.to_string()))?
            .sample(rng);
        counts[i] = k;
        left -= k;
        mass -= pi;
    }
    Ok(counts)
}

/// Simulates N_r Stern-Gerlach runs at `point`.
pub fn sample_counts(
    rho: &DensityMatrix,
    point: &PhasePoint,
    repetitions: u64,
    rng: &mut ChaCha8Rng,
) -> Result<SternGerlachRecord> {
    if repetitions == 0 {
        return Err(Error::domain(Module::Tomography, "N_r must be at least 1"));
    }
    let p = probabilities(rho, point)?;
    let counts = sample_multinomial(&p, repetitions, rng)?;
    Ok(SternGerlachRecord {
        theta: point.theta,
        phi: point.phi,
        counts,
        repetitions,
    })
}
