//! Gauss-Legendre rules on [−1, 1] and the product rule on the sphere.

use std::f64::consts::PI;

use crate::specialfn::RotationAngles;

/// Nodes and weights of the `n`-point Gauss-Legendre rule, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
            break;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule: Gauss-Legendre in cos θ times a uniform φ rule. Weights
/// integrate over the unit sphere (they sum to 4π).
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub points: Vec<RotationAngles>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Exact for polynomials of degree ≤ 2·n_theta − 1 in cos θ and azimuthal
    /// frequencies below `n_phi`.
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = xi.clamp(-1.0, 1.0).acos();
            for q in 0..n_phi {
                points.push(RotationAngles {
                    theta,
                    phi: dphi * q as f64,
                });
                weights.push(wi * dphi);
            }
        }
        SphereQuadrature { points, weights }
    }

    /// The smallest rule integrating products of two functions band-limited
    /// to rank `band` exactly.
    pub fn for_band_limit(band: usize) -> Self {
        SphereQuadrature::new(band + 1, 2 * band + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
