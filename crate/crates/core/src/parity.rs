//! γ_j coefficients, spherical tensor operators T_jm and the diagonal parity
//! operators M_s (and their Radon counterparts) whose rotated expectation
//! values are the s-parametrised phase-space functions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::linalg::CMatrix;
use crate::specialfn::{clebsch_gordan_twice, legendre_unchecked, ln_factorial, HalfInteger};

/// Weights larger than this are reported as ill-conditioned.
pub const MAX_WEIGHT: f64 = 1e300;

/// Radius √(J/2π) of the spherical phase space.
pub fn sphere_radius(j: HalfInteger) -> f64 {
    (j.value() / (2.0 * PI)).sqrt()
}

fn require_positive_spin(j: HalfInteger) -> Result<()> {
    if j.twice() <= 0 {
        return Err(Error::domain(
            Module::Parity,
            format!("spin must be positive, got J = {j}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaCoefficients {
    j: HalfInteger,
    radius: f64,
    log_values: Vec<f64>,
}

impl GammaCoefficients {
    pub fn j(&self) -> HalfInteger {
        self.j
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// γ_j for j = 0..=2J.
    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|l| l.exp()).collect()
    }

    pub fn value(&self, rank: usize) -> f64 {
        self.log_values[rank].exp()
    }

    pub fn ln_value(&self, rank: usize) -> f64 {
        self.log_values[rank]
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    /// γ_j^p, failing when it exceeds [`MAX_WEIGHT`].
    pub fn power(&self, rank: usize, p: f64, module: Module) -> Result<f64> {
        let l = p * self.log_values[rank];
        check_log_weight(l, rank, module)?;
        Ok(l.exp())
    }
}

pub(crate) fn check_log_weight(log_w: f64, rank: usize, module: Module) -> Result<()> {
    if !(log_w <= MAX_WEIGHT.ln()) {
        return Err(Error::Conditioning {
            module,
            j: rank,
            log10_weight: log_w / std::f64::consts::LN_10,
        });
    }
    Ok(())
}

/// γ_j = R √(4π) (2J)! [(2J+j+1)! (2J−j)!]^{−1/2}, j = 0..=2J, computed in
/// the log domain.
pub fn gamma(j: HalfInteger) -> Result<GammaCoefficients> {
    require_positive_spin(j)?;
    let tj = j.twice() as usize;
    let radius = sphere_radius(j);
    let base = radius.ln() + 0.5 * (4.0 * PI).ln() + ln_factorial(tj);
    let log_values = (0..=tj)
        .map(|rank| base - 0.5 * (ln_factorial(tj + rank + 1) + ln_factorial(tj - rank)))
        .collect();
    Ok(GammaCoefficients {
        j,
        radius,
        log_values,
    })
}

/// Spherical tensor operator T_jm with entries
/// √((2j+1)/(2J+1)) ⟨J m2; j m | J m1⟩.
pub fn tensor_op(j: HalfInteger, rank: usize, m: i32) -> Result<CMatrix> {
    if j.twice() < 0 || rank > j.twice() as usize || m.unsigned_abs() as usize > rank {
        return Err(Error::domain(
            Module::Parity,
            format!("tensor operator (j, m) = ({rank}, {m}) out of range for J = {j}"),
        ));
    }
    let d = j.dim();
    let tj = j.twice();
    let scale = ((2 * rank + 1) as f64 / d as f64).sqrt();
    let ms: Vec<i32> = j.projections().map(HalfInteger::twice).collect();
    let tr = 2 * rank as i32;
    Ok(CMatrix::from_fn(d, d, |a, b| {
        let (tm1, tm2) = (ms[a], ms[b]);
        let c = clebsch_gordan_twice(tj, tm2, tr, 2 * m, tj, tm1);
        Complex64::new(scale * c, 0.0)
    }))
}

/// Diagonals of T_j0 for j = 0..=2J, each indexed m = J..−J.
///
/// [T_j0]_mm = v_j(m), where v_j are the polynomials orthonormal for the
/// uniform weight on {−J, …, J}. Their Jacobi matrix has zero diagonal and
/// off-diagonal b_j = j √((N² − j²)/(4(4j² − 1))), N = 2J + 1, so v_j(m) is
/// the j-th component of the unit eigenvector for eigenvalue m, signed so
/// that the j = 0 component is positive. Unlike the Racah sum this stays
/// accurate at large J.
pub fn tensor_diagonals(j: HalfInteger) -> Vec<Vec<f64>> {
    let d = j.dim();
    let n = d as f64;
    let jacobi = DMatrix::<f64>::from_fn(d, d, |a, b| {
        if a.abs_diff(b) == 1 {
            let r = a.max(b) as f64;
            r * ((n * n - r * r) / (4.0 * (4.0 * r * r - 1.0))).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut out = vec![vec![0.0; d]; d];
    for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
        // eigenvalue λ = m sits at row index J − m
        let k = (j.value() - lambda).round() as usize;
        let v = eig.eigenvectors.column(col);
        let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
        for (rank, row) in out.iter_mut().enumerate() {
            row[k] = sign * v[rank];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityKind {
    Standard,
    Radon,
}

/// Diagonal operator [M]_mm, m = J..−J.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityOperator {
    j: HalfInteger,
    s: f64,
    diag: Vec<f64>,
    kind: ParityKind,
}

impl ParityOperator {
    pub fn j(&self) -> HalfInteger {
        self.j
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn kind(&self) -> ParityKind {
        self.kind
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Σ_m [M]_mm x_m
    pub fn contract(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.diag.len());
        self.diag.iter().zip(values).map(|(w, p)| w * p).sum()
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |a, w| a.max(w.abs()))
    }
}

/// Rank weights (1/R)√((2j+1)/4π) γ_j^{−s}, optionally multiplied by P_j(0).
fn rank_weights(j: HalfInteger, s: f64, radon: bool) -> Result<Vec<f64>> {
    let g = gamma(j)?;
    let mut out = Vec::with_capacity(g.len());
    for rank in 0..g.len() {
        let p0 = if radon {
            legendre_unchecked(rank, 0.0)
        } else {
            1.0
        };
        if p0 == 0.0 {
            out.push(0.0);
            continue;
        }
        let log_w = -g.radius().ln() + 0.5 * ((2 * rank + 1) as f64 / (4.0 * PI)).ln()
            - s * g.ln_value(rank)
            + p0.abs().ln();
        check_log_weight(log_w, rank, Module::Parity)?;
        out.push(p0.signum() * log_w.exp());
    }
    Ok(out)
}

fn assemble(j: HalfInteger, weights: &[f64]) -> Vec<f64> {
    let diagonals = tensor_diagonals(j);
    let mut diag = vec![0.0; j.dim()];
    for (w, t) in weights.iter().zip(&diagonals) {
        if *w == 0.0 {
            continue;
        }
        for (acc, x) in diag.iter_mut().zip(t) {
            *acc += w * x;
        }
    }
    diag
}

/// M_s = (1/R) Σ_j √((2j+1)/4π) γ_j^{−s} T_j0.
pub fn parity_operator(j: HalfInteger, s: f64) -> Result<ParityOperator> {
    require_positive_spin(j)?;
    let weights = rank_weights(j, s, false)?;
    Ok(ParityOperator {
        j,
        s,
        diag: assemble(j, &weights),
        kind: ParityKind::Standard,
    })
}

/// Radon parity operator: as [`parity_operator`] with each rank multiplied by
/// P_j(0). Normalised so that its rotated expectation is the great-circle
/// mean of F(·, s).
pub fn radon_parity(j: HalfInteger, s: f64) -> Result<ParityOperator> {
    require_positive_spin(j)?;
    let weights = rank_weights(j, s, true)?;
    Ok(ParityOperator {
        j,
        s,
        diag: assemble(j, &weights),
        kind: ParityKind::Radon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_product;

    fn h(t: i32) -> HalfInteger {
        HalfInteger::from_twice(t)
    }

    #[test]
    fn gamma_values_spin_half() {
        let g = gamma(h(1)).unwrap();
        assert!((g.value(0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((g.value(1) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!(gamma(h(0)).is_err());
    }

    #[test]
    fn gamma_zero_and_monotone() {
        for tj in 1..=100 {
            let g = gamma(h(tj)).unwrap();
            let expect = (tj as f64 / (tj as f64 + 1.0)).sqrt();
            assert!(((g.value(0) - expect) / expect).abs() < 1e-12);
            let v = g.values();
            assert!(v.iter().all(|&x| x > 0.0));
            assert!(v.windows(2).all(|w| w[1] < w[0]), "2J = {tj}");
        }
    }

    #[test]
    fn gamma_relative_accuracy_at_large_spin() {
        // direct product form for J = 50, j = 37 using exact ratios
        let tj = 100usize;
        let rank = 37usize;
        let g = gamma(h(tj as i32)).unwrap();
        // (2J)! / sqrt((2J+j+1)! (2J-j)!) = sqrt( (2J)!/(2J+j+1)! * (2J)!/(2J-j)! )
        let mut log_ratio = 0.0;
        for k in (tj + 1)..=(tj + rank + 1) {
            log_ratio -= (k as f64).ln();
        }
        for k in (tj - rank + 1)..=tj {
            log_ratio += (k as f64).ln();
        }
        let expect = sphere_radius(h(tj as i32)) * (4.0 * PI).sqrt() * (0.5 * log_ratio).exp();
        assert!(((g.value(rank) - expect) / expect).abs() < 1e-12);
    }

    #[test]
    fn t00_and_orthonormality() {
        for tj in 0..=10 {
            let j = h(tj);
            let t00 = tensor_op(j, 0, 0).unwrap();
            let expect = CMatrix::identity(j.dim(), j.dim()) / Complex64::new((j.dim() as f64).sqrt(), 0.0);
            assert!(crate::linalg::max_abs(&(t00 - expect)) < 1e-14);
        }
        for tj in 1..=10 {
            let j = h(tj);
            let mut ops = Vec::new();
            for rank in 0..=(tj as usize) {
                for m in -(rank as i32)..=(rank as i32) {
                    ops.push(tensor_op(j, rank, m).unwrap());
                }
            }
            for (a, ta) in ops.iter().enumerate() {
                for (b, tb) in ops.iter().enumerate() {
                    let ip = trace_product(&ta.adjoint(), tb);
                    let target = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - target).norm() < 1e-12, "2J = {tj}");
                }
            }
        }
        assert!(tensor_op(h(2), 3, 0).is_err());
        assert!(tensor_op(h(4), 1, 2).is_err());
    }

    #[test]
    fn tensor_adjoint_relation() {
        let j = h(5);
        for rank in 0..=5usize {
            for m in -(rank as i32)..=(rank as i32) {
                let t = tensor_op(j, rank, m).unwrap();
                let tm = tensor_op(j, rank, -m).unwrap();
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!(crate::linalg::max_abs(&(t.adjoint() - tm * Complex64::new(sign, 0.0))) < 1e-13);
            }
        }
    }

    #[test]
    fn polynomial_diagonals_match_clebsch_gordan() {
        // the Racah sum itself loses digits beyond this range
        for tj in 1..=30 {
            let j = h(tj);
            let diags = tensor_diagonals(j);
            for (rank, diag) in diags.iter().enumerate() {
                let t = tensor_op(j, rank, 0).unwrap();
                for (k, x) in diag.iter().enumerate() {
                    assert!(
                        (t[(k, k)].re - x).abs() < 1e-11,
                        "2J = {tj}, j = {rank}, k = {k}: {} vs {x}",
                        t[(k, k)].re
                    );
                }
            }
        }
    }

    #[test]
    fn polynomial_diagonals_follow_three_term_recurrence() {
        // m v_j = b_{j+1} v_{j+1} + b_j v_{j-1}, b_j² = j²(N² − j²)/(4(4j² − 1))
        for tj in [30, 61, 100, 160] {
            let j = h(tj);
            let n = j.dim() as f64;
            let ms: Vec<f64> = j.projections().map(HalfInteger::value).collect();
            let v = tensor_diagonals(j);
            let b = |r: usize| {
                let r = r as f64;
                (r * r * (n * n - r * r) / (4.0 * (4.0 * r * r - 1.0))).sqrt()
            };
            for rank in 1..(v.len() - 1) {
                for k in 0..ms.len() {
                    let lhs = ms[k] * v[rank][k];
                    let rhs = b(rank + 1) * v[rank + 1][k] + b(rank) * v[rank - 1][k];
                    assert!((lhs - rhs).abs() < 1e-12, "2J = {tj}, j = {rank}, k = {k}: {}", lhs - rhs);
                }
            }
        }
    }

    #[test]
    fn q_parity_is_spin_up_projector() {
        for tj in 1..=20 {
            let m = parity_operator(h(tj), -1.0).unwrap();
            assert!((m.diag()[0] - 1.0).abs() <= 1e-12);
            assert!(m.diag()[1..].iter().all(|x| x.abs() <= 1e-12));
            assert!((m.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wigner_parity_tends_to_two() {
        let mut last = f64::INFINITY;
        for tj in [4, 10, 20, 40, 80] {
            let m = parity_operator(h(tj), 0.0).unwrap();
            let top = m.diag()[0];
            assert!(top < 2.0);
            let gap = (top - 2.0).abs();
            assert!(gap < last, "2J = {tj}: gap {gap} not below {last}");
            last = gap;
        }
    }

    #[test]
    fn overflow_is_reported() {
        match parity_operator(h(100), 400.0) {
            Err(Error::Conditioning { j, .. }) => assert!(j > 0),
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }

    #[test]
    fn radon_parity_matches_direct_even_sum() {
        let j = h(5);
        let r = sphere_radius(j);
        let m = radon_parity(j, 0.0).unwrap();
        let mut expect = vec![0.0; j.dim()];
        for rank in [0usize, 2, 4] {
            let t = tensor_op(j, rank, 0).unwrap();
            let p0 = [1.0, 0.0, -0.5, 0.0, 0.375][rank];
            let w = ((2 * rank + 1) as f64 / (4.0 * PI)).sqrt() * p0 / r;
            for (k, e) in expect.iter_mut().enumerate() {
                *e += w * t[(k, k)].re;
            }
        }
        for (a, b) in m.diag().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn radon_parity_is_m_symmetric() {
        for tj in 1..=20 {
            for s in [-1.0, 0.0, 0.5] {
                let m = radon_parity(h(tj), s).unwrap();
                let d = m.diag();
                let n = d.len();
                for k in 0..n {
                    let scale = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    assert!((d[k] - d[n - 1 - k]).abs() < 1e-12 * scale.max(1.0));
                }
            }
        }
    }
}
