//! Phase-space functions F_ρ(Ω, s): the direct route through rotated
//! populations, the spherical-harmonic coefficient route, spin-up kernels
//! and the planar reference functions used for large-J comparisons.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Module, Result};
use crate::linalg::{self, CMatrix};
use crate::parity::{check_log_weight, gamma, parity_operator, sphere_radius, ParityOperator};
use crate::quadrature::gauss_legendre;
use crate::specialfn::{clebsch_gordan_twice, coherent_rotation, HalfInteger, LegendreTable, RotationAngles};
use crate::spinstates::{make_named_state, DensityMatrix, NamedState};

/// A point Ω = (θ, φ) of the spherical phase space.
pub type PhasePoint = RotationAngles;

/// Reality defect allowed when evaluating a function of a Hermitian operator.
pub const REALITY_TOL: f64 = 1e-9;
/// Imaginary residue allowed on rotated populations.
pub const POPULATION_TOL: f64 = 1e-10;
/// Largest 2J for which coefficients come from Clebsch-Gordan sums.
pub const TENSOR_ROUTE_MAX_TWICE_J: i32 = 40;

/// Packed position of c_jm.
#[inline]
pub fn coeff_index(j: usize, m: i32) -> usize {
    ((j * j + j) as isize + m as isize) as usize
}

/// Band-limited function on the sphere of radius R = √(J/2π), stored as
/// spherical-harmonic coefficients c_jm for j ≤ 2J.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalFunction {
    twice_j: i32,
    radius: f64,
    coeffs: Vec<Complex64>,
    s_tag: Option<f64>,
}

impl SphericalFunction {
    pub fn new(j: HalfInteger, coeffs: Vec<Complex64>, s_tag: Option<f64>) -> Result<Self> {
        if j.twice() <= 0 {
            return Err(Error::domain(
                Module::PhaseSpace,
                format!("spherical functions need J > 0, got {j}"),
            ));
        }
        let band = j.twice() as usize;
        let expect = (band + 1) * (band + 1);
        if coeffs.len() != expect {
            return Err(Error::domain(
                Module::PhaseSpace,
                format!("expected {expect} coefficients for J = {j}, got {}", coeffs.len()),
            ));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::integrity(Module::PhaseSpace, "non-finite coefficient"));
        }
        if let Some(s) = s_tag {
            if !s.is_finite() {
                return Err(Error::domain(Module::PhaseSpace, "s tag must be finite"));
            }
        }
        Ok(SphericalFunction {
            twice_j: j.twice(),
            radius: sphere_radius(j),
            coeffs,
            s_tag,
        })
    }

    pub fn zeros(j: HalfInteger, s_tag: Option<f64>) -> Result<Self> {
        let band = j.twice().max(0) as usize;
        Self::new(j, vec![Complex64::new(0.0, 0.0); (band + 1) * (band + 1)], s_tag)
    }

    /// Builds from (j, m, c) triples; missing entries are zero and ranks
    /// beyond 2J are rejected.
    pub fn from_triples(
        j: HalfInteger,
        triples: impl IntoIterator<Item = (usize, i32, Complex64)>,
        s_tag: Option<f64>,
    ) -> Result<Self> {
        let mut f = Self::zeros(j, s_tag)?;
        for (rank, m, c) in triples {
            f.set(rank, m, c)?;
        }
        Ok(f)
    }

    pub fn j(&self) -> HalfInteger {
        HalfInteger::from_twice(self.twice_j)
    }

    pub fn twice_j(&self) -> i32 {
        self.twice_j
    }

    /// Band limit 2J.
    pub fn band(&self) -> usize {
        self.twice_j as usize
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn s_tag(&self) -> Option<f64> {
        self.s_tag
    }

    pub fn with_s_tag(mut self, s: Option<f64>) -> Self {
        self.s_tag = s;
        self
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, rank: usize, m: i32) -> Complex64 {
        self.coeffs[coeff_index(rank, m)]
    }

    pub fn set(&mut self, rank: usize, m: i32, c: Complex64) -> Result<()> {
        if rank > self.band() || m.unsigned_abs() as usize > rank {
            return Err(Error::domain(
                Module::PhaseSpace,
                format!("(j, m) = ({rank}, {m}) exceeds band limit {}", self.band()),
            ));
        }
        self.coeffs[coeff_index(rank, m)] = c;
        Ok(())
    }

    /// Iterates (j, m, c_jm) in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, i32, Complex64)> + '_ {
        (0..=self.band()).flat_map(move |rank| {
            (-(rank as i32)..=rank as i32).map(move |m| (rank, m, self.coeff(rank, m)))
        })
    }

    /// max |c_jm* − (−1)^m c_{j,−m}|.
    pub fn reality_defect(&self) -> f64 {
        self.iter()
            .map(|(rank, m, c)| {
                let partner = self.coeff(rank, -m);
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                (c.conj() - partner * sign).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Multiplies every rank-j coefficient by `weights[j]`.
    pub fn scale_ranks(&self, weights: &[f64], s_tag: Option<f64>) -> Self {
        let mut out = self.clone();
        for (rank, w) in weights.iter().enumerate().take(self.band() + 1) {
            for m in -(rank as i32)..=rank as i32 {
                out.coeffs[coeff_index(rank, m)] *= *w;
            }
        }
        out.s_tag = s_tag;
        out
    }

    fn require_compatible(&self, other: &Self) -> Result<()> {
        if self.twice_j != other.twice_j {
            return Err(Error::domain(
                Module::PhaseSpace,
                format!(
                    "band limits differ: 2J = {} vs {}",
                    self.twice_j, other.twice_j
                ),
            ));
        }
        Ok(())
    }

    /// a·self + b·other.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.require_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x * a + y * b)
            .collect();
        let s_tag = if self.s_tag == other.s_tag { self.s_tag } else { None };
        Ok(SphericalFunction {
            coeffs,
            s_tag,
            ..self.clone()
        })
    }

    /// (Σ |c_jm|²)^{1/2}; the L² norm on the sphere of radius R is R times this.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// ‖f‖₂ over the sphere of radius R.
    pub fn l2_norm(&self) -> f64 {
        self.radius * self.coeff_norm()
    }

    /// Σ_jm |c_jm|²  restricted to odd ranks.
    pub fn odd_rank_energy(&self) -> f64 {
        self.iter()
            .filter(|(rank, _, _)| rank % 2 == 1)
            .map(|(_, _, c)| c.norm_sqr())
            .sum()
    }

    /// Upper bound on |f| from |Y_jm| ≤ √((2j+1)/4π).
    pub fn sup_bound(&self) -> f64 {
        self.iter()
            .map(|(rank, _, c)| c.norm() * ((2 * rank + 1) as f64 / (4.0 * PI)).sqrt())
            .sum()
    }
}

/// p_m = ⟨Jm|U†AU|Jm⟩ for U = `coherent_rotation(Ω)`, complex in general.
pub fn rotated_diagonal(op: &CMatrix, j: HalfInteger, point: &PhasePoint) -> Vec<Complex64> {
    let u = coherent_rotation(j, point);
    let v = op * &u;
    (0..j.dim())
        .map(|m| (0..j.dim()).map(|a| u[(a, m)].conj() * v[(a, m)]).sum())
        .collect()
}

/// Real rotated populations of a Hermitian operator; the imaginary residue is
/// checked against [`POPULATION_TOL`] and discarded.
pub fn rotated_populations(op: &CMatrix, j: HalfInteger, point: &PhasePoint) -> Result<Vec<f64>> {
    let scale = linalg::max_abs(op).max(1.0) * j.dim() as f64;
    rotated_diagonal(op, j, point)
        .into_iter()
        .map(|z| {
            if z.im.abs() > POPULATION_TOL * scale {
                Err(Error::integrity(
                    Module::PhaseSpace,
                    format!("rotated population has imaginary part {:e}", z.im),
                ))
            } else {
                Ok(z.re)
            }
        })
        .collect()
}

fn require_dim(op: &CMatrix, j: HalfInteger) -> Result<()> {
    if op.nrows() != j.dim() || op.ncols() != j.dim() {
        return Err(Error::domain(
            Module::PhaseSpace,
            format!("operator is {}x{}, J = {j} needs {}", op.nrows(), op.ncols(), j.dim()),
        ));
    }
    Ok(())
}

/// F = Σ_m [M]_mm ⟨Jm|U†ρU|Jm⟩ with a prebuilt parity operator.
pub fn evaluate_with(parity: &ParityOperator, rho: &DensityMatrix, point: &PhasePoint) -> Result<f64> {
    if parity.j() != rho.j() {
        return Err(Error::domain(Module::PhaseSpace, "parity operator and state disagree on J"));
    }
    let p = rotated_populations(rho.matrix(), rho.j(), point)?;
    Ok(parity.contract(&p))
}

/// F_ρ(Ω, s) by the rotated-parity route.
pub fn evaluate_direct(rho: &DensityMatrix, point: &PhasePoint, s: f64) -> Result<f64> {
    let parity = parity_operator(rho.j(), s)?;
    evaluate_with(&parity, rho, point)
}

/// F_A(Ω, s) for an arbitrary Hermitian operator A.
pub fn evaluate_operator(j: HalfInteger, op: &CMatrix, point: &PhasePoint, s: f64) -> Result<f64> {
    require_dim(op, j)?;
    let defect = linalg::hermiticity_defect(op);
    if defect > 1e-10 * linalg::max_abs(op).max(1.0) {
        return Err(Error::domain(
            Module::PhaseSpace,
            format!("operator is not Hermitian (defect {defect:e})"),
        ));
    }
    let parity = parity_operator(j, s)?;
    let p = rotated_populations(op, j, point)?;
    Ok(parity.contract(&p))
}

/// Tr(A T_jm†) for every (j, m) from Clebsch-Gordan sums, packed.
fn tensor_projections(j: HalfInteger, op: &CMatrix) -> Vec<Complex64> {
    let tj = j.twice();
    let d = j.dim();
    let band = tj as usize;
    let ms: Vec<i32> = j.projections().map(HalfInteger::twice).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); (band + 1) * (band + 1)];
    for rank in 0..=band {
        let scale = ((2 * rank + 1) as f64 / d as f64).sqrt();
        for m in -(rank as i32)..=rank as i32 {
            // [T_jm]_{ab} ≠ 0 only for m_a = m_b + m, i.e. b = a + m
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..d {
                let b = a as i64 + m as i64;
                if b < 0 || b >= d as i64 {
                    continue;
                }
                let b = b as usize;
                let t = scale * clebsch_gordan_twice(tj, ms[b], 2 * rank as i32, 2 * m, tj, ms[a]);
                acc += op[(a, b)] * t;
            }
            out[coeff_index(rank, m)] = acc;
        }
    }
    out
}

/// Tr(A T_jm†) for every (j, m) by exact quadrature of F_A(·, 0); used above
/// the range where Clebsch-Gordan sums keep full precision.
fn quadrature_projections(j: HalfInteger, op: &CMatrix) -> Result<Vec<Complex64>> {
    let band = j.twice() as usize;
    let parity = parity_operator(j, 0.0)?;
    let (nodes, weights) = gauss_legendre(band + 1);
    let n_phi = 2 * band + 1;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); (band + 1) * (band + 1)];
    let mut fourier = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
    for (x, w) in nodes.iter().zip(&weights) {
        let theta = x.clamp(-1.0, 1.0).acos();
        fourier.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for q in 0..n_phi {
            let phi = dphi * q as f64;
            let point = RotationAngles { theta, phi };
            let diag = rotated_diagonal(op, j, &point);
            let value: Complex64 = parity.diag().iter().zip(&diag).map(|(m, p)| p * *m).sum();
            for (k, b) in fourier.iter_mut().enumerate() {
                let m = k as f64 - band as f64;
                *b += value * Complex64::from_polar(dphi, -m * phi);
            }
        }
        let table = LegendreTable::new(band, theta);
        for rank in 0..=band {
            for m in -(rank as i32)..=rank as i32 {
                let y = table.harmonic(rank, m, 0.0).conj();
                out[coeff_index(rank, m)] += fourier[(m + band as i32) as usize] * y * *w;
            }
        }
    }
    // c^0_jm = Tr(A T†)/(R γ_j⁰) = Tr(A T†)/R
    let r = sphere_radius(j);
    for c in &mut out {
        *c *= r;
    }
    Ok(out)
}

/// Coefficients c_jm = Tr(A T_jm†)/(R γ_j^s) of any operator A.
pub fn coeffs_of_operator(j: HalfInteger, op: &CMatrix, s: f64) -> Result<SphericalFunction> {
    require_dim(op, j)?;
    let g = gamma(j)?;
    let projections = if j.twice() <= TENSOR_ROUTE_MAX_TWICE_J {
        tensor_projections(j, op)
    } else {
        quadrature_projections(j, op)?
    };
    let mut weights = Vec::with_capacity(g.len());
    for rank in 0..g.len() {
        let log_w = -g.radius().ln() - s * g.ln_value(rank);
        check_log_weight(log_w, rank, Module::PhaseSpace)?;
        weights.push(log_w.exp());
    }
    let f = SphericalFunction::new(j, projections, Some(s))?;
    Ok(f.scale_ranks(&weights, Some(s)))
}

/// Spherical-harmonic coefficients of F_ρ(·, s).
pub fn to_spherical_coeffs(rho: &DensityMatrix, s: f64) -> Result<SphericalFunction> {
    coeffs_of_operator(rho.j(), rho.matrix(), s)
}

fn series_value(f: &SphericalFunction, table: &LegendreTable, phi: f64) -> Complex64 {
    f.iter()
        .map(|(rank, m, c)| c * table.harmonic(rank, m, phi))
        .sum()
}

fn checked_real(f: &SphericalFunction, z: Complex64) -> Result<f64> {
    let tol = REALITY_TOL * f.sup_bound().max(1.0);
    if z.im.abs() > tol {
        return Err(Error::integrity(
            Module::PhaseSpace,
            format!("series value has imaginary part {:e}", z.im),
        ));
    }
    Ok(z.re)
}

/// Σ c_jm Y_jm(Ω), complex.
pub fn evaluate_series_complex(f: &SphericalFunction, point: &PhasePoint) -> Complex64 {
    let table = LegendreTable::new(f.band(), point.theta);
    series_value(f, &table, point.phi)
}

/// Σ c_jm Y_jm(Ω), checked to be real.
pub fn evaluate_series(f: &SphericalFunction, point: &PhasePoint) -> Result<f64> {
    checked_real(f, evaluate_series_complex(f, point))
}

/// Series values on the product grid θ × φ, row-major in θ. One Legendre
/// table per θ and one azimuthal sum per point.
pub fn evaluate_grid(f: &SphericalFunction, thetas: &[f64], phis: &[f64]) -> Result<Vec<f64>> {
    let band = f.band();
    let width = 2 * band + 1;
    let tol = REALITY_TOL * f.sup_bound().max(1.0);
    let phases: Vec<Complex64> = phis
        .iter()
        .flat_map(|&phi| {
            (0..width).map(move |k| Complex64::from_polar(1.0, (k as f64 - band as f64) * phi))
        })
        .collect();
    let mut out = Vec::with_capacity(thetas.len() * phis.len());
    let mut a = vec![Complex64::new(0.0, 0.0); width];
    for &theta in thetas {
        let table = LegendreTable::new(band, theta);
        for (k, slot) in a.iter_mut().enumerate() {
            let m = k as i32 - band as i32;
            *slot = (m.unsigned_abs() as usize..=band)
                .map(|rank| f.coeff(rank, m) * table.harmonic(rank, m, 0.0))
                .sum();
        }
        for row in phases.chunks_exact(width) {
            let z: Complex64 = a.iter().zip(row).map(|(c, e)| c * e).sum();
            if z.im.abs() > tol {
                return Err(Error::integrity(
                    Module::PhaseSpace,
                    format!("series value has imaginary part {:e}", z.im),
                ));
            }
            out.push(z.re);
        }
    }
    Ok(out)
}

/// Angles of the uniform n_theta × n_phi grid including both poles in θ.
pub fn dense_grid_axes(n_theta: usize, n_phi: usize) -> (Vec<f64>, Vec<f64>) {
    let thetas = (0..n_theta)
        .map(|k| PI * k as f64 / (n_theta.max(2) - 1) as f64)
        .collect();
    let phis = (0..n_phi).map(|q| 2.0 * PI * q as f64 / n_phi as f64).collect();
    (thetas, phis)
}

/// max |f| sampled on a dense n × n grid.
pub fn max_abs_on_grid(f: &SphericalFunction, n: usize) -> Result<f64> {
    let (thetas, phis) = dense_grid_axes(n, n);
    Ok(evaluate_grid(f, &thetas, &phis)?
        .into_iter()
        .fold(0.0, |a, v| a.max(v.abs())))
}

/// Spin-up kernel F_{|JJ⟩}(·, s): c_j0 = √((2j+1)/4π) γ_j^{1−s}/R².
pub fn kernel_function(j: HalfInteger, s: f64) -> Result<SphericalFunction> {
    let g = gamma(j)?;
    let mut f = SphericalFunction::zeros(j, Some(s))?;
    let r2 = g.radius() * g.radius();
    for rank in 0..g.len() {
        let log_w = 0.5 * ((2 * rank + 1) as f64 / (4.0 * PI)).ln() + (1.0 - s) * g.ln_value(rank)
            - r2.ln();
        check_log_weight(log_w, rank, Module::PhaseSpace)?;
        f.set(rank, 0, Complex64::new(log_w.exp(), 0.0))?;
    }
    Ok(f)
}

/// ∫ f dΩ = R² √(4π) Re c_00.
pub fn integrate_sphere(f: &SphericalFunction) -> f64 {
    f.radius * f.radius * (4.0 * PI).sqrt() * f.coeff(0, 0).re
}

/// ∫ f g* dΩ = R² Σ c^f (c^g)*. For the functions of A at s and of B at −s
/// this equals Tr(AB).
pub fn pairing(f: &SphericalFunction, g: &SphericalFunction) -> Result<Complex64> {
    f.require_compatible(g)?;
    let sum: Complex64 = f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a * b.conj()).sum();
    Ok(sum * (f.radius * f.radius))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanarState {
    Vacuum,
    SinglePhoton,
}

/// Planar F_{|n⟩}(α, s) for n ∈ {0, 1} and s < 1.
pub fn planar_function(state: PlanarState, alpha: Complex64, s: f64) -> Result<f64> {
    if !(s < 1.0) {
        return Err(Error::domain(
            Module::PhaseSpace,
            format!("planar closed forms need s < 1, got {s}"),
        ));
    }
    let a2 = alpha.norm_sqr();
    let pre = 2.0 / (1.0 - s);
    let gauss = (-2.0 * a2 / (1.0 - s)).exp();
    Ok(match state {
        PlanarState::Vacuum => pre * gauss,
        PlanarState::SinglePhoton => {
            // (s+1)/(s−1) · L_1(4|α|²/(1−s²)) written without the 0·∞ at s = −1
            pre * ((s + 1.0) / (s - 1.0) + 4.0 * a2 / ((1.0 - s) * (1.0 - s))) * gauss
        }
    })
}

/// Named planar references: `vacuum_Q`, `vacuum_W`, `single_photon_W`.
pub fn planar_reference(name: &str, alpha: Complex64) -> Result<f64> {
    match name {
        "vacuum_Q" => planar_function(PlanarState::Vacuum, alpha, -1.0),
        "vacuum_W" => planar_function(PlanarState::Vacuum, alpha, 0.0),
        "single_photon_W" => planar_function(PlanarState::SinglePhoton, alpha, 0.0),
        other => Err(Error::domain(
            Module::PhaseSpace,
            format!("unknown planar reference `{other}`"),
        )),
    }
}

/// Spin states with a known planar limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitState {
    /// |JJ⟩ → vacuum
    SpinUp,
    /// |J, J−1⟩ → single photon
    DickeOneDown,
}

impl LimitState {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "spin_up" | "spinup" | "vacuum" => Ok(LimitState::SpinUp),
            "dicke" | "dicke_1" | "single_photon" => Ok(LimitState::DickeOneDown),
            other => Err(Error::domain(
                Module::PhaseSpace,
                format!("no planar limit known for `{other}`"),
            )),
        }
    }

    pub fn planar(self) -> PlanarState {
        match self {
            LimitState::SpinUp => PlanarState::Vacuum,
            LimitState::DickeOneDown => PlanarState::SinglePhoton,
        }
    }
}

/// Number of θ samples on [0, π/2] used for limit comparisons.
pub const LIMIT_SAMPLES: usize = 200;

/// Samples (θ, a, F_spin, F_planar) along φ = 0 for θ ∈ [0, π/2], with arc
/// length a = θR and α = √π a.
pub fn planar_limit_profile(
    j: HalfInteger,
    s: f64,
    state: LimitState,
    samples: usize,
) -> Result<Vec<[f64; 4]>> {
    let named = match state {
        LimitState::SpinUp => NamedState::SpinUp,
        LimitState::DickeOneDown => {
            if j.twice() < 1 {
                return Err(Error::domain(Module::PhaseSpace, "|J, J−1⟩ needs J ≥ 1/2"));
            }
            NamedState::Dicke(HalfInteger::from_twice(j.twice() - 2))
        }
    };
    let rho = make_named_state(&named, j)?.density();
    let parity = parity_operator(j, s)?;
    let r = sphere_radius(j);
    let n = samples.max(2);
    (0..n)
        .map(|k| {
            let theta = 0.5 * PI * k as f64 / (n - 1) as f64;
            let point = RotationAngles::new(theta, 0.0)?;
            let spin = evaluate_with(&parity, &rho, &point)?;
            let a = theta * r;
            let planar = planar_function(state.planar(), Complex64::new(PI.sqrt() * a, 0.0), s)?;
            Ok([theta, a, spin, planar])
        })
        .collect()
}

/// max_θ |F_spin(θ) − F_planar(α(θ))| over [`LIMIT_SAMPLES`] points.
pub fn planar_limit_error(j: HalfInteger, s: f64, state: LimitState) -> Result<f64> {
    Ok(planar_limit_profile(j, s, state, LIMIT_SAMPLES)?
        .iter()
        .map(|row| (row[2] - row[3]).abs())
        .fold(0.0, f64::max))
}
