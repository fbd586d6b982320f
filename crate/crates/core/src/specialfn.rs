//! Special functions with fixed conventions: log-factorials, Legendre
//! polynomials, orthonormal spherical harmonics (Condon-Shortley phase),
//! Clebsch-Gordan coefficients and Wigner rotation matrices.
//!
//! Spin quantum numbers are carried as [`HalfInteger`]s holding twice their
//! value. Matrix rows and columns are always ordered m = J, J-1, ..., -J.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Module, Result};
use crate::linalg::CMatrix;

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInteger(i32);

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger(0);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInteger(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInteger(2 * n)
    }

    /// A spin magnitude; rejects negative values.
    pub fn spin(twice: i32) -> Result<Self> {
        if twice < 0 {
            return Err(Error::domain(
                Module::SpecialFn,
                format!("spin magnitude must be non-negative, got 2J = {twice}"),
            ));
        }
        Ok(HalfInteger(twice))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Hilbert-space dimension 2J+1 of a magnitude.
    pub fn dim(self) -> usize {
        debug_assert!(self.0 >= 0);
        self.0 as usize + 1
    }

    /// Projections m = J, J-1, ..., -J.
    pub fn projections(self) -> impl Iterator<Item = HalfInteger> {
        let t = self.0;
        (0..=t).map(move |k| HalfInteger(t - 2 * k))
    }

    /// Whether `m` is an admissible projection of this magnitude.
    pub fn admits(self, m: HalfInteger) -> bool {
        m.0.abs() <= self.0 && (self.0 - m.0) % 2 == 0
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Accepts "3", "-2", "5/2" and "-1/2".
impl std::str::FromStr for HalfInteger {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a half-integer: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((num, "2")) => {
                let n: i32 = num.trim().parse().map_err(|_| bad())?;
                if n % 2 == 0 {
                    return Err(bad());
                }
                Ok(HalfInteger(n))
            }
            Some(_) => Err(bad()),
            None => {
                let n: i32 = s.parse().map_err(|_| bad())?;
                n.checked_mul(2).map(HalfInteger).ok_or_else(bad)
            }
        }
    }
}

/// Polar and azimuthal angle of a point on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationAngles {
    pub theta: f64,
    pub phi: f64,
}

impl RotationAngles {
    /// Canonicalises into θ ∈ [0, π], φ ∈ [0, 2π). A polar angle beyond π is
    /// reflected through the pole, which shifts φ by π.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::domain(
                Module::SpecialFn,
                format!("angles must be finite, got ({theta}, {phi})"),
            ));
        }
        let two_pi = 2.0 * PI;
        let mut theta = theta.rem_euclid(two_pi);
        let mut phi = phi;
        if theta > PI {
            theta = two_pi - theta;
            phi += PI;
        }
        let mut phi = phi.rem_euclid(two_pi);
        if phi >= two_pi {
            phi = 0.0;
        }
        Ok(RotationAngles { theta, phi })
    }

    pub const fn north_pole() -> Self {
        RotationAngles {
            theta: 0.0,
            phi: 0.0,
        }
    }

    /// Unit vector pointing at this point.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn from_unit_vector(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
        RotationAngles { theta, phi }
    }

    /// The antipodal point (π − θ, φ + π).
    pub fn antipode(&self) -> Self {
        RotationAngles {
            theta: PI - self.theta,
            phi: (self.phi + PI).rem_euclid(2.0 * PI),
        }
    }
}

// ---------------------------------------------------------------------------
// Factorials

const LOG_FACTORIAL_TABLE_LEN: usize = 301;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LOG_FACTORIAL_TABLE_LEN);
        table.push(0.0);
        // Neumaier-compensated running sum of ln k.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for k in 1..LOG_FACTORIAL_TABLE_LEN {
            let x = (k as f64).ln();
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
            table.push(sum + comp);
        }
        table
    })
}

/// ln(n!) for non-negative `n`, infallible form used internally.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    let table = log_factorial_table();
    if n < table.len() {
        return table[n];
    }
    // Stirling series for ln Γ(n + 1).
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// ln(n!).
pub fn log_factorial(n: i64) -> Result<f64> {
    if n < 0 {
        return Err(Error::domain(
            Module::SpecialFn,
            format!("factorial of negative integer {n}"),
        ));
    }
    Ok(ln_factorial(n as usize))
}

// ---------------------------------------------------------------------------
// Legendre polynomials and spherical harmonics

/// Legendre polynomial P_j(x) by the three-term recurrence.
pub fn legendre_p(j: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(
            Module::SpecialFn,
            format!("Legendre argument {x} outside [-1, 1]"),
        ));
    }
    Ok(legendre_unchecked(j, x))
}

pub(crate) fn legendre_unchecked(j: usize, x: f64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for n in 1..j {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Y_jm(θ, 0) for 0 ≤ m ≤ j ≤ `lmax` at one polar angle, packed as
/// `j(j+1)/2 + m`. Values carry the Condon-Shortley phase and are
/// orthonormal on the unit sphere.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    lmax: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(lmax: usize, theta: f64) -> Self {
        let (sin_t, cos_t) = theta.sin_cos();
        let len = (lmax + 1) * (lmax + 2) / 2;
        let mut values = vec![0.0; len];
        let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let mut pmm = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..=lmax {
            if m > 0 {
                let mf = m as f64;
                pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t;
            }
            values[idx(m, m)] = pmm;
            if m == lmax {
                break;
            }
            let mf = m as f64;
            let mut p_prev = pmm;
            let mut p_cur = (2.0 * mf + 3.0).sqrt() * cos_t * pmm;
            values[idx(m + 1, m)] = p_cur;
            for l in (m + 2)..=lmax {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let p_next = a * (cos_t * p_cur - b * p_prev);
                values[idx(l, m)] = p_next;
                p_prev = p_cur;
                p_cur = p_next;
            }
        }
        LegendreTable { lmax, values }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Y_j|m|(θ, 0) for m ≥ 0.
    #[inline]
    pub fn get(&self, j: usize, m: usize) -> f64 {
        self.values[j * (j + 1) / 2 + m]
    }

    /// Full Y_jm(θ, φ) for either sign of m.
    pub fn harmonic(&self, j: usize, m: i32, phi: f64) -> Complex64 {
        let ma = m.unsigned_abs() as usize;
        let positive = Complex64::from_polar(self.get(j, ma), ma as f64 * phi);
        if m >= 0 {
            positive
        } else {
            conj_symmetric(positive, ma)
        }
    }
}

/// Y_{j,-m} from Y_{jm}: (−1)^m conj(Y_jm).
#[inline]
fn conj_symmetric(y: Complex64, m: usize) -> Complex64 {
    if m.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    }
}

/// Orthonormal spherical harmonic Y_jm(θ, φ) with Condon-Shortley phase.
pub fn spherical_harmonic(j: usize, m: i32, angles: &RotationAngles) -> Result<Complex64> {
    let ma = m.unsigned_abs() as usize;
    if ma > j {
        return Err(Error::domain(
            Module::SpecialFn,
            format!("|m| = {ma} exceeds j = {j}"),
        ));
    }
    let (sin_t, cos_t) = angles.theta.sin_cos();
    // Single column of the normalised recurrence.
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=ma {
        let kf = k as f64;
        pmm *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * sin_t;
    }
    let mut value = pmm;
    if j > ma {
        let mf = ma as f64;
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * mf + 3.0).sqrt() * cos_t * pmm;
        for l in (ma + 2)..=j {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b =
                (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let p_next = a * (cos_t * p_cur - b * p_prev);
            p_prev = p_cur;
            p_cur = p_next;
        }
        value = p_cur;
    }
    let positive = Complex64::from_polar(value, ma as f64 * angles.phi);
    Ok(if m >= 0 {
        positive
    } else {
        conj_symmetric(positive, ma)
    })
}

// ---------------------------------------------------------------------------
// Clebsch-Gordan

#[derive(Default)]
struct SignedSum {
    sum: f64,
    comp: f64,
}

impl SignedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_pair(j: HalfInteger, m: HalfInteger) -> Result<()> {
    if j.twice() < 0 || (j.twice() - m.twice()) % 2 != 0 {
        return Err(Error::domain(
            Module::SpecialFn,
            format!("malformed angular momentum pair (j, m) = ({j}, {m})"),
        ));
    }
    if m.twice().abs() > j.twice() {
        return Err(Error::domain(
            Module::SpecialFn,
            format!("projection {m} out of range for j = {j}"),
        ));
    }
    Ok(())
}

/// Clebsch-Gordan coefficient ⟨j1 m1; j2 m2 | j m⟩ (Condon-Shortley), by the
/// Racah sum evaluated in log-factorial form.
///
/// Accurate to about 1e-12 for magnitudes up to 20; cancellation in the
/// alternating sum grows beyond that.
pub fn clebsch_gordan(
    j1: HalfInteger,
    m1: HalfInteger,
    j2: HalfInteger,
    m2: HalfInteger,
    j: HalfInteger,
    m: HalfInteger,
) -> Result<f64> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j, m)?;
    Ok(clebsch_gordan_twice(
        j1.twice(),
        m1.twice(),
        j2.twice(),
        m2.twice(),
        j.twice(),
        m.twice(),
    ))
}

/// Racah formula on twice-values; inputs assumed well formed.
pub(crate) fn clebsch_gordan_twice(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
    if tm1 + tm2 != tm {
        return 0.0;
    }
    if tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 + tj) % 2 != 0 {
        return 0.0;
    }
    let h = |t: i32| -> i64 {
        debug_assert!(t % 2 == 0);
        i64::from(t / 2)
    };
    let lf = |n: i64| ln_factorial(n as usize);
    let a = h(tj1 + tj2 - tj);
    let b = h(tj1 - tj2 + tj);
    let c = h(-tj1 + tj2 + tj);
    let d = h(tj1 + tj2 + tj) + 1;
    let jp = h(tj + tm);
    let jm = h(tj - tm);
    let j1m = h(tj1 - tm1);
    let j1p = h(tj1 + tm1);
    let j2m = h(tj2 - tm2);
    let j2p = h(tj2 + tm2);
    let log_pre = 0.5
        * (((tj + 1) as f64).ln() + lf(a) + lf(b) + lf(c) - lf(d) + lf(jp) + lf(jm) + lf(j1m)
            + lf(j1p)
            + lf(j2m)
            + lf(j2p));
    // Summation bounds keep every factorial argument non-negative.
    let e = h(tj - tj2 + tm1); // j - j2 + m1
    let f = h(tj - tj1 - tm2); // j - j1 - m2
    let kmin = 0.max(-e).max(-f);
    let kmax = a.min(j1m).min(j2p);
    let mut acc = SignedSum::default();
    for k in kmin..=kmax {
        let log_den = lf(k) + lf(a - k) + lf(j1m - k) + lf(j2p - k) + lf(e + k) + lf(f + k);
        let term = (log_pre - log_den).exp();
        acc.add(if k % 2 == 0 { term } else { -term });
    }
    acc.total()
}

// ---------------------------------------------------------------------------
// Wigner rotation matrices

/// J_x is real symmetric tridiagonal; J_y = P J_x P† with P = diag(e^{−iπm/2}).
/// Its eigenbasis gives d(θ) = P V e^{−iθΛ} Vᵀ P† without cancellation
/// problems at large J.
struct JxEigen {
    vectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    /// e^{−iπm/2} for each row.
    phases: Vec<Complex64>,
}

impl JxEigen {
    fn new(twice_j: i32) -> Self {
        let d = twice_j as usize + 1;
        let jv = f64::from(twice_j) / 2.0;
        let ms: Vec<f64> = (0..d).map(|k| jv - k as f64).collect();
        let mut jx = DMatrix::<f64>::zeros(d, d);
        for k in 1..d {
            // ⟨m+1|J+|m⟩ with m = ms[k], m+1 = ms[k-1]
            let m = ms[k];
            let v = 0.5 * (jv * (jv + 1.0) - m * (m + 1.0)).sqrt();
            jx[(k - 1, k)] = v;
            jx[(k, k - 1)] = v;
        }
        let eig = SymmetricEigen::new(jx);
        // Eigenvalues are exactly J, J-1, ..., -J; snap them onto that lattice.
        let eigenvalues = eig
            .eigenvalues
            .iter()
            .map(|&l| {
                let twice = (2.0 * l).round();
                twice / 2.0
            })
            .collect();
        let phases = ms
            .iter()
            .map(|&m| Complex64::from_polar(1.0, -PI * m / 2.0))
            .collect();
        JxEigen {
            vectors: eig.eigenvectors,
            eigenvalues,
            phases,
        }
    }

    fn small_d(&self, theta: f64) -> DMatrix<f64> {
        let d = self.eigenvalues.len();
        let rot: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -theta * l))
            .collect();
        let mut out = DMatrix::<f64>::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += rot[k] * (self.vectors[(a, k)] * self.vectors[(b, k)]);
                }
                out[(a, b)] = (self.phases[a] * acc * self.phases[b].conj()).re;
            }
        }
        out
    }
}

fn jx_eigen(twice_j: i32) -> Arc<JxEigen> {
    static CACHE: OnceLock<RwLock<HashMap<i32, Arc<JxEigen>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(hit) = cache.read().expect("rotation cache poisoned").get(&twice_j) {
        return Arc::clone(hit);
    }
    let fresh = Arc::new(JxEigen::new(twice_j));
    let mut guard = cache.write().expect("rotation cache poisoned");
    Arc::clone(guard.entry(twice_j).or_insert(fresh))
}

/// Wigner small-d matrix d^J_{m'm}(θ) = ⟨Jm'| e^{−iθJ_y} |Jm⟩, rows m' and
/// columns m both ordered J, ..., −J.
pub fn wigner_small_d(j: HalfInteger, theta: f64) -> DMatrix<f64> {
    jx_eigen(j.twice()).small_d(theta)
}

/// Wigner's explicit finite sum for d^J(θ). Exact in exact arithmetic, but
/// in double precision it loses digits quickly above J ≈ 15; kept as an
/// independent reference for small spins.
pub fn wigner_small_d_sum(j: HalfInteger, theta: f64) -> DMatrix<f64> {
    let tj = j.twice();
    let d = j.dim();
    let (s, c) = (theta / 2.0).sin_cos();
    let mut out = DMatrix::<f64>::zeros(d, d);
    let lf = |n: i32| ln_factorial(n as usize);
    for (a, tmp) in j.projections().enumerate() {
        for (b, tm) in j.projections().enumerate() {
            let (tmp, tm) = (tmp.twice(), tm.twice());
            // half-integer differences are all integral here
            let jpm = (tj + tm) / 2;
            let jmm = (tj - tm) / 2;
            let jpmp = (tj + tmp) / 2;
            let jmmp = (tj - tmp) / 2;
            let diff = (tm - tmp) / 2; // m - m'
            let log_pre = 0.5 * (lf(jpmp) + lf(jmmp) + lf(jpm) + lf(jmm));
            let kmin = 0.max(diff);
            let kmax = jpm.min(jmmp);
            let mut acc = SignedSum::default();
            for k in kmin..=kmax {
                // cos^(2J − 2k + m − m') sin^(2k − m + m')
                let pc = tj - 2 * k + diff;
                let ps = 2 * k - diff;
                let mut term = (log_pre - lf(jpm - k) - lf(k) - lf(jmmp - k) - lf(k - diff)).exp();
                term *= c.powi(pc) * s.powi(ps);
                if (k - diff) % 2 != 0 {
                    term = -term;
                }
                acc.add(term);
            }
            out[(a, b)] = acc.total();
        }
    }
    out
}

/// R(θ, φ) = exp(+iφJ_z) exp(+iθJ_y), elementwise e^{imφ} d^J_{m'm}(θ).
pub fn rotation_matrix(j: HalfInteger, angles: &RotationAngles) -> CMatrix {
    let d = wigner_small_d(j, angles.theta);
    let ms: Vec<f64> = j.projections().map(HalfInteger::value).collect();
    CMatrix::from_fn(j.dim(), j.dim(), |a, b| {
        Complex64::from_polar(d[(b, a)], ms[a] * angles.phi)
    })
}

/// exp(−iφJ_z) exp(−iθJ_y): maps |JJ⟩ to the spin coherent state pointing
/// at (θ, φ). Elementwise e^{−imφ} d^J_{mm'}(θ).
///
/// This equals `rotation_matrix` evaluated at (θ, π − φ) up to a trailing
/// diagonal phase, which is invisible to diagonal parity operators.
pub fn coherent_rotation(j: HalfInteger, angles: &RotationAngles) -> CMatrix {
    let d = wigner_small_d(j, angles.theta);
    let ms: Vec<f64> = j.projections().map(HalfInteger::value).collect();
    CMatrix::from_fn(j.dim(), j.dim(), |a, b| {
        Complex64::from_polar(d[(a, b)], -ms[a] * angles.phi)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use crate::spinstates::angular_momentum;
    use num_bigint::BigUint;

    fn ln_big(x: &BigUint) -> f64 {
        let shift = x.bits().saturating_sub(60);
        let top = (x >> shift).to_string().parse::<f64>().unwrap();
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }

    #[test]
    fn log_factorial_small_values() {
        assert_eq!(log_factorial(0).unwrap(), 0.0);
        assert_eq!(log_factorial(1).unwrap(), 0.0);
        let expected = 3_628_800f64.ln();
        assert!((log_factorial(10).unwrap() - expected).abs() < 1e-14 * expected);
        assert!((expected - 15.104_412_573_075_516).abs() < 1e-12);
        assert!(log_factorial(-1).is_err());
    }

    #[test]
    fn log_factorial_matches_exact_products() {
        let mut fact = BigUint::from(1u32);
        for n in 1..=300u32 {
            fact *= n;
            let exact = ln_big(&fact);
            let got = log_factorial(i64::from(n)).unwrap();
            assert!(
                (got - exact).abs() <= 1e-13 * exact.max(1.0),
                "n = {n}: {got} vs {exact}"
            );
        }
        // Stirling continuation is continuous with the table.
        let a = ln_factorial(300) + 301f64.ln();
        assert!((ln_factorial(301) - a).abs() < 1e-11);
    }

    #[test]
    fn legendre_basics() {
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(legendre_p(0, x).unwrap(), 1.0);
        }
        assert_eq!(legendre_p(1, 0.0).unwrap(), 0.0);
        assert_eq!(legendre_p(2, 0.0).unwrap(), -0.5);
        for j in 0..60 {
            assert!((legendre_p(j, 1.0).unwrap() - 1.0).abs() < 1e-13);
        }
        for j in (1..80).step_by(2) {
            assert_eq!(legendre_p(j, 0.0).unwrap(), 0.0, "P_{j}(0) must vanish");
        }
        assert!(legendre_p(3, 1.5).is_err());
    }

    #[test]
    fn spherical_harmonic_closed_forms() {
        let p = RotationAngles::new(0.4, 1.3).unwrap();
        let y00 = spherical_harmonic(0, 0, &p).unwrap();
        assert!((y00.re - 0.282_094_791_773_878_1).abs() < 1e-15 && y00.im == 0.0);
        let pole = RotationAngles::north_pole();
        let y10 = spherical_harmonic(1, 0, &pole).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        // Y_11 = −√(3/8π) sin θ e^{iφ}
        let y11 = spherical_harmonic(1, 1, &p).unwrap();
        let expect = Complex64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * 0.4f64.sin(), 1.3);
        assert!((y11 - expect).norm() < 1e-15);
        assert!(spherical_harmonic(2, 3, &p).is_err());
    }

    #[test]
    fn spherical_harmonic_conjugation_symmetry() {
        let p = RotationAngles::new(2.1, 4.0).unwrap();
        for j in 0..12usize {
            for m in 1..=(j as i32) {
                let a = spherical_harmonic(j, m, &p).unwrap().conj();
                let b = spherical_harmonic(j, -m, &p).unwrap();
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert_eq!(a * sign, b);
            }
        }
    }

    #[test]
    fn spherical_harmonics_are_orthonormal() {
        let lmax = 8usize;
        let (x, w) = gauss_legendre(lmax + 2);
        let nphi = 2 * lmax + 2;
        let mut max_err: f64 = 0.0;
        let modes: Vec<(usize, i32)> = (0..=lmax)
            .flat_map(|j| (-(j as i32)..=j as i32).map(move |m| (j, m)))
            .collect();
        for &(j1, m1) in &modes {
            for &(j2, m2) in &modes {
                let mut acc = Complex64::new(0.0, 0.0);
                for (xi, wi) in x.iter().zip(&w) {
                    for q in 0..nphi {
                        let phi = 2.0 * PI * q as f64 / nphi as f64;
                        let pt = RotationAngles {
                            theta: xi.acos(),
                            phi,
                        };
                        let a = spherical_harmonic(j1, m1, &pt).unwrap();
                        let b = spherical_harmonic(j2, m2, &pt).unwrap();
                        acc += a * b.conj() * (wi * 2.0 * PI / nphi as f64);
                    }
                }
                let target = if (j1, m1) == (j2, m2) { 1.0 } else { 0.0 };
                max_err = max_err.max((acc - target).norm());
            }
        }
        assert!(max_err <= 1e-12, "orthonormality error {max_err}");
    }

    #[test]
    fn legendre_table_agrees_with_single_harmonic() {
        let theta = 1.1;
        let table = LegendreTable::new(20, theta);
        let pt = RotationAngles { theta, phi: 0.7 };
        for j in 0..=20usize {
            for m in -(j as i32)..=(j as i32) {
                let a = table.harmonic(j, m, 0.7);
                let b = spherical_harmonic(j, m, &pt).unwrap();
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    fn h(t: i32) -> HalfInteger {
        HalfInteger::from_twice(t)
    }

    #[test]
    fn half_integer_parsing() {
        for t in -7..=7 {
            let hi = h(t);
            assert_eq!(hi.to_string().parse::<HalfInteger>().unwrap(), hi);
        }
        for bad in ["2/2", "1/3", "x", "1.5", ""] {
            assert!(bad.parse::<HalfInteger>().is_err(), "{bad}");
        }
    }

    #[test]
    fn clebsch_gordan_trivial_values() {
        assert_eq!(clebsch_gordan(h(0), h(0), h(0), h(0), h(0), h(0)).unwrap(), 1.0);
        for tj in 0..12 {
            for tm in (-tj..=tj).step_by(2) {
                let c = clebsch_gordan(h(tj), h(tm), h(0), h(0), h(tj), h(tm)).unwrap();
                assert!((c - 1.0).abs() < 1e-14);
            }
        }
        let c = clebsch_gordan(h(1), h(1), h(1), h(1), h(2), h(2)).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
        // singlet: ⟨½ ½; ½ −½|0 0⟩ = 1/√2
        let c = clebsch_gordan(h(1), h(1), h(1), h(-1), h(0), h(0)).unwrap();
        assert!((c - 0.5f64.sqrt()).abs() < 1e-15);
        // m mismatch and triangle violations give exact zero
        assert_eq!(clebsch_gordan(h(2), h(2), h(2), h(0), h(2), h(0)).unwrap(), 0.0);
        assert_eq!(clebsch_gordan(h(2), h(0), h(2), h(0), h(6), h(0)).unwrap(), 0.0);
        // parity mismatch is malformed
        assert!(clebsch_gordan(h(2), h(1), h(2), h(0), h(2), h(1)).is_err());
        assert!(clebsch_gordan(h(2), h(4), h(2), h(0), h(2), h(4)).is_err());
    }

    #[test]
    fn clebsch_gordan_orthogonality() {
        let mut worst: f64 = 0.0;
        for tj1 in 0i32..=20 {
            let tj2 = tj1;
            for tj in (0..=2 * tj1).step_by(2) {
                for tjp in (0..=2 * tj1).step_by(2) {
                    for tm in (-tj.min(tjp)..=tj.min(tjp)).step_by(2) {
                        let mut acc = 0.0;
                        for tm1 in (-tj1..=tj1).step_by(2) {
                            let tm2 = tm - tm1;
                            if tm2.abs() > tj2 {
                                continue;
                            }
                            acc += clebsch_gordan_twice(tj1, tm1, tj2, tm2, tj, tm)
                                * clebsch_gordan_twice(tj1, tm1, tj2, tm2, tjp, tm);
                        }
                        let target = if tj == tjp { 1.0 } else { 0.0 };
                        worst = worst.max((acc - target).abs());
                    }
                }
            }
        }
        assert!(worst <= 1e-12, "CG orthogonality error {worst}");
    }

    #[test]
    fn small_d_spin_half_closed_form() {
        for theta in [0.0, 0.3, 1.7, 3.0] {
            let d = wigner_small_d(h(1), theta);
            let (s, c) = (theta / 2.0).sin_cos();
            let expect = [[c, -s], [s, c]];
            for a in 0..2 {
                for b in 0..2 {
                    assert!((d[(a, b)] - expect[a][b]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn small_d_identity_and_top_corner() {
        for tj in 0..=40 {
            let d = wigner_small_d(h(tj), 0.0);
            let err = (&d - DMatrix::<f64>::identity(d.nrows(), d.ncols())).amax();
            assert!(err < 1e-13, "2J = {tj}: {err}");
            let theta = 0.9;
            let d = wigner_small_d(h(tj), theta);
            let expect = (theta / 2.0).cos().powi(tj);
            assert!((d[(0, 0)] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn small_d_matches_exact_sum_for_small_spins() {
        for tj in 0..=20 {
            for theta in [0.2, 1.0, 2.5, 4.0] {
                let a = wigner_small_d(h(tj), theta);
                let b = wigner_small_d_sum(h(tj), theta);
                let err = (&a - &b).amax();
                assert!(err < 1e-12, "2J = {tj}, θ = {theta}: {err}");
            }
        }
    }

    #[test]
    fn small_d_orthogonal_and_composes_up_to_j50() {
        for tj in [1, 7, 20, 45, 64, 99, 100] {
            let d1 = wigner_small_d(h(tj), 0.7);
            let d2 = wigner_small_d(h(tj), 1.9);
            let n = d1.nrows();
            let ortho = (d1.transpose() * &d1 - DMatrix::<f64>::identity(n, n)).amax();
            assert!(ortho < 1e-12, "2J = {tj}: orthogonality {ortho}");
            let comp = (&d1 * &d2 - wigner_small_d(h(tj), 2.6)).amax();
            assert!(comp < 1e-10, "2J = {tj}: composition {comp}");
        }
    }

    #[test]
    fn small_d_matches_matrix_exponential() {
        for tj in [1, 2, 5, 10, 30, 60] {
            let j = h(tj);
            let (_, jy, _) = angular_momentum(j);
            let theta = 1.234;
            let gen = jy * Complex64::new(0.0, -theta);
            let brute = gen.exp();
            let d = wigner_small_d(j, theta);
            let err = crate::linalg::max_abs(&(brute - d.map(|x| Complex64::new(x, 0.0))));
            assert!(err < 1e-10, "2J = {tj}: {err}");
        }
    }

    #[test]
    fn rotation_matrix_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for tj in 0..=20 {
            let j = h(tj);
            let (_, jy, jz) = angular_momentum(j);
            for _ in 0..5 {
                let theta = rng.random_range(0.0..PI);
                let phi = rng.random_range(0.0..2.0 * PI);
                let angles = RotationAngles { theta, phi };
                let brute = (&jz * Complex64::new(0.0, phi)).exp()
                    * (&jy * Complex64::new(0.0, theta)).exp();
                let r = rotation_matrix(j, &angles);
                assert!(crate::linalg::max_abs(&(&brute - &r)) < 1e-10, "2J = {tj}");
                let n = r.nrows();
                let unit = crate::linalg::max_abs(&(r.adjoint() * &r - CMatrix::identity(n, n)));
                assert!(unit < 1e-12);
                let std_brute = (&jz * Complex64::new(0.0, -phi)).exp()
                    * (&jy * Complex64::new(0.0, -theta)).exp();
                assert!(crate::linalg::max_abs(&(std_brute - coherent_rotation(j, &angles))) < 1e-10);
            }
        }
    }

    #[test]
    fn rotation_matrix_identity_and_overlap() {
        for tj in 1..10 {
            let j = h(tj);
            let r = rotation_matrix(j, &RotationAngles::north_pole());
            assert!(crate::linalg::max_abs(&(r - CMatrix::identity(j.dim(), j.dim()))) < 1e-14);
            let theta = 1.3;
            let r = rotation_matrix(j, &RotationAngles { theta, phi: 0.0 });
            // ⟨JJ|R†|JJ⟩
            let overlap = r[(0, 0)].conj();
            assert!((overlap.re - (theta / 2.0).cos().powi(tj)).abs() < 1e-13);
        }
    }

    #[test]
    fn angles_canonicalise() {
        let a = RotationAngles::new(-0.5, 7.0).unwrap();
        assert!((a.theta - 0.5).abs() < 1e-15);
        assert!((a.phi - (7.0 + PI - 2.0 * PI)).abs() < 1e-12);
        assert!(RotationAngles::new(f64::NAN, 0.0).is_err());
        let b = RotationAngles::new(PI, -1e-18).unwrap();
        assert!(b.phi < 2.0 * PI);
    }
}
