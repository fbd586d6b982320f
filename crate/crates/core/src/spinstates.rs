//! Spin-J states: angular-momentum matrices, validated pure and mixed states,
//! the named example states, and seeded random ensembles.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Module, Result};
use crate::linalg::{self, CMatrix};
use crate::specialfn::HalfInteger;

/// Tolerance on ‖ψ‖ = 1, Hermiticity and unit trace.
pub const STATE_TOL: f64 = 1e-12;
/// Eigenvalues of a density matrix may dip this far below zero.
pub const PSD_TOL: f64 = 1e-10;

/// (J_x, J_y, J_z) in the |Jm⟩ basis, m = J, ..., −J.
pub fn angular_momentum(j: HalfInteger) -> (CMatrix, CMatrix, CMatrix) {
    let d = j.dim();
    let jv = j.value();
    let ms: Vec<f64> = j.projections().map(HalfInteger::value).collect();
    let mut jp = CMatrix::zeros(d, d);
    for k in 1..d {
        let m = ms[k];
        jp[(k - 1, k)] = Complex64::new((jv * (jv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * Complex64::new(0.5, 0.0);
    let jy = (&jp - &jm) * Complex64::new(0.0, -0.5);
    let jz = CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        ms.iter().map(|&m| Complex64::new(m, 0.0)),
    ));
    (jx, jy, jz)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    j: HalfInteger,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    /// Takes amplitudes that must already have unit norm.
    pub fn new(j: HalfInteger, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = PureState {
            j: check_spin(j)?,
            amplitudes: DVector::from_vec(amplitudes),
        };
        state.validate()?;
        Ok(state)
    }

    /// Normalises the given amplitudes.
    pub fn normalized(j: HalfInteger, amplitudes: Vec<Complex64>) -> Result<Self> {
        let j = check_spin(j)?;
        let v = DVector::from_vec(amplitudes);
        check_len(j, v.len())?;
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain(
                Module::SpinStates,
                "cannot normalise a zero or non-finite vector",
            ));
        }
        Ok(PureState {
            j,
            amplitudes: v.unscale(norm),
        })
    }

    pub fn basis(j: HalfInteger, m: HalfInteger) -> Result<Self> {
        let j = check_spin(j)?;
        if !j.admits(m) {
            return Err(Error::domain(
                Module::SpinStates,
                format!("m = {m} is not a projection of J = {j}"),
            ));
        }
        let idx = ((j.twice() - m.twice()) / 2) as usize;
        let mut v = DVector::zeros(j.dim());
        v[idx] = Complex64::new(1.0, 0.0);
        Ok(PureState { j, amplitudes: v })
    }

    pub fn validate(&self) -> Result<()> {
        check_len(self.j, self.amplitudes.len())?;
        let norm = self.amplitudes.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::integrity(
                Module::SpinStates,
                format!("state norm {norm} differs from 1"),
            ));
        }
        Ok(())
    }

    pub fn j(&self) -> HalfInteger {
        self.j
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            j: self.j,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn fidelity_with(&self, rho: &DensityMatrix) -> f64 {
        (self.amplitudes.adjoint() * rho.matrix() * &self.amplitudes)[(0, 0)].re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    j: HalfInteger,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(j: HalfInteger, matrix: CMatrix) -> Result<Self> {
        let rho = DensityMatrix {
            j: check_spin(j)?,
            matrix,
        };
        rho.validate()?;
        Ok(rho)
    }

    pub fn maximally_mixed(j: HalfInteger) -> Result<Self> {
        let j = check_spin(j)?;
        let d = j.dim();
        Ok(DensityMatrix {
            j,
            matrix: CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.j.dim();
        if self.matrix.nrows() != d || self.matrix.ncols() != d {
            return Err(Error::domain(
                Module::SpinStates,
                format!(
                    "density matrix is {}x{}, expected {d}x{d} for J = {}",
                    self.matrix.nrows(),
                    self.matrix.ncols(),
                    self.j
                ),
            ));
        }
        let herm = linalg::hermiticity_defect(&self.matrix);
        if herm > STATE_TOL {
            return Err(Error::integrity(
                Module::SpinStates,
                format!("density matrix not Hermitian (defect {herm:.3e})"),
            ));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::integrity(
                Module::SpinStates,
                format!("density matrix trace {tr} differs from 1"),
            ));
        }
        let min_ev = linalg::hermitian_eigenvalues(&self.matrix)[0];
        if min_ev < -PSD_TOL {
            return Err(Error::integrity(
                Module::SpinStates,
                format!("density matrix has negative eigenvalue {min_ev:.3e}"),
            ));
        }
        Ok(())
    }

    pub fn j(&self) -> HalfInteger {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.matrix, &self.matrix).re
    }

    /// U ρ U†
    pub fn conjugated(&self, u: &CMatrix) -> DensityMatrix {
        DensityMatrix {
            j: self.j,
            matrix: u * &self.matrix * u.adjoint(),
        }
    }
}

fn check_spin(j: HalfInteger) -> Result<HalfInteger> {
    if j.twice() < 0 {
        return Err(Error::domain(
            Module::SpinStates,
            format!("negative spin 2J = {}", j.twice()),
        ));
    }
    Ok(j)
}

fn check_len(j: HalfInteger, len: usize) -> Result<()> {
    if len != j.dim() {
        return Err(Error::domain(
            Module::SpinStates,
            format!("expected {} amplitudes for J = {j}, got {len}", j.dim()),
        ));
    }
    Ok(())
}

/// States used throughout the examples.
#[derive(Debug, Clone, PartialEq)]
pub enum NamedState {
    SpinUp,
    Dicke(HalfInteger),
    Ghz,
    /// exp(−iθ J_y²/2)|JJ⟩ with the given squeezing angle θ.
    Squeezed(f64),
    /// Fixed J = 4 random state, rounded to two decimals.
    RndJ4Fixture,
}

impl NamedState {
    pub fn parse(name: &str, m: Option<HalfInteger>, theta_sq: Option<f64>) -> Result<Self> {
        match name {
            "spin_up" | "spinup" => Ok(NamedState::SpinUp),
            "dicke" => m
                .map(NamedState::Dicke)
                .ok_or_else(|| Error::domain(Module::SpinStates, "dicke state needs m")),
            "ghz" => Ok(NamedState::Ghz),
            "squeezed" => Ok(NamedState::Squeezed(theta_sq.unwrap_or(0.3))),
            "rnd_J4_fixture" | "rnd_j4_fixture" | "rnd" => Ok(NamedState::RndJ4Fixture),
            other => Err(Error::domain(
                Module::SpinStates,
                format!("unknown state name {other:?}"),
            )),
        }
    }
}

const RND_J4_FIXTURE: [(f64, f64); 9] = [
    (0.06, 0.02),
    (-0.21, -0.19),
    (0.04, 0.27),
    (0.15, -0.11),
    (0.28, -0.28),
    (-0.33, -0.25),
    (0.04, -0.44),
    (-0.21, -0.24),
    (-0.43, 0.00),
];

pub fn make_named_state(name: &NamedState, j: HalfInteger) -> Result<PureState> {
    let j = check_spin(j)?;
    match *name {
        NamedState::SpinUp => PureState::basis(j, j),
        NamedState::Dicke(m) => PureState::basis(j, m),
        NamedState::Ghz => {
            let d = j.dim();
            if d == 1 {
                return PureState::basis(j, j);
            }
            let mut amps = vec![Complex64::new(0.0, 0.0); d];
            amps[0] = Complex64::new(1.0, 0.0);
            amps[d - 1] = Complex64::new(1.0, 0.0);
            PureState::normalized(j, amps)
        }
        NamedState::Squeezed(angle) => {
            let (_, jy, _) = angular_momentum(j);
            let generator = &jy * &jy;
            let u = linalg::unitary_from_hermitian(&generator, angle / 2.0);
            let up = PureState::basis(j, j)?;
            Ok(PureState {
                j,
                amplitudes: u * up.amplitudes,
            })
        }
        NamedState::RndJ4Fixture => {
            if j.twice() != 8 {
                return Err(Error::domain(
                    Module::SpinStates,
                    format!("the fixture random state is a J = 4 state, requested J = {j}"),
                ));
            }
            let amps = RND_J4_FIXTURE
                .iter()
                .map(|&(re, im)| Complex64::new(re, im))
                .collect();
            PureState::normalized(j, amps)
        }
    }
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Haar-random pure state from normalised complex Gaussians.
pub fn random_pure(j: HalfInteger, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure_with(j, &mut rng)
}

pub(crate) fn random_pure_with(j: HalfInteger, rng: &mut ChaCha8Rng) -> PureState {
    loop {
        let amps: Vec<Complex64> = (0..j.dim()).map(|_| complex_normal(rng)).collect();
        if let Ok(psi) = PureState::normalized(j, amps) {
            return psi;
        }
    }
}

/// Hilbert-Schmidt random density matrix ρ = GG†/Tr(GG†), G Ginibre.
pub fn random_hs(j: HalfInteger, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hs_with(j, &mut rng)
}

pub(crate) fn random_hs_with(j: HalfInteger, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let d = j.dim();
    let g = CMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    let mut m = w.unscale(tr);
    // exact Hermiticity
    m = linalg::hermitian_part(&m);
    DensityMatrix { j, matrix: m }
}

/// Random Hermitian matrix (GUE-like), not normalised.
pub fn random_hermitian(j: HalfInteger, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = j.dim();
    let g = CMatrix::from_fn(d, d, |_, _| complex_normal(&mut rng));
    linalg::hermitian_part(&g)
}

/// Commutator helper used in tests and diagnostics.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}
