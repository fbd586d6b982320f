//! Monte-Carlo ensemble studies of reconstruction errors under shot noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{full_tomography, GridSpec};
use super::sampling::{sample_multinomial, stream_rng};
use super::stats::{self, BootstrapInterval, GaussianFit, LogNormalFit};
use super::probabilities;
use crate::convolution::transform_s;
use crate::error::{Error, Module, Result};
use crate::parity::{parity_operator, ParityOperator};
use crate::phasespace::{evaluate_series, max_abs_on_grid, to_spherical_coeffs, SphericalFunction};
use crate::specialfn::{HalfInteger, RotationAngles};
use crate::spinstates::{random_hs_with, random_pure_with, DensityMatrix};

const TAG_STATE: u64 = 1;
const TAG_SAMPLE: u64 = 2;
const TAG_BOOTSTRAP: u64 = 3;

/// s values of the direct-vs-converted comparison (Q, W, P).
pub const COMPARE_S: [f64; 3] = [-1.0, 0.0, 1.0];

/// Number of Stern-Gerlach repetitions per point; `"inf"` in JSON means
/// exact probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RepetitionsRepr", into = "RepetitionsRepr")]
pub enum Repetitions {
    Finite(u64),
    Exact,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RepetitionsRepr {
    Count(u64),
    Word(String),
}

impl TryFrom<RepetitionsRepr> for Repetitions {
    type Error = String;

    fn try_from(r: RepetitionsRepr) -> std::result::Result<Self, String> {
        match r {
            RepetitionsRepr::Count(0) => Err("N_r must be positive".into()),
            RepetitionsRepr::Count(n) => Ok(Repetitions::Finite(n)),
            RepetitionsRepr::Word(w) if w == "inf" => Ok(Repetitions::Exact),
            RepetitionsRepr::Word(w) => Err(format!("N_r must be a positive integer or \"inf\", got {w:?}")),
        }
    }
}

impl From<Repetitions> for RepetitionsRepr {
    fn from(r: Repetitions) -> Self {
        match r {
            Repetitions::Finite(n) => RepetitionsRepr::Count(n),
            Repetitions::Exact => RepetitionsRepr::Word("inf".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentMode {
    /// Error at the north pole only.
    Pointwise,
    /// Pointwise errors averaged over the grid.
    Grid,
    /// Band-limited reconstruction, relative L² error.
    Full,
    /// Direct vs converted reconstructions among Q, W and P.
    Compare3x3,
    /// Everything above.
    All,
}

impl ExperimentMode {
    fn pointwise(self) -> bool {
        matches!(self, ExperimentMode::Pointwise | ExperimentMode::All)
    }

    fn grid(self) -> bool {
        matches!(self, ExperimentMode::Grid | ExperimentMode::All)
    }

    fn full(self) -> bool {
        matches!(self, ExperimentMode::Full | ExperimentMode::All)
    }

    fn compare(self) -> bool {
        matches!(self, ExperimentMode::Compare3x3 | ExperimentMode::All)
    }

    fn needs_grid(self) -> bool {
        !matches!(self, ExperimentMode::Pointwise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    /// Hilbert-Schmidt random mixed states.
    Hs,
    /// Haar random pure states.
    Pure,
}

fn default_n_rho() -> usize {
    2200
}

fn default_n_p() -> usize {
    22
}

fn default_mode() -> ExperimentMode {
    ExperimentMode::All
}

fn default_ensemble() -> EnsembleKind {
    EnsembleKind::Hs
}

fn default_bootstrap() -> usize {
    2000
}

fn default_max_grid() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(rename = "twice_J")]
    pub twice_j: i32,
    #[serde(default)]
    pub s: f64,
    #[serde(rename = "N_rho", default = "default_n_rho")]
    pub n_rho: usize,
    #[serde(rename = "N_r")]
    pub n_r: Vec<Repetitions>,
    #[serde(rename = "N_p", default = "default_n_p")]
    pub n_p: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: ExperimentMode,
    #[serde(default = "default_ensemble")]
    pub ensemble: EnsembleKind,
    /// Bootstrap resamples for the comparison.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Resolution of the dense grid on which ideal maxima are located.
    #[serde(default = "default_max_grid")]
    pub max_grid: usize,
}

impl ExperimentConfig {
    pub fn j(&self) -> HalfInteger {
        HalfInteger::from_twice(self.twice_j)
    }

    pub fn validate(&self) -> Result<()> {
        let j = HalfInteger::spin(self.twice_j)?;
        if j.twice() == 0 {
            return Err(Error::domain(Module::Tomography, "experiments need J > 0"));
        }
        if !self.s.is_finite() {
            return Err(Error::domain(Module::Tomography, "s must be finite"));
        }
        if self.n_rho < 2 {
            return Err(Error::domain(Module::Tomography, "N_rho must be at least 2"));
        }
        if self.n_r.is_empty() {
            return Err(Error::domain(Module::Tomography, "N_r list is empty"));
        }
        if self.mode.needs_grid() {
            GridSpec::new(self.n_p, j)?;
        }
        if self.mode.compare() && self.bootstrap < 100 {
            return Err(Error::domain(Module::Tomography, "use at least 100 bootstrap resamples"));
        }
        if self.max_grid < 16 {
            return Err(Error::domain(Module::Tomography, "max_grid must be at least 16"));
        }
        parity_operator(j, self.s)?;
        Ok(())
    }
}

/// Raw errors of one experiment with their fitted summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub errors: Vec<f64>,
    pub mean: f64,
    pub gaussian: GaussianFit,
    pub skewness: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lognormal: Option<LogNormalFit>,
}

impl ErrorSample {
    fn new(errors: Vec<f64>, lognormal: bool) -> Result<Self> {
        let gaussian = stats::fit_gaussian(&errors)?;
        let skewness = stats::skewness(&errors);
        let lognormal = if lognormal && errors.iter().all(|&e| e > 0.0) {
            Some(stats::fit_lognormal(&errors)?)
        } else {
            None
        };
        Ok(ErrorSample {
            mean: stats::mean(&errors),
            errors,
            gaussian,
            skewness,
            lognormal,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.errors.iter().fold(0.0, |a, e| a.max(e.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareCell {
    /// s used by the parity operator on the measured data.
    pub source_s: f64,
    /// s of the reported function, reached by `transform_s`.
    pub target_s: f64,
    /// Signed north-pole errors relative to max |F_target|.
    pub pointwise: ErrorSample,
    /// Relative L² errors.
    pub l2: ErrorSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub target_s: f64,
    pub source_s: f64,
    /// σ(converted)/σ(direct) of pointwise errors, with a paired bootstrap.
    pub sigma_ratio: BootstrapInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub cells: Vec<CompareCell>,
    pub penalties: Vec<Penalty>,
}

impl CompareReport {
    pub fn cell(&self, source_s: f64, target_s: f64) -> Option<&CompareCell> {
        self.cells
            .iter()
            .find(|c| c.source_s == source_s && c.target_s == target_s)
    }

    pub fn penalty(&self, source_s: f64, target_s: f64) -> Option<&Penalty> {
        self.penalties
            .iter()
            .find(|p| p.source_s == source_s && p.target_s == target_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrReport {
    #[serde(rename = "N_r")]
    pub n_r: Repetitions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pointwise: Option<ErrorSample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<ErrorSample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full: Option<ErrorSample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareReport>,
}

/// Log-log slopes against N_r over the finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub pointwise_sigma_slope: Option<f64>,
    pub grid_mean_slope: Option<f64>,
    pub full_mean_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleErrorReport {
    pub config: ExperimentConfig,
    pub results: Vec<NrReport>,
    pub scaling: ScalingReport,
}

/// Everything measured for one state.
struct StateOutcome {
    /// per N_r entry
    pointwise: Vec<f64>,
    grid: Vec<f64>,
    full: Vec<f64>,
    /// per N_r entry, per (source, target) cell
    compare_pointwise: Vec<Vec<f64>>,
    compare_l2: Vec<Vec<f64>>,
}

struct Ideal {
    coeffs: SphericalFunction,
    max_abs: f64,
    north: f64,
}

impl Ideal {
    fn new(rho: &DensityMatrix, s: f64, max_grid: usize) -> Result<Self> {
        let coeffs = to_spherical_coeffs(rho, s)?;
        let max_abs = max_abs_on_grid(&coeffs, max_grid)?;
        let north = evaluate_series(&coeffs, &RotationAngles::north_pole())?;
        Ok(Ideal {
            coeffs,
            max_abs,
            north,
        })
    }
}

fn relative_l2(estimate: &SphericalFunction, ideal: &SphericalFunction) -> Result<f64> {
    Ok(estimate.combine(1.0, ideal, -1.0)?.coeff_norm() / ideal.coeff_norm())
}

fn draw_state(config: &ExperimentConfig, index: usize) -> DensityMatrix {
    let mut rng = stream_rng(config.seed, &[TAG_STATE, index as u64]);
    match config.ensemble {
        EnsembleKind::Hs => random_hs_with(config.j(), &mut rng),
        EnsembleKind::Pure => random_pure_with(config.j(), &mut rng).density(),
    }
}

fn run_state(
    config: &ExperimentConfig,
    index: usize,
    grid: Option<&GridSpec>,
    parity: &ParityOperator,
    compare_parities: &[ParityOperator],
) -> Result<StateOutcome> {
    let j = config.j();
    let rho = draw_state(config, index);
    let points = match grid {
        Some(g) => g.points(),
        None => vec![RotationAngles::north_pole()],
    };
    let exact: Vec<Vec<f64>> = points
        .iter()
        .map(|p| probabilities(&rho, p))
        .collect::<Result<_>>()?;
    let ideal = Ideal::new(&rho, config.s, config.max_grid)?;
    let ideal_grid: Vec<f64> = exact.iter().map(|p| parity.contract(p)).collect();
    let compare_ideals: Vec<Ideal> = if config.mode.compare() {
        COMPARE_S
            .iter()
            .map(|&s| Ideal::new(&rho, s, config.max_grid))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut out = StateOutcome {
        pointwise: Vec::new(),
        grid: Vec::new(),
        full: Vec::new(),
        compare_pointwise: Vec::new(),
        compare_l2: Vec::new(),
    };
    for (ni, reps) in config.n_r.iter().enumerate() {
        let freqs: Vec<Vec<f64>> = match reps {
            Repetitions::Exact => exact.clone(),
            Repetitions::Finite(n) => exact
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let mut rng = stream_rng(config.seed, &[TAG_SAMPLE, index as u64, ni as u64, k as u64]);
                    let counts = sample_multinomial(p, *n, &mut rng)?;
                    Ok(counts.iter().map(|&c| c as f64 / *n as f64).collect())
                })
                .collect::<Result<_>>()?,
        };
        let values: Vec<f64> = freqs.iter().map(|f| parity.contract(f)).collect();
        if config.mode.pointwise() {
            // grid point 0 is the north pole
            out.pointwise.push((values[0] - ideal_grid[0]) / ideal.max_abs);
        }
        if config.mode.grid() {
            let mean_abs = values
                .iter()
                .zip(&ideal_grid)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / values.len() as f64;
            out.grid.push(mean_abs / ideal.max_abs);
        }
        if let Some(g) = grid {
            if config.mode.full() {
                let est = full_tomography(&values, g, j, Some(config.s))?;
                out.full.push(relative_l2(&est, &ideal.coeffs)?);
            }
            if config.mode.compare() {
                let mut pw = Vec::with_capacity(9);
                let mut l2 = Vec::with_capacity(9);
                for (src, m) in COMPARE_S.iter().zip(compare_parities) {
                    let vals: Vec<f64> = freqs.iter().map(|f| m.contract(f)).collect();
                    let direct = full_tomography(&vals, g, j, Some(*src))?;
                    for (tgt, ideal_t) in COMPARE_S.iter().zip(&compare_ideals) {
                        let est = transform_s(&direct, tgt - src + 1.0)?;
                        let north = evaluate_series(&est, &RotationAngles::north_pole())?;
                        pw.push((north - ideal_t.north) / ideal_t.max_abs);
                        l2.push(relative_l2(&est, &ideal_t.coeffs)?);
                    }
                }
                out.compare_pointwise.push(pw);
                out.compare_l2.push(l2);
            }
        }
    }
    Ok(out)
}

fn finite_slope(reps: &[Repetitions], ys: &[Option<f64>]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = reps
        .iter()
        .zip(ys)
        .filter_map(|(r, y)| match (r, y) {
            (Repetitions::Finite(n), Some(y)) => Some((*n as f64, *y)),
            _ => None,
        })
        .unzip();
    if x.len() < 2 {
        return None;
    }
    stats::loglog_slope(&x, &y).ok()
}

/// Runs the configured experiments over N_ρ random states. Output is
/// independent of the number of worker threads.
pub fn run_ensemble_experiment(config: &ExperimentConfig) -> Result<EnsembleErrorReport> {
    config.validate()?;
    let j = config.j();
    let grid = if config.mode.needs_grid() {
        Some(GridSpec::new(config.n_p, j)?)
    } else {
        None
    };
    let parity = parity_operator(j, config.s)?;
    let compare_parities: Vec<ParityOperator> = if config.mode.compare() {
        COMPARE_S
            .iter()
            .map(|&s| parity_operator(j, s))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let outcomes: Vec<StateOutcome> = (0..config.n_rho)
        .into_par_iter()
        .map(|i| run_state(config, i, grid.as_ref(), &parity, &compare_parities))
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(config.n_r.len());
    for (ni, reps) in config.n_r.iter().enumerate() {
        let column = |pick: fn(&StateOutcome) -> &Vec<f64>| -> Vec<f64> {
            outcomes.iter().map(|o| pick(o)[ni]).collect()
        };
        let pointwise = if config.mode.pointwise() {
            Some(ErrorSample::new(column(|o| &o.pointwise), false)?)
        } else {
            None
        };
        let grid_sample = if config.mode.grid() {
            Some(ErrorSample::new(column(|o| &o.grid), false)?)
        } else {
            None
        };
        let full = if config.mode.full() {
            Some(ErrorSample::new(column(|o| &o.full), true)?)
        } else {
            None
        };
        let compare = if config.mode.compare() {
            Some(assemble_compare(config, &outcomes, ni)?)
        } else {
            None
        };
        results.push(NrReport {
            n_r: *reps,
            pointwise,
            grid: grid_sample,
            full,
            compare,
        });
    }
    let sigma: Vec<Option<f64>> = results
        .iter()
        .map(|r| r.pointwise.as_ref().map(|e| e.gaussian.sigma))
        .collect();
    let grid_mean: Vec<Option<f64>> = results.iter().map(|r| r.grid.as_ref().map(|e| e.mean)).collect();
    let full_mean: Vec<Option<f64>> = results.iter().map(|r| r.full.as_ref().map(|e| e.mean)).collect();
    let scaling = ScalingReport {
        pointwise_sigma_slope: finite_slope(&config.n_r, &sigma),
        grid_mean_slope: finite_slope(&config.n_r, &grid_mean),
        full_mean_slope: finite_slope(&config.n_r, &full_mean),
    };
    Ok(EnsembleErrorReport {
        config: config.clone(),
        results,
        scaling,
    })
}

fn assemble_compare(config: &ExperimentConfig, outcomes: &[StateOutcome], ni: usize) -> Result<CompareReport> {
    let n = COMPARE_S.len();
    let column = |cell: usize, l2: bool| -> Vec<f64> {
        outcomes
            .iter()
            .map(|o| if l2 { o.compare_l2[ni][cell] } else { o.compare_pointwise[ni][cell] })
            .collect()
    };
    let mut cells = Vec::with_capacity(n * n);
    for (a, src) in COMPARE_S.iter().enumerate() {
        for (b, tgt) in COMPARE_S.iter().enumerate() {
            let idx = a * n + b;
            cells.push(CompareCell {
                source_s: *src,
                target_s: *tgt,
                pointwise: ErrorSample::new(column(idx, false), false)?,
                l2: ErrorSample::new(column(idx, true), true)?,
            });
        }
    }
    let mut penalties = Vec::new();
    for (b, tgt) in COMPARE_S.iter().enumerate() {
        let direct = column(b * n + b, false);
        for (a, src) in COMPARE_S.iter().enumerate() {
            if a == b {
                continue;
            }
            let converted = column(a * n + b, false);
            let seed = super::sampling::stream_seed(config.seed, &[TAG_BOOTSTRAP, ni as u64, (a * n + b) as u64]);
            penalties.push(Penalty {
                target_s: *tgt,
                source_s: *src,
                sigma_ratio: stats::bootstrap_sigma_ratio(&converted, &direct, config.bootstrap, seed)?,
            });
        }
    }
    Ok(CompareReport { cells, penalties })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(mode: ExperimentMode, n_r: Vec<Repetitions>, n_rho: usize) -> ExperimentConfig {
        ExperimentConfig {
            description: None,
            twice_j: 5,
            s: 0.0,
            n_rho,
            n_r,
            n_p: 12,
            seed: 42,
            mode,
            ensemble: EnsembleKind::Hs,
            bootstrap: 200,
            max_grid: 64,
        }
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{"twice_J": 5, "s": 0, "N_rho": 10, "N_r": [100, "inf"], "N_p": 22, "seed": 7, "mode": "compare3x3"}"#;
        let c: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.n_r, vec![Repetitions::Finite(100), Repetitions::Exact]);
        assert_eq!(c.mode, ExperimentMode::Compare3x3);
        assert_eq!(c.ensemble, EnsembleKind::Hs);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"twice_J": 5, "N_r": [0]}"#).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"twice_J": 5, "N_r": [10], "bogus": 1}"#).is_err());
        let d: ExperimentConfig = serde_json::from_str(r#"{"twice_J": 5, "N_r": [10]}"#).unwrap();
        assert_eq!((d.n_rho, d.n_p, d.mode), (2200, 22, ExperimentMode::All));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = config(ExperimentMode::Full, vec![Repetitions::Exact], 4);
        c.n_p = 10;
        assert!(c.validate().is_err());
        c.mode = ExperimentMode::Pointwise;
        assert!(c.validate().is_ok());
        c.n_r.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn exact_mode_is_noiseless() {
        let c = config(ExperimentMode::All, vec![Repetitions::Exact], 4);
        let r = run_ensemble_experiment(&c).unwrap();
        let res = &r.results[0];
        assert!(res.pointwise.as_ref().unwrap().max_abs() <= 1e-8);
        assert!(res.grid.as_ref().unwrap().max_abs() <= 1e-8);
        assert!(res.full.as_ref().unwrap().max_abs() <= 1e-8);
        for cell in &res.compare.as_ref().unwrap().cells {
            assert!(cell.pointwise.max_abs() <= 1e-8 && cell.l2.max_abs() <= 1e-8);
        }
    }

    #[test]
    fn deterministic_under_thread_count() {
        let c = config(ExperimentMode::All, vec![Repetitions::Finite(100), Repetitions::Finite(1000)], 6);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_ensemble_experiment(&c)).unwrap();
        let b = four.install(|| run_ensemble_experiment(&c)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.scaling.pointwise_sigma_slope.is_some());
    }

    #[test]
    fn estimator_is_unbiased() {
        // E[F̂] = F at the north pole, averaged over 10⁴ simulated runs
        let j = HalfInteger::from_twice(5);
        let c = config(ExperimentMode::Pointwise, vec![Repetitions::Finite(50)], 2);
        let rho = draw_state(&c, 0);
        let p = probabilities(&rho, &RotationAngles::north_pole()).unwrap();
        let m = parity_operator(j, 0.0).unwrap();
        let exact = m.contract(&p);
        let draws: Vec<f64> = (0..10_000u64)
            .map(|k| {
                let mut rng = stream_rng(3, &[k]);
                let counts = sample_multinomial(&p, 50, &mut rng).unwrap();
                let f: Vec<f64> = counts.iter().map(|&c| c as f64 / 50.0).collect();
                m.contract(&f)
            })
            .collect();
        let se = stats::std_dev(&draws) / (draws.len() as f64).sqrt();
        assert!((stats::mean(&draws) - exact).abs() <= 4.0 * se);
    }
}
