//! Cohort simulator and Monte-Carlo oracle.
//!
//! Subjects follow the sequential linear mediator model and a piecewise
//! constant additive hazard on the schedule intervals. Within interval `k`
//! the hazard is `mu_k + alpha_k a_D + beta_k M_k + rho_k' C`, so event times
//! are drawn by inverting the piecewise-linear cumulative hazard against a
//! single unit exponential. Every subject owns a counter-based random stream
//! keyed by `(seed, subject index)`, which makes output independent of the
//! degree of parallelism and lets different regimes share their draws.

use nalgebra::DMatrix;
use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Schedule, SubjectRecord};
use crate::effects::Contrast;
use crate::error::{Error, Result};
use crate::mediator::gamma_from_structural;

/// Clamped-interval fraction above which a parameter set is rejected.
pub const MAX_CLAMP_RATE: f64 = 1e-3;

/// A coefficient path: one constant, or one value per schedule interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Piecewise {
    Constant(f64),
    Intervals(Vec<f64>),
}

impl Piecewise {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Piecewise::Constant(v) => *v,
            Piecewise::Intervals(v) => v[k],
        }
    }

    fn check(&self, len: usize, what: &str) -> Result<()> {
        match self {
            Piecewise::Constant(v) if v.is_finite() => Ok(()),
            Piecewise::Intervals(v) if v.len() == len && v.iter().all(|x| x.is_finite()) => Ok(()),
            _ => Err(Error::InvalidParams(format!(
                "{what} must be a finite constant or {len} finite values"
            ))),
        }
    }
}

impl Default for Piecewise {
    fn default() -> Self {
        Piecewise::Constant(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardParams {
    pub baseline: Piecewise,
    #[serde(default)]
    pub treatment: Piecewise,
    #[serde(default)]
    pub mediator: Piecewise,
    #[serde(default)]
    pub covariates: Vec<Piecewise>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralParams {
    /// Per-index intercepts; zero when omitted.
    #[serde(default)]
    pub intercept: Vec<f64>,
    /// `lambda_i`.
    pub treatment: Vec<f64>,
    /// `delta_i`, one row of length `p` per index; zero when omitted.
    #[serde(default)]
    pub covariates: Vec<Vec<f64>>,
    /// Ragged rows `b_i = (b_i0, ..., b_i,i-1)`; zero when omitted.
    #[serde(default)]
    pub past: Vec<Vec<f64>>,
    pub noise_sd: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum CovariateLaw {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Bernoulli { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    #[serde(flatten)]
    pub law: CovariateLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub treatment_probability: f64,
    #[serde(default)]
    pub covariates: Vec<CovariateSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoringParams {
    pub t_max: f64,
    #[serde(default)]
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub schedule: Schedule,
    pub hazard: HazardParams,
    pub structural: StructuralParams,
    pub baseline: BaselineParams,
    pub censoring: CensoringParams,
    #[serde(default)]
    pub contrast: Contrast,
}

impl SimulationParams {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: SimulationParams = toml::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn n_covariates(&self) -> usize {
        self.baseline.covariates.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.schedule.len();
        let p = self.n_covariates();
        let bad = |m: String| Err(Error::InvalidParams(m));
        self.hazard.baseline.check(k, "hazard.baseline")?;
        self.hazard.treatment.check(k, "hazard.treatment")?;
        self.hazard.mediator.check(k, "hazard.mediator")?;
        if self.hazard.covariates.len() != p {
            return bad(format!("hazard.covariates needs {p} entries"));
        }
        for c in &self.hazard.covariates {
            c.check(k, "hazard.covariates")?;
        }
        let s = &self.structural;
        if s.treatment.len() != k || s.noise_sd.len() != k {
            return bad(format!(
                "structural.treatment and noise_sd need {k} entries"
            ));
        }
        if !s.intercept.is_empty() && s.intercept.len() != k {
            return bad(format!("structural.intercept needs {k} entries"));
        }
        if !s.covariates.is_empty()
            && (s.covariates.len() != k || s.covariates.iter().any(|r| r.len() != p))
        {
            return bad(format!("structural.covariates needs {k} rows of {p}"));
        }
        if !s.past.is_empty()
            && (s.past.len() != k || s.past.iter().enumerate().any(|(i, r)| r.len() != i))
        {
            return bad("structural.past row i needs i entries".into());
        }
        let finite = s
            .treatment
            .iter()
            .chain(&s.intercept)
            .chain(s.covariates.iter().flatten())
            .chain(s.past.iter().flatten())
            .all(|v| v.is_finite());
        if !finite || s.noise_sd.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return bad("structural coefficients must be finite and noise_sd >= 0".into());
        }
        let prob = self.baseline.treatment_probability;
        if !(0.0..=1.0).contains(&prob) {
            return bad("treatment_probability must lie in [0, 1]".into());
        }
        for c in &self.baseline.covariates {
            let ok = match c.law {
                CovariateLaw::Normal { mean, sd } => {
                    mean.is_finite() && sd >= 0.0 && sd.is_finite()
                }
                CovariateLaw::Uniform { low, high } => {
                    low.is_finite() && high.is_finite() && low <= high
                }
                CovariateLaw::Bernoulli { p } => (0.0..=1.0).contains(&p),
            };
            if !ok {
                return bad(format!("invalid law for covariate `{}`", c.name));
            }
        }
        if !(self.censoring.t_max > 0.0) || !self.censoring.t_max.is_finite() {
            return bad("censoring.t_max must be positive and finite".into());
        }
        if !(self.censoring.rate >= 0.0) || !self.censoring.rate.is_finite() {
            return bad("censoring.rate must be non-negative".into());
        }
        Ok(())
    }

    /// `(Lambda, B)` of the sequential mediator model.
    pub fn structural_matrices(&self) -> (Vec<f64>, DMatrix<f64>) {
        let k = self.schedule.len();
        let mut b = DMatrix::zeros(k, k);
        for (i, row) in self.structural.past.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                b[(i, j)] = v;
            }
        }
        (self.structural.treatment.clone(), b)
    }
}

/// Treatment assignment: observed, or split into the component acting on the
/// mediator and the component acting directly on the hazard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    Observational,
    Intervened { direct: f64, mediator: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCohort {
    pub dataset: Dataset,
    /// Interval hazards that were negative and clamped at zero.
    pub clamped: usize,
    /// Interval hazards evaluated.
    pub intervals: usize,
}

struct Draw {
    record: SubjectRecord,
    clamped: usize,
    intervals: usize,
}

fn subject_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn unit_exponential(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = Open01.sample(rng);
    -u.ln()
}

/// Simulates one subject. Draw order is fixed (covariates, treatment,
/// censoring time, event threshold, then one normal per visit reached) so
/// that regimes and censoring horizons consume identical streams.
fn simulate_subject(
    params: &SimulationParams,
    regime: Regime,
    seed: u64,
    index: usize,
    horizon: f64,
    rate: f64,
) -> Draw {
    let mut rng = subject_rng(seed, index as u64);
    let baseline: Vec<f64> = params
        .baseline
        .covariates
        .iter()
        .map(|c| match c.law {
            CovariateLaw::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            CovariateLaw::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            CovariateLaw::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
        })
        .collect();
    let drawn_a = f64::from(u8::from(
        rng.random::<f64>() < params.baseline.treatment_probability,
    ));
    let (recorded, a_direct, a_mediator) = match regime {
        Regime::Observational => (drawn_a, drawn_a, drawn_a),
        Regime::Intervened { direct, mediator } => (direct, direct, mediator),
    };
    let censor_draw = unit_exponential(&mut rng);
    let censor = if rate > 0.0 {
        horizon.min(censor_draw / rate)
    } else {
        horizon
    };
    let threshold = unit_exponential(&mut rng);

    let s = &params.structural;
    let h = &params.hazard;
    let times = params.schedule.times();
    let mut mediators = Vec::new();
    let mut cum_hazard = 0.0;
    let mut clamped = 0;
    let mut intervals = 0;
    let mut outcome = (censor, false);
    for (k, &start) in times.iter().enumerate() {
        if start > censor {
            break;
        }
        let z: f64 = rng.sample(StandardNormal);
        let mut m = s.intercept.get(k).copied().unwrap_or(0.0) + s.treatment[k] * a_mediator;
        if let Some(delta) = s.covariates.get(k) {
            m += delta.iter().zip(&baseline).map(|(d, c)| d * c).sum::<f64>();
        }
        if let Some(b) = s.past.get(k) {
            m += b.iter().zip(&mediators).map(|(b, mk)| b * mk).sum::<f64>();
        }
        m += s.noise_sd[k] * z;
        mediators.push(m);

        let raw = h.baseline.at(k)
            + h.treatment.at(k) * a_direct
            + h.mediator.at(k) * m
            + h.covariates
                .iter()
                .zip(&baseline)
                .map(|(r, c)| r.at(k) * c)
                .sum::<f64>();
        let end = params.schedule.interval_end(k).min(censor);
        let span = end - start;
        if span <= 0.0 {
            // A visit exactly at the censoring time is observed, but no
            // follow-up time remains after it.
            break;
        }
        intervals += 1;
        let rate_k = if raw < 0.0 {
            clamped += 1;
            0.0
        } else {
            raw
        };
        if rate_k > 0.0 && cum_hazard + rate_k * span >= threshold {
            let t = start + (threshold - cum_hazard) / rate_k;
            // Keep the event strictly inside the interval so that it never
            // lands on the next visit through rounding.
            outcome = (if t < end { t } else { end.next_down() }, true);
            break;
        }
        cum_hazard += rate_k * span;
    }
    let (followup, event) = outcome;
    debug_assert_eq!(mediators.len(), params.schedule.count_through(followup));
    Draw {
        record: SubjectRecord {
            id: format!("s{index}"),
            treatment: recorded,
            baseline,
            mediators,
            followup,
            event,
        },
        clamped,
        intervals,
    }
}

fn covariate_names(params: &SimulationParams) -> Vec<String> {
    params
        .baseline
        .covariates
        .iter()
        .map(|c| c.name.clone())
        .collect()
}

/// Simulates a cohort and reports clamp diagnostics without rejecting.
pub fn simulate_cohort_diagnostics(
    params: &SimulationParams,
    n: usize,
    seed: u64,
    regime: Regime,
) -> Result<SimulatedCohort> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    let draws: Vec<Draw> = (0..n)
        .into_par_iter()
        .map(|i| {
            simulate_subject(
                params,
                regime,
                seed,
                i,
                params.censoring.t_max,
                params.censoring.rate,
            )
        })
        .collect();
    let clamped = draws.iter().map(|d| d.clamped).sum();
    let intervals = draws.iter().map(|d| d.intervals).sum();
    let records = draws.into_iter().map(|d| d.record).collect();
    let dataset = Dataset::new(params.schedule.clone(), covariate_names(params), records)?;
    Ok(SimulatedCohort {
        dataset,
        clamped,
        intervals,
    })
}

fn check_clamps(clamped: usize, intervals: usize) -> Result<()> {
    if clamped as f64 > MAX_CLAMP_RATE * intervals as f64 {
        return Err(Error::NegativeHazard { clamped, intervals });
    }
    Ok(())
}

/// Simulates `n` subjects; rejects parameter sets whose hazard had to be
/// clamped at zero in more than 0.1% of intervals.
pub fn simulate_cohort(
    params: &SimulationParams,
    n: usize,
    seed: u64,
    regime: Regime,
) -> Result<Dataset> {
    let sim = simulate_cohort_diagnostics(params, n, seed, regime)?;
    check_clamps(sim.clamped, sim.intervals)?;
    Ok(sim.dataset)
}

/// Survival probabilities with binomial Monte-Carlo standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McSurvival {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n: usize,
}

/// Forward-simulates `n_mc` uncensored subjects under `regime` and returns
/// the empirical survival fraction at each grid time.
pub fn mc_survival(
    params: &SimulationParams,
    regime: Regime,
    n_mc: usize,
    seed: u64,
    grid: &[f64],
) -> Result<McSurvival> {
    params.validate()?;
    if n_mc < 100 {
        return Err(Error::InvalidParams("n_mc must be at least 100".into()));
    }
    if let Some(&t) = grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidTime(t));
    }
    let horizon = grid
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let draws: Vec<Draw> = (0..n_mc)
        .into_par_iter()
        .map(|i| simulate_subject(params, regime, seed, i, horizon, 0.0))
        .collect();
    let clamped = draws.iter().map(|d| d.clamped).sum();
    let intervals = draws.iter().map(|d| d.intervals).sum();
    check_clamps(clamped, intervals)?;
    let n = n_mc as f64;
    let survival: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let alive = draws
                .iter()
                .filter(|d| !(d.record.event && d.record.followup <= t))
                .count();
            alive as f64 / n
        })
        .collect();
    let std_error = survival
        .iter()
        .map(|s| (s * (1.0 - s) / n).sqrt())
        .collect();
    Ok(McSurvival {
        times: grid.to_vec(),
        survival,
        std_error,
        n: n_mc,
    })
}

/// Survival-ratio effects estimated by forward simulation under the three
/// regimes `(a, a)`, `(a, a_star)` and `(a_star, a_star)` (direct, mediator).
#[derive(Debug, Clone, PartialEq)]
pub struct McEffects {
    pub times: Vec<f64>,
    pub sde: Vec<f64>,
    pub sde_se: Vec<f64>,
    pub sie: Vec<f64>,
    pub sie_se: Vec<f64>,
    pub ste: Vec<f64>,
    pub ste_se: Vec<f64>,
}

/// `SIE = S(a, a) / S(a, a*)`, `SDE = S(a, a*) / S(a*, a*)` and
/// `STE = S(a, a) / S(a*, a*)`. The three regimes use independent streams
/// (`seed`, `seed + 1`, `seed + 2`), so delta-method standard errors of the
/// ratios combine the binomial errors in quadrature.
pub fn mc_effects(
    params: &SimulationParams,
    n_mc: usize,
    seed: u64,
    grid: &[f64],
) -> Result<McEffects> {
    let Contrast { a, a_star } = params.contrast;
    let regime = |direct, mediator| Regime::Intervened { direct, mediator };
    let s_aa = mc_survival(params, regime(a, a), n_mc, seed, grid)?;
    let s_as = mc_survival(params, regime(a, a_star), n_mc, seed.wrapping_add(1), grid)?;
    let s_ss = mc_survival(
        params,
        regime(a_star, a_star),
        n_mc,
        seed.wrapping_add(2),
        grid,
    )?;
    let ratio = |num: &McSurvival, den: &McSurvival| -> (Vec<f64>, Vec<f64>) {
        (0..grid.len())
            .map(|g| {
                let (x, y) = (num.survival[g], den.survival[g]);
                let r = x / y;
                let rel = (num.std_error[g] / x).powi(2) + (den.std_error[g] / y).powi(2);
                (r, r * rel.sqrt())
            })
            .unzip()
    };
    let (sie, sie_se) = ratio(&s_aa, &s_as);
    let (sde, sde_se) = ratio(&s_as, &s_ss);
    let (ste, ste_se) = ratio(&s_aa, &s_ss);
    Ok(McEffects {
        times: grid.to_vec(),
        sde,
        sde_se,
        sie,
        sie_se,
        ste,
        ste_se,
    })
}

/// Exact effect curves implied by known parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormEffects {
    pub times: Vec<f64>,
    pub gamma: Vec<f64>,
    pub chde: Vec<f64>,
    pub chie: Vec<f64>,
    pub chte: Vec<f64>,
    pub sde: Vec<f64>,
    pub sie: Vec<f64>,
    pub ste: Vec<f64>,
}

/// Integrates `alpha_s` and `beta_s gamma_{r(s)}` exactly over the schedule
/// intervals and scales by `a - a_star`.
pub fn closed_form_effects(params: &SimulationParams, grid: &[f64]) -> Result<ClosedFormEffects> {
    params.validate()?;
    if let Some(&t) = grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidTime(t));
    }
    let (lambdas, b) = params.structural_matrices();
    let gamma = gamma_from_structural(&lambdas, &b)?;
    let diff = params.contrast.difference();
    let times = params.schedule.times();
    let integrate = |t: f64, rate: &dyn Fn(usize) -> f64| -> f64 {
        times
            .iter()
            .enumerate()
            .take_while(|(_, &start)| start < t)
            .map(|(k, &start)| rate(k) * (params.schedule.interval_end(k).min(t) - start))
            .sum()
    };
    let h = &params.hazard;
    let chde: Vec<f64> = grid
        .iter()
        .map(|&t| diff * integrate(t, &|k| h.treatment.at(k)))
        .collect();
    let chie: Vec<f64> = grid
        .iter()
        .map(|&t| diff * integrate(t, &|k| h.mediator.at(k) * gamma[k]))
        .collect();
    let chte: Vec<f64> = chde.iter().zip(&chie).map(|(d, i)| d + i).collect();
    let neg_exp = |v: &[f64]| v.iter().map(|x| (-x).exp()).collect::<Vec<_>>();
    Ok(ClosedFormEffects {
        times: grid.to_vec(),
        sde: neg_exp(&chde),
        sie: neg_exp(&chie),
        ste: neg_exp(&chte),
        gamma,
        chde,
        chie,
        chte,
    })
}

/// Adds independent normal measurement error to every mediator so that the
/// per-index reliability `Var(M) / Var(M + noise)` is `kappa` in expectation.
pub fn add_noise(dataset: &Dataset, kappa: f64, seed: u64) -> Result<Dataset> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidKappa {
            value: kappa,
            range: "(0, 1)",
        });
    }
    let k_len = dataset.schedule().len();
    let mut noise_sd = Vec::with_capacity(k_len);
    for k in 0..k_len {
        let values: Vec<f64> = dataset
            .subjects()
            .iter()
            .filter_map(|s| s.mediators.get(k).copied())
            .collect();
        if values.len() < 2 {
            // Visits nobody (or one subject) reached carry no variance.
            if values.is_empty() {
                noise_sd.push(0.0);
                continue;
            }
            return Err(Error::ZeroVariance(k));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        if !(var > 0.0) {
            return Err(Error::ZeroVariance(k));
        }
        noise_sd.push((var * (1.0 - kappa) / kappa).sqrt());
    }
    let subjects = dataset
        .subjects()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = subject_rng(seed, i as u64);
            let mut s = s.clone();
            for (m, sd) in s.mediators.iter_mut().zip(&noise_sd) {
                let z: f64 = rng.sample(StandardNormal);
                *m += sd * z;
            }
            s
        })
        .collect();
    Dataset::new(
        dataset.schedule().clone(),
        dataset.covariate_names().to_vec(),
        subjects,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn exponential_params(mu: f64) -> SimulationParams {
        SimulationParams {
            schedule: Schedule::new(vec![0.0]).unwrap(),
            hazard: HazardParams {
                baseline: Piecewise::Constant(mu),
                treatment: Piecewise::Constant(0.0),
                mediator: Piecewise::Constant(0.0),
                covariates: vec![],
            },
            structural: StructuralParams {
                intercept: vec![],
                treatment: vec![1.0],
                covariates: vec![],
                past: vec![],
                noise_sd: vec![1.0],
            },
            baseline: BaselineParams {
                treatment_probability: 0.5,
                covariates: vec![],
            },
            censoring: CensoringParams {
                t_max: 1e6,
                rate: 0.0,
            },
            contrast: Contrast::default(),
        }
    }

    #[test]
    fn exponential_event_times_have_right_mean() {
        let p = exponential_params(0.5);
        let ds = simulate_cohort(&p, 10_000, 7, Regime::Observational).unwrap();
        let n = ds.len() as f64;
        let times: Vec<f64> = ds.subjects().iter().map(|s| s.followup).collect();
        assert!(ds.subjects().iter().all(|s| s.event));
        let mean = times.iter().sum::<f64>() / n;
        // Exponential with mean 2 has standard deviation 2.
        let se = 2.0 / n.sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn noiseless_mediators_are_exact() {
        let mut p = exponential_params(0.3);
        p.schedule = Schedule::new(vec![0.0, 0.5, 1.0]).unwrap();
        p.structural.treatment = vec![1.0, -2.0, 0.5];
        p.structural.noise_sd = vec![0.0; 3];
        p.censoring.t_max = 2.0;
        let ds = simulate_cohort(&p, 200, 3, Regime::Observational).unwrap();
        for s in ds.subjects() {
            for (k, m) in s.mediators.iter().enumerate() {
                assert_eq!(*m, p.structural.treatment[k] * s.treatment);
            }
        }
    }

    #[test]
    fn intervened_equals_observational_within_arm() {
        let mut p = exponential_params(0.4);
        p.schedule = Schedule::new(vec![0.0, 0.5]).unwrap();
        p.hazard.treatment = Piecewise::Constant(0.2);
        p.hazard.mediator = Piecewise::Constant(0.05);
        p.structural.intercept = vec![2.0, 2.0];
        p.structural.treatment = vec![1.0, 0.5];
        p.structural.past = vec![vec![], vec![0.3]];
        p.structural.noise_sd = vec![0.5, 0.5];
        p.censoring.t_max = 3.0;
        let obs = simulate_cohort(&p, 500, 11, Regime::Observational).unwrap();
        for a in [0.0, 1.0] {
            let int = simulate_cohort(
                &p,
                500,
                11,
                Regime::Intervened {
                    direct: a,
                    mediator: a,
                },
            )
            .unwrap();
            let mut matched = 0;
            for (o, i) in obs.subjects().iter().zip(int.subjects()) {
                if o.treatment == a {
                    assert_eq!(o, i);
                    matched += 1;
                }
            }
            assert!(matched > 100);
        }
    }

    #[test]
    fn survival_at_zero_is_one_and_exponential_matches() {
        let p = exponential_params(0.5);
        let mc = mc_survival(&p, Regime::Observational, 20_000, 5, &[0.0, 1.0]).unwrap();
        assert_eq!(mc.survival[0], 1.0);
        let truth = (-0.5f64).exp();
        assert!((truth - 0.6065306597).abs() < 1e-9);
        assert!((mc.survival[1] - truth).abs() < 3.0 * mc.std_error[1]);
        assert!(mc_survival(&p, Regime::Observational, 99, 5, &[1.0]).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let mut p = exponential_params(0.05);
        p.hazard.treatment = Piecewise::Constant(0.10);
        p.hazard.mediator = Piecewise::Constant(0.02);
        p.structural.treatment = vec![1.5];
        let cf = closed_form_effects(&p, &[2.0]).unwrap();
        assert!((cf.sie[0] - (-0.06f64).exp()).abs() < 1e-15);
        assert!((cf.sie[0] - 0.941764534).abs() < 1e-9);
        assert!((cf.chde[0] - 0.2).abs() < 1e-15);

        p.hazard.mediator = Piecewise::Constant(0.0);
        let cf = closed_form_effects(&p, &[0.5, 3.0]).unwrap();
        assert!(cf.sie.iter().all(|&v| v == 1.0));

        p.hazard.mediator = Piecewise::Constant(0.02);
        p.hazard.treatment = Piecewise::Constant(0.0);
        let cf = closed_form_effects(&p, &[0.5, 3.0]).unwrap();
        assert!(cf.sde.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn closed_form_integrates_piecewise_paths() {
        let mut p = exponential_params(0.05);
        p.schedule = Schedule::new(vec![0.0, 1.0, 2.0]).unwrap();
        p.hazard.treatment = Piecewise::Intervals(vec![0.1, 0.2, 0.3]);
        p.hazard.mediator = Piecewise::Intervals(vec![0.01, 0.02, 0.04]);
        p.structural.treatment = vec![1.0, 0.5, 0.0];
        p.structural.past = vec![vec![], vec![0.4], vec![0.0, 0.5]];
        p.structural.noise_sd = vec![1.0; 3];
        // gamma = (1, 0.9, 0.45)
        let cf = closed_form_effects(&p, &[0.5, 1.5, 2.5]).unwrap();
        assert!((cf.gamma[2] - 0.45).abs() < 1e-15);
        assert!((cf.chde[0] - 0.05).abs() < 1e-15);
        assert!((cf.chde[1] - (0.1 + 0.1)).abs() < 1e-15);
        assert!((cf.chde[2] - (0.1 + 0.2 + 0.15)).abs() < 1e-15);
        let want = 0.01 * 1.0 + 0.02 * 0.9 + 0.5 * 0.04 * 0.45;
        assert!((cf.chie[2] - want).abs() < 1e-15);
    }

    #[test]
    fn noise_variance_tracks_kappa() {
        let mut p = exponential_params(0.1);
        p.censoring.t_max = 1.0;
        let ds = simulate_cohort(&p, 4000, 9, Regime::Observational).unwrap();
        let var = |d: &Dataset| {
            let v: Vec<f64> = d.subjects().iter().map(|s| s.mediators[0]).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let base = var(&ds);
        let noisy = add_noise(&ds, 0.5, 1).unwrap();
        // Noise variance equals Var(M), so the total roughly doubles.
        let ratio = var(&noisy) / base;
        assert!((ratio - 2.0).abs() < 0.15, "ratio {ratio}");
        let nearly_clean = add_noise(&ds, 1.0 - 1e-9, 1).unwrap();
        let max_diff = ds
            .subjects()
            .iter()
            .zip(nearly_clean.subjects())
            .map(|(a, b)| (a.mediators[0] - b.mediators[0]).abs())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-3);
        assert!(add_noise(&ds, 1.0, 1).is_err());
        assert!(add_noise(&ds, 0.0, 1).is_err());
    }

    #[test]
    fn add_noise_rejects_constant_mediator() {
        let mut p = exponential_params(0.1);
        p.structural.treatment = vec![0.0];
        p.structural.noise_sd = vec![0.0];
        p.censoring.t_max = 1.0;
        let ds = simulate_cohort(&p, 50, 1, Regime::Observational).unwrap();
        assert!(matches!(
            add_noise(&ds, 0.5, 1),
            Err(Error::ZeroVariance(0))
        ));
    }

    #[test]
    fn negative_hazard_is_rejected() {
        let mut p = exponential_params(0.01);
        p.hazard.mediator = Piecewise::Constant(0.5);
        p.censoring.t_max = 1.0;
        assert!(matches!(
            simulate_cohort(&p, 500, 1, Regime::Observational),
            Err(Error::NegativeHazard { .. })
        ));
        let diag = simulate_cohort_diagnostics(&p, 500, 1, Regime::Observational).unwrap();
        assert!(diag.clamped > 0);
    }

    #[test]
    fn params_parse_from_toml() {
        let text = r#"
schedule = [0.0, 1.0]

[hazard]
baseline = 0.05
treatment = [0.1, 0.2]
mediator = 0.02
covariates = [0.01]

[structural]
treatment = [1.5, 0.5]
past = [[], [0.4]]
covariates = [[0.1], [0.0]]
noise_sd = [1.0, 1.0]

[baseline]
treatment_probability = 0.5
covariates = [{ name = "age", law = "normal", mean = 0.0, sd = 1.0 }]

[censoring]
t_max = 2.0
"#;
        let p = SimulationParams::from_toml(text).unwrap();
        assert_eq!(p.hazard.treatment.at(1), 0.2);
        assert_eq!(p.hazard.mediator.at(1), 0.02);
        assert_eq!(p.contrast, Contrast::default());
        assert_eq!(p.baseline.covariates[0].name, "age");

        let broken = text.replace("past = [[], [0.4]]", "past = [[0.1], [0.4]]");
        assert!(SimulationParams::from_toml(&broken).is_err());
    }
}
