//! Subject-resampling percentile bands for the effect curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aalen::{fit_additive_cohort, Terms};
use crate::data::{Cohort, Dataset};
use crate::effects::{cumulative_effects, survival_at, Contrast, EffectCurves};
use crate::error::{Error, Result};
use crate::mediator::fit_marginal_cohort;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Evaluation times; all distinct event times of the dataset when `None`.
    pub grid: Option<Vec<f64>>,
    pub level: f64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        BootstrapConfig {
            replicates,
            seed,
            grid: None,
            level: 0.95,
        }
    }
}

/// Point estimate and pointwise percentile band of one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBands {
    pub grid: Vec<f64>,
    pub chde: Band,
    pub chie: Band,
    pub chte: Band,
    pub sde: Band,
    pub sie: Band,
    pub ste: Band,
    pub replicates: usize,
    pub level: f64,
    pub failed_replicates: usize,
}

impl BootstrapBands {
    /// Curves in table order: chde, chie, chte, sde, sie, ste.
    pub fn curves(&self) -> [(&'static str, &Band); 6] {
        [
            ("chde", &self.chde),
            ("chie", &self.chie),
            ("chte", &self.chte),
            ("sde", &self.sde),
            ("sie", &self.sie),
            ("ste", &self.ste),
        ]
    }
}

/// The full effect estimate for one (re)sampled cohort.
pub fn estimate_effects(cohort: &Cohort<'_>, contrast: Contrast) -> Result<EffectCurves> {
    let cumcoef = fit_additive_cohort(cohort, Terms::FULL)?;
    let medcoef = fit_marginal_cohort(cohort);
    cumulative_effects(&cumcoef, &medcoef, cohort.schedule, contrast)
}

fn evaluate(effects: &EffectCurves, grid: &[f64]) -> [Vec<f64>; 6] {
    [
        effects.chde.eval_many(grid),
        effects.chie.eval_many(grid),
        effects.chte.eval_many(grid),
        survival_at(&effects.chde, grid),
        survival_at(&effects.chie, grid),
        survival_at(&effects.chte, grid),
    ]
}

/// Linear-interpolation (type 7) sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn replicate_indices(n: usize, seed: u64, replicate: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn bootstrap_bands(
    dataset: &Dataset,
    contrast: Contrast,
    config: &BootstrapConfig,
) -> Result<BootstrapBands> {
    if config.replicates == 0 {
        return Err(Error::InvalidBootstrap(
            "at least one replicate is required".into(),
        ));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::InvalidBootstrap(format!(
            "level must lie in (0, 1), got {}",
            config.level
        )));
    }
    let grid = config.grid.clone().unwrap_or_else(|| dataset.event_times());
    let max_followup = dataset
        .subjects()
        .iter()
        .map(|s| s.followup)
        .fold(0.0, f64::max);
    if let Some(&t) = grid.iter().find(|&&t| !(t >= 0.0 && t <= max_followup)) {
        return Err(Error::InvalidBootstrap(format!(
            "grid time {t} lies outside observed follow-up [0, {max_followup}]"
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidBootstrap(
            "grid must be strictly increasing".into(),
        ));
    }

    let point = evaluate(&estimate_effects(&dataset.cohort(), contrast)?, &grid);
    let n = dataset.len();
    let draws: Vec<Option<[Vec<f64>; 6]>> = (1..=config.replicates)
        .into_par_iter()
        .map(|b| {
            let indices = replicate_indices(n, config.seed, b);
            estimate_effects(&dataset.resample(&indices), contrast)
                .ok()
                .map(|e| evaluate(&e, &grid))
        })
        .collect();
    let ok: Vec<&[Vec<f64>; 6]> = draws.iter().flatten().collect();
    let failed = config.replicates - ok.len();
    if ok.is_empty() {
        return Err(Error::AllReplicatesFailed(config.replicates));
    }

    let p_lo = (1.0 - config.level) / 2.0;
    let p_hi = (1.0 + config.level) / 2.0;
    let mut bands = point.into_iter().enumerate().map(|(c, point)| {
        let mut lower = Vec::with_capacity(grid.len());
        let mut upper = Vec::with_capacity(grid.len());
        let mut column = Vec::with_capacity(ok.len());
        for g in 0..grid.len() {
            column.clear();
            column.extend(ok.iter().map(|r| r[c][g]));
            column.sort_by(f64::total_cmp);
            lower.push(quantile_sorted(&column, p_lo));
            upper.push(quantile_sorted(&column, p_hi));
        }
        Band {
            point,
            lower,
            upper,
        }
    });
    let mut next = || bands.next().expect("six curves");
    Ok(BootstrapBands {
        chde: next(),
        chie: next(),
        chte: next(),
        sde: next(),
        sie: next(),
        ste: next(),
        grid,
        replicates: config.replicates,
        level: config.level,
        failed_replicates: failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Schedule, SubjectRecord};

    fn cohort(n: usize) -> Dataset {
        let subjects = (0..n)
            .map(|i| {
                let a = (i % 2) as f64;
                let m = 1.5 * a + ((i * 7919) % 13) as f64 / 13.0;
                SubjectRecord {
                    id: format!("s{i}"),
                    treatment: a,
                    baseline: vec![],
                    mediators: vec![m],
                    followup: 0.1 + ((i * 104_729) % 97) as f64 / 20.0,
                    event: i % 3 != 0,
                }
            })
            .collect();
        Dataset::new(Schedule::new(vec![0.0]).unwrap(), vec![], subjects).unwrap()
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert!((quantile_sorted(&v, 0.1) - 1.4).abs() < 1e-15);
        assert_eq!(quantile_sorted(&[2.0], 0.975), 2.0);
    }

    #[test]
    fn repeat_runs_are_identical() {
        let ds = cohort(120);
        let mut cfg = BootstrapConfig::new(30, 4);
        cfg.grid = Some(vec![0.5, 1.0, 2.0]);
        let a = bootstrap_bands(&ds, Contrast::default(), &cfg).unwrap();
        let b = bootstrap_bands(&ds, Contrast::default(), &cfg).unwrap();
        assert_eq!(a, b);
        for (_, band) in a.curves() {
            for g in 0..3 {
                assert!(band.lower[g] <= band.upper[g]);
            }
        }
        assert!(a.failed_replicates < a.replicates);
    }

    #[test]
    fn wider_level_never_narrows() {
        let ds = cohort(120);
        let mut cfg = BootstrapConfig::new(40, 9);
        cfg.grid = Some(vec![1.0, 3.0]);
        cfg.level = 0.8;
        let narrow = bootstrap_bands(&ds, Contrast::default(), &cfg).unwrap();
        cfg.level = 0.95;
        let wide = bootstrap_bands(&ds, Contrast::default(), &cfg).unwrap();
        for ((_, n), (_, w)) in narrow.curves().iter().zip(wide.curves()) {
            for g in 0..2 {
                assert!(w.lower[g] <= n.lower[g] && w.upper[g] >= n.upper[g]);
            }
        }
    }

    #[test]
    fn invalid_configurations() {
        let ds = cohort(40);
        let mut cfg = BootstrapConfig::new(0, 1);
        assert!(bootstrap_bands(&ds, Contrast::default(), &cfg).is_err());
        cfg.replicates = 5;
        cfg.level = 1.0;
        assert!(bootstrap_bands(&ds, Contrast::default(), &cfg).is_err());
        cfg.level = 0.95;
        cfg.grid = Some(vec![1e6]);
        assert!(bootstrap_bands(&ds, Contrast::default(), &cfg).is_err());
    }
}
