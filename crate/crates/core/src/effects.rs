//! Direct, indirect and total effect curves.
//!
//! The cumulative indirect effect multiplies each increment of `B(t)` at
//! event time `s` by the marginal mediator coefficient `gamma_{r(s)}`; the
//! cumulative direct effect is the scaled treatment function `A(t)`. Survival
//! scale effects are exponentials of the negated cumulative curves.

use serde::{Deserialize, Serialize};

use crate::aalen::CumulativeCoefficients;
use crate::data::Schedule;
use crate::error::{Error, Result};
use crate::mediator::MediatorCoefficients;
use crate::step::StepFunction;

/// Treatment contrast `a` (active) versus `a_star` (reference).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub a: f64,
    pub a_star: f64,
}

impl Contrast {
    pub fn new(a: f64, a_star: f64) -> Result<Self> {
        if a == a_star || !a.is_finite() || !a_star.is_finite() {
            return Err(Error::DegenerateContrast);
        }
        Ok(Contrast { a, a_star })
    }

    pub fn difference(&self) -> f64 {
        self.a - self.a_star
    }

    pub fn swapped(&self) -> Self {
        Contrast {
            a: self.a_star,
            a_star: self.a,
        }
    }
}

impl Default for Contrast {
    fn default() -> Self {
        Contrast {
            a: 1.0,
            a_star: 0.0,
        }
    }
}

/// Cumulative hazard-scale effects on the jump grid of the additive fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectCurves {
    pub chde: StepFunction,
    pub chie: StepFunction,
    pub chte: StepFunction,
    pub contrast: Contrast,
}

impl EffectCurves {
    pub fn times(&self) -> &[f64] {
        self.chte.jumps()
    }

    /// Average local hazard differences (direct, indirect, total) over a
    /// window, read off as slopes of the cumulative curves.
    pub fn window_rates(&self, t0: f64, t1: f64) -> (f64, f64, f64) {
        (
            self.chde.slope(t0, t1),
            self.chie.slope(t0, t1),
            self.chte.slope(t0, t1),
        )
    }
}

fn with_total(chde: StepFunction, chie: StepFunction, contrast: Contrast) -> EffectCurves {
    let values = chde
        .values()
        .iter()
        .zip(chie.values())
        .map(|(d, i)| d + i)
        .collect();
    let chte = StepFunction::from_values(chde.jumps().to_vec(), values).expect("shared grid");
    EffectCurves {
        chde,
        chie,
        chte,
        contrast,
    }
}

pub fn cumulative_effects(
    cumcoef: &CumulativeCoefficients,
    medcoef: &MediatorCoefficients,
    schedule: &Schedule,
    contrast: Contrast,
) -> Result<EffectCurves> {
    if !cumcoef.terms.treatment {
        return Err(Error::MissingTerm("treatment"));
    }
    if !cumcoef.terms.mediator {
        return Err(Error::MissingTerm("mediator"));
    }
    let diff = contrast.difference();
    let b = &cumcoef.mediator;
    let chie_incs = b
        .jumps()
        .iter()
        .zip(b.increments())
        .map(|(&s, &db)| Ok(diff * medcoef.gamma(schedule.index(s)?)? * db))
        .collect::<Result<Vec<f64>>>()?;
    let chie = StepFunction::from_increments(b.jumps().to_vec(), chie_incs)?;
    let chde = cumcoef.treatment.scaled(diff);
    Ok(with_total(chde, chie, contrast))
}

/// Relative-survival effects on the jump grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalEffects {
    pub times: Vec<f64>,
    pub sde: Vec<f64>,
    pub sie: Vec<f64>,
    pub ste: Vec<f64>,
}

fn neg_exp(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| (-v).exp()).collect()
}

pub fn survival_effects(effects: &EffectCurves) -> SurvivalEffects {
    SurvivalEffects {
        times: effects.times().to_vec(),
        sde: neg_exp(effects.chde.values()),
        sie: neg_exp(effects.chie.values()),
        ste: neg_exp(effects.chte.values()),
    }
}

/// Survival-scale values of a cumulative curve at arbitrary times.
pub fn survival_at(curve: &StepFunction, grid: &[f64]) -> Vec<f64> {
    grid.iter().map(|&t| (-curve.eval(t)).exp()).collect()
}

/// Corrects for classical measurement error in the mediator with reliability
/// `kappa`: the indirect effect is divided by `kappa` and the direct effect
/// absorbs the difference, leaving the total effect untouched.
///
/// This correction is a tentative linear-model approximation.
pub fn correct_measurement_error(effects: &EffectCurves, kappa: f64) -> Result<EffectCurves> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidKappa {
            value: kappa,
            range: "(0, 1]",
        });
    }
    let jumps = effects.chte.jumps().to_vec();
    let excess = 1.0 / kappa - 1.0;
    let chie = effects.chie.values().iter().map(|v| v / kappa).collect();
    let chde = effects
        .chde
        .values()
        .iter()
        .zip(effects.chie.values())
        .map(|(d, i)| d - i * excess)
        .collect();
    Ok(EffectCurves {
        chde: StepFunction::from_values(jumps.clone(), chde)?,
        chie: StepFunction::from_values(jumps, chie)?,
        chte: effects.chte.clone(),
        contrast: effects.contrast,
    })
}
