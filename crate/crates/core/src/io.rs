//! Serialized fits and plot-ready output tables.
//!
//! Tables are comma-separated with a header row and one row per time.
//! Floats are written in shortest round-trip form, so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aalen::CumulativeCoefficients;
use crate::bootstrap::BootstrapBands;
use crate::data::{Dataset, Schedule};
use crate::effects::{survival_effects, EffectCurves};
use crate::error::Result;
use crate::mediator::MediatorCoefficients;
use crate::simulate::{ClosedFormEffects, McEffects};

/// Everything `effects` needs, as written by `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub schedule: Schedule,
    pub covariates: Vec<String>,
    pub subjects: usize,
    pub events: usize,
    pub carried_forward: usize,
    pub additive: CumulativeCoefficients,
    pub mediator: MediatorCoefficients,
}

impl FitDocument {
    pub fn new(
        dataset: &Dataset,
        additive: CumulativeCoefficients,
        mediator: MediatorCoefficients,
    ) -> Self {
        FitDocument {
            schedule: dataset.schedule().clone(),
            covariates: dataset.covariate_names().to_vec(),
            subjects: dataset.len(),
            events: dataset.n_events(),
            carried_forward: dataset.carried_forward(),
            additive,
            mediator,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub const EFFECT_COLUMNS: [&str; 7] = ["time", "chde", "chie", "chte", "sde", "sie", "ste"];

fn push_row(out: &mut String, cells: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in cells {
        if !first {
            out.push(',');
        }
        first = false;
        write!(out, "{v}").expect("writing to a String");
    }
    out.push('\n');
}

fn header(out: &mut String, names: &[String]) {
    out.push_str(&names.join(","));
    out.push('\n');
}

/// One row per jump time: `time,chde,chie,chte,sde,sie,ste`, followed by
/// the same six columns with a `_corr` suffix when a corrected set is given.
pub fn effects_table(raw: &EffectCurves, corrected: Option<&EffectCurves>) -> String {
    let mut names: Vec<String> = EFFECT_COLUMNS.iter().map(|s| s.to_string()).collect();
    if corrected.is_some() {
        names.extend(EFFECT_COLUMNS[1..].iter().map(|s| format!("{s}_corr")));
    }
    let mut out = String::new();
    header(&mut out, &names);
    let sr = survival_effects(raw);
    let sc = corrected.map(|c| (c, survival_effects(c)));
    for (i, &t) in raw.times().iter().enumerate() {
        let mut row = vec![
            t,
            raw.chde.values()[i],
            raw.chie.values()[i],
            raw.chte.values()[i],
            sr.sde[i],
            sr.sie[i],
            sr.ste[i],
        ];
        if let Some((c, s)) = &sc {
            row.extend([
                c.chde.values()[i],
                c.chie.values()[i],
                c.chte.values()[i],
                s.sde[i],
                s.sie[i],
                s.ste[i],
            ]);
        }
        push_row(&mut out, row);
    }
    out
}

/// `time`, then for each of chde, chie, chte, sde, sie, ste the point
/// estimate followed by `_lower` and `_upper` band columns.
pub fn bands_table(bands: &BootstrapBands) -> String {
    let mut names = vec!["time".to_string()];
    for (name, _) in bands.curves() {
        names.extend([
            name.to_string(),
            format!("{name}_lower"),
            format!("{name}_upper"),
        ]);
    }
    let mut out = String::new();
    header(&mut out, &names);
    for (g, &t) in bands.grid.iter().enumerate() {
        let mut row = vec![t];
        for (_, band) in bands.curves() {
            row.extend([band.point[g], band.lower[g], band.upper[g]]);
        }
        push_row(&mut out, row);
    }
    out
}

/// Closed-form curves next to Monte-Carlo survival ratios:
/// `time,chde,chie,chte,sde,sie,ste,sde_mc,sde_mc_se,sie_mc,sie_mc_se,ste_mc,ste_mc_se`.
pub fn oracle_table(exact: &ClosedFormEffects, mc: &McEffects) -> String {
    let names: Vec<String> = [
        "time",
        "chde",
        "chie",
        "chte",
        "sde",
        "sie",
        "ste",
        "sde_mc",
        "sde_mc_se",
        "sie_mc",
        "sie_mc_se",
        "ste_mc",
        "ste_mc_se",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut out = String::new();
    header(&mut out, &names);
    for (g, &t) in exact.times.iter().enumerate() {
        push_row(
            &mut out,
            [
                t,
                exact.chde[g],
                exact.chie[g],
                exact.chte[g],
                exact.sde[g],
                exact.sie[g],
                exact.ste[g],
                mc.sde[g],
                mc.sde_se[g],
                mc.sie[g],
                mc.sie_se[g],
                mc.ste[g],
                mc.ste_se[g],
            ],
        );
    }
    out
}
