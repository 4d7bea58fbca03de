//! Least-squares fitting of the additive hazards model
//! `lambda(t) = mu_t + alpha_t a + beta_t M_{r(t)} + rho_t' c`.
//!
//! At each distinct event time the increments of the cumulative regression
//! functions solve an ordinary least-squares problem over the risk set, with
//! the counting-process jumps as the response. Event times are visited in
//! descending order so the risk set only grows and rows can be folded into a
//! QR factor incrementally; the factor is rebuilt whenever the mediator
//! index `r(t)` changes.

use serde::{Deserialize, Serialize};

use crate::data::{Cohort, Dataset, SubjectRecord};
use crate::error::{Error, Result};
use crate::linalg::RowQr;
use crate::step::StepFunction;

/// Which regressors enter the design besides the intercept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terms {
    pub treatment: bool,
    pub mediator: bool,
    pub covariates: bool,
}

impl Terms {
    pub const FULL: Terms = Terms {
        treatment: true,
        mediator: true,
        covariates: true,
    };
    pub const INTERCEPT_ONLY: Terms = Terms {
        treatment: false,
        mediator: false,
        covariates: false,
    };
    pub const TREATMENT_ONLY: Terms = Terms {
        treatment: true,
        mediator: false,
        covariates: false,
    };

    fn ncols(&self, p: usize) -> usize {
        1 + usize::from(self.treatment)
            + usize::from(self.mediator)
            + if self.covariates { p } else { 0 }
    }

    fn fill_row(&self, s: &SubjectRecord, k: usize, row: &mut Vec<f64>) {
        row.clear();
        row.push(1.0);
        if self.treatment {
            row.push(s.treatment);
        }
        if self.mediator {
            row.push(s.mediators[k]);
        }
        if self.covariates {
            row.extend_from_slice(&s.baseline);
        }
    }
}

/// Cumulative regression functions `mu_0(t), A(t), B(t), R_j(t)`. Terms left
/// out of the design are identically zero on the shared jump grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeCoefficients {
    pub baseline: StepFunction,
    pub treatment: StepFunction,
    pub mediator: StepFunction,
    pub covariates: Vec<StepFunction>,
    pub skipped_events: usize,
    pub terms: Terms,
}

impl CumulativeCoefficients {
    /// Retained event times (the common jump grid).
    pub fn times(&self) -> &[f64] {
        self.baseline.jumps()
    }
}

pub fn fit_additive(dataset: &Dataset) -> Result<CumulativeCoefficients> {
    fit_additive_cohort(&dataset.cohort(), Terms::FULL)
}

pub fn fit_additive_with(dataset: &Dataset, terms: Terms) -> Result<CumulativeCoefficients> {
    fit_additive_cohort(&dataset.cohort(), terms)
}

pub fn fit_additive_cohort(cohort: &Cohort<'_>, terms: Terms) -> Result<CumulativeCoefficients> {
    if cohort.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let p = cohort.n_covariates;
    let ncols = terms.ncols(p);

    let mut order: Vec<&SubjectRecord> = cohort.subjects.clone();
    order.sort_by(|a, b| b.followup.total_cmp(&a.followup));
    let event_times = cohort.event_times();
    if event_times.is_empty() {
        return Err(Error::NoEvents);
    }

    let mut qr = RowQr::new(ncols);
    let mut at_risk: Vec<&SubjectRecord> = Vec::with_capacity(order.len());
    let mut next = 0;
    let mut current_k: Option<usize> = None;
    let mut row = Vec::with_capacity(ncols);
    let mut rhs = vec![0.0; ncols];
    let mut retained: Vec<(f64, Vec<f64>)> = Vec::with_capacity(event_times.len());
    let mut skipped = 0usize;
    let mut any_estimable = false;

    for &t in event_times.iter().rev() {
        let k = cohort.schedule.index(t)?;
        if current_k != Some(k) {
            current_k = Some(k);
            qr.clear();
            for s in &at_risk {
                terms.fill_row(s, k, &mut row);
                qr.push(&row);
            }
        }
        rhs.iter_mut().for_each(|v| *v = 0.0);
        while next < order.len() && order[next].followup >= t {
            let s = order[next];
            terms.fill_row(s, k, &mut row);
            qr.push(&row);
            if s.event && s.followup == t {
                rhs.iter_mut().zip(&row).for_each(|(acc, x)| *acc += x);
            }
            at_risk.push(s);
            next += 1;
        }
        if at_risk.len() >= ncols {
            any_estimable = true;
        }
        if !qr.full_rank(ncols) {
            skipped += 1;
            continue;
        }
        let inc = qr.solve_gram(&rhs);
        retained.push((t, inc.iter().copied().collect()));
    }

    if !any_estimable {
        return Err(Error::InsufficientRiskSet { columns: ncols });
    }
    retained.reverse();
    Ok(assemble(retained, terms, p, skipped))
}

fn assemble(
    retained: Vec<(f64, Vec<f64>)>,
    terms: Terms,
    p: usize,
    skipped: usize,
) -> CumulativeCoefficients {
    let times: Vec<f64> = retained.iter().map(|(t, _)| *t).collect();
    let column = |c: Option<usize>| {
        let incs = retained
            .iter()
            .map(|(_, b)| c.map_or(0.0, |c| b[c]))
            .collect();
        StepFunction::from_increments(times.clone(), incs).expect("event times are sorted")
    };
    let mut col = 1;
    let mut take = |on: bool| {
        if on {
            col += 1;
            Some(col - 1)
        } else {
            None
        }
    };
    let a = take(terms.treatment);
    let m = take(terms.mediator);
    let covs: Vec<Option<usize>> = (0..p).map(|_| take(terms.covariates)).collect();
    CumulativeCoefficients {
        baseline: column(Some(0)),
        treatment: column(a),
        mediator: column(m),
        covariates: covs.into_iter().map(column).collect(),
        skipped_events: skipped,
        terms,
    }
}

/// Nelson–Aalen cumulative hazard for the subjects selected by `filter`.
pub fn nelson_aalen<F>(dataset: &Dataset, filter: F) -> Result<StepFunction>
where
    F: Fn(&SubjectRecord) -> bool,
{
    let subset: Vec<&SubjectRecord> = dataset.subjects().iter().filter(|s| filter(s)).collect();
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut times: Vec<f64> = subset
        .iter()
        .filter(|s| s.event)
        .map(|s| s.followup)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let incs = times
        .iter()
        .map(|&t| {
            let deaths = subset.iter().filter(|s| s.event && s.followup == t).count();
            let risk = subset.iter().filter(|s| s.at_risk(t)).count();
            deaths as f64 / risk as f64
        })
        .collect();
    StepFunction::from_increments(times, incs)
}
