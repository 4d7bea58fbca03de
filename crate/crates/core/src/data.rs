//! Cohort data model: measurement schedule, subject records and risk sets.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Common mediator measurement times `t_0 = 0 < t_1 < ... < t_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Schedule {
    times: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Schedule {
    type Error = Error;
    fn try_from(times: Vec<f64>) -> Result<Self> {
        Schedule::new(times)
    }
}

impl From<Schedule> for Vec<f64> {
    fn from(s: Schedule) -> Self {
        s.times
    }
}

impl Schedule {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        let ok = times.first() == Some(&0.0)
            && times.iter().all(|t| t.is_finite())
            && times.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidSchedule);
        }
        Ok(Schedule { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index `k` of the measurement in force at `t`, i.e. `t_k <= t < t_{k+1}`
    /// (the last index once `t >= t_K`).
    pub fn index(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) || t.is_infinite() {
            return Err(Error::InvalidTime(t));
        }
        Ok(self.times.partition_point(|&s| s <= t) - 1)
    }

    /// Number of schedule times `<= t`.
    pub fn count_through(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// End of interval `k`, or `+inf` for the last one.
    pub fn interval_end(&self, k: usize) -> f64 {
        self.times.get(k + 1).copied().unwrap_or(f64::INFINITY)
    }

    /// Position of an exact schedule time.
    pub fn position(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }
}

/// Free-function form of [`Schedule::index`].
pub fn mediator_index(schedule: &Schedule, t: f64) -> Result<usize> {
    schedule.index(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    pub id: String,
    pub treatment: f64,
    pub baseline: Vec<f64>,
    /// `M_0, ..., M_{r(followup)}`, aligned with the schedule.
    pub mediators: Vec<f64>,
    pub followup: f64,
    pub event: bool,
}

impl SubjectRecord {
    /// At risk at `t` (follow-up reaches `t`, including an event exactly at `t`).
    pub fn at_risk(&self, t: f64) -> bool {
        self.followup >= t
    }
}

/// Immutable cohort sharing one schedule and one baseline dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schedule: Schedule,
    covariate_names: Vec<String>,
    subjects: Vec<SubjectRecord>,
    carried_forward: usize,
}

impl Dataset {
    pub fn new(
        schedule: Schedule,
        covariate_names: Vec<String>,
        subjects: Vec<SubjectRecord>,
    ) -> Result<Self> {
        let p = covariate_names.len();
        let mut seen = HashSet::with_capacity(subjects.len());
        for s in &subjects {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateSubject(s.id.clone()));
            }
            validate_subject(&schedule, p, s)?;
        }
        Ok(Dataset {
            schedule,
            covariate_names,
            subjects,
            carried_forward: 0,
        })
    }

    pub(crate) fn with_carried_forward(mut self, count: usize) -> Self {
        self.carried_forward = count;
        self
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    /// Number of mediator values filled by last observation carried forward.
    pub fn carried_forward(&self) -> usize {
        self.carried_forward
    }

    pub fn n_events(&self) -> usize {
        self.subjects.iter().filter(|s| s.event).count()
    }

    /// Distinct observed event times, ascending.
    pub fn event_times(&self) -> Vec<f64> {
        self.cohort().event_times()
    }

    pub fn cohort(&self) -> Cohort<'_> {
        Cohort {
            schedule: &self.schedule,
            n_covariates: self.covariate_names.len(),
            subjects: self.subjects.iter().collect(),
        }
    }

    /// A view holding the subjects at `indices` (repeats allowed).
    pub fn resample(&self, indices: &[usize]) -> Cohort<'_> {
        Cohort {
            schedule: &self.schedule,
            n_covariates: self.covariate_names.len(),
            subjects: indices.iter().map(|&i| &self.subjects[i]).collect(),
        }
    }
}

fn validate_subject(schedule: &Schedule, p: usize, s: &SubjectRecord) -> Result<()> {
    let bad = |reason: &str| Error::InvalidSubject {
        id: s.id.clone(),
        reason: reason.to_string(),
    };
    if !(s.followup > 0.0) || !s.followup.is_finite() {
        return Err(bad("follow-up must be positive and finite"));
    }
    if !s.treatment.is_finite() {
        return Err(bad("treatment must be finite"));
    }
    if s.baseline.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: s.baseline.len(),
        });
    }
    if s.baseline.iter().any(|c| !c.is_finite()) {
        return Err(bad("baseline covariates must be finite"));
    }
    if s.mediators.iter().any(|m| !m.is_finite()) {
        return Err(bad("mediator values must be finite"));
    }
    let expected = schedule.count_through(s.followup);
    if s.mediators.len() < expected {
        return Err(Error::MissingMediator {
            id: s.id.clone(),
            time: schedule.times()[s.mediators.len()],
        });
    }
    if s.mediators.len() > expected {
        return Err(Error::MediatorAfterFollowup {
            id: s.id.clone(),
            time: schedule.times()[expected],
            followup: s.followup,
        });
    }
    Ok(())
}

/// Borrowed set of subject records (possibly with repeats) sharing a schedule.
/// All fitting routines run on cohorts so bootstrap replicates need no copies.
#[derive(Debug, Clone)]
pub struct Cohort<'a> {
    pub schedule: &'a Schedule,
    pub n_covariates: usize,
    pub subjects: Vec<&'a SubjectRecord>,
}

impl Cohort<'_> {
    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn event_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .subjects
            .iter()
            .filter(|s| s.event)
            .map(|s| s.followup)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

/// Indices of subjects still under observation at `t` (`followup >= t`).
pub fn risk_set(dataset: &Dataset, t: f64) -> Vec<usize> {
    dataset
        .subjects()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.at_risk(t))
        .map(|(i, _)| i)
        .collect()
}
