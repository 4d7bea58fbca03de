//! Per-visit linear regressions for the mediator process.
//!
//! * marginal model: `M_i = m0_i + gamma_i A + theta_i' C + eta_i`
//! * sequential model: `M_i = lambda_i A + delta_i' C + sum_{k<i} b_ik M_k + eps_i`
//!
//! Both are fitted by ordinary least squares among subjects still under
//! observation at the visit time `t_i`. Indices whose design is singular or
//! has too few survivors are reported as gaps, never as zeros.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Cohort, Dataset};
use crate::error::{Error, Result};
use crate::linalg::OlsAccumulator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalFit {
    pub intercept: f64,
    pub treatment: f64,
    pub covariates: Vec<f64>,
    pub treatment_se: f64,
    pub residual_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalIndex {
    pub index: usize,
    pub time: f64,
    pub survivors: usize,
    pub fit: Option<MarginalFit>,
}

/// Marginal mediator regressions, one entry per schedule index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediatorCoefficients {
    pub indices: Vec<MarginalIndex>,
}

impl MediatorCoefficients {
    pub fn fit(&self, i: usize) -> Result<&MarginalFit> {
        self.indices
            .get(i)
            .and_then(|e| e.fit.as_ref())
            .ok_or(Error::MediatorIndexUnavailable(i))
    }

    /// Treatment-on-mediator coefficient at index `i`.
    pub fn gamma(&self, i: usize) -> Result<f64> {
        self.fit(i).map(|f| f.treatment)
    }

    pub fn survivor_counts(&self) -> Vec<usize> {
        self.indices.iter().map(|e| e.survivors).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralFit {
    pub intercept: f64,
    pub treatment: f64,
    pub covariates: Vec<f64>,
    /// `b_ik` for `k < i`.
    pub past: Vec<f64>,
    pub noise_variance: f64,
    pub std_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralIndex {
    pub index: usize,
    pub time: f64,
    pub survivors: usize,
    pub fit: Option<StructuralFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralCoefficients {
    pub indices: Vec<StructuralIndex>,
}

impl StructuralCoefficients {
    pub fn fit(&self, i: usize) -> Result<&StructuralFit> {
        self.indices
            .get(i)
            .and_then(|e| e.fit.as_ref())
            .ok_or(Error::MediatorIndexUnavailable(i))
    }

    /// Treatment coefficients `lambda_i` and the strictly lower-triangular
    /// matrix of past-mediator coefficients, if every index was fitted.
    pub fn lambda_and_b(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let k = self.indices.len();
        let mut lambdas = Vec::with_capacity(k);
        let mut b = DMatrix::zeros(k, k);
        for i in 0..k {
            let f = self.fit(i)?;
            lambdas.push(f.treatment);
            for (j, &v) in f.past.iter().enumerate() {
                b[(i, j)] = v;
            }
        }
        Ok((lambdas, b))
    }
}

pub fn fit_marginal(dataset: &Dataset) -> MediatorCoefficients {
    fit_marginal_cohort(&dataset.cohort())
}

pub fn fit_marginal_cohort(cohort: &Cohort<'_>) -> MediatorCoefficients {
    let p = cohort.n_covariates;
    let indices = cohort
        .schedule
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut acc = OlsAccumulator::new(p + 2);
            let mut x = Vec::with_capacity(p + 2);
            for s in cohort.subjects.iter().filter(|s| s.at_risk(t)) {
                x.clear();
                x.push(1.0);
                x.push(s.treatment);
                x.extend_from_slice(&s.baseline);
                acc.push(&x, s.mediators[i]);
            }
            let fit = acc.solve().map(|f| MarginalFit {
                intercept: f.coefficients[0],
                treatment: f.coefficients[1],
                covariates: f.coefficients[2..].to_vec(),
                treatment_se: f.std_errors[1],
                residual_variance: f.residual_variance,
            });
            MarginalIndex {
                index: i,
                time: t,
                survivors: acc.rows(),
                fit,
            }
        })
        .collect();
    MediatorCoefficients { indices }
}

pub fn fit_sequential(dataset: &Dataset) -> StructuralCoefficients {
    let cohort = dataset.cohort();
    let p = cohort.n_covariates;
    let indices = cohort
        .schedule
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let q = p + 2 + i;
            let mut acc = OlsAccumulator::new(q);
            let mut x = Vec::with_capacity(q);
            for s in cohort.subjects.iter().filter(|s| s.at_risk(t)) {
                x.clear();
                x.push(1.0);
                x.push(s.treatment);
                x.extend_from_slice(&s.baseline);
                x.extend_from_slice(&s.mediators[..i]);
                acc.push(&x, s.mediators[i]);
            }
            let fit = acc.solve().map(|f| StructuralFit {
                intercept: f.coefficients[0],
                treatment: f.coefficients[1],
                covariates: f.coefficients[2..2 + p].to_vec(),
                past: f.coefficients[2 + p..].to_vec(),
                noise_variance: f.residual_variance,
                std_errors: f.std_errors,
            });
            StructuralIndex {
                index: i,
                time: t,
                survivors: acc.rows(),
                fit,
            }
        })
        .collect();
    StructuralCoefficients { indices }
}

/// Marginal treatment-on-mediator coefficients `gamma = (I - B)^{-1} Lambda`
/// implied by the sequential model, by forward substitution.
pub fn gamma_from_structural(lambdas: &[f64], b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let k = lambdas.len();
    if b.nrows() != k || b.ncols() != k {
        return Err(Error::NotStrictlyLowerTriangular { expected: k });
    }
    for i in 0..k {
        for j in i..k {
            if b[(i, j)] != 0.0 {
                return Err(Error::NotStrictlyLowerTriangular { expected: k });
            }
        }
    }
    let mut gamma = Vec::with_capacity(k);
    for i in 0..k {
        let g = (0..i).fold(lambdas[i], |acc, j| acc + b[(i, j)] * gamma[j]);
        gamma.push(g);
    }
    Ok(gamma)
}
