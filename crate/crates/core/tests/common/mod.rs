#![allow(dead_code)]

use dynpath::data::Schedule;
use dynpath::effects::Contrast;
use dynpath::simulate::{
    BaselineParams, CensoringParams, CovariateLaw, CovariateSpec, HazardParams, Piecewise,
    SimulationParams, StructuralParams,
};

/// Single visit at time 0, constant coefficients, administrative censoring.
pub fn single_visit(mu: f64, alpha: f64, beta: f64, lambda: f64, t_max: f64) -> SimulationParams {
    SimulationParams {
        schedule: Schedule::new(vec![0.0]).unwrap(),
        hazard: HazardParams {
            baseline: Piecewise::Constant(mu),
            treatment: Piecewise::Constant(alpha),
            mediator: Piecewise::Constant(beta),
            covariates: vec![],
        },
        structural: StructuralParams {
            intercept: vec![0.0],
            treatment: vec![lambda],
            covariates: vec![],
            past: vec![],
            noise_sd: vec![1.0],
        },
        baseline: BaselineParams {
            treatment_probability: 0.5,
            covariates: vec![],
        },
        censoring: CensoringParams { t_max, rate: 0.0 },
        contrast: Contrast::default(),
    }
}

/// Three visits with a nonzero past-mediator matrix and one normal covariate.
pub fn three_visit() -> SimulationParams {
    SimulationParams {
        schedule: Schedule::new(vec![0.0, 0.5, 1.0]).unwrap(),
        hazard: HazardParams {
            baseline: Piecewise::Constant(0.1),
            treatment: Piecewise::Intervals(vec![0.1, 0.15, 0.2]),
            mediator: Piecewise::Intervals(vec![0.05, 0.04, 0.03]),
            covariates: vec![Piecewise::Constant(0.02)],
        },
        structural: StructuralParams {
            intercept: vec![2.0, 1.0, 1.0],
            treatment: vec![1.0, 0.5, 0.3],
            covariates: vec![vec![0.2], vec![0.1], vec![0.0]],
            past: vec![vec![], vec![0.4], vec![0.2, 0.3]],
            noise_sd: vec![0.5, 0.5, 0.5],
        },
        baseline: BaselineParams {
            treatment_probability: 0.5,
            covariates: vec![CovariateSpec {
                name: "x".into(),
                law: CovariateLaw::Normal { mean: 0.0, sd: 1.0 },
            }],
        },
        censoring: CensoringParams {
            t_max: 2.5,
            rate: 0.1,
        },
        contrast: Contrast::default(),
    }
}
