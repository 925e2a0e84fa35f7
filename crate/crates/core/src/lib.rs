pub mod cli;
pub mod error;
pub mod estimation;
pub mod likelihood;
pub mod model;
pub mod numerics;
pub mod prediction;
pub mod simulation;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use estimation::{FitOptions, FittedModel};
pub use model::{Dataset, ModelSpec, ParameterSet, SubjectData};
pub use numerics::Real;

pub type BSplineBasis = numerics::BSplineBasis<f64>;
pub type BSplineBasisF32 = numerics::BSplineBasis<f32>;
pub type CorrelationCurve = model::CorrelationCurve<f64>;
pub type CorrelationCurveF32 = model::CorrelationCurve<f32>;
pub type QuadratureRule = numerics::QuadratureRule<f64>;
pub type StudentT = numerics::StudentT<f64>;
