//! Data, model specification and parameter types.

pub mod curve;
pub mod data;
pub mod hazard;
pub mod params;
pub mod spec;

pub use curve::{rho_to_tau, BandPoint, CorrelationCurve};
pub use data::{Dataset, SubjectData};
pub use hazard::{hazard, linear_predictor_long, SubjectHazard};
pub use params::ParameterSet;
pub use spec::{AlphaStructure, BaselineHazard, Copula, ModelSpec, RandomEffects, TimeTrend};
