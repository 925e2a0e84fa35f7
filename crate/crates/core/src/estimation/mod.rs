//! Maximum-likelihood fitting, standard errors and model comparison.

pub mod band;
pub mod compare;
pub mod fit;
pub mod init;
pub mod optim;
pub mod transform;

pub use band::{correlation_band, Z_95};
pub use compare::{
    compare, likelihood_ratio_test, profile_t_df, Comparison, LikelihoodRatio, ProfilePoint,
    TProfile,
};
pub use fit::{fit, fit_from, Convergence, Estimate, FitOptions, FittedModel, Optimizer};
pub use init::{initialize, initialize_with};
pub use optim::{bfgs, nelder_mead, OptimOptions, OptimResult, OptimStatus};
pub use transform::{dim, pack, unpack};
