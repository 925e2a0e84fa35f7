//! Observed-data likelihood of the copula joint model.

pub mod conditional;
pub mod posterior;
pub mod subject;

pub use conditional::{
    censored_pair_gaussian, censored_pair_t, conditional_event_cdf, conditional_uniforms,
    event_pair_gaussian, event_pair_t, ConditionalUniforms, CopulaKernel, U_MIN,
};
pub use posterior::{marginal_y_logdensity, posterior_re, PosteriorRE};
pub use subject::{
    conditional_event_density_given_y, ln_conditional_event_density_given_y, subject_loglik,
    total_loglik, Evaluation, Likelihood, DEFAULT_QUAD_NODES,
};
