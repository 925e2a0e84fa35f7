//! Dynamic survival prediction and predictive accuracy measures.

pub mod dynamic;
pub mod metrics;

pub use dynamic::{
    empirical_bayes_mode, empirical_bayes_mode_with, predict_survival, predict_survival_curve,
    predict_survival_curve_with, predict_survival_with, EbMode,
};
pub use metrics::{
    auc, auc_from_predictions, evaluate, evaluate_by, evaluate_with, landmark_predictions,
    landmark_predictions_by, prediction_error, prediction_error_from_predictions, Metrics, Outcome,
};

#[cfg(test)]
mod tests;
