//! Self-contained numerical primitives, generic over the floating-point
//! scalar type.

pub mod bspline;
pub mod dist;
pub mod error;
pub mod hessian;
pub mod quadrature;
pub mod real;
pub mod roots;
pub mod special;

pub use bspline::BSplineBasis;
pub use dist::{
    bvn_pdf, bvt_pdf, normal_cdf, normal_ln_cdf, normal_ln_pdf, normal_pdf, normal_quantile, t_cdf,
    t_pdf, t_quantile, StudentT,
};
pub use error::NumericsError;
pub use hessian::{numeric_gradient, numeric_hessian};
pub use quadrature::{gauss_hermite, QuadratureRule};
pub use real::Real;
pub use roots::find_root;
