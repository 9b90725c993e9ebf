//! Extreme value index estimation that borrows strength from tail-dependent
//! related variables observed over a longer record.
//!
//! The adapted Hill estimator corrects the ordinary Hill estimate of the
//! variable of interest using the gap between each related variable's Hill
//! estimate on the joint sample and on its full record.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapted;
pub mod asymptotics;
pub mod commands;
pub mod data;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod montecarlo;
pub mod sampling;
pub mod tail_dependence;
pub mod warning;

pub use adapted::{adapted_bivariate, adapted_multivariate, EstimateReport};
pub use data::PairedSample;
pub use error::{Error, Result};
pub use estimators::{hill, order_statistics, weissman_quantile, TuningParams};
pub use linalg::{invert_matrix, Matrix};
pub use montecarlo::{run_scenario, Scenario, ScenarioResult};
pub use tail_dependence::{tail_copula, tail_dependence_set};
pub use warning::Warning;
