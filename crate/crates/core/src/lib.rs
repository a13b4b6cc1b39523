//! Reference class forecasting for capital projects.
//!
//! The crate covers the whole outside-view pipeline: ingesting historical
//! project records, selecting a reference class and querying its overrun
//! distribution, regressing an intuitive estimate toward the class mean,
//! applying optimism-bias uplifts with a risk allowance, governance checks on
//! funding structures, and a Monte Carlo simulator of biased forecasting used
//! to validate the whole chain.

pub mod biassim;
pub mod governance;
pub mod ingest;
pub mod model;
pub mod rcf;
pub mod refclass;
