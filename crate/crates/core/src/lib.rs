//! Relatedness analytics for trade panels.
//!
//! The crate turns long-format export data into yearly binary RCA matrices,
//! derives product-space, country-space and combined-space relatedness
//! indicators from them, and tests how well each indicator predicts gains and
//! losses of comparative advantage with a Monte Carlo resampling test.
//!
//! Pipeline order mirrors the modules:
//! [`panel`] → [`rca`] → [`product_space`] / [`country_space`] /
//! [`combined_space`] → [`bootstrap`] → [`report`].

pub mod bootstrap;
pub mod combined_space;
pub mod country_space;
pub mod error;
pub mod grid;
pub mod indicator;
pub mod kde;
pub mod panel;
pub mod pipeline;
pub mod product_space;
pub mod rca;
pub mod report;
pub mod results_csv;

pub use error::{Error, Result};
pub use indicator::{ConditionalProbMatrix, IndicatorId, IndicatorMatrix, ProbKind, Space};
pub use panel::{ExportPanel, LallConcordance, Registry};
pub use rca::{AntiRcaMatrix, BinaryRcaMatrix, ChangeMatrix, ContinuousRcaMatrix, YearPair};
