//! Health-text classification and rule-based extraction toolkit.

pub mod corpus;
pub mod error;
pub mod features;
pub mod imbalance;
pub mod linear;
pub mod rulex;
pub mod ensemble;
pub mod metrics;
pub mod textprep;

pub use error::{Error, Result};
