//! Substrate and virtual network model.

pub mod doc;
pub mod expand;
pub mod types;
pub mod validate;

pub use expand::{expand_flows, expand_links, ExpandedGraph};
pub use types::*;
pub use validate::{validate_problem, ValidationReport};
