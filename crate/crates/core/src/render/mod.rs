//! Static figures and the viewer bundle.

mod bundle;
mod history_flow;
mod style;
mod svg;

pub use bundle::{export_bundle, BundleError, BundleNode, BundleNodeState, ViewerBundle, SCHEMA_VERSION};
pub use history_flow::{to_history_flow, HfColumn, HfModel, HfSegment};
pub use style::{StyleConfig, StyleError};
pub use svg::{render_history_flow_svg, render_svg};
