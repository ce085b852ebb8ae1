//! Cumulative revision maps.
//!
//! A document history is reduced to token-level add/delete deltas between
//! consecutive revisions. The deltas are folded into a graph whose nodes are
//! runs of tokens tagged with the revision that introduced them and, if they
//! were later removed, the revision that removed them. Laying the graph out
//! with revisions as rows and latest-revision token positions as columns
//! gives a map of where and when the document was edited.

pub mod delta;
pub mod document;
pub mod graph;
pub mod ingest;
pub mod layout;
pub mod render;

pub use delta::{
    apply_script, compute_delta, compute_delta_with, compute_scripts, lcs_align, lcs_align_with, Delta,
    DeltaError, DeltaScript, DiffOptions, EditOp,
};
pub use document::{
    detect_sections, tokenize, Granularity, Revision, SectionFormat, SectionSpan, Token, TokenSeq,
};
pub use graph::{
    build, build_from_scripts, build_with, reconstruct, AttachSide, Attachment, CrmGraph, GraphError, Node,
    NodeId, NodeState, RevisionMeta,
};
pub use ingest::{ingest, read_mediawiki, IngestError, RawRevision, SourceKind, SourceSpec};
pub use layout::{
    assign_author_bands, compute_change_bars, compute_change_bars_with, layout, layout_with, AuthorBand,
    ChangeBars, HeatScale, LayoutModel, LayoutOptions, LayoutRect, RectKind, SectionBand,
};
pub use render::{
    export_bundle, render_history_flow_svg, render_svg, to_history_flow, BundleError, HfModel, StyleConfig,
    ViewerBundle,
};
