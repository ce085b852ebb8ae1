//! The viewer bundle: one self-contained JSON document with the graph,
//! its layout and the revision metadata. Field names are fixed by
//! `docs/viewer-bundle.schema.json`; incompatible changes bump
//! [`SCHEMA_VERSION`].

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{Granularity, TokenSeq};
use crate::graph::{Attachment, CrmGraph, NodeId, RevisionMeta};
use crate::layout::LayoutModel;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("failed to write bundle {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("failed to read bundle {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("malformed bundle: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported bundle schema version {found} (expected {SCHEMA_VERSION})")]
    Version { found: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BundleNodeState {
    Alive,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleNode {
    pub id: NodeId,
    pub tokens: TokenSeq,
    pub birth_rev: usize,
    pub state: BundleNodeState,
    pub death_rev: Option<usize>,
    pub author: String,
    pub attach: Option<Attachment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewerBundle {
    pub schema_version: u32,
    /// Joins a node's tokens back into display text.
    pub separator: String,
    pub nodes: Vec<BundleNode>,
    pub chain: Vec<NodeId>,
    pub layout: LayoutModel,
    pub revisions: Vec<RevisionMeta>,
}

impl ViewerBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bundle values are always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        #[derive(Deserialize)]
        struct Probe {
            schema_version: u32,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.schema_version != SCHEMA_VERSION {
            return Err(BundleError::Version { found: probe.schema_version });
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, BundleError> {
        let text =
            fs::read_to_string(path).map_err(|source| BundleError::Read { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), BundleError> {
        fs::write(path, self.to_json()).map_err(|source| BundleError::Write { path: path.to_owned(), source })
    }
}

pub fn export_bundle(g: &CrmGraph, m: &LayoutModel, granularity: Granularity) -> ViewerBundle {
    let nodes = g
        .nodes()
        .iter()
        .map(|n| BundleNode {
            id: n.id,
            tokens: n.tokens.clone(),
            birth_rev: n.birth_rev,
            state: if n.is_alive() { BundleNodeState::Alive } else { BundleNodeState::Dead },
            death_rev: n.death_rev(),
            author: n.author.clone(),
            attach: n.attach,
        })
        .collect();
    ViewerBundle {
        schema_version: SCHEMA_VERSION,
        separator: granularity.separator().to_string(),
        nodes,
        chain: g.chain().to_vec(),
        layout: m.clone(),
        revisions: g.revisions().to_vec(),
    }
}
