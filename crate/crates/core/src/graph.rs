//! The cumulative revision graph.
//!
//! Nodes hold runs of tokens introduced by one revision. The alive nodes,
//! linked in `chain` order, always spell out the latest revision. Removed
//! content stays in the graph as dead nodes attached to the alive node that
//! was next to it when it was removed.

use std::fmt;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delta::{self, compute_scripts, Delta, DeltaError, DeltaScript, DiffOptions, EditOp};
use crate::document::{Revision, Token, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum NodeState {
    Alive,
    Dead { death_rev: usize },
}

/// Which side of its anchor a dead node's content used to sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttachSide {
    /// The anchor preceded the removed run.
    After,
    /// The removed run started the document; the anchor followed it.
    Before,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub anchor: NodeId,
    pub side: AttachSide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub tokens: TokenSeq,
    pub birth_rev: usize,
    pub state: NodeState,
    pub author: String,
    /// Set for dead nodes, unless nothing was left alive to attach to.
    pub attach: Option<Attachment>,
}

impl Node {
    pub fn is_alive(&self) -> bool {
        self.state == NodeState::Alive
    }

    pub fn death_rev(&self) -> Option<usize> {
        match self.state {
            NodeState::Alive => None,
            NodeState::Dead { death_rev } => Some(death_rev),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Per-revision metadata kept by the graph (content lives in the nodes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionMeta {
    pub index: usize,
    pub author: String,
    pub timestamp: DateTime<FixedOffset>,
    #[serde(default)]
    pub comment: String,
}

impl From<&Revision> for RevisionMeta {
    fn from(r: &Revision) -> Self {
        RevisionMeta {
            index: r.index,
            author: r.author.clone(),
            timestamp: r.timestamp,
            comment: r.comment.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("revision {revision}: malformed {op:?} delta at position {position}: {reason}")]
    MalformedDelta { revision: usize, op: EditOp, position: usize, reason: String },
    #[error("revision history is empty")]
    EmptyHistory,
    #[error("revision indices must be consecutive from 1: expected {expected}, found {found}")]
    NonConsecutive { expected: usize, found: usize },
    #[error("revision {requested} out of range 1..={count}")]
    RevisionOutOfRange { requested: usize, count: usize },
    #[error(transparent)]
    Script(#[from] DeltaError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrmGraph {
    nodes: Vec<Node>,
    chain: Vec<NodeId>,
    revisions: Vec<RevisionMeta>,
}

impl CrmGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    /// Alive nodes in document order.
    pub fn chain(&self) -> &[NodeId] {
        &self.chain
    }

    pub fn revisions(&self) -> &[RevisionMeta] {
        &self.revisions
    }

    pub fn revision_count(&self) -> usize {
        self.revisions.len()
    }

    pub fn alive_count(&self) -> usize {
        self.chain.len()
    }

    pub fn dead_count(&self) -> usize {
        self.nodes.len() - self.chain.len()
    }

    /// Author recorded for `revision`, or an empty string if unknown.
    pub fn author_of(&self, revision: usize) -> &str {
        revision.checked_sub(1).and_then(|k| self.revisions.get(k)).map_or("", |m| m.author.as_str())
    }

    pub fn latest_len(&self) -> usize {
        self.chain.iter().map(|&id| self.node(id).len()).sum()
    }

    /// Registers the metadata of the next revision. Deltas for it may be
    /// applied afterwards.
    pub fn begin_revision(&mut self, meta: RevisionMeta) {
        self.revisions.push(meta);
    }

    fn node_mut(&mut self, id: NodeId) -> &mut Node {
        &mut self.nodes[id.0 as usize]
    }

    fn push_node(&mut self, tokens: TokenSeq, birth_rev: usize, author: String) -> NodeId {
        let id = NodeId(u32::try_from(self.nodes.len()).expect("node count fits in u32"));
        self.nodes.push(Node { id, tokens, birth_rev, state: NodeState::Alive, author, attach: None });
        id
    }

    /// Makes `pos` a node boundary and returns the chain index of the node
    /// starting there (`chain.len()` at the end of the document).
    fn split_at(&mut self, pos: usize) -> usize {
        let mut acc = 0;
        for k in 0..self.chain.len() {
            if acc == pos {
                return k;
            }
            let id = self.chain[k];
            let len = self.node(id).len();
            if pos < acc + len {
                let right = self.split_node(id, pos - acc);
                self.chain.insert(k + 1, right);
                return k + 1;
            }
            acc += len;
        }
        self.chain.len()
    }

    /// Splits an alive node; the left half keeps `id`. Dead nodes hanging
    /// off the end of the original node move to the right half.
    fn split_node(&mut self, id: NodeId, offset: usize) -> NodeId {
        let node = self.node_mut(id);
        let mut tokens = std::mem::take(&mut node.tokens).into_vec();
        let right_tokens: TokenSeq = tokens.split_off(offset).into();
        node.tokens = tokens.into();
        let (birth, author) = (node.birth_rev, node.author.clone());
        let right = self.push_node(right_tokens, birth, author);
        for n in &mut self.nodes {
            if let Some(a) = &mut n.attach {
                if a.anchor == id && a.side == AttachSide::After {
                    a.anchor = right;
                }
            }
        }
        right
    }

    fn malformed(d: &Delta, reason: impl Into<String>) -> GraphError {
        GraphError::MalformedDelta {
            revision: d.revision,
            op: d.op,
            position: d.position,
            reason: reason.into(),
        }
    }

    /// Inserts the payload of an add delta at `d.position` of the current
    /// alive content, splitting the covering node when the position falls
    /// inside it.
    pub fn apply_addition(&mut self, d: &Delta) -> Result<NodeId, GraphError> {
        if d.op != EditOp::Add {
            return Err(Self::malformed(d, "expected an add"));
        }
        if d.payload.is_empty() {
            return Err(Self::malformed(d, "empty payload"));
        }
        let total = self.latest_len();
        if d.position > total {
            return Err(Self::malformed(d, format!("document has {total} tokens")));
        }
        let at = self.split_at(d.position);
        let author = self.author_of(d.revision).to_string();
        let id = self.push_node(d.payload.clone(), d.revision, author);
        self.chain.insert(at, id);
        Ok(id)
    }

    /// Marks the run `[d.position, d.position + len)` of the current alive
    /// content dead. Returns the nodes that died.
    pub fn apply_deletion(&mut self, d: &Delta) -> Result<Vec<NodeId>, GraphError> {
        if d.op != EditOp::Delete {
            return Err(Self::malformed(d, "expected a delete"));
        }
        if d.payload.is_empty() {
            return Err(Self::malformed(d, "empty payload"));
        }
        let total = self.latest_len();
        let end = d.position + d.payload.len();
        if end > total {
            return Err(Self::malformed(d, format!("span ends at {end}, document has {total} tokens")));
        }
        if !self.alive_slice_matches(d.position, &d.payload) {
            return Err(Self::malformed(d, "payload does not match document content"));
        }

        let start = self.split_at(d.position);
        let stop = self.split_at(end);
        let removed: Vec<NodeId> = self.chain.drain(start..stop).collect();
        let attach = if start > 0 {
            Some(Attachment { anchor: self.chain[start - 1], side: AttachSide::After })
        } else {
            self.chain.first().map(|&anchor| Attachment { anchor, side: AttachSide::Before })
        };
        for &id in &removed {
            let n = self.node_mut(id);
            n.state = NodeState::Dead { death_rev: d.revision };
            n.attach = attach;
        }
        Ok(removed)
    }

    fn alive_slice_matches(&self, pos: usize, payload: &[Token]) -> bool {
        self.chain
            .iter()
            .flat_map(|&id| self.node(id).tokens.iter())
            .skip(pos)
            .take(payload.len())
            .eq(payload.iter())
    }

    /// Applies one revision's script. Deltas run in descending reference
    /// position (delete before add at equal positions) so that positions
    /// still to be applied stay valid.
    pub fn apply_script(&mut self, script: &DeltaScript) -> Result<(), GraphError> {
        let mut order: Vec<&Delta> = script.deltas.iter().collect();
        order.sort_by(|a, b| b.position.cmp(&a.position).then_with(|| op_rank(a.op).cmp(&op_rank(b.op))));
        for d in order {
            match d.op {
                EditOp::Add => {
                    self.apply_addition(d)?;
                }
                EditOp::Delete => {
                    self.apply_deletion(d)?;
                }
            }
        }
        Ok(())
    }

    /// Concatenation of the alive chain: the latest revision's content.
    pub fn project_latest(&self) -> TokenSeq {
        self.chain.iter().flat_map(|&id| self.node(id).tokens.iter().cloned()).collect()
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        let mut in_chain = vec![false; self.nodes.len()];
        for &id in &self.chain {
            let n = self.nodes.get(id.0 as usize).ok_or(format!("{id} missing"))?;
            if !n.is_alive() {
                return Err(format!("{id} is in the chain but dead"));
            }
            if std::mem::replace(&mut in_chain[id.0 as usize], true) {
                return Err(format!("{id} appears twice in the chain"));
            }
        }
        for (k, n) in self.nodes.iter().enumerate() {
            if n.id.0 as usize != k {
                return Err(format!("node at slot {k} has id {}", n.id));
            }
            if n.tokens.is_empty() {
                return Err(format!("{} is empty", n.id));
            }
            let known = self.revisions.len();
            if n.birth_rev < 1 || (known > 0 && n.birth_rev > known) {
                return Err(format!("{} has birth revision {}", n.id, n.birth_rev));
            }
            match n.state {
                NodeState::Alive if !in_chain[k] => {
                    return Err(format!("{} is alive but not in the chain", n.id))
                }
                NodeState::Dead { death_rev } => {
                    if death_rev <= n.birth_rev || (known > 0 && death_rev > known) {
                        return Err(format!("{} died at {death_rev}, born at {}", n.id, n.birth_rev));
                    }
                    if let Some(a) = n.attach {
                        if a.anchor == n.id || a.anchor.0 as usize >= self.nodes.len() {
                            return Err(format!("{} has a bad anchor {}", n.id, a.anchor));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn op_rank(op: EditOp) -> u8 {
    match op {
        EditOp::Delete => 0,
        EditOp::Add => 1,
    }
}

fn check_indices(revisions: &[Revision]) -> Result<(), GraphError> {
    if revisions.is_empty() {
        return Err(GraphError::EmptyHistory);
    }
    for (k, r) in revisions.iter().enumerate() {
        if r.index != k + 1 {
            return Err(GraphError::NonConsecutive { expected: k + 1, found: r.index });
        }
    }
    Ok(())
}

/// Builds the graph for a whole history, diffing consecutive revisions in
/// parallel.
pub fn build(revisions: &[Revision]) -> Result<CrmGraph, GraphError> {
    build_with(revisions, &DiffOptions::default()).map(|(g, _)| g)
}

/// Like [`build`], also returning the per-revision scripts.
pub fn build_with(
    revisions: &[Revision],
    opts: &DiffOptions,
) -> Result<(CrmGraph, Vec<DeltaScript>), GraphError> {
    check_indices(revisions)?;
    let scripts = compute_scripts(revisions, opts);
    let g = build_from_scripts(revisions.iter().map(RevisionMeta::from), &scripts)?;
    Ok((g, scripts))
}

/// Folds precomputed scripts (one per revision, in order) into a new graph.
pub fn build_from_scripts(
    metas: impl IntoIterator<Item = RevisionMeta>,
    scripts: &[DeltaScript],
) -> Result<CrmGraph, GraphError> {
    let mut g = CrmGraph::new();
    let mut metas = metas.into_iter();
    for (k, script) in scripts.iter().enumerate() {
        if script.revision != k + 1 {
            return Err(GraphError::NonConsecutive { expected: k + 1, found: script.revision });
        }
        let meta = metas.next().unwrap_or_else(|| RevisionMeta {
            index: k + 1,
            author: String::new(),
            timestamp: DateTime::UNIX_EPOCH.fixed_offset(),
            comment: String::new(),
        });
        g.begin_revision(meta);
        g.apply_script(script)?;
    }
    Ok(g)
}

/// Content of revision `r`, replaying scripts `1..=r` from the empty
/// document.
pub fn reconstruct(scripts: &[DeltaScript], r: usize) -> Result<TokenSeq, GraphError> {
    if r < 1 || r > scripts.len() {
        return Err(GraphError::RevisionOutOfRange { requested: r, count: scripts.len() });
    }
    let mut doc = TokenSeq::new();
    for s in &scripts[..r] {
        doc = delta::apply_script(&doc, s)?;
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_words(s)
    }

    fn meta(index: usize, author: &str) -> RevisionMeta {
        RevisionMeta {
            index,
            author: author.into(),
            timestamp: DateTime::UNIX_EPOCH.fixed_offset(),
            comment: String::new(),
        }
    }

    fn chain_words(g: &CrmGraph) -> Vec<String> {
        g.chain().iter().map(|&id| g.node(id).tokens.join(Default::default())).collect()
    }

    fn rev2_state() -> CrmGraph {
        let mut g = CrmGraph::new();
        g.begin_revision(meta(1, "A"));
        g.apply_addition(&Delta::add(seq("1 2 3 4 5"), 0, 1)).unwrap();
        g.begin_revision(meta(2, "A"));
        g.apply_addition(&Delta::add(seq("6"), 3, 2)).unwrap();
        g
    }

    #[test]
    fn new_graph_is_empty() {
        let g = CrmGraph::new();
        assert!(g.nodes().is_empty());
        assert!(g.chain().is_empty());
        assert_eq!(g.revision_count(), 0);
        assert!(g.project_latest().is_empty());
    }

    #[test]
    fn first_revision_is_one_boundary_add() {
        let mut g = CrmGraph::new();
        g.begin_revision(meta(1, "A"));
        g.apply_addition(&Delta::add(seq("1 2 3 4 5"), 0, 1)).unwrap();
        assert_eq!(g.nodes().len(), 1);
        assert_eq!(chain_words(&g), ["1 2 3 4 5"]);
        assert_eq!(g.node(g.chain()[0]).author, "A");
    }

    #[test]
    fn addition_inside_a_node_splits_it() {
        let g = rev2_state();
        assert_eq!(chain_words(&g), ["1 2 3", "6", "4 5"]);
        let births: Vec<_> = g.chain().iter().map(|&id| g.node(id).birth_rev).collect();
        assert_eq!(births, [1, 2, 1]);
        g.validate().unwrap();
    }

    #[test]
    fn additions_at_boundaries_do_not_split() {
        let mut g = rev2_state();
        g.begin_revision(meta(3, "B"));
        g.apply_addition(&Delta::add(seq("9"), 6, 3)).unwrap();
        g.apply_addition(&Delta::add(seq("8"), 4, 3)).unwrap();
        g.apply_addition(&Delta::add(seq("0"), 0, 3)).unwrap();
        assert_eq!(chain_words(&g), ["0", "1 2 3", "6", "8", "4 5", "9"]);
        assert_eq!(g.nodes().len(), 6);
    }

    #[test]
    fn deletion_at_start_attaches_to_following() {
        let mut g = rev2_state();
        g.begin_revision(meta(3, "A"));
        let dead = g.apply_deletion(&Delta::delete(seq("1"), 0, 3)).unwrap();
        assert_eq!(chain_words(&g), ["2 3", "6", "4 5"]);
        let one = g.node(dead[0]);
        assert_eq!(one.tokens, seq("1"));
        assert_eq!(one.death_rev(), Some(3));
        let anchor = one.attach.unwrap();
        assert_eq!(g.node(anchor.anchor).tokens, seq("2 3"));
        assert_eq!(anchor.side, AttachSide::Before);
        g.validate().unwrap();
    }

    #[test]
    fn fixture_revision_four() {
        let mut g = rev2_state();
        g.begin_revision(meta(3, "A"));
        g.apply_deletion(&Delta::delete(seq("1"), 0, 3)).unwrap();
        g.begin_revision(meta(4, "A"));
        g.apply_script(&DeltaScript {
            revision: 4,
            deltas: vec![Delta::add(seq("7"), 1, 4), Delta::delete(seq("4"), 3, 4)],
        })
        .unwrap();
        assert_eq!(chain_words(&g), ["2", "7", "3", "6", "5"]);
        let dead: Vec<_> = g
            .nodes()
            .iter()
            .filter(|n| !n.is_alive())
            .map(|n| (n.tokens.join(Default::default()), n.death_rev().unwrap()))
            .collect();
        assert_eq!(dead, [("1".to_string(), 3), ("4".to_string(), 4)]);
        // {1} follows the left half of the split {2 3}.
        let one = g.nodes().iter().find(|n| n.tokens == seq("1")).unwrap();
        assert_eq!(g.node(one.attach.unwrap().anchor).tokens, seq("2"));
        let four = g.nodes().iter().find(|n| n.tokens == seq("4")).unwrap();
        assert_eq!(g.node(four.attach.unwrap().anchor).tokens, seq("6"));
        assert_eq!(g.project_latest(), seq("2 7 3 6 5"));
        g.validate().unwrap();
    }

    #[test]
    fn split_moves_trailing_attachments_to_right_half() {
        let mut g = CrmGraph::new();
        g.begin_revision(meta(1, "A"));
        g.apply_addition(&Delta::add(seq("a b c d"), 0, 1)).unwrap();
        g.begin_revision(meta(2, "A"));
        g.apply_deletion(&Delta::delete(seq("d"), 3, 2)).unwrap();
        g.begin_revision(meta(3, "A"));
        g.apply_addition(&Delta::add(seq("x"), 1, 3)).unwrap();
        let d = g.nodes().iter().find(|n| n.tokens == seq("d")).unwrap();
        assert_eq!(g.node(d.attach.unwrap().anchor).tokens, seq("b c"));
    }

    #[test]
    fn deletion_spanning_several_nodes() {
        let mut g = rev2_state();
        g.begin_revision(meta(3, "A"));
        let dead = g.apply_deletion(&Delta::delete(seq("3 6 4"), 2, 3)).unwrap();
        assert_eq!(dead.len(), 3);
        assert_eq!(chain_words(&g), ["1 2", "5"]);
        for id in dead {
            assert_eq!(g.node(g.node(id).attach.unwrap().anchor).tokens, seq("1 2"));
        }
        g.validate().unwrap();
    }

    #[test]
    fn total_deletion_empties_chain() {
        let mut g = CrmGraph::new();
        g.begin_revision(meta(1, "A"));
        g.apply_addition(&Delta::add(seq("a b"), 0, 1)).unwrap();
        g.begin_revision(meta(2, "A"));
        g.apply_deletion(&Delta::delete(seq("a b"), 0, 2)).unwrap();
        assert!(g.chain().is_empty());
        assert_eq!(g.nodes()[0].death_rev(), Some(2));
        assert_eq!(g.nodes()[0].attach, None);
        assert!(g.project_latest().is_empty());
    }

    #[test]
    fn malformed_deltas() {
        let mut g = rev2_state();
        assert!(matches!(
            g.apply_addition(&Delta::add(seq("x"), 7, 3)),
            Err(GraphError::MalformedDelta { .. })
        ));
        assert!(matches!(
            g.apply_deletion(&Delta::delete(seq("5 9"), 5, 3)),
            Err(GraphError::MalformedDelta { .. })
        ));
        assert!(matches!(
            g.apply_deletion(&Delta::delete(seq("2"), 0, 3)),
            Err(GraphError::MalformedDelta { .. })
        ));
        assert!(matches!(
            g.apply_addition(&Delta::delete(seq("1"), 0, 3)),
            Err(GraphError::MalformedDelta { .. })
        ));
        // Failed operations leave the graph untouched.
        assert_eq!(g, rev2_state());
    }

    fn fixture() -> Vec<Revision> {
        let ts = DateTime::UNIX_EPOCH.fixed_offset();
        ["1 2 3 4 5", "1 2 3 6 4 5", "2 3 6 4 5", "2 7 3 6 5"]
            .iter()
            .enumerate()
            .map(|(k, s)| Revision::new(k + 1, "A", ts, seq(s)))
            .collect()
    }

    #[test]
    fn build_fixture() {
        let (g, scripts) = build_with(&fixture(), &DiffOptions::default()).unwrap();
        assert_eq!(chain_words(&g), ["2", "7", "3", "6", "5"]);
        assert_eq!(g.alive_count(), 5);
        assert_eq!(g.dead_count(), 2);
        assert_eq!(g.revision_count(), 4);
        assert_eq!(reconstruct(&scripts, 1).unwrap(), seq("1 2 3 4 5"));
        assert_eq!(reconstruct(&scripts, 3).unwrap(), seq("2 3 6 4 5"));
        assert_eq!(reconstruct(&scripts, 4).unwrap(), g.project_latest());
        assert!(matches!(reconstruct(&scripts, 0), Err(GraphError::RevisionOutOfRange { .. })));
        assert!(matches!(reconstruct(&scripts, 5), Err(GraphError::RevisionOutOfRange { .. })));
    }

    #[test]
    fn build_single_and_repeated_revision() {
        let ts = DateTime::UNIX_EPOCH.fixed_offset();
        let one = vec![Revision::new(1, "A", ts, seq("p q r"))];
        let g1 = build(&one).unwrap();
        assert_eq!(g1.nodes().len(), 1);
        assert_eq!(g1.project_latest(), seq("p q r"));

        let two = vec![one[0].clone(), Revision::new(2, "A", ts, seq("p q r"))];
        let g2 = build(&two).unwrap();
        assert_eq!(g2.nodes(), g1.nodes());
        assert_eq!(g2.chain(), g1.chain());
        assert_eq!(g2.revision_count(), 2);
    }

    #[test]
    fn build_rejects_bad_histories() {
        assert_eq!(build(&[]), Err(GraphError::EmptyHistory));
        let ts = DateTime::UNIX_EPOCH.fixed_offset();
        let revs = vec![Revision::new(1, "A", ts, seq("a")), Revision::new(3, "A", ts, seq("b"))];
        assert_eq!(build(&revs), Err(GraphError::NonConsecutive { expected: 2, found: 3 }));
    }

    #[test]
    fn empty_script_is_a_no_op() {
        let mut g = rev2_state();
        let before = (g.nodes().to_vec(), g.chain().to_vec());
        g.apply_script(&DeltaScript::empty(3)).unwrap();
        assert_eq!((g.nodes().to_vec(), g.chain().to_vec()), before);
    }
}
