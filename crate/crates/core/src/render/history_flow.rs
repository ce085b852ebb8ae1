//! The History Flow view derived from the cumulative graph: every row of the
//! map is accumulated into a full snapshot of its revision, with each token
//! colored by the author who introduced it.

use serde::{Deserialize, Serialize};

use crate::delta::{DeltaScript, EditOp};
use crate::graph::{CrmGraph, GraphError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HfSegment {
    pub author: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HfColumn {
    pub revision: usize,
    /// Top-to-bottom runs of same-author tokens.
    pub segments: Vec<HfSegment>,
}

impl HfColumn {
    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HfModel {
    pub columns: Vec<HfColumn>,
    /// Distinct authors in order of first appearance in the history.
    pub authors: Vec<String>,
}

impl HfModel {
    pub fn author_class(&self, author: &str) -> usize {
        self.authors.iter().position(|a| a == author).unwrap_or(0)
    }
}

/// Replays `scripts` while tracking, for each token, the revision that
/// introduced it; that is the birth revision of the graph node holding it.
pub fn to_history_flow(g: &CrmGraph, scripts: &[DeltaScript]) -> Result<HfModel, GraphError> {
    let mut authors: Vec<String> = Vec::new();
    for m in g.revisions() {
        if !authors.contains(&m.author) {
            authors.push(m.author.clone());
        }
    }

    let mut births: Vec<usize> = Vec::new();
    let mut columns = Vec::with_capacity(scripts.len());
    for script in scripts {
        births = replay_births(&births, script)?;
        let mut segments: Vec<HfSegment> = Vec::new();
        for &birth in &births {
            let author = g.author_of(birth);
            match segments.last_mut() {
                Some(seg) if seg.author == author => seg.len += 1,
                _ => segments.push(HfSegment { author: author.to_string(), len: 1 }),
            }
        }
        columns.push(HfColumn { revision: script.revision, segments });
    }
    Ok(HfModel { columns, authors })
}

/// Birth labels only; payload validation is done by the token-level replay.
fn replay_births(reference: &[usize], script: &DeltaScript) -> Result<Vec<usize>, GraphError> {
    let mut out = Vec::with_capacity(reference.len() + script.tokens_added());
    let mut cursor = 0;
    for d in &script.deltas {
        let end = d.position
            + match d.op {
                EditOp::Add => 0,
                EditOp::Delete => d.payload.len(),
            };
        if end > reference.len() {
            return Err(GraphError::MalformedDelta {
                revision: d.revision,
                op: d.op,
                position: d.position,
                reason: format!("document has {} tokens", reference.len()),
            });
        }
        if d.position > cursor {
            out.extend_from_slice(&reference[cursor..d.position]);
        }
        match d.op {
            EditOp::Add => {
                out.extend(std::iter::repeat_n(script.revision, d.payload.len()));
                cursor = cursor.max(d.position);
            }
            EditOp::Delete => cursor = end,
        }
    }
    out.extend_from_slice(&reference[cursor.min(reference.len())..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::{Revision, TokenSeq};
    use crate::graph::build_with;
    use chrono::DateTime;

    fn hf(revs: &[(&str, &str)]) -> (CrmGraph, HfModel) {
        let ts = DateTime::UNIX_EPOCH.fixed_offset();
        let revs: Vec<Revision> = revs
            .iter()
            .enumerate()
            .map(|(k, (a, t))| Revision::new(k + 1, *a, ts, TokenSeq::from_words(t)))
            .collect();
        let (g, scripts) = build_with(&revs, &Default::default()).unwrap();
        let h = to_history_flow(&g, &scripts).unwrap();
        (g, h)
    }

    #[test]
    fn fixture_single_author_collapses() {
        let (_, h) = hf(&[("A", "1 2 3 4 5"), ("A", "1 2 3 6 4 5"), ("A", "2 3 6 4 5"), ("A", "2 7 3 6 5")]);
        let lens: Vec<_> = h.columns.iter().map(HfColumn::len).collect();
        assert_eq!(lens, [5, 6, 5, 5]);
        assert_eq!(h.columns[3].segments, [HfSegment { author: "A".into(), len: 5 }]);
    }

    #[test]
    fn segments_follow_birth_authors() {
        let (g, h) = hf(&[("A", "a b c d"), ("B", "a b x y c d"), ("C", "a b x c d z")]);
        let col = |k: usize| -> Vec<(String, usize)> {
            h.columns[k].segments.iter().map(|s| (s.author.clone(), s.len)).collect()
        };
        assert_eq!(col(1), [("A".into(), 2), ("B".into(), 2), ("A".into(), 2)]);
        assert_eq!(col(2), [("A".into(), 2), ("B".into(), 1), ("A".into(), 2), ("C".into(), 1)]);
        assert_eq!(h.authors, ["A", "B", "C"]);

        // The last column agrees with the alive chain of the graph.
        let from_chain: Vec<String> = g
            .chain()
            .iter()
            .flat_map(|&id| std::iter::repeat_n(g.node(id).author.clone(), g.node(id).len()))
            .collect();
        let from_hf: Vec<String> =
            h.columns[2].segments.iter().flat_map(|s| std::iter::repeat_n(s.author.clone(), s.len)).collect();
        assert_eq!(from_chain, from_hf);
    }

    #[test]
    fn single_revision_single_segment() {
        let (_, h) = hf(&[("A", "a b c")]);
        assert_eq!(h.columns.len(), 1);
        assert_eq!(h.columns[0].segments.len(), 1);
    }
}
