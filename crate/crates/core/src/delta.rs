//! Minimal add/delete edit scripts between consecutive revisions.
//!
//! Alignment is a longest common subsequence over tokens. The common prefix
//! and common suffix are always matched first. The remaining middle is solved
//! with a suffix-length DP table and walked greedily from the front: equal
//! tokens are matched, and when skipping is required a proposal token is
//! skipped before a reference token if that does not lose length. This picks
//! the maximal alignment whose matched reference indices are lexicographically
//! smallest, i.e. it matches as early as possible in the reference.
//!
//! When the middle would need more than [`DiffOptions::max_dp_cells`] table
//! cells, the middle is aligned with Myers' linear-space divide-and-conquer
//! instead. That path is still exact (maximal), but its tie-break among equally
//! long alignments is Myers' rather than the greedy one above.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{Revision, Token, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Add,
    Delete,
}

/// One edit event: what happened, to which tokens, where, and when.
///
/// `position` is an index into the reference (pre-edit) revision. For an
/// add it is the insertion index `0..=len`; for a delete it is the start of
/// the removed run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delta {
    pub op: EditOp,
    pub payload: TokenSeq,
    pub position: usize,
    pub revision: usize,
}

impl Delta {
    pub fn add(payload: TokenSeq, position: usize, revision: usize) -> Self {
        Delta { op: EditOp::Add, payload, position, revision }
    }

    pub fn delete(payload: TokenSeq, position: usize, revision: usize) -> Self {
        Delta { op: EditOp::Delete, payload, position, revision }
    }

    /// Reference tokens consumed by this delta.
    fn reference_span(&self) -> usize {
        match self.op {
            EditOp::Add => 0,
            EditOp::Delete => self.payload.len(),
        }
    }
}

/// The edit script turning one revision into the next.
///
/// Deltas are ordered by ascending reference position, with a delete placed
/// before an add at the same position. A replacement therefore shows up as a
/// delete followed by an add at the start of the removed run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaScript {
    pub revision: usize,
    pub deltas: Vec<Delta>,
}

impl DeltaScript {
    pub fn empty(revision: usize) -> Self {
        DeltaScript { revision, deltas: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn tokens_added(&self) -> usize {
        self.deltas.iter().filter(|d| d.op == EditOp::Add).map(|d| d.payload.len()).sum()
    }

    pub fn tokens_deleted(&self) -> usize {
        self.deltas.iter().filter(|d| d.op == EditOp::Delete).map(|d| d.payload.len()).sum()
    }

    /// Total number of tokens touched by the script.
    pub fn edit_size(&self) -> usize {
        self.deltas.iter().map(|d| d.payload.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeltaError {
    #[error(
        "revision {revision}: {op:?} at position {position} is out of range for a reference of {len} tokens"
    )]
    OutOfRange { revision: usize, op: EditOp, position: usize, len: usize },
    #[error("revision {revision}: deleted payload does not match the reference at position {position}")]
    PayloadMismatch { revision: usize, position: usize },
    #[error("revision {revision}: delta at position {position} has an empty payload")]
    EmptyPayload { revision: usize, position: usize },
    #[error("revision {revision}: delta at position {position} overlaps or precedes the previous delta")]
    Unordered { revision: usize, position: usize },
    #[error("delta for revision {found} inside the script for revision {expected}")]
    RevisionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffOptions {
    /// Largest DP table (in cells) used for the greedy alignment before
    /// switching to the linear-space pass.
    pub max_dp_cells: usize,
}

impl Default for DiffOptions {
    fn default() -> Self {
        DiffOptions { max_dp_cells: 1_000_000 }
    }
}

/// Matched `(index in a, index in b)` pairs of a longest common subsequence,
/// strictly increasing in both coordinates.
pub fn lcs_align(a: &[Token], b: &[Token]) -> Vec<(usize, usize)> {
    lcs_align_with(a, b, &DiffOptions::default())
}

pub fn lcs_align_with(a: &[Token], b: &[Token], opts: &DiffOptions) -> Vec<(usize, usize)> {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..].iter().rev().zip(b[prefix..].iter().rev()).take_while(|(x, y)| x == y).count();
    let (mid_a, mid_b) = (&a[prefix..a.len() - suffix], &b[prefix..b.len() - suffix]);

    let mut pairs: Vec<(usize, usize)> = (0..prefix).map(|i| (i, i)).collect();
    if !mid_a.is_empty() && !mid_b.is_empty() {
        let cells = (mid_a.len() + 1).saturating_mul(mid_b.len() + 1);
        if cells <= opts.max_dp_cells {
            greedy_dp(mid_a, mid_b, prefix, prefix, &mut pairs);
        } else {
            Myers::new(mid_a.len(), mid_b.len()).align(mid_a, mid_b, prefix, prefix, &mut pairs);
        }
    }
    let (tail_a, tail_b) = (a.len() - suffix, b.len() - suffix);
    pairs.extend((0..suffix).map(|k| (tail_a + k, tail_b + k)));
    pairs
}

/// Suffix LCS table walked from the front.
fn greedy_dp(a: &[Token], b: &[Token], a0: usize, b0: usize, out: &mut Vec<(usize, usize)>) {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    // lcs[i * w + j] = LCS(a[i..], b[j..])
    let mut lcs = vec![0u32; (n + 1) * w];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i * w + j] = if a[i] == b[j] {
                lcs[(i + 1) * w + j + 1] + 1
            } else {
                lcs[(i + 1) * w + j].max(lcs[i * w + j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            out.push((a0 + i, b0 + j));
            i += 1;
            j += 1;
        } else if lcs[i * w + j + 1] >= lcs[(i + 1) * w + j] {
            j += 1;
        } else {
            i += 1;
        }
    }
}

/// Linear-space Myers alignment (middle-snake recursion).
struct Myers {
    forward: Vec<isize>,
    backward: Vec<isize>,
    offset: isize,
}

impl Myers {
    fn new(n: usize, m: usize) -> Self {
        let max = (n + m).div_ceil(2) + 1;
        Myers { forward: vec![0; 2 * max + 1], backward: vec![0; 2 * max + 1], offset: max as isize }
    }

    fn align(&mut self, a: &[Token], b: &[Token], a0: usize, b0: usize, out: &mut Vec<(usize, usize)>) {
        let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
        out.extend((0..prefix).map(|k| (a0 + k, b0 + k)));
        let (a, b) = (&a[prefix..], &b[prefix..]);
        let (a0, b0) = (a0 + prefix, b0 + prefix);
        let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
        let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);

        if !a.is_empty() && !b.is_empty() {
            let (x0, y0, x1, y1) = self.middle_snake(a, b);
            self.align(&a[..x0], &b[..y0], a0, b0, out);
            out.extend((0..x1 - x0).map(|k| (a0 + x0 + k, b0 + y0 + k)));
            self.align(&a[x1..], &b[y1..], a0 + x1, b0 + y1, out);
        }

        let (ta, tb) = (a0 + a.len(), b0 + b.len());
        out.extend((0..suffix).map(|k| (ta + k, tb + k)));
    }

    /// Returns the snake `(x0, y0) -> (x1, y1)` lying on some shortest edit
    /// path through the middle of the edit graph.
    fn middle_snake(&mut self, a: &[Token], b: &[Token]) -> (usize, usize, usize, usize) {
        let (n, m) = (a.len() as isize, b.len() as isize);
        let delta = n - m;
        let odd = delta & 1 == 1;
        let max = (n + m + 1) / 2;
        let off = self.offset;
        self.forward[(off + 1) as usize] = 0;
        self.backward[(off + 1) as usize] = 0;

        for d in 0..=max {
            let mut k = -d;
            while k <= d {
                let fw = &mut self.forward;
                let mut x = if k == -d || (k != d && fw[(off + k - 1) as usize] < fw[(off + k + 1) as usize])
                {
                    fw[(off + k + 1) as usize]
                } else {
                    fw[(off + k - 1) as usize] + 1
                };
                let mut y = x - k;
                let (sx, sy) = (x, y);
                while x < n && y < m && a[x as usize] == b[y as usize] {
                    x += 1;
                    y += 1;
                }
                fw[(off + k) as usize] = x;
                let kb = delta - k;
                if odd && kb >= -(d - 1) && kb < d && x + self.backward[(off + kb) as usize] >= n {
                    return (sx as usize, sy as usize, x as usize, y as usize);
                }
                k += 2;
            }

            let mut k = -d;
            while k <= d {
                let bw = &mut self.backward;
                let mut x = if k == -d || (k != d && bw[(off + k - 1) as usize] < bw[(off + k + 1) as usize])
                {
                    bw[(off + k + 1) as usize]
                } else {
                    bw[(off + k - 1) as usize] + 1
                };
                let mut y = x - k;
                let (sx, sy) = (x, y);
                while x < n && y < m && a[(n - x - 1) as usize] == b[(m - y - 1) as usize] {
                    x += 1;
                    y += 1;
                }
                bw[(off + k) as usize] = x;
                let kf = delta - k;
                if !odd && kf >= -d && kf <= d && x + self.forward[(off + kf) as usize] >= n {
                    return ((n - x) as usize, (m - y) as usize, (n - sx) as usize, (m - sy) as usize);
                }
                k += 2;
            }
        }
        unreachable!("an edit path always exists")
    }
}

/// Edit script turning `reference` into `proposal`.
pub fn compute_delta(reference: &TokenSeq, proposal: &TokenSeq, revision: usize) -> DeltaScript {
    compute_delta_with(reference, proposal, revision, &DiffOptions::default())
}

pub fn compute_delta_with(
    reference: &TokenSeq,
    proposal: &TokenSeq,
    revision: usize,
    opts: &DiffOptions,
) -> DeltaScript {
    let pairs = lcs_align_with(reference, proposal, opts);
    let mut deltas = Vec::new();
    let (mut i, mut j) = (0, 0);
    let ends = [(reference.len(), proposal.len())];
    for &(mi, mj) in pairs.iter().chain(ends.iter()) {
        if mi > i {
            deltas.push(Delta::delete(reference[i..mi].into(), i, revision));
        }
        if mj > j {
            deltas.push(Delta::add(proposal[j..mj].into(), i, revision));
        }
        i = mi + 1;
        j = mj + 1;
    }
    DeltaScript { revision, deltas }
}

/// Applies `script` to `reference`, validating every delta against it.
pub fn apply_script(reference: &TokenSeq, script: &DeltaScript) -> Result<TokenSeq, DeltaError> {
    let len = reference.len();
    let mut out = Vec::with_capacity(len + script.tokens_added());
    let mut cursor = 0;
    let mut last: Option<(usize, EditOp)> = None;
    for d in &script.deltas {
        let revision = script.revision;
        if d.revision != script.revision {
            return Err(DeltaError::RevisionMismatch { expected: script.revision, found: d.revision });
        }
        if d.payload.is_empty() {
            return Err(DeltaError::EmptyPayload { revision, position: d.position });
        }
        if d.position > len || d.position + d.reference_span() > len {
            return Err(DeltaError::OutOfRange { revision, op: d.op, position: d.position, len });
        }
        // An add may share the start position of the delete right before it
        // (a replacement); otherwise deltas must not overlap or go backwards.
        let ordered = match last {
            None => true,
            Some((p, EditOp::Delete)) => d.position >= cursor || (d.op == EditOp::Add && d.position == p),
            Some((p, EditOp::Add)) => d.position > p,
        };
        if !ordered {
            return Err(DeltaError::Unordered { revision, position: d.position });
        }
        if d.position > cursor {
            out.extend_from_slice(&reference[cursor..d.position]);
        }
        match d.op {
            EditOp::Add => {
                out.extend_from_slice(&d.payload);
                cursor = cursor.max(d.position);
            }
            EditOp::Delete => {
                let end = d.position + d.payload.len();
                if reference[d.position..end] != d.payload[..] {
                    return Err(DeltaError::PayloadMismatch { revision, position: d.position });
                }
                cursor = end;
            }
        }
        last = Some((d.position, d.op));
    }
    out.extend_from_slice(&reference[cursor..]);
    Ok(out.into())
}

/// Scripts for every revision against its predecessor (revision 1 against
/// the empty document). Pairs are diffed in parallel; the result is in
/// revision order.
pub fn compute_scripts(revisions: &[Revision], opts: &DiffOptions) -> Vec<DeltaScript> {
    let empty = TokenSeq::new();
    (0..revisions.len())
        .into_par_iter()
        .map(|k| {
            let reference = if k == 0 { &empty } else { &revisions[k - 1].content };
            compute_delta_with(reference, &revisions[k].content, revisions[k].index, opts)
        })
        .collect()
}
