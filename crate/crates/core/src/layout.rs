//! Space-time layout: revisions are rows, latest-revision token positions
//! are columns.
//!
//! An alive node sits at its token range in the latest revision, on the row
//! of the revision that added it. A dead node sits on its birth row too,
//! directly to the right of the node it is attached to. Dead spans may
//! overlap each other and alive spans of the same row; the renderer stacks
//! them.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::document::SectionSpan;
use crate::graph::{CrmGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RectKind {
    Persistent,
    Deleted,
}

/// Half-open horizontal span `[x0, x1)` in tokens, on row `row`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutRect {
    pub node: NodeId,
    pub x0: usize,
    pub x1: usize,
    pub row: usize,
    pub kind: RectKind,
}

impl LayoutRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatScale {
    #[default]
    Linear,
    Log,
}

impl FromStr for HeatScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(HeatScale::Linear),
            "log" => Ok(HeatScale::Log),
            other => Err(format!("unknown heat scale `{other}` (expected linear or log)")),
        }
    }
}

/// Cumulative edit intensity along the document (top bar) and per revision
/// (right bar), each max-normalized to `[0, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChangeBars {
    pub column_heat: Vec<f64>,
    pub revision_heat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorBand {
    pub revision: usize,
    pub author: String,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionBand {
    #[serde(flatten)]
    pub span: SectionSpan,
    pub class: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayoutModel {
    pub rects: Vec<LayoutRect>,
    /// Consecutive alive nodes, in chain order.
    pub edges: Vec<(NodeId, NodeId)>,
    pub author_bands: Vec<AuthorBand>,
    pub section_bands: Vec<SectionBand>,
    pub bars: ChangeBars,
    pub compact: bool,
    /// Length of the latest revision in tokens.
    pub width: usize,
    pub revision_count: usize,
}

impl LayoutModel {
    /// Rightmost x over all rects; dead spans may reach past `width`.
    pub fn extent(&self) -> usize {
        self.rects.iter().map(|r| r.x1).max().unwrap_or(0).max(self.width)
    }

    pub fn rect_for(&self, node: NodeId) -> Option<&LayoutRect> {
        self.rects.iter().find(|r| r.node == node)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LayoutOptions {
    pub compact: bool,
    /// Top-bar bucket count; defaults to `min(latest length, 512)`.
    pub buckets: Option<usize>,
    pub heat: HeatScale,
}

pub fn default_buckets(latest_len: usize) -> usize {
    latest_len.min(512)
}

pub fn layout(g: &CrmGraph, sections: &[SectionSpan], compact: bool) -> LayoutModel {
    layout_with(g, sections, &LayoutOptions { compact, ..Default::default() })
}

pub fn layout_with(g: &CrmGraph, sections: &[SectionSpan], opts: &LayoutOptions) -> LayoutModel {
    if g.nodes().is_empty() && g.revision_count() == 0 {
        return LayoutModel { compact: opts.compact, ..Default::default() };
    }
    let rects = place_nodes(g);
    let width = g.latest_len();
    let buckets = opts.buckets.unwrap_or_else(|| default_buckets(width));
    let bars = bars_from_rects(g, &rects, width, buckets, opts.heat);

    let edges = g.chain().windows(2).map(|w| (w[0], w[1])).collect();
    let classes = assign_author_bands(g);
    let author_bands = g
        .revisions()
        .iter()
        .zip(classes)
        .map(|(m, class)| AuthorBand { revision: m.index, author: m.author.clone(), class })
        .collect();
    let section_bands =
        sections.iter().enumerate().map(|(k, s)| SectionBand { span: s.clone(), class: k }).collect();

    LayoutModel {
        rects,
        edges,
        author_bands,
        section_bands,
        bars,
        compact: opts.compact,
        width,
        revision_count: g.revision_count(),
    }
}

/// One rect per node: alive nodes first in chain order, then dead nodes by id.
fn place_nodes(g: &CrmGraph) -> Vec<LayoutRect> {
    let mut spans: Vec<Option<(usize, usize)>> = vec![None; g.nodes().len()];
    let mut rects = Vec::with_capacity(g.nodes().len());
    let mut x = 0;
    for &id in g.chain() {
        let n = g.node(id);
        let span = (x, x + n.len());
        spans[id.0 as usize] = Some(span);
        rects.push(LayoutRect {
            node: id,
            x0: span.0,
            x1: span.1,
            row: n.birth_rev,
            kind: RectKind::Persistent,
        });
        x = span.1;
    }

    for n in g.nodes().iter().filter(|n| !n.is_alive()) {
        let (x0, _) = resolve_dead(g, n.id, &mut spans);
        rects.push(LayoutRect {
            node: n.id,
            x0,
            x1: x0 + n.len(),
            row: n.birth_rev,
            kind: RectKind::Deleted,
        });
    }
    rects
}

/// Dead nodes start where their anchor ends. Anchors may themselves be dead,
/// so resolve along the attachment path; the path is acyclic because a node
/// only ever attaches to something still alive at that moment.
fn resolve_dead(g: &CrmGraph, id: NodeId, spans: &mut [Option<(usize, usize)>]) -> (usize, usize) {
    let mut path = vec![id];
    let mut base = 0;
    while let Some(&top) = path.last() {
        if let Some((_, x1)) = spans[top.0 as usize] {
            base = x1;
            path.pop();
            break;
        }
        match g.node(top).attach {
            Some(a) => path.push(a.anchor),
            None => {
                let len = g.node(top).len();
                spans[top.0 as usize] = Some((0, len));
                base = len;
                path.pop();
                break;
            }
        }
    }
    while let Some(n) = path.pop() {
        let span = (base, base + g.node(n).len());
        spans[n.0 as usize] = Some(span);
        base = span.1;
    }
    spans[id.0 as usize].expect("resolved above")
}

/// Top and right heat bars with linear normalization.
pub fn compute_change_bars(g: &CrmGraph, buckets: usize) -> ChangeBars {
    compute_change_bars_with(g, buckets, HeatScale::Linear)
}

pub fn compute_change_bars_with(g: &CrmGraph, buckets: usize, scale: HeatScale) -> ChangeBars {
    let rects = place_nodes(g);
    bars_from_rects(g, &rects, g.latest_len(), buckets, scale)
}

fn bars_from_rects(
    g: &CrmGraph,
    rects: &[LayoutRect],
    width: usize,
    buckets: usize,
    scale: HeatScale,
) -> ChangeBars {
    let buckets = buckets.max(1);
    let mut column = vec![0.0; buckets];
    if width > 0 {
        let bucket_w = width as f64 / buckets as f64;
        for r in rects {
            let (x0, x1) = (r.x0.min(width) as f64, r.x1.min(width) as f64);
            if x1 <= x0 {
                continue;
            }
            // Each edit event carries weight 1, spread over the tokens it
            // covers. Plain token weights would tile the axis uniformly.
            let per_token = 1.0 / (r.x1 - r.x0) as f64;
            let first = (x0 / bucket_w).floor() as usize;
            let last = ((x1 / bucket_w).ceil() as usize).min(buckets);
            for (b, heat) in column.iter_mut().enumerate().take(last).skip(first) {
                let lo = (b as f64 * bucket_w).max(x0);
                let hi = ((b + 1) as f64 * bucket_w).min(x1);
                if hi > lo {
                    *heat += (hi - lo) * per_token;
                }
            }
        }
    }

    let mut per_rev = vec![0.0; g.revision_count()];
    for n in g.nodes() {
        let tokens = n.len() as f64;
        if let Some(slot) = n.birth_rev.checked_sub(1).and_then(|k| per_rev.get_mut(k)) {
            *slot += tokens;
        }
        if let Some(slot) = n.death_rev().and_then(|d| d.checked_sub(1)).and_then(|k| per_rev.get_mut(k)) {
            *slot += tokens;
        }
    }

    ChangeBars { column_heat: normalize(column, scale), revision_heat: normalize(per_rev, scale) }
}

/// Max-normalizes `values`; all-zero input stays zero.
fn normalize(mut values: Vec<f64>, scale: HeatScale) -> Vec<f64> {
    if scale == HeatScale::Log {
        for v in &mut values {
            *v = v.ln_1p();
        }
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        for v in &mut values {
            *v /= max;
        }
    }
    values
}

/// Color class per revision row; authors are numbered in order of first
/// appearance.
pub fn assign_author_bands(g: &CrmGraph) -> Vec<usize> {
    let mut classes: HashMap<&str, usize> = HashMap::new();
    g.revisions()
        .iter()
        .map(|m| {
            let next = classes.len();
            *classes.entry(m.author.as_str()).or_insert(next)
        })
        .collect()
}
