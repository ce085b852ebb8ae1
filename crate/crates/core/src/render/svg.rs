//! Static SVG output. Everything is written in a fixed order with fixed
//! number formatting so identical inputs give identical bytes.

use std::fmt::Write;

use crate::layout::{LayoutModel, RectKind};

use super::history_flow::HfModel;
use super::style::StyleConfig;

const MARGIN: f64 = 10.0;
const BAR: f64 = 12.0;
const GAP: f64 = 6.0;
const ROW_PAD: f64 = 0.15;

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // Characters not allowed in XML 1.0.
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => out.push('\u{fffd}'),
            c => out.push(c),
        }
    }
    out
}

/// Fixed two-decimal formatting with trailing zeros trimmed.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn header(out: &mut String, width: f64, height: f64) {
    let (w, h) = (num(width), num(height));
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="0" y="0" width="{w}" height="{h}" fill="#ffffff" stroke="#000000" stroke-width="1"/>"##
    );
}

/// Renders the cumulative revision map.
///
/// Z-order: author bands, section bands, chain connectors, node rects, top
/// heat bar, right heat bar.
pub fn render_svg(m: &LayoutModel, s: &StyleConfig) -> String {
    let (xs, ys) = (s.x_scale, s.y_scale);
    let plot_w = m.extent() as f64 * xs;
    let plot_h = m.revision_count as f64 * ys;
    let left = MARGIN;
    let top = MARGIN + BAR + GAP;
    let width = left + plot_w + GAP + BAR + MARGIN;
    let height = top + plot_h + MARGIN;

    let mut out = String::new();
    header(&mut out, width, height);
    if m.revision_count == 0 {
        out.push_str("</svg>\n");
        return out;
    }

    let row_y = |row: usize| top + (row.saturating_sub(1)) as f64 * ys;

    out.push_str("<g class=\"author-bands\">\n");
    for band in &m.author_bands {
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"><title>revision {}: {}</title></rect>"#,
            num(left),
            num(row_y(band.revision)),
            num(plot_w),
            num(ys),
            s.author_color(band.class),
            band.revision,
            escape(&band.author)
        );
    }
    out.push_str("</g>\n<g class=\"section-bands\" fill-opacity=\"0.6\">\n");
    for band in &m.section_bands {
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"><title>{}</title></rect>"#,
            num(left + band.span.start as f64 * xs),
            num(top),
            num((band.span.end - band.span.start) as f64 * xs),
            num(plot_h),
            s.section_color(band.class),
            escape(&band.span.title)
        );
    }

    out.push_str("</g>\n<g class=\"edges\" stroke=\"#404040\" stroke-width=\"1\" fill=\"none\">\n");
    for &(a, b) in &m.edges {
        let (Some(ra), Some(rb)) = (m.rect_for(a), m.rect_for(b)) else { continue };
        let ya = row_y(ra.row) + ys / 2.0;
        let yb = row_y(rb.row) + ys / 2.0;
        if m.compact {
            let x = left + ra.x1 as f64 * xs;
            let _ = writeln!(out, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#, num(x), num(ya), num(yb));
        } else {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                num(left + (ra.x1 as f64 - 0.5) * xs),
                num(ya),
                num(left + (rb.x0 as f64 + 0.5) * xs),
                num(yb)
            );
        }
    }

    out.push_str("</g>\n<g class=\"nodes\" stroke=\"#000000\" stroke-width=\"0.5\">\n");
    // Persistent rects first so deleted spans stack on top of them.
    for kind in [RectKind::Persistent, RectKind::Deleted] {
        let (class, fill) = match kind {
            RectKind::Persistent => ("persistent", &s.persistent_color),
            RectKind::Deleted => ("deleted", &s.deleted_color),
        };
        for r in m.rects.iter().filter(|r| r.kind == kind) {
            let _ = writeln!(
                out,
                r#"<rect class="{class}" data-node="{}" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                r.node.0,
                num(left + r.x0 as f64 * xs),
                num(row_y(r.row) + ys * ROW_PAD),
                num(r.width() as f64 * xs),
                num(ys * (1.0 - 2.0 * ROW_PAD)),
            );
        }
    }
    out.push_str("</g>\n");

    if !m.bars.column_heat.is_empty() && m.width > 0 {
        out.push_str("<g class=\"column-heat\">\n");
        let bw = m.width as f64 * xs / m.bars.column_heat.len() as f64;
        for (b, &h) in m.bars.column_heat.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                num(left + b as f64 * bw),
                num(MARGIN),
                num(bw),
                num(BAR),
                s.heat_color(h)
            );
        }
        out.push_str("</g>\n");
    }
    if !m.bars.revision_heat.is_empty() {
        out.push_str("<g class=\"revision-heat\">\n");
        let x = left + plot_w + GAP;
        for (k, &h) in m.bars.revision_heat.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                num(x),
                num(row_y(k + 1)),
                num(BAR),
                num(ys),
                s.heat_color(h)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Renders a History Flow figure: one column per revision, stacked
/// author-colored segments, column height proportional to document length.
pub fn render_history_flow_svg(h: &HfModel, s: &StyleConfig) -> String {
    let col_w = s.y_scale;
    let pitch = col_w * 1.5;
    let tall = h.columns.iter().map(|c| c.len()).max().unwrap_or(0) as f64 * s.x_scale;
    let width = 2.0 * MARGIN + h.columns.len() as f64 * pitch;
    let height = 2.0 * MARGIN + tall;

    let mut out = String::new();
    header(&mut out, width, height);
    out.push_str("<g class=\"columns\" stroke=\"#000000\" stroke-width=\"0.5\">\n");
    for (k, col) in h.columns.iter().enumerate() {
        let x = MARGIN + k as f64 * pitch;
        let _ = writeln!(
            out,
            r#"<g class="column" data-revision="{}" data-length="{}">"#,
            col.revision,
            col.len()
        );
        let mut y = MARGIN;
        for seg in &col.segments {
            let seg_h = seg.len as f64 * s.x_scale;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"><title>{}</title></rect>"#,
                num(x),
                num(y),
                num(col_w),
                num(seg_h),
                s.author_color(h.author_class(&seg.author)),
                escape(&seg.author)
            );
            y += seg_h;
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_trimmed() {
        assert_eq!(num(3.0), "3");
        assert_eq!(num(3.5), "3.5");
        assert_eq!(num(0.126), "0.13");
        assert_eq!(num(-0.0001), "0");
    }

    #[test]
    fn escaping() {
        assert_eq!(escape(r#"a<b & "c" 'd'>"#), "a&lt;b &amp; &quot;c&quot; &apos;d&apos;&gt;");
        assert_eq!(escape("x\u{1}y"), "x\u{fffd}y");
    }

    #[test]
    fn empty_model_has_only_frame() {
        let svg = render_svg(&LayoutModel::default(), &StyleConfig::default());
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(svg.contains("class=\"frame\""));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
