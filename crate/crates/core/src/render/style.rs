use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StyleError {
    #[error("{0} palette is empty")]
    EmptyPalette(&'static str),
    #[error("{0} scale must be positive")]
    NonPositiveScale(&'static str),
    #[error("unknown heat colormap `{0}`")]
    UnknownColormap(String),
}

/// Colors and pixel scales for the static figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleConfig {
    pub persistent_color: String,
    pub deleted_color: String,
    pub author_palette: Vec<String>,
    pub section_palette: Vec<String>,
    pub heat_colormap: String,
    /// Pixels per token.
    pub x_scale: f64,
    /// Pixels per revision row.
    pub y_scale: f64,
}

impl Default for StyleConfig {
    fn default() -> Self {
        StyleConfig {
            persistent_color: "#d9d9d9".into(),
            deleted_color: "#cc8080".into(),
            // ColorBrewer Pastel1
            author_palette: [
                "#fbb4ae", "#b3cde3", "#ccebc5", "#decbe4", "#fed9a6", "#ffffcc", "#e5d8bd", "#fddaec",
            ]
            .map(String::from)
            .to_vec(),
            section_palette: ["#f4f4f4", "#e3eaf3"].map(String::from).to_vec(),
            heat_colormap: "heat".into(),
            x_scale: 4.0,
            y_scale: 24.0,
        }
    }
}

impl StyleConfig {
    pub fn validate(&self) -> Result<(), StyleError> {
        if self.author_palette.is_empty() {
            return Err(StyleError::EmptyPalette("author"));
        }
        if self.section_palette.is_empty() {
            return Err(StyleError::EmptyPalette("section"));
        }
        if self.x_scale.is_nan() || self.x_scale <= 0.0 {
            return Err(StyleError::NonPositiveScale("x"));
        }
        if self.y_scale.is_nan() || self.y_scale <= 0.0 {
            return Err(StyleError::NonPositiveScale("y"));
        }
        colormap_stops(&self.heat_colormap)
            .map(|_| ())
            .ok_or_else(|| StyleError::UnknownColormap(self.heat_colormap.clone()))
    }

    pub fn author_color(&self, class: usize) -> &str {
        &self.author_palette[class % self.author_palette.len()]
    }

    pub fn section_color(&self, class: usize) -> &str {
        &self.section_palette[class % self.section_palette.len()]
    }

    /// Maps `t` in `[0, 1]` through the configured colormap; brighter is
    /// hotter.
    pub fn heat_color(&self, t: f64) -> String {
        let stops = colormap_stops(&self.heat_colormap).unwrap_or(HEAT);
        interpolate(stops, t)
    }
}

type Stop = (f64, [u8; 3]);

const HEAT: &[Stop] = &[
    (0.0, [0x10, 0x08, 0x30]),
    (0.35, [0x90, 0x14, 0x3c]),
    (0.7, [0xf0, 0x78, 0x20]),
    (1.0, [0xff, 0xf8, 0xb0]),
];

const GRAY: &[Stop] = &[(0.0, [0x20, 0x20, 0x20]), (1.0, [0xf8, 0xf8, 0xf8])];

const VIRIDIS: &[Stop] = &[
    (0.0, [0x44, 0x01, 0x54]),
    (0.25, [0x3b, 0x52, 0x8b]),
    (0.5, [0x21, 0x91, 0x8c]),
    (0.75, [0x5e, 0xc9, 0x62]),
    (1.0, [0xfd, 0xe7, 0x25]),
];

fn colormap_stops(name: &str) -> Option<&'static [Stop]> {
    match name {
        "heat" => Some(HEAT),
        "gray" | "grey" => Some(GRAY),
        "viridis" => Some(VIRIDIS),
        _ => None,
    }
}

fn interpolate(stops: &[Stop], t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let k = stops.iter().rposition(|&(at, _)| at <= t).unwrap_or(0);
    let (t0, c0) = stops[k];
    let (t1, c1) = stops.get(k + 1).copied().unwrap_or(stops[k]);
    let f = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2]))
}
