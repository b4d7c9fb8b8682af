//! Report emission: canonical JSON, CSV tables, and SVG bar/line charts.
//!
//! JSON output is the contract surface: keys are sorted and every float is
//! rounded to 6 significant digits, so identical runs produce byte-identical
//! files. SVG is best-effort presentation and only structure-checked.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::dataset::csv_field;
use crate::error::{Error, Result};

/// Version string embedded in every emitted JSON document.
pub const FORMAT_VERSION: &str = "1";

/// Round to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exponent = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(5 - exponent);
    (x * factor).round() / factor
}

/// Fixed float formatting for CSV cells: shortest form of the
/// 6-significant-digit rounding.
pub fn fmt_sig6(x: f64) -> String {
    format!("{}", sig6(x))
}

fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let rounded = sig6(n.as_f64().unwrap());
                if let Some(num) = serde_json::Number::from_f64(rounded) {
                    *value = Value::Number(num);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Canonical JSON text: sorted keys, floats at 6 significant digits,
/// pretty-printed.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize to JSON");
    round_floats(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("canonical value prints");
    text.push('\n');
    text
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::WriteFailed {
                path: parent.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, text).map_err(|source| Error::WriteFailed {
        path: path.display().to_string(),
        source,
    })
}

/// One CSV row per record; fields are quoted only when needed.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// SVG charts
// ---------------------------------------------------------------------------

const BAR_POS: &str = "#4878a8";
const BAR_NEG: &str = "#b04a4a";
const MAX_BARS: usize = 30;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Horizontal bar chart of signed weights, sorted by |weight| descending
/// (top `MAX_BARS` entries). Negative bars extend left of the zero axis.
pub fn hbar_chart_svg(title: &str, entries: &[(String, f64)]) -> String {
    let mut sorted: Vec<&(String, f64)> = entries.iter().collect();
    sorted.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
    sorted.truncate(MAX_BARS);

    let label_w = 170.0;
    let plot_w = 420.0;
    let bar_h = 18.0;
    let row_h = 24.0;
    let top = 34.0;
    let height = top + sorted.len() as f64 * row_h + 14.0;
    let width = label_w + plot_w + 60.0;

    let lo = sorted.iter().map(|e| e.1).fold(0.0f64, f64::min);
    let hi = sorted.iter().map(|e| e.1).fold(0.0f64, f64::max);
    let range = (hi - lo).max(1e-12);
    let x_of = |v: f64| label_w + (v - lo) / range * plot_w;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{label_w}\" y=\"18\" font-size=\"14\">{}</text>\n",
        xml_escape(title)
    ));
    // zero axis
    svg.push_str(&format!(
        "  <line x1=\"{0:.2}\" y1=\"{top}\" x2=\"{0:.2}\" y2=\"{1:.2}\" stroke=\"#555\"/>\n",
        x_of(0.0),
        height - 10.0
    ));
    for (i, (name, value)) in sorted.iter().enumerate() {
        let y = top + i as f64 * row_h;
        let (x0, x1) = if *value >= 0.0 {
            (x_of(0.0), x_of(*value))
        } else {
            (x_of(*value), x_of(0.0))
        };
        let color = if *value >= 0.0 { BAR_POS } else { BAR_NEG };
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            label_w - 6.0,
            y + bar_h - 4.0,
            xml_escape(name)
        ));
        svg.push_str(&format!(
            "  <rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{bar_h}\" fill=\"{color}\"/>\n",
            (x1 - x0).max(0.5)
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            x1 + 4.0,
            y + bar_h - 4.0,
            fmt_sig6(*value)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Vertical bar chart of per-feature fold counts.
pub fn count_chart_svg(title: &str, entries: &[(String, usize)], max_count: usize) -> String {
    let mut sorted: Vec<&(String, usize)> = entries.iter().collect();
    sorted.sort_by_key(|e| std::cmp::Reverse(e.1));
    sorted.truncate(MAX_BARS);

    let bar_w = 26.0;
    let gap = 14.0;
    let plot_h = 160.0;
    let top = 34.0;
    let width = 60.0 + sorted.len() as f64 * (bar_w + gap) + 20.0;
    let height = top + plot_h + 70.0;
    let max = max_count.max(1) as f64;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"20\" y=\"18\" font-size=\"14\">{}</text>\n",
        xml_escape(title)
    ));
    svg.push_str(&format!(
        "  <line x1=\"50\" y1=\"{0:.2}\" x2=\"{1:.2}\" y2=\"{0:.2}\" stroke=\"#555\"/>\n",
        top + plot_h,
        width - 10.0
    ));
    for (i, (name, count)) in sorted.iter().enumerate() {
        let x = 60.0 + i as f64 * (bar_w + gap);
        let h = *count as f64 / max * plot_h;
        let y = top + plot_h - h;
        svg.push_str(&format!(
            "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_w}\" height=\"{h:.2}\" fill=\"{BAR_POS}\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{count}</text>\n",
            x + bar_w / 2.0,
            y - 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" \
             transform=\"rotate(-45 {:.2} {:.2})\">{}</text>\n",
            x + bar_w / 2.0,
            top + plot_h + 14.0,
            x + bar_w / 2.0,
            top + plot_h + 14.0,
            xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Line chart for a partial dependence curve.
pub fn line_chart_svg(title: &str, xs: &[f64], ys: &[f64]) -> String {
    let left = 60.0;
    let top = 34.0;
    let plot_w = 440.0;
    let plot_h = 200.0;
    let width = left + plot_w + 30.0;
    let height = top + plot_h + 46.0;

    let x_lo = xs.first().copied().unwrap_or(0.0);
    let x_hi = xs.last().copied().unwrap_or(1.0);
    let x_range = (x_hi - x_lo).max(1e-12);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{left}\" y=\"18\" font-size=\"14\">{}</text>\n",
        xml_escape(title)
    ));
    svg.push_str(&format!(
        "  <rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#555\"/>\n"
    ));
    let points: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let px = left + (x - x_lo) / x_range * plot_w;
            let py = top + (1.0 - y.clamp(0.0, 1.0)) * plot_h;
            format!("{px:.2},{py:.2}")
        })
        .collect();
    if points.len() == 1 {
        let xy: Vec<&str> = points[0].split(',').collect();
        svg.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{BAR_POS}\"/>\n",
            xy[0], xy[1]
        ));
    } else {
        svg.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{BAR_POS}\" stroke-width=\"2\"/>\n",
            points.join(" ")
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{left}\" y=\"{:.2}\">{}</text>\n",
        top + plot_h + 18.0,
        fmt_sig6(x_lo)
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
        left + plot_w,
        top + plot_h + 18.0,
        fmt_sig6(x_hi)
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Heatmap for a 2D partial dependence surface: one cell per grid pair,
/// interpolating purple (low) to green (high).
pub fn heatmap_svg(title: &str, grid1: &[f64], grid2: &[f64], means: &[Vec<f64>]) -> String {
    let left = 60.0;
    let top = 34.0;
    let cell = (360.0 / grid1.len().max(grid2.len()) as f64).clamp(3.0, 24.0);
    let width = left + grid1.len() as f64 * cell + 40.0;
    let height = top + grid2.len() as f64 * cell + 50.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{left}\" y=\"18\" font-size=\"14\">{}</text>\n",
        xml_escape(title)
    ));
    for (i, _) in grid1.iter().enumerate() {
        for (j, _) in grid2.iter().enumerate() {
            let v = means[i][j].clamp(0.0, 1.0);
            let r = (128.0 * (1.0 - v)) as u8 + 32;
            let g = (160.0 * v) as u8 + 40;
            let b = (160.0 * (1.0 - v)) as u8 + 40;
            let x = left + i as f64 * cell;
            // grid2 increases upward
            let y = top + (grid2.len() - 1 - j) as f64 * cell;
            svg.push_str(&format!(
                "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" \
                 fill=\"rgb({r},{g},{b})\"/>\n"
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}
