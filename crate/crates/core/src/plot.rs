//! Probability-transition plots: how `P(f|c)` of each marker's flips moves
//! across the classes. Plain SVG written by hand.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use quick_xml::escape::escape;

use crate::abstraction::{FlipProbabilities, FlipSchema};
use crate::classify::{MarkerRank, RankReport};
use crate::error::{CactusError, Result};

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 44.0;
const MARGIN_R: f64 = 96.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 34.0;
const GRID_COLUMNS: usize = 4;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Title shown above a marker panel.
pub fn panel_title(marker: &MarkerRank) -> String {
    format!("{} (R\u{304} = {:.3})", marker.attribute, marker.rank)
}

fn panel(
    out: &mut String,
    marker: &MarkerRank,
    schema: &FlipSchema,
    probabilities: &FlipProbabilities,
    class_names: &[String],
    x0: f64,
    y0: f64,
) {
    let w = PANEL_W - MARGIN_L - MARGIN_R;
    let h = PANEL_H - MARGIN_T - MARGIN_B;
    let k = probabilities.n_classes();
    let px = |c: usize| {
        if k < 2 {
            MARGIN_L + w / 2.0
        } else {
            MARGIN_L + w * c as f64 / (k - 1) as f64
        }
    };
    let py = |p: f64| MARGIN_T + h * (1.0 - p);

    let _ = writeln!(out, r#"<g transform="translate({x0:.0},{y0:.0})">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" font-size="13" text-anchor="middle">{}</text>"#,
        PANEL_W / 2.0,
        escape(panel_title(marker).as_str())
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{w}" height="{h}" fill="none" stroke="#888"/>"##
    );
    for tick in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{tick:.1}</text>"#,
            MARGIN_L - 4.0,
            py(tick) + 3.0
        );
    }
    for (c, name) in class_names.iter().enumerate().take(k) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
            px(c),
            MARGIN_T + h + 14.0,
            escape(format!("{c}: {name}").as_str())
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">class</text>"#,
        MARGIN_L + w / 2.0,
        PANEL_H - 6.0
    );

    let Some(attr) = schema.attribute(&marker.attribute) else {
        let _ = writeln!(out, "</g>");
        return;
    };
    for (line, f) in attr.flips.clone().enumerate() {
        let colour = PALETTE[line % PALETTE.len()];
        let points: Vec<String> = (0..k)
            .map(|c| format!("{:.2},{:.2}", px(c), py(probabilities.get(c, f))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            points.join(" ")
        );
        for c in 0..k {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#,
                px(c),
                py(probabilities.get(c, f))
            );
        }
        let ly = MARGIN_T + 10.0 + 14.0 * line as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" font-size="10" fill="{colour}">{}</text>"#,
            MARGIN_L + w + 6.0,
            escape(schema.flips()[f].display_name.as_str())
        );
    }
    let _ = writeln!(out, "</g>");
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// SVG for one marker.
pub fn marker_svg(
    marker: &MarkerRank,
    schema: &FlipSchema,
    probabilities: &FlipProbabilities,
    class_names: &[String],
) -> String {
    let mut body = String::new();
    panel(&mut body, marker, schema, probabilities, class_names, 0.0, 0.0);
    document(PANEL_W, PANEL_H, &body)
}

/// All markers in one grid, in the report's (descending rank) order.
pub fn combined_svg(
    ranks: &RankReport,
    schema: &FlipSchema,
    probabilities: &FlipProbabilities,
    class_names: &[String],
) -> String {
    let n = ranks.markers.len();
    let cols = GRID_COLUMNS.min(n.max(1));
    let rows = n.div_ceil(cols).max(1);
    let mut body = String::new();
    for (i, m) in ranks.markers.iter().enumerate() {
        let x = (i % cols) as f64 * PANEL_W;
        let y = (i / cols) as f64 * PANEL_H;
        panel(&mut body, m, schema, probabilities, class_names, x, y);
    }
    document(cols as f64 * PANEL_W, rows as f64 * PANEL_H, &body)
}

/// Writes `marker_NN_<name>.svg` per marker (numbered by rank order) and
/// `all_markers.svg`.
pub fn plot_distributions(
    ranks: &RankReport,
    schema: &FlipSchema,
    probabilities: &FlipProbabilities,
    class_names: &[String],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CactusError::io(dir, e))?;
    let width = ranks.markers.len().to_string().len().max(2);
    let mut written = Vec::new();
    for (i, m) in ranks.markers.iter().enumerate() {
        let path = dir.join(format!("marker_{:0width$}_{}.svg", i + 1, file_stem(&m.attribute)));
        fs::write(&path, marker_svg(m, schema, probabilities, class_names)).map_err(|e| CactusError::io(&path, e))?;
        written.push(path);
    }
    let path = dir.join("all_markers.svg");
    fs::write(&path, combined_svg(ranks, schema, probabilities, class_names)).map_err(|e| CactusError::io(&path, e))?;
    written.push(path);
    Ok(written)
}
