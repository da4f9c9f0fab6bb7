//! Deterministic SVG scatter plots of 2-D embeddings.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::corpus::{ClassLabel, FamilyDistribution};
use crate::error::{Error, Result};

/// Nine distinguishable colors, one per family (class 1..9); unlabeled
/// points are gray.
pub const PALETTE: [&str; 9] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324",
    "#808000",
];
const UNLABELED_COLOR: &str = "#a9a9a9";

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 640.0;
const MARGIN_LEFT: f64 = 40.0;
const MARGIN_TOP: f64 = 56.0;
const MARGIN_BOTTOM: f64 = 32.0;
const LEGEND_WIDTH: f64 = 170.0;
const POINT_RADIUS: f64 = 2.5;

pub fn class_color(class: ClassLabel) -> &'static str {
    if (1..=9).contains(&class) {
        PALETTE[(class - 1) as usize]
    } else {
        UNLABELED_COLOR
    }
}

/// Scatter-plot description: points with class labels (0 = unlabeled), a
/// palette keyed by class and a title carrying the configuration summary.
#[derive(Debug, Clone)]
pub struct ScatterPlot {
    pub points: Vec<(f64, f64, ClassLabel)>,
    pub title: String,
}

impl ScatterPlot {
    pub fn new(points: Vec<(f64, f64, ClassLabel)>, title: impl Into<String>) -> Self {
        ScatterPlot {
            points,
            title: title.into(),
        }
    }
}

/// Renders a standalone SVG document. Coordinates are scaled affinely into
/// the viewport preserving the aspect ratio; a single point (or any
/// zero-range axis) falls back to a unit viewport around the data.
pub fn render_svg(plot: &ScatterPlot) -> Result<String> {
    if plot.points.is_empty() {
        return Err(Error::InvalidInput("cannot plot an empty point set".into()));
    }

    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, _) in &plot.points {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    // Degenerate-range guard: unit viewport centered on the data.
    if max_x - min_x <= 0.0 {
        min_x -= 0.5;
        max_x += 0.5;
    }
    if max_y - min_y <= 0.0 {
        min_y -= 0.5;
        max_y += 0.5;
    }

    let plot_w = WIDTH - MARGIN_LEFT - LEGEND_WIDTH;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let scale = (plot_w / (max_x - min_x)).min(plot_h / (max_y - min_y));
    let cx = (min_x + max_x) / 2.0;
    let cy = (min_y + max_y) / 2.0;
    let to_px = |x: f64, y: f64| -> (f64, f64) {
        (
            MARGIN_LEFT + plot_w / 2.0 + (x - cx) * scale,
            MARGIN_TOP + plot_h / 2.0 - (y - cy) * scale,
        )
    };

    let classes: BTreeSet<ClassLabel> = plot.points.iter().map(|&(_, _, c)| c).collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        xml_escape(&plot.title)
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#cccccc\"/>"
    );

    for &(x, y, class) in &plot.points {
        let (px, py) = to_px(x, y);
        let _ = writeln!(
            svg,
            "<circle cx=\"{px:.3}\" cy=\"{py:.3}\" r=\"{POINT_RADIUS}\" fill=\"{}\" fill-opacity=\"0.75\"/>",
            class_color(class)
        );
    }

    // Legend: one entry per class present, sorted by class id.
    let legend_x = MARGIN_LEFT + plot_w + 16.0;
    let mut legend_y = MARGIN_TOP + 12.0;
    for class in classes {
        let label = if class == 0 {
            "unlabeled".to_string()
        } else {
            match FamilyDistribution::family_name(class) {
                Some(name) => format!("{class} {name}"),
                None => format!("class {class}"),
            }
        };
        let _ = writeln!(
            svg,
            "<circle cx=\"{legend_x:.1}\" cy=\"{legend_y:.1}\" r=\"5\" fill=\"{}\"/>",
            class_color(class)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            legend_x + 12.0,
            legend_y + 4.0,
            xml_escape(&label)
        );
        legend_y += 20.0;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_classes_give_nine_legend_entries_and_colors() {
        let points: Vec<(f64, f64, ClassLabel)> = (1..=9)
            .map(|c| (c as f64, -(c as f64), c as ClassLabel))
            .collect();
        let svg = render_svg(&ScatterPlot::new(points, "all classes")).unwrap();
        for color in PALETTE {
            assert!(svg.contains(color), "missing {color}");
        }
        assert_eq!(svg.matches("Ramnit").count(), 1);
        assert_eq!(svg.matches("Gatak").count(), 1);
        // 9 point circles + 9 legend circles.
        assert_eq!(svg.matches("<circle").count(), 18);
    }

    #[test]
    fn single_point_is_centered_with_unit_viewport() {
        let svg = render_svg(&ScatterPlot::new(vec![(3.0, 4.0, 1)], "one point")).unwrap();
        let plot_w = WIDTH - MARGIN_LEFT - LEGEND_WIDTH;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let expected = format!(
            "cx=\"{:.3}\" cy=\"{:.3}\"",
            MARGIN_LEFT + plot_w / 2.0,
            MARGIN_TOP + plot_h / 2.0
        );
        assert!(svg.contains(&expected), "{svg}");
    }

    #[test]
    fn rendering_is_byte_identical() {
        let points = vec![(0.0, 0.0, 1), (1.0, 2.0, 2), (-1.5, 0.25, 0)];
        let a = render_svg(&ScatterPlot::new(points.clone(), "t")).unwrap();
        let b = render_svg(&ScatterPlot::new(points, "t")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_point_set_rejected() {
        assert!(render_svg(&ScatterPlot::new(vec![], "empty")).is_err());
    }

    #[test]
    fn title_is_escaped() {
        let svg = render_svg(&ScatterPlot::new(vec![(0.0, 0.0, 1)], "a<b&c")).unwrap();
        assert!(svg.contains("a&lt;b&amp;c"));
    }
}
