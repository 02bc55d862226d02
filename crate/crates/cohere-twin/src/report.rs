//! Minimal deterministic SVG rendering for visibility sweeps: measured
//! points as circles, fitted model as a polyline. No plotting crate; the
//! output must be byte-stable across runs for a given input.

use crate::analysis::VisibilityPoint;
use crate::error::AnalysisError;
use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

struct Axis {
    min: f64,
    max: f64,
}

impl Axis {
    fn from_values(values: impl Iterator<Item = f64>) -> Axis {
        let mut min = f64::MAX;
        let mut max = f64::MIN;
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if min == max {
            // degenerate span: pad symmetrically
            min -= 0.5;
            max += 0.5;
        }
        let pad = 0.05 * (max - min);
        Axis {
            min: min - pad,
            max: max + pad,
        }
    }

    fn ticks(&self) -> Vec<f64> {
        // round tick spacing to 1/2/5 * 10^k, aiming for ~6 ticks
        let raw = (self.max - self.min) / 6.0;
        let mag = 10f64.powf(raw.abs().log10().floor());
        let norm = raw / mag;
        let step = if norm < 1.5 {
            mag
        } else if norm < 3.5 {
            2.0 * mag
        } else if norm < 7.5 {
            5.0 * mag
        } else {
            10.0 * mag
        };
        let first = (self.min / step).ceil() as i64;
        let last = (self.max / step).floor() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    }
}

fn x_pix(axis: &Axis, v: f64) -> f64 {
    MARGIN_L + (v - axis.min) / (axis.max - axis.min) * (WIDTH - MARGIN_L - MARGIN_R)
}

fn y_pix(axis: &Axis, v: f64) -> f64 {
    HEIGHT - MARGIN_B - (v - axis.min) / (axis.max - axis.min) * (HEIGHT - MARGIN_T - MARGIN_B)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e-3 && v.abs() < 1e4 {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Render a visibility sweep (and an optional fitted model curve sampled
/// on a fine grid of the same coordinate) as a standalone SVG document.
pub fn render_visibility_svg(
    points: &[VisibilityPoint],
    model_curve: Option<&[(f64, f64)]>,
    x_label: &str,
    title: &str,
) -> Result<String, AnalysisError> {
    if points.is_empty() {
        return Err(AnalysisError::DegenerateData(
            "refusing to render an empty sweep".into(),
        ));
    }
    let xs = points
        .iter()
        .map(|p| p.x)
        .chain(model_curve.into_iter().flatten().map(|&(x, _)| x));
    let ys = points
        .iter()
        .map(|p| p.visibility)
        .chain(model_curve.into_iter().flatten().map(|&(_, y)| y))
        .chain([0.0]);
    let x_axis = Axis::from_values(xs);
    let y_axis = Axis::from_values(ys);

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    write!(
        svg,
        "<text x=\"{:.1}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        title
    )
    .unwrap();

    // frame
    write!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.1}\" height=\"{:.1}\" \
         fill=\"none\" stroke=\"black\"/>\n",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    )
    .unwrap();

    for t in x_axis.ticks() {
        let px = x_pix(&x_axis, t);
        write!(
            svg,
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0,
            HEIGHT - MARGIN_B + 20.0,
            fmt_tick(t)
        )
        .unwrap();
    }
    for t in y_axis.ticks() {
        let py = y_pix(&y_axis, t);
        write!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{MARGIN_L}\" y2=\"{py:.1}\" stroke=\"black\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 5.0,
            MARGIN_L - 9.0,
            py + 4.0,
            fmt_tick(t)
        )
        .unwrap();
    }
    write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        x_label
    )
    .unwrap();
    write!(
        svg,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.1})\">visibility</text>\n",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0
    )
    .unwrap();

    if let Some(curve) = model_curve {
        if !curve.is_empty() {
            svg.push_str("<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"");
            for &(x, y) in curve {
                write!(svg, "{:.1},{:.1} ", x_pix(&x_axis, x), y_pix(&y_axis, y)).unwrap();
            }
            svg.pop();
            svg.push_str("\"/>\n");
        }
    }
    for p in points {
        // one-sigma error bar when the point carries one
        if p.uncertainty > 0.0 {
            write!(
                svg,
                "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"#2c3e50\"/>\n",
                x_pix(&x_axis, p.x),
                y_pix(&y_axis, p.visibility - p.uncertainty),
                y_pix(&y_axis, p.visibility + p.uncertainty)
            )
            .unwrap();
        }
        write!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{}\"/>\n",
            x_pix(&x_axis, p.x),
            y_pix(&y_axis, p.visibility),
            if p.over_unity { "#e67e22" } else { "#2c3e50" }
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
