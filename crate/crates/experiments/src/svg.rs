//! Dependency-free SVG line charts.
//!
//! Charts are a convenience view; the CSV tables remain the authoritative
//! output. One chart is one panel; [`render`] lays panels side by side in
//! a single SVG document.

use mazesim_core::{Result, SimError};

use crate::table::Table;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 58.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 44.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Plot y on a log10 axis; nonpositive values clamp to the smallest
    /// positive datum.
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Chart {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn with_series(mut self, label: &str, points: Vec<(f64, f64)>) -> Chart {
        self.series.push(Series { label: label.into(), points });
        self
    }
}

/// One chart per y column, x against each named y.
pub fn chart_from_table(
    table: &Table,
    x: &str,
    ys: &[&str],
    title: &str,
    y_label: &str,
) -> Result<Chart> {
    if table.rows.is_empty() {
        return Err(SimError::EmptyInput(format!("table for chart {title:?} has no rows")));
    }
    let xs = table.column(x)?;
    let mut chart = Chart::new(title, x, y_label);
    for &name in ys {
        let col = table.column(name)?;
        chart.series.push(Series {
            label: name.to_string(),
            points: xs.iter().copied().zip(col).collect(),
        });
    }
    Ok(chart)
}

/// Renders panels side by side into one SVG document.
pub fn render(charts: &[Chart]) -> Result<String> {
    if charts.is_empty() {
        return Err(SimError::EmptyInput("no charts to render".into()));
    }
    for c in charts {
        if c.series.is_empty() || c.series.iter().all(|s| s.points.is_empty()) {
            return Err(SimError::EmptyInput(format!("chart {:?} has no data", c.title)));
        }
    }
    let total_w = PANEL_W * charts.len() as f64;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w}\" height=\"{PANEL_H}\" \
         viewBox=\"0 0 {total_w} {PANEL_H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (i, chart) in charts.iter().enumerate() {
        out.push_str(&format!("<g transform=\"translate({},0)\">\n", PANEL_W * i as f64));
        render_panel(chart, &mut out);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn render_panel(chart: &Chart, out: &mut String) {
    let floor = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let ty = |v: f64| {
        if chart.log_y {
            v.max(if floor.is_finite() { floor } else { 1e-12 }).log10()
        } else {
            v
        }
    };

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &chart.series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(ty(y));
            y_max = y_max.max(ty(y));
        }
    }
    if x_min == x_max {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_min == y_max {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| MARGIN_T + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        escape(&chart.title)
    ));
    // Frame.
    out.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n"
    ));
    // Ticks and labels.
    for i in 0..5 {
        let f = i as f64 / 4.0;
        let xv = x_min + f * (x_max - x_min);
        let yv = y_min + f * (y_max - y_min);
        let xp = px(xv);
        let yp = py(yv);
        out.push_str(&format!(
            "<line x1=\"{xp:.1}\" y1=\"{:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{xp:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + plot_h + 16.0,
            fmt_tick(xv)
        ));
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{MARGIN_L}\" y2=\"{yp:.1}\" stroke=\"#333\"/>\n",
            MARGIN_L - 4.0
        ));
        let y_tick = if chart.log_y { format!("1e{}", yv.round() as i64) } else { fmt_tick(yv) };
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{y_tick}</text>\n",
            MARGIN_L - 7.0,
            yp + 4.0
        ));
    }
    // Axis labels.
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        PANEL_H - 10.0,
        escape(&chart.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(&chart.y_label)
    ));
    // Series and legend.
    for (si, s) in chart.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let pts: Vec<String> =
            s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(ty(y)))).collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
        let ly = MARGIN_T + 14.0 + 14.0 * si as f64;
        let lx = MARGIN_L + plot_w - 96.0;
        out.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            lx + 16.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            lx + 20.0,
            ly + 4.0,
            escape(&s.label)
        ));
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 0.01 && v.abs() < 10000.0 {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_inputs_error() {
        assert!(matches!(render(&[]), Err(SimError::EmptyInput(_))));
        let chart = Chart::new("t", "x", "y");
        assert!(matches!(render(&[chart]), Err(SimError::EmptyInput(_))));
        let empty = Table::new(&["x", "y"]);
        assert!(matches!(
            chart_from_table(&empty, "x", &["y"], "t", "y"),
            Err(SimError::EmptyInput(_))
        ));
    }

    #[test]
    fn single_series_renders_one_polyline() {
        let chart =
            Chart::new("demo", "t", "E").with_series("E", vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.8)]);
        let svg = render(&[chart]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("demo"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn three_panels_stack_horizontally() {
        let c = |t: &str| Chart::new(t, "x", "y").with_series("s", vec![(0.0, 1.0), (1.0, 2.0)]);
        let svg = render(&[c("a"), c("b"), c("c")]).unwrap();
        assert_eq!(svg.matches("<g transform=\"translate(").count(), 3);
        assert!(svg.contains(&format!("width=\"{}\"", 3.0 * PANEL_W)));
    }

    #[test]
    fn log_axis_handles_zeros() {
        let chart = Chart { log_y: true, ..Chart::new("log", "N", "E") }
            .with_series("E", vec![(1.0, 0.0), (2.0, 1e-6), (3.0, 1e-2)]);
        let svg = render(&[chart]).unwrap();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn labels_are_escaped() {
        let chart = Chart::new("a<b", "x", "y").with_series("s&t", vec![(0.0, 1.0)]);
        let svg = render(&[chart]).unwrap();
        assert!(svg.contains("a&lt;b") && svg.contains("s&amp;t"));
    }
}
