//! Minimal SVG line charts with axes, ticks and a legend.

use std::fmt::Write as _;

use crate::qfun::QuantileGrid;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// CSS color; `None` picks from the palette.
    pub color: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Line>,
    pub legend: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 0.5 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

impl Chart {
    pub fn render(&self) -> String {
        let (x0, x1) = bounds(self.lines.iter().flat_map(|l| l.points.iter().map(|p| p.0)));
        let (y0, y1) = bounds(self.lines.iter().flat_map(|l| l.points.iter().map(|p| p.1)));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        // axes
        let _ = writeln!(
            out,
            "<path d=\"M{LEFT:.1},{TOP:.1} V{:.1} H{:.1}\" fill=\"none\" stroke=\"black\"/>",
            TOP + ph,
            LEFT + pw
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                out,
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/><text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{LEFT:.1}\" y2=\"{y:.1}\" stroke=\"black\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, line) in self.lines.iter().enumerate() {
            let color = line.color.clone().unwrap_or_else(|| PALETTE[k % PALETTE.len()].to_string());
            let pts: Vec<String> = line
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
                escape(&color),
                pts.join(" ")
            );
            if self.legend {
                let ly = TOP + 10.0 + 18.0 * k as f64;
                let lx = LEFT + pw + 15.0;
                let _ = writeln!(
                    out,
                    "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"2\"/><text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
                    lx + 20.0,
                    escape(&color),
                    lx + 25.0,
                    ly + 4.0,
                    escape(&line.name)
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }

    /// The chart's data as `series,x,y` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,x,y\n");
        for line in &self.lines {
            let name = if line.name.contains([',', '"', '\n']) {
                format!("\"{}\"", line.name.replace('"', "\"\""))
            } else {
                line.name.clone()
            };
            for (x, y) in &line.points {
                let _ = writeln!(out, "{name},{x},{y}");
            }
        }
        out
    }
}

/// One quantile curve per instant, darker for later instants.
pub fn quantile_fan(title: &str, grids: &[QuantileGrid], times: &[String]) -> Chart {
    let n = grids.len().max(2);
    let lines = grids
        .iter()
        .zip(times)
        .enumerate()
        .map(|(t, (q, time))| {
            let lightness = 85.0 - 60.0 * t as f64 / (n - 1) as f64;
            Line {
                name: time.clone(),
                points: q.grid().points().zip(q.values().iter().copied()).collect(),
                color: Some(format!("hsl(215,70%,{lightness:.0}%)")),
            }
        })
        .collect();
    Chart {
        title: title.to_string(),
        x_label: "p".into(),
        y_label: "quantile".into(),
        lines,
        legend: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfun::Grid;

    fn chart() -> Chart {
        Chart {
            title: "a < b & c".into(),
            x_label: "T".into(),
            y_label: "RMSD".into(),
            lines: vec![
                Line {
                    name: "alpha=0.1".into(),
                    points: vec![(200.0, 0.6), (500.0, 0.4), (2000.0, 0.2)],
                    color: None,
                },
                Line {
                    name: "alpha=0.5".into(),
                    points: vec![(200.0, 0.7), (500.0, 0.45), (2000.0, 0.23)],
                    color: None,
                },
            ],
            legend: true,
        }
    }

    #[test]
    fn ticks_are_round() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert_eq!((t[0], t[5]), (0.0, 1.0));
        assert_eq!(ticks(200.0, 2000.0).len(), 4);
    }

    #[test]
    fn render_is_balanced_markup() {
        let svg = chart().render();
        assert!(svg.starts_with("<svg ") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b &amp; c"));
        // every element is self-closed or closed
        let opens = svg.matches('<').count();
        let closes = svg.matches("/>").count() + svg.matches("</").count() * 2;
        assert_eq!(opens, closes);
    }

    #[test]
    fn csv_twin() {
        let csv = chart().to_csv();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.contains("alpha=0.1,500,0.4"));
    }

    #[test]
    fn fan_has_one_line_per_instant() {
        let g = Grid::new(0.1).unwrap();
        let grids = vec![QuantileGrid::identity(g); 3];
        let times: Vec<String> = (0..3).map(|t| t.to_string()).collect();
        let c = quantile_fan("fan", &grids, &times);
        assert_eq!(c.lines.len(), 3);
        assert_eq!(c.render().matches("<polyline").count(), 3);
    }
}
