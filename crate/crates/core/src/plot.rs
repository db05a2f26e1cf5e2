//! Plain SVG plots: overhead paths on top, time signals in strips below.
//! Output depends only on the data, so identical runs give identical files.

use std::fmt::Write as _;

use crate::harness::Trajectory;

const WIDTH: f64 = 800.0;
const PATH_HEIGHT: f64 = 500.0;
const STRIP_HEIGHT: f64 = 120.0;
const MARGIN: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<[f64; 2]>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

/// A strip of time signals sharing one vertical axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    pub title: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Figure {
    /// Overhead (X, Y) paths drawn with equal axis scales.
    pub paths: Vec<Series>,
    pub strips: Vec<Strip>,
}

fn bounds<'a>(series: impl Iterator<Item = &'a Series>) -> Option<[f64; 4]> {
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for p in series.flat_map(|s| s.points.iter()).filter(|p| p[0].is_finite() && p[1].is_finite()) {
        b = [b[0].min(p[0]), b[1].max(p[0]), b[2].min(p[1]), b[3].max(p[1])];
    }
    b[0].is_finite().then_some(b)
}

fn polyline(out: &mut String, pts: impl Iterator<Item = (f64, f64)>, color: &str) {
    let coords: Vec<String> = pts.map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        coords.join(" ")
    );
}

fn legend(out: &mut String, series: &[Series], x: f64, y: f64) {
    for (i, s) in series.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-size="12" fill="{}">{}</text>"#,
            y + 14.0 * i as f64,
            COLORS[i % COLORS.len()],
            escape(&s.label)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Figure {
    pub fn to_svg(&self) -> String {
        let height = PATH_HEIGHT + STRIP_HEIGHT * self.strips.len() as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

        if let Some([x0, x1, y0, y1]) = bounds(self.paths.iter()) {
            let (w, h) = (WIDTH - 2.0 * MARGIN, PATH_HEIGHT - 2.0 * MARGIN);
            let scale = (w / (x1 - x0).max(1e-9)).min(h / (y1 - y0).max(1e-9));
            let ox = MARGIN + 0.5 * (w - scale * (x1 - x0));
            let oy = PATH_HEIGHT - MARGIN - 0.5 * (h - scale * (y1 - y0));
            let _ = writeln!(
                out,
                r#"<text x="{MARGIN}" y="20" font-size="14">X [m] {x0:.1} to {x1:.1}, Y [m] {y0:.1} to {y1:.1}</text>"#
            );
            for (i, s) in self.paths.iter().enumerate() {
                let pts = s.points.iter().map(|p| (ox + scale * (p[0] - x0), oy - scale * (p[1] - y0)));
                polyline(&mut out, pts, COLORS[i % COLORS.len()]);
            }
            legend(&mut out, &self.paths, WIDTH - 160.0, 20.0);
        }

        for (k, strip) in self.strips.iter().enumerate() {
            let top = PATH_HEIGHT + STRIP_HEIGHT * k as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{MARGIN}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="gray"/>"#,
                top + 10.0,
                WIDTH - 2.0 * MARGIN,
                STRIP_HEIGHT - 20.0
            );
            let Some([t0, t1, v0, v1]) = bounds(strip.series.iter()) else {
                continue;
            };
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="12">{} [{v0:.3}, {v1:.3}]</text>"#,
                MARGIN + 4.0,
                top + 24.0,
                escape(&strip.title)
            );
            let (w, h) = (WIDTH - 2.0 * MARGIN, STRIP_HEIGHT - 20.0);
            let sx = w / (t1 - t0).max(1e-9);
            let sy = h / (v1 - v0).max(1e-9);
            for (i, s) in strip.series.iter().enumerate() {
                let pts = s
                    .points
                    .iter()
                    .map(|p| (MARGIN + sx * (p[0] - t0), top + 10.0 + h - sy * (p[1] - v0)));
                polyline(&mut out, pts, COLORS[i % COLORS.len()]);
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Overhead paths of tractor and trailer plus articulation, yaw rate and
/// steering strips for one or more runs.
pub fn trajectory_figure(runs: &[(&str, &Trajectory)]) -> Figure {
    let mut fig = Figure::default();
    let mut strips = [
        ("gamma [rad]", Vec::new()),
        ("r1 [rad/s]", Vec::new()),
        ("delta_sw [rad]", Vec::new()),
    ];
    for (label, traj) in runs {
        let s = &traj.samples;
        fig.paths.push(Series::new(format!("{label} tractor"), s.iter().map(|q| [q.x1, q.y1]).collect()));
        fig.paths.push(Series::new(format!("{label} trailer"), s.iter().map(|q| [q.x2, q.y2]).collect()));
        strips[0].1.push(Series::new(*label, s.iter().map(|q| [q.t, q.gamma]).collect()));
        strips[1].1.push(Series::new(*label, s.iter().map(|q| [q.t, q.r1]).collect()));
        strips[2].1.push(Series::new(*label, s.iter().map(|q| [q.t, q.delta_sw_cmd]).collect()));
    }
    fig.strips = strips
        .into_iter()
        .map(|(title, series)| Strip {
            title: title.into(),
            series,
        })
        .collect();
    fig
}
