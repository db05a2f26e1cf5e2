//! Forward and reverse result tables, and per-model aggregation.

use std::fmt::Write as _;

use crate::metrics::{Direction, ErrorReport, MetricsError};

/// One table row: a model's totals.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub eps_a: f64,
    pub eps_v: f64,
    pub eps_p: f64,
    pub eps_n: f64,
    pub j_steer: Option<f64>,
}

impl From<&ErrorReport> for TableRow {
    fn from(r: &ErrorReport) -> Self {
        Self {
            label: r.model.clone(),
            eps_a: r.eps_a,
            eps_v: r.eps_v,
            eps_p: r.eps_p,
            eps_n: r.eps_n,
            j_steer: r.j_steer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub direction: Direction,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Delimited,
}

struct Column {
    text: &'static str,
    delimited: &'static str,
    decimals: usize,
}

const FORWARD: [Column; 4] = [
    Column { text: "ε̄a rad/s", delimited: "eps_a[rad/s]", decimals: 4 },
    Column { text: "ε̄v m/s", delimited: "eps_v[m/s]", decimals: 4 },
    Column { text: "ε̄p m", delimited: "eps_p[m]", decimals: 2 },
    Column { text: "ε̄n %", delimited: "eps_n[%]", decimals: 2 },
];

const REVERSE: [Column; 4] = [
    Column { text: "ε̄a rad/s", delimited: "eps_a[rad/s]", decimals: 4 },
    Column { text: "ε̄v m/s", delimited: "eps_v[m/s]", decimals: 4 },
    Column { text: "J_steer [%]", delimited: "j_steer[%]", decimals: 2 },
    Column { text: "ε̄n [%]", delimited: "eps_n[%]", decimals: 2 },
];

/// Display width, ignoring combining marks.
fn width(s: &str) -> usize {
    s.chars().filter(|c| !('\u{300}'..='\u{36f}').contains(c)).count()
}

fn pad_left(s: &str, w: usize) -> String {
    format!("{}{s}", " ".repeat(w.saturating_sub(width(s))))
}

fn pad_right(s: &str, w: usize) -> String {
    format!("{s}{}", " ".repeat(w.saturating_sub(width(s))))
}

impl ReportTable {
    /// Builds a table from reports of a single driving direction.
    pub fn from_reports(reports: &[ErrorReport]) -> Result<Self, MetricsError> {
        let direction = common_direction(reports)?;
        Ok(Self {
            direction,
            rows: reports.iter().map(TableRow::from).collect(),
        })
    }

    pub fn title(&self) -> &'static str {
        match self.direction {
            Direction::Forward => "Forward Driving Results",
            Direction::Reverse => "Reverse Driving Results",
        }
    }

    fn columns(&self) -> &'static [Column; 4] {
        match self.direction {
            Direction::Forward => &FORWARD,
            Direction::Reverse => &REVERSE,
        }
    }

    fn cells(&self, row: &TableRow) -> [String; 4] {
        let third = match self.direction {
            Direction::Forward => row.eps_p,
            Direction::Reverse => row.j_steer.unwrap_or(f64::NAN),
        };
        let cols = self.columns();
        let f = |v: f64, i: usize| format!("{v:.*}", cols[i].decimals);
        [f(row.eps_a, 0), f(row.eps_v, 1), f(third, 2), f(row.eps_n, 3)]
    }

    pub fn render(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Text => self.render_text(),
            TableFormat::Delimited => self.render_delimited(),
        }
    }

    pub fn render_text(&self) -> String {
        let cols = self.columns();
        let body: Vec<(String, [String; 4])> =
            self.rows.iter().map(|r| (r.label.clone(), self.cells(r))).collect();
        let first = body.iter().map(|(l, _)| width(l)).chain([width("Error")]).max().unwrap();
        let widths: Vec<usize> = (0..4)
            .map(|i| body.iter().map(|(_, c)| width(&c[i])).chain([width(cols[i].text)]).max().unwrap())
            .collect();

        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title());
        let mut line = pad_right("Error", first);
        for (c, w) in cols.iter().zip(&widths) {
            line.push_str("  ");
            line.push_str(&pad_left(c.text, *w));
        }
        let _ = writeln!(out, "{line}");
        for (label, cells) in &body {
            let mut line = pad_right(label, first);
            for (c, w) in cells.iter().zip(&widths) {
                line.push_str("  ");
                line.push_str(&pad_left(c, *w));
            }
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn render_delimited(&self) -> String {
        let mut out = String::from("model");
        for c in self.columns() {
            out.push(',');
            out.push_str(c.delimited);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{},{}", row.label, self.cells(row).join(","));
        }
        out
    }
}

fn common_direction(reports: &[ErrorReport]) -> Result<Direction, MetricsError> {
    let first = reports.first().ok_or(MetricsError::Empty)?.direction;
    if reports.iter().any(|r| r.direction != first) {
        return Err(MetricsError::MixedDirections);
    }
    Ok(first)
}

/// Arithmetic mean of each error per model, in order of first appearance.
pub fn aggregate(reports: &[ErrorReport]) -> Result<Vec<ErrorReport>, MetricsError> {
    let direction = common_direction(reports)?;
    let mut models: Vec<&str> = Vec::new();
    for r in reports {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut out = Vec::with_capacity(models.len());
    for model in models {
        let group: Vec<&ErrorReport> = reports.iter().filter(|r| r.model == model).collect();
        let n = group.len() as f64;
        let mean = |f: &dyn Fn(&ErrorReport) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
        let j_steer = if group.iter().all(|r| r.j_steer.is_some()) {
            Some(mean(&|r| r.j_steer.unwrap()))
        } else {
            None
        };
        let maneuver = if group.len() == 1 {
            group[0].maneuver.clone()
        } else {
            format!("mean of {}", group.len())
        };
        out.push(ErrorReport::new(
            model,
            maneuver,
            direction,
            [mean(&|r| r.eps_y1), mean(&|r| r.eps_y2)],
            [mean(&|r| r.eps_r1), mean(&|r| r.eps_r2)],
            [mean(&|r| r.eps_v1), mean(&|r| r.eps_v2)],
            mean(&|r| r.eps_n),
            j_steer,
        ));
    }
    Ok(out)
}

/// Pretty JSON array of reports.
pub fn reports_to_json(reports: &[ErrorReport]) -> String {
    let mut out = serde_json::to_string_pretty(reports).expect("reports contain only plain data");
    out.push('\n');
    out
}

/// Reads either a JSON array of reports or a single report object.
pub fn reports_from_json(text: &str) -> Result<Vec<ErrorReport>, serde_json::Error> {
    if text.trim_start().starts_with('[') {
        serde_json::from_str(text)
    } else {
        serde_json::from_str(text).map(|r| vec![r])
    }
}
