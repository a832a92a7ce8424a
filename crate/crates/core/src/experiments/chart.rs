//! Minimal SVG line charts. No plotting dependency; the output is a single
//! self-contained `<svg>` document with one polyline per series.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Values at or below zero on a log axis are drawn at this floor.
pub const LOG_FLOOR: f64 = 1e-12;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Named numeric columns. `NaN` cells are gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Chart(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Chart(format!("no column '{name}'")))
    }
}

#[derive(Debug, Clone)]
pub struct ChartSpec {
    pub title: String,
    pub x: String,
    pub series: Vec<String>,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    /// Draw markers only, for categorical series such as arm indices.
    pub points: bool,
}

impl ChartSpec {
    pub fn lines(title: &str, x: &str, series: &[&str], y_label: &str) -> Self {
        Self {
            title: title.into(),
            x: x.into(),
            series: series.iter().map(|s| s.to_string()).collect(),
            x_label: x.into(),
            y_label: y_label.into(),
            log_y: false,
            points: false,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn points(mut self) -> Self {
        self.points = true;
        self
    }
}

pub fn render_svg(table: &Table, spec: &ChartSpec) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Chart("empty table".into()));
    }
    if spec.series.is_empty() {
        return Err(Error::Chart("no series".into()));
    }
    let xi = table.column(&spec.x)?;
    let cols = spec
        .series
        .iter()
        .map(|s| table.column(s))
        .collect::<Result<Vec<_>>>()?;

    let mut clamped = 0usize;
    let ty = |v: f64, clamped: &mut usize| -> f64 {
        if !spec.log_y {
            return v;
        }
        if v <= 0.0 {
            *clamped += 1;
            LOG_FLOOR.log10()
        } else {
            v.max(LOG_FLOOR).log10()
        }
    };

    // data as (x, transformed y) per series
    let mut data: Vec<Vec<Option<(f64, f64)>>> = Vec::with_capacity(cols.len());
    for &c in &cols {
        let pts = table
            .rows
            .iter()
            .map(|r| {
                let (x, y) = (r[xi], r[c]);
                (x.is_finite() && y.is_finite()).then(|| (x, ty(y, &mut clamped)))
            })
            .collect();
        data.push(pts);
    }
    if clamped > 0 {
        log::warn!("{clamped} non-positive value(s) drawn at {LOG_FLOOR:e} on log axis");
    }

    let finite = data.iter().flatten().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::Chart("no finite points".into()));
    }
    if x1 - x0 == 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if spec.log_y {
        y0 = y0.floor();
        y1 = y1.ceil();
    }
    if y1 - y0 == 0.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }

    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let px = sx(fx);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_T + ph,
            MARGIN_T + ph + 5.0,
            MARGIN_T + ph + 18.0,
            tick(fx)
        );
    }
    let yticks: Vec<f64> = if spec.log_y {
        let step = ((y1 - y0) / 6.0).ceil().max(1.0);
        let mut v = Vec::new();
        let mut e = y0;
        while e <= y1 + 1e-9 {
            v.push(e);
            e += step;
        }
        v
    } else {
        (0..=4).map(|k| y0 + (y1 - y0) * k as f64 / 4.0).collect()
    };
    for fy in yticks {
        let py = sy(fy);
        let label = if spec.log_y {
            format!("1e{}", fy.round() as i64)
        } else {
            tick(fy)
        };
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_L}" y1="{py:.1}" x2="{}" y2="{py:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{label}</text>"##,
            MARGIN_L + pw,
            MARGIN_L - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(&spec.y_label)
    );

    for (k, (name, pts)) in spec.series.iter().zip(&data).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if spec.points {
            for &(x, y) in pts.iter().flatten() {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{color}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
        } else {
            // break the line at gaps
            for run in pts.split(Option::is_none) {
                if run.is_empty() {
                    continue;
                }
                let coords: Vec<String> = run
                    .iter()
                    .flatten()
                    .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
            }
        }
        let ly = MARGIN_T + 10.0 + 18.0 * k as f64;
        let lx = MARGIN_L + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_chart(table: &Table, spec: &ChartSpec, path: &Path) -> Result<()> {
    let svg = render_svg(table, spec)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-2 && v.abs() < 1e5) {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(vec!["n".into(), "a".into(), "b".into()]);
        t.push(vec![1.0, 1.0, 0.5]).unwrap();
        t.push(vec![2.0, 0.1, f64::NAN]).unwrap();
        t.push(vec![3.0, 0.01, 0.2]).unwrap();
        t
    }

    #[test]
    fn renders_one_polyline_run_per_gap() {
        let svg = render_svg(
            &table(),
            &ChartSpec::lines("t", "n", &["a", "b"], "err").log_y(),
        )
        .unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains(">a</text>") && svg.contains("1e-2"));
    }

    #[test]
    fn log_axis_clamps_non_positive() {
        let mut t = Table::new(vec!["n".into(), "a".into()]);
        t.push(vec![0.0, 0.0]).unwrap();
        t.push(vec![1.0, 1.0]).unwrap();
        let svg = render_svg(&t, &ChartSpec::lines("z", "n", &["a"], "y").log_y()).unwrap();
        assert!(svg.contains("1e-12"));
    }

    #[test]
    fn errors_on_bad_input() {
        let empty = Table::new(vec!["n".into(), "a".into()]);
        let spec = ChartSpec::lines("", "n", &["a"], "");
        assert!(matches!(render_svg(&empty, &spec), Err(Error::Chart(_))));
        let spec = ChartSpec::lines("", "n", &["missing"], "");
        assert!(matches!(render_svg(&table(), &spec), Err(Error::Chart(_))));
        let mut t = Table::new(vec!["n".into()]);
        assert!(t.push(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn single_point_and_markers() {
        let mut t = Table::new(vec!["t".into(), "arm".into()]);
        t.push(vec![0.0, 1.0]).unwrap();
        let svg = render_svg(&t, &ChartSpec::lines("", "t", &["arm"], "").points()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
    }
}
