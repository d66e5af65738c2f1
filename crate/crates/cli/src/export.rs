//! Deterministic CSV, JSON and SVG writers. Floats are printed with 17 significant digits so a
//! rerun with identical inputs reproduces the files byte for byte.

use serde_json::{Map, Value};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map(Value::Number).unwrap_or_else(|| Value::String(fmt_f64(*x))),
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::csv).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (h, c) in self.header.iter().zip(r) {
                    m.insert(h.clone(), c.json());
                }
                Value::Object(m)
            })
            .collect();
        Value::Array(rows)
    }
}

/// Pretty JSON with a trailing newline; `serde_json` keeps object keys sorted.
pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Spectral diagram: gray essential regions below `lower` and above `upper`, colored curves and
/// loose points.
#[derive(Debug, Clone, Default)]
pub struct DiagramPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub xs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub curves: Vec<Vec<(f64, f64)>>,
    pub points: Vec<(f64, f64)>,
    /// Vertical plot range; `None` pads the gap by its largest width.
    pub y_range: Option<(f64, f64)>,
}

const PALETTE: [&str; 8] = ["#e66101", "#5e3c99", "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#a6761d"];

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

impl DiagramPlot {
    fn range(&self) -> ((f64, f64), (f64, f64)) {
        let x0 = self.xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let x1 = self.xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (x0, x1) = if x0.is_finite() && x1 > x0 { (x0, x1) } else { (0.0, 1.0) };
        let y = self.y_range.unwrap_or_else(|| {
            let lo = self.lower.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = self.upper.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w = self.lower.iter().zip(&self.upper).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max);
            if lo.is_finite() && hi.is_finite() && hi > lo {
                (lo - 0.5 * w.max(hi - lo), hi + 0.5 * w.max(hi - lo))
            } else {
                (-1.0, 1.0)
            }
        });
        ((x0, x1), y)
    }

    pub fn to_svg(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 56.0);
        let ((x0, x1), (y0, y1)) = self.range();
        let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let py = |y: f64| h - m - (y.clamp(y0, y1) - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">");
        let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
        if self.xs.len() >= 2 && self.lower.len() == self.xs.len() && self.upper.len() == self.xs.len() {
            let mut lo = format!("{},{}", f4(px(x0)), f4(py(y0)));
            for (x, y) in self.xs.iter().zip(&self.lower) {
                let _ = write!(lo, " {},{}", f4(px(*x)), f4(py(*y)));
            }
            let _ = write!(lo, " {},{}", f4(px(x1)), f4(py(y0)));
            let mut up = format!("{},{}", f4(px(x0)), f4(py(y1)));
            for (x, y) in self.xs.iter().zip(&self.upper) {
                let _ = write!(up, " {},{}", f4(px(*x)), f4(py(*y)));
            }
            let _ = write!(up, " {},{}", f4(px(x1)), f4(py(y1)));
            let _ = writeln!(s, "<polygon class=\"essential\" points=\"{lo}\" fill=\"#bdbdbd\"/>");
            let _ = writeln!(s, "<polygon class=\"essential\" points=\"{up}\" fill=\"#bdbdbd\"/>");
        }
        for (i, c) in self.curves.iter().enumerate() {
            let col = PALETTE[i % PALETTE.len()];
            if c.len() == 1 {
                let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{col}\"/>", f4(px(c[0].0)), f4(py(c[0].1)));
                continue;
            }
            let pts: Vec<String> = c.iter().map(|(x, y)| format!("{},{}", f4(px(*x)), f4(py(*y)))).collect();
            let _ = writeln!(s, "<polyline class=\"curve\" points=\"{}\" fill=\"none\" stroke=\"{col}\" stroke-width=\"2\"/>", pts.join(" "));
        }
        for (x, y) in &self.points {
            let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"black\"/>", f4(px(*x)), f4(py(*y)));
        }
        let _ = writeln!(s, "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", w - 2.0 * m, h - 2.0 * m);
        for (t, v) in [(0.0, x0), (0.5, 0.5 * (x0 + x1)), (1.0, x1)] {
            let x = m + t * (w - 2.0 * m);
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>", f4(x), h - m + 16.0, tick(v));
        }
        for (t, v) in [(0.0, y0), (0.5, 0.5 * (y0 + y1)), (1.0, y1)] {
            let y = h - m - t * (h - 2.0 * m);
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>", m - 6.0, f4(y + 4.0), tick(v));
        }
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>", w / 2.0, h - 14.0, escape(&self.x_label));
        let _ = writeln!(s, "<text x=\"16\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>", h / 2.0, h / 2.0, escape(&self.y_label));
        let _ = writeln!(s, "<text x=\"{}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{}</text>", w / 2.0, escape(&self.title));
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        for x in [std::f64::consts::PI, 1.0 / 3.0, -1e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("bands", &["k1", "k2", "band", "energy"]);
        assert_eq!(t.to_csv(), "k1,k2,band,energy\n");
        assert_eq!(json_text(&t.to_json()), "[]\n");
    }

    #[test]
    fn csv_quotes_text_with_separators() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![Cell::from("x,y"), Cell::from(3usize)]);
        assert_eq!(t.to_csv(), "a,b\n\"x,y\",3\n");
    }

    #[test]
    fn svg_is_deterministic_and_has_gray_bands() {
        let p = DiagramPlot {
            title: "t".into(),
            x_label: "κ".into(),
            y_label: "Ω".into(),
            xs: vec![0.0, 1.0, 2.0],
            lower: vec![-1.0, -0.5, -1.0],
            upper: vec![1.0, 0.5, 1.0],
            curves: vec![vec![(0.0, -0.8), (1.0, 0.0), (2.0, 0.8)], vec![(1.0, 0.2)]],
            points: vec![],
            y_range: None,
        };
        let a = p.to_svg();
        assert_eq!(a, p.clone().to_svg());
        assert_eq!(a.matches("fill=\"#bdbdbd\"").count(), 2);
        assert_eq!(a.matches("<polyline").count(), 1);
        assert!(a.ends_with("</svg>\n"));
    }
}
