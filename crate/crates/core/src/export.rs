//! Deterministic text output helpers shared by the CSV/SVG/JSON exporters.

use std::fmt::Write as _;

use crate::geometry::Point;

/// Fixed float formatting for file outputs: 17 significant digits, `.` decimal
/// separator. All exporters use this so identical runs produce identical bytes.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// One CSV line from already-formatted fields, `\n`-terminated.
pub fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

/// Minimal SVG document builder used by the layout and map exporters.
pub struct SvgBuilder {
    body: String,
    view: (f64, f64, f64, f64),
}

impl SvgBuilder {
    /// `view` is (min_x, min_y, width, height) in model coordinates; the
    /// y-axis is flipped so model "up" renders up.
    pub fn new(view: (f64, f64, f64, f64)) -> Self {
        SvgBuilder {
            body: String::new(),
            view,
        }
    }

    pub fn circle(&mut self, center: Point, radius: f64, stroke: &str, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}" stroke="{}" fill="{}" stroke-width="0.002"/>"#,
            center.re, -center.im, radius, stroke, fill
        );
    }

    pub fn polyline(&mut self, points: &[Point], stroke: &str) {
        let coords: Vec<String> = points
            .iter()
            .map(|p| format!("{:.6},{:.6}", p.re, -p.im))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" stroke="{}" fill="none" stroke-width="0.002"/>"#,
            coords.join(" "),
            stroke
        );
    }

    pub fn polygon(&mut self, points: &[Point], stroke: &str) {
        let coords: Vec<String> = points
            .iter()
            .map(|p| format!("{:.6},{:.6}", p.re, -p.im))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" stroke="{}" fill="none" stroke-width="0.003"/>"#,
            coords.join(" "),
            stroke
        );
    }

    pub fn finish(self) -> String {
        let (x, y, w, h) = self.view;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n{}</svg>\n",
            x, -(y + h), w, h, self.body
        )
    }
}
