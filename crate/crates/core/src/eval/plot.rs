//! Minimal SVG rendering of precision-recall curves.

use std::fmt::Write;

use crate::eval::PrCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn px(recall: f64) -> f64 {
    MARGIN + recall * (WIDTH - 2.0 * MARGIN)
}

fn py(precision: f64) -> f64 {
    HEIGHT - MARGIN - precision * (HEIGHT - 2.0 * MARGIN)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Step-free polyline of the curve on unit axes, starting at recall 0.
pub fn pr_curve_svg(title: &str, curve: &PrCurve) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="640" height="480" viewBox="0 0 640 480">"#
    );
    let _ = writeln!(s, r#"<rect width="640" height="480" fill="white"/>"#);
    let (x0, x1, y0, y1) = (px(0.0), px(1.0), py(0.0), py(1.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let (tx, ty) = (px(t), py(t));
        let _ = writeln!(
            s,
            r#"<line x1="{tx}" y1="{y0}" x2="{tx}" y2="{}" stroke="black"/><text x="{tx}" y="{}" font-size="12" text-anchor="middle">{t:.1}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ty}" x2="{x0}" y2="{ty}" stroke="black"/><text x="{}" y="{}" font-size="12" text-anchor="end">{t:.1}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            ty + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">recall</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {})">precision</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-size="16" text-anchor="middle">{} (AP {:.4})</text>"#,
        WIDTH / 2.0,
        escape(title),
        curve.average_precision
    );
    let mut points = String::new();
    if let Some(&p) = curve.precision.first() {
        let _ = write!(points, "{:.2},{:.2}", px(0.0), py(p));
    }
    for (r, p) in curve.recall.iter().zip(&curve.precision) {
        let _ = write!(points, " {:.2},{:.2}", px(*r), py(*p));
    }
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        points.trim_start()
    );
    s.push_str("</svg>\n");
    s
}
