//! Minimal SVG 1.1 scatter plot of points in the complex plane.

use std::fmt::Write as _;

use acoustic_pencil::C64;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// Circles when false, crosses when true.
    pub cross: bool,
    pub points: &'a [C64],
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|z| z.re.is_finite() && z.im.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in pts {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    if !x0.is_finite() {
        return ((0.0, 1.0), (-1.0, 0.0));
    }
    let pad = |a: f64, b: f64| {
        let d = (b - a).max(1e-3 * a.abs().max(b.abs())).max(1e-6);
        (a - 0.08 * d, b + 0.08 * d)
    };
    (pad(x0, x1), pad(y0, y1))
}

/// Renders the series with axes, five ticks per axis and a legend.
pub fn scatter(title: &str, series: &[Series]) -> String {
    let ((x0, x1), (y0, y1)) = bounds(series);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut o = String::new();
    let _ = writeln!(o, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(o, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        o,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            o,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{x:.3}</text>"#,
            sx(x),
            H - PAD + 18.0
        );
        let _ = writeln!(
            o,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{y:.3}</text>"#,
            PAD - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">Re κ</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(
        o,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {})">Im κ</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        for z in s.points.iter().filter(|z| z.re.is_finite() && z.im.is_finite()) {
            let (x, y) = (sx(z.re), sy(z.im));
            if s.cross {
                let _ = writeln!(
                    o,
                    r#"<path d="M{:.1} {:.1}L{:.1} {:.1}M{:.1} {:.1}L{:.1} {:.1}" stroke="{}" stroke-width="1.5"/>"#,
                    x - 5.0,
                    y - 5.0,
                    x + 5.0,
                    y + 5.0,
                    x - 5.0,
                    y + 5.0,
                    x + 5.0,
                    y - 5.0,
                    s.color
                );
            } else {
                let _ = writeln!(o, r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="{}"/>"#, s.color);
            }
        }
        let ly = PAD + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            o,
            r#"<text x="{:.1}" y="{ly:.1}" font-size="12" fill="{}">{}</text>"#,
            W - PAD - 150.0,
            s.color,
            escape(s.label)
        );
    }
    o.push_str("</svg>\n");
    o
}
