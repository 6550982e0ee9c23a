//! Minimal SVG plots: points with error bars, an optional fitted line and an
//! optional horizontal band. The styling is fixed; bump [`STYLE_VERSION`]
//! whenever the output changes so golden files are regenerated knowingly.

use std::fmt::Write;

use menr_core::analysis::FitResult;
use menr_core::experiment::MeasurementSeries;

use crate::record::EtaInput;

pub const STYLE_VERSION: u32 = 1;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// `(x, y, σ_y)`.
    pub points: Vec<(f64, f64, f64)>,
    /// `(slope, intercept)` drawn across the x range.
    pub line: Option<(f64, f64)>,
    /// `(centre, half_width)` shaded across the x range.
    pub band: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Tick step of 1, 2 or 5 × 10ⁿ giving roughly five intervals.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.08 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let step = tick_step(hi - lo);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    let values = (first..=last)
        .map(|k| {
            let v = k as f64 * step;
            if v.abs() < step * 1e-9 {
                0.0
            } else {
                v
            }
        })
        .collect();
    (values, decimals)
}

impl Plot {
    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let xs = self.points.iter().map(|p| p.0);
        let x_lo = xs.clone().fold(f64::INFINITY, f64::min);
        let x_hi = xs.fold(f64::NEG_INFINITY, f64::max);
        let mut y_lo = self
            .points
            .iter()
            .map(|p| p.1 - p.2)
            .fold(f64::INFINITY, f64::min);
        let mut y_hi = self
            .points
            .iter()
            .map(|p| p.1 + p.2)
            .fold(f64::NEG_INFINITY, f64::max);
        if let Some((m, b)) = self.line {
            for x in [x_lo, x_hi] {
                y_lo = y_lo.min(m * x + b);
                y_hi = y_hi.max(m * x + b);
            }
        }
        if let Some((c, w)) = self.band {
            y_lo = y_lo.min(c - w);
            y_hi = y_hi.max(c + w);
        }
        (padded(x_lo, x_hi), padded(y_lo, y_hi))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let ((x0, x1), (y0, y1)) = if self.points.is_empty() {
            ((0.0, 1.0), (0.0, 1.0))
        } else {
            self.ranges()
        };
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-style-version="{STYLE_VERSION}">"#
        );
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        if let Some((c, w)) = self.band {
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#f4c27a" fill-opacity="0.45"/>"##,
                LEFT,
                sy(c + w),
                pw,
                sy(c - w) - sy(c + w)
            );
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c96a00" stroke-width="1.5"/>"##,
                LEFT,
                sy(c),
                LEFT + pw,
                sy(c)
            );
        }

        let (xt, xd) = ticks(x0, x1);
        for x in xt {
            let _ = writeln!(
                out,
                r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#e0e0e0"/>"##,
                sx(x),
                TOP,
                TOP + ph
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.*}</text>"#,
                sx(x),
                TOP + ph + 16.0,
                xd,
                x
            );
        }
        let (yt, yd) = ticks(y0, y1);
        for y in yt {
            let _ = writeln!(
                out,
                r##"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="#e0e0e0"/>"##,
                LEFT,
                sy(y),
                LEFT + pw
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{:.*}</text>"#,
                LEFT - 6.0,
                sy(y) + 4.0,
                yd,
                y
            );
        }
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );

        if let Some((m, b)) = self.line {
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f5fa8" stroke-width="1.5"/>"##,
                sx(x0),
                sy(m * x0 + b),
                sx(x1),
                sy(m * x1 + b)
            );
        }
        for &(x, y, s) in &self.points {
            let (px, py) = (sx(x), sy(y));
            if s > 0.0 {
                let _ = writeln!(
                    out,
                    r#"<path d="M{px:.2} {:.2}V{:.2}M{:.2} {:.2}H{:.2}M{:.2} {:.2}H{:.2}" stroke="black" fill="none"/>"#,
                    sy(y + s),
                    sy(y - s),
                    px - 4.0,
                    sy(y + s),
                    px + 4.0,
                    px - 4.0,
                    sy(y - s),
                    px + 4.0
                );
            }
            let _ = writeln!(
                out,
                r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="black"/>"#
            );
        }

        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{0:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        out.push_str("</svg>\n");
        out
    }
}

/// Split versus field with the fitted line; E in kV/cm, split in mHz.
pub fn sweep_plot(series: &MeasurementSeries, fit: &FitResult) -> String {
    const X: f64 = 1e-5; // V/m to kV/cm
    const Y: f64 = 1e3; // Hz to mHz
    Plot {
        title: format!("Split at f_E vs field, {}", series.config_label),
        x_label: "E (kV/cm)".into(),
        y_label: "Δν (mHz)".into(),
        points: series
            .points
            .iter()
            .map(|p| (p.e_field * X, p.delta_nu * Y, p.sigma * Y))
            .collect(),
        line: Some((fit.slope * Y / X, fit.intercept * Y)),
        band: None,
    }
    .render()
}

/// Per-run `2η∥` values with the weighted mean and its σ band.
pub fn eta_plot(inputs: &[EtaInput], mean: f64, sigma: f64) -> String {
    const Y: f64 = 1e23;
    Plot {
        title: "2η∥ per run".into(),
        x_label: "run".into(),
        y_label: "2η∥ (10⁻²³ m V⁻¹ T⁻¹)".into(),
        points: inputs
            .iter()
            .enumerate()
            .map(|(i, e)| ((i + 1) as f64, e.value * Y, e.sigma * Y))
            .collect(),
        line: None,
        band: Some((mean * Y, sigma * Y)),
    }
    .render()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps_are_round() {
        assert_eq!(tick_step(10.0), 2.0);
        assert_eq!(tick_step(1.0), 0.2);
        assert_eq!(tick_step(37.0), 5.0);
        assert_eq!(tick_step(0.003), 0.0005);
    }

    #[test]
    fn ticks_cover_range() {
        let (t, d) = ticks(-0.13, 1.07);
        assert_eq!(t, vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(d, 1);
    }

    #[test]
    fn empty_plot_is_well_formed() {
        let svg = Plot::default().render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = Plot {
            title: "a<b & c".into(),
            points: vec![(0.0, 1.0, 0.1), (1.0, 2.0, 0.1)],
            ..Plot::default()
        }
        .render();
        assert!(svg.contains("a&lt;b &amp; c"));
    }
}
