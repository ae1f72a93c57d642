//! Static SVG convergence charts with a log-scale y axis.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::trace::TraceRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Rounds,
    Bits,
}

impl XAxis {
    pub fn label(self) -> &'static str {
        match self {
            XAxis::Rounds => "round",
            XAxis::Bits => "cumulative bits",
        }
    }
}

impl std::str::FromStr for XAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rounds" => Ok(XAxis::Rounds),
            "bits" => Ok(XAxis::Bits),
            other => Err(Error::config("x-axis", format!("`{other}` is not `rounds` or `bits`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Suboptimality (or objective when unknown) against rounds or bits.
    pub fn from_trace(label: impl Into<String>, rows: &[TraceRow], x: XAxis) -> Self {
        let points = rows
            .iter()
            .map(|r| {
                let xv = match x {
                    XAxis::Rounds => r.round as f64,
                    XAxis::Bits => r.cumulative_bits as f64,
                };
                (xv, r.suboptimality.unwrap_or(r.objective))
            })
            .collect();
        Self {
            label: label.into(),
            points,
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders one polyline per series. Points with non-positive y cannot be
/// shown on a log scale and are skipped.
pub fn render_svg(series: &[Series], x_axis: XAxis) -> Result<String> {
    let visible: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .copied()
                .filter(|&(x, y)| x.is_finite() && y.is_finite() && y > 0.0)
                .collect()
        })
        .collect();
    let all = || visible.iter().flatten();
    if all().next().is_none() {
        return Err(Error::decode("no positive values to plot"));
    }
    let (mut x_min, mut x_max) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    if x_max == x_min {
        x_min -= 0.5;
        x_max += 0.5;
    }
    let (ly_min, ly_max) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.1.log10()), hi.max(p.1.log10()))
    });
    let (ly_min, ly_max) = (ly_min.floor(), ly_max.ceil().max(ly_min.floor() + 1.0));

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| TOP + (ly_max - y.log10()) / (ly_max - ly_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    for decade in (ly_min as i32)..=(ly_max as i32) {
        let y = sy(10f64.powi(decade));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let xv = x_min + (x_max - x_min) * i as f64 / 4.0;
        let x = sx(xv);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            format_tick(xv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        x_axis.label()
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">suboptimality</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, (s, pts)) in series.iter().zip(&visible).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(x: f64) -> String {
    if x.abs() >= 1e5 {
        format!("{x:.2e}")
    } else if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(label: &str, pts: &[(f64, f64)]) -> Series {
        Series {
            label: label.into(),
            points: pts.to_vec(),
        }
    }

    #[test]
    fn one_polyline_per_series() {
        let svg = render_svg(
            &[
                series("a", &[(0.0, 1.0), (1.0, 0.1)]),
                series("b<c", &[(0.0, 2.0), (2.0, 0.01)]),
            ],
            XAxis::Rounds,
        )
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(svg.contains("1e-2"));
    }

    #[test]
    fn bits_axis_uses_cumulative_bits() {
        let rows = vec![TraceRow {
            run_id: "r".into(),
            round: 3,
            objective: 5.0,
            suboptimality: Some(0.5),
            grad_norm: 1.0,
            cnz_hat: None,
            uplink_bits_round: 10,
            broadcast_bits_round: 0,
            cumulative_bits: 40,
        }];
        assert_eq!(Series::from_trace("r", &rows, XAxis::Bits).points, vec![(40.0, 0.5)]);
        assert_eq!(Series::from_trace("r", &rows, XAxis::Rounds).points, vec![(3.0, 0.5)]);
    }

    #[test]
    fn nothing_to_plot() {
        assert!(render_svg(&[series("a", &[(0.0, 0.0)])], XAxis::Bits).is_err());
        assert!("weeks".parse::<XAxis>().is_err());
    }
}
