//! Rate-factor curves against the condition number, as CSV and SVG.
//!
//! The solid curve is the partial-inverse factor `1 - η/(η + L)`, the dotted
//! curve the fixed-point factor `1 - η/(2L)`; optional markers show the worst
//! observed per-iteration contraction.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::{spdg_factor_new_opt, spdg_factor_old_opt};

use super::sweep::ResultRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePoint {
    pub cond: f64,
    pub factor_old: f64,
    pub factor_new: f64,
    pub empirical: Option<f64>,
}

/// Closed-form curves on `points` evenly spaced condition numbers in `[cond_min, cond_max]`.
pub fn closed_form_points(cond_min: f64, cond_max: f64, points: usize) -> Result<Vec<FigurePoint>> {
    if points == 0 {
        return Err(Error::EmptyInput);
    }
    if !(cond_min >= 1.0) || !(cond_max >= cond_min) || !cond_max.is_finite() {
        return Err(Error::InvalidArgs(format!(
            "need 1 <= cond_min <= cond_max, got [{cond_min}, {cond_max}]"
        )));
    }
    (0..points)
        .map(|i| {
            let t = if points == 1 {
                0.0
            } else {
                i as f64 / (points - 1) as f64
            };
            let cond = if i + 1 == points {
                cond_max
            } else {
                cond_min + t * (cond_max - cond_min)
            };
            Ok(FigurePoint {
                cond,
                factor_old: spdg_factor_old_opt(1.0, cond)?,
                factor_new: spdg_factor_new_opt(1.0, cond)?,
                empirical: None,
            })
        })
        .collect()
}

/// One point per distinct `L/η` among the rows, with the worst empirical contraction.
pub fn points_from_rows(rows: &[ResultRow]) -> Result<Vec<FigurePoint>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.cond().total_cmp(&b.cond()));
    let mut points: Vec<FigurePoint> = Vec::new();
    for row in sorted {
        let empirical = Some(row.empirical_factor).filter(|e| *e > 0.0);
        match points.last_mut() {
            Some(p) if (p.cond - row.cond()).abs() <= 1e-9 * p.cond => {
                p.empirical = match (p.empirical, empirical) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
            _ => points.push(FigurePoint {
                cond: row.cond(),
                factor_old: spdg_factor_old_opt(row.eta, row.lipschitz)?,
                factor_new: spdg_factor_new_opt(row.eta, row.lipschitz)?,
                empirical,
            }),
        }
    }
    Ok(points)
}

pub fn write_figure_csv<W: Write>(
    points: &[FigurePoint],
    provenance: &[(String, String)],
    mut out: W,
) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (k, v) in provenance {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_figure_csv<R: Read>(input: R) -> Result<Vec<FigurePoint>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<FigurePoint>, _>>()?)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

fn nice_step(span: f64, target_ticks: f64) -> f64 {
    let raw = span / target_ticks;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step((hi - lo).max(1e-12), 5.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// A self-contained SVG line chart; `provenance` goes into a leading comment.
pub fn render_svg(points: &[FigurePoint], provenance: &[(String, String)]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let x_lo = points.iter().map(|p| p.cond).fold(f64::INFINITY, f64::min);
    let mut x_hi = points
        .iter()
        .map(|p| p.cond)
        .fold(f64::NEG_INFINITY, f64::max);
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let values = points
        .iter()
        .flat_map(|p| [Some(p.factor_old), Some(p.factor_new), p.empirical])
        .flatten();
    let y_min = values.fold(f64::INFINITY, f64::min);
    let y_lo = ((y_min.min(0.5) - 0.02) * 10.0).floor() / 10.0;
    let y_hi = 1.0;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    if !provenance.is_empty() {
        let fields: Vec<String> = provenance.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(w, "<!-- {} -->", fields.join(" ").replace("--", "- -"));
    }
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // axes and grid
    let _ = writeln!(
        w,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{y0:.2}"/></g>"#,
        y0 = TOP + plot_h,
        x1 = LEFT + plot_w
    );
    let x_step = nice_step((x_hi - x_lo).max(1e-12), 5.0);
    let prec = (-x_step.log10().floor()).max(0.0) as usize;
    for t in ticks(x_lo, x_hi) {
        let x = sx(t);
        let _ = writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{yb:.2}" stroke="#dddddd"/><text x="{x:.2}" y="{yt:.2}" text-anchor="middle">{t:.prec$}</text>"##,
            yb = TOP + plot_h,
            yt = TOP + plot_h + 18.0,
        );
    }
    for t in ticks(y_lo, y_hi) {
        let y = sy(t);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{xr:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{xt:.2}" y="{yt:.2}" text-anchor="end">{t:.2}</text>"##,
            xr = LEFT + plot_w,
            xt = LEFT - 6.0,
            yt = y + 4.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">condition number L/η</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">rate factor</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let polyline = |f: &dyn Fn(&FigurePoint) -> f64| {
        points
            .iter()
            .map(|p| format!("{:.3},{:.3}", sx(p.cond), sy(f(p))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(
        w,
        r##"<polyline id="factor-old" fill="none" stroke="#444444" stroke-width="2" stroke-dasharray="2,4" points="{}"/>"##,
        polyline(&|p| p.factor_old)
    );
    let _ = writeln!(
        w,
        r##"<polyline id="factor-new" fill="none" stroke="#1f4e9c" stroke-width="2" points="{}"/>"##,
        polyline(&|p| p.factor_new)
    );
    let has_empirical = points.iter().any(|p| p.empirical.is_some());
    if has_empirical {
        let _ = writeln!(w, r##"<g id="empirical" fill="#c0392b">"##);
        for p in points {
            if let Some(e) = p.empirical {
                let _ = writeln!(
                    w,
                    r#"<circle cx="{:.3}" cy="{:.3}" r="3"/>"#,
                    sx(p.cond),
                    sy(e)
                );
            }
        }
        let _ = writeln!(w, "</g>");
    }

    // legend
    let lx = LEFT + plot_w - 230.0;
    let ly = TOP + plot_h - 70.0;
    let _ = writeln!(
        w,
        r##"<g id="legend"><rect x="{lx:.2}" y="{ly:.2}" width="220" height="{h}" fill="white" stroke="#999999"/>"##,
        h = if has_empirical { 64 } else { 46 }
    );
    let _ = writeln!(
        w,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1f4e9c" stroke-width="2"/><text x="{:.2}" y="{:.2}">partial inverse: 1 − η/(η+L)</text>"##,
        lx + 8.0,
        ly + 16.0,
        lx + 38.0,
        ly + 16.0,
        lx + 44.0,
        ly + 20.0
    );
    let _ = writeln!(
        w,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#444444" stroke-width="2" stroke-dasharray="2,4"/><text x="{:.2}" y="{:.2}">fixed point: 1 − η/(2L)</text>"##,
        lx + 8.0,
        ly + 34.0,
        lx + 38.0,
        ly + 34.0,
        lx + 44.0,
        ly + 38.0
    );
    if has_empirical {
        let _ = writeln!(
            w,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#c0392b"/><text x="{:.2}" y="{:.2}">observed contraction</text>"##,
            lx + 23.0,
            ly + 52.0,
            lx + 44.0,
            ly + 56.0
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}
