//! Plain-text SVG line charts.

use std::fmt::Write;

use crate::trace::SeriesSummary;

#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub title: String,
    pub y_label: String,
    pub log_y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 210.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Median traces of the first metric in `summary`, one line per
/// (algorithm, config).
pub fn render_summary(summary: &[SeriesSummary], opts: &PlotOptions) -> String {
    let metric = summary.first().map(|s| s.metric.clone());
    let series: Vec<Series> = summary
        .iter()
        .filter(|s| Some(&s.metric) == metric.as_ref())
        .map(|s| Series {
            label: format!("{} {}", s.algorithm, s.config),
            points: s.points.iter().map(|p| (p.samples_seen as f64, p.median)).collect(),
        })
        .collect();
    render_svg(&series, opts)
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn value(&self, v: f64) -> f64 {
        if self.log {
            v.log10()
        } else {
            v
        }
    }

    /// Position in `[0, 1]`.
    fn frac(&self, v: f64) -> f64 {
        let span = self.hi - self.lo;
        if span <= 0.0 {
            0.5
        } else {
            (self.value(v) - self.lo) / span
        }
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        let e = v.abs().log10().floor() as i32;
        let m = v / 10f64.powi(e);
        if (m - m.round()).abs() < 1e-9 {
            format!("{}e{e}", m.round())
        } else {
            format!("{m:.1}e{e}")
        }
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Line chart with a linear x axis (samples) and optionally log-scaled y.
/// Points with non-finite values, or non-positive values on a log axis,
/// are dropped.
pub fn render_svg(series: &[Series], opts: &PlotOptions) -> String {
    let keep = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!opts.log_y || y > 0.0);
    let clean: Vec<(String, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| (s.label.clone(), s.points.iter().copied().filter(keep).collect()))
        .collect();
    let all: Vec<(f64, f64)> = clean.iter().flat_map(|(_, p)| p.iter().copied()).collect();

    let x_max = all.iter().map(|p| p.0).fold(0.0, f64::max);
    let x_axis = Axis {
        lo: 0.0,
        hi: if x_max > 0.0 { x_max } else { 1.0 },
        log: false,
    };
    let y_axis = if opts.log_y {
        let lo = all.iter().map(|p| p.1.log10()).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(|p| p.1.log10()).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() { (lo.floor(), hi.ceil()) } else { (-3.0, 0.0) };
        Axis {
            lo,
            hi: if hi > lo { hi } else { lo + 1.0 },
            log: true,
        }
    } else {
        let lo = all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
        Axis {
            lo,
            hi: if hi > lo { hi } else { lo + 1.0 },
            log: false,
        }
    };

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + x_axis.frac(x) * pw;
    let py = |y: f64| TOP + (1.0 - y_axis.frac(y)) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&opts.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    // x ticks
    let step = nice_step(x_axis.hi);
    let mut t = 0.0;
    while t <= x_axis.hi * (1.0 + 1e-9) {
        let x = px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            fmt_tick(t)
        );
        t += step;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">samples seen</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );

    // y ticks
    if y_axis.log {
        let mut e = y_axis.lo as i32;
        while e as f64 <= y_axis.hi {
            let v = 10f64.powi(e);
            let y = py(v);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
            e += 1;
        }
    } else {
        let step = nice_step(y_axis.hi - y_axis.lo);
        let mut v = (y_axis.lo / step).ceil() * step;
        while v <= y_axis.hi + 1e-12 {
            let y = py(v);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                fmt_tick(v)
            );
            v += step;
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&opts.y_label)
    );

    for (i, (label, points)) in clean.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !points.is_empty() {
            let coords: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        let ly = TOP + 10.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}
