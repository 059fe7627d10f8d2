//! Minimal self-contained SVG rendering for line plots and action maps.

use std::fmt::Write;

use crate::mdp::{Action, ExtractedStructure, PolicyGrid};
use crate::params::SystemParams;

use super::TradeoffCurve;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 10] = [
    "#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#b07aa1", "#76b7b2", "#edc948", "#ff9da7",
    "#9c755f", "#bab0ac",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    mag * if norm < 1.5 { 1.0 } else if norm < 3.5 { 2.0 } else if norm < 7.5 { 5.0 } else { 10.0 }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step((hi - lo).max(1e-12));
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut dec = 10f64.powf(lo.log10().floor());
    while dec <= hi {
        for m in [1.0, 2.0, 5.0] {
            let t = dec * m;
            if t >= lo * (1.0 - 1e-9) && t <= hi * (1.0 + 1e-9) {
                out.push(t);
            }
        }
        dec *= 10.0;
    }
    out
}

/// Line plot with an optional logarithmic x axis.
#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<TradeoffCurve>,
}

impl LinePlot {
    pub fn render(&self) -> String {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (1.0, 10.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let (fx0, fx1) = if self.log_x { (x0.ln(), x1.ln()) } else { (x0, x1) };
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| {
            let v = if self.log_x { x.ln() } else { x };
            LEFT + (v - fx0) / (fx1 - fx0) * pw
        };
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = header(&self.title);
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let xt = if self.log_x { log_ticks(x0, x1) } else { linear_ticks(x0, x1) };
        for t in xt {
            let x = sx(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                tick_label(t)
            );
        }
        for t in linear_ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle" font-size="13">{}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                path.join(" ")
            );
            for &(x, y) in &series.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{:.2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

/// `F*(omega)` against a logarithmic weight axis.
pub fn weighted_cost_svg(title: &str, curves: &[TradeoffCurve]) -> String {
    LinePlot {
        title: title.into(),
        x_label: "omega".into(),
        y_label: "minimum weighted cost".into(),
        log_x: true,
        series: curves.to_vec(),
    }
    .render()
}

/// Average age against average energy.
pub fn tradeoff_svg(title: &str, curves: &[TradeoffCurve]) -> String {
    LinePlot {
        title: title.into(),
        x_label: "average energy per slot".into(),
        y_label: "average age at receiver".into(),
        log_x: false,
        series: curves.to_vec(),
    }
    .render()
}

fn action_color(a: Action) -> &'static str {
    match a {
        Action::Sleep => "#d9d9d9",
        Action::Retransmit => "#4e79a7",
        Action::SenseTransmit => "#e15759",
        Action::SenseOnly => "#f28e2b",
    }
}

/// Action map over `(i, j)` with `i` to the right and `j` upwards. States with
/// `i > j` (unreachable) are faded; dashed lines mark the thresholds.
pub fn policy_map_svg(
    policy: &PolicyGrid,
    structure: &ExtractedStructure,
    params: &SystemParams,
    margin: usize,
) -> String {
    let n = policy.i_max.min(policy.j_max).saturating_sub(margin).max(1);
    let side = HEIGHT - TOP - BOTTOM;
    let cell = side / n as f64;
    let x_of = |i: usize| LEFT + (i - 1) as f64 * cell;
    let y_of = |j: usize| TOP + (n - j) as f64 * cell;
    let title = format!(
        "p={}, Es={}, Et={}, omega={}, alpha={}: theta_t={}, theta_r={}",
        params.p, params.e_s, params.e_t, params.omega, params.alpha, structure.theta_t, structure.theta_r
    );
    let mut s = header(&title);
    for j in 1..=n {
        for i in 1..=n {
            let a = policy.get(i, j);
            let opacity = if i > j { 0.3 } else { 1.0 };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="{opacity}" stroke="white" stroke-width="0.5"/>"#,
                x_of(i),
                y_of(j),
                cell,
                cell,
                action_color(a)
            );
        }
    }
    let tx = x_of(structure.theta_t as usize);
    let ry = y_of(structure.theta_r as usize) + cell;
    if (structure.theta_t as usize) <= n {
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.2}" y1="{TOP}" x2="{tx:.2}" y2="{:.2}" stroke="black" stroke-dasharray="5,3"/>"#,
            TOP + side
        );
    }
    if (structure.theta_r as usize) <= n {
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{ry:.2}" x2="{:.2}" y2="{ry:.2}" stroke="black" stroke-dasharray="5,3"/>"#,
            LEFT + side
        );
    }
    let step = (n / 10).max(1);
    for k in (1..=n).filter(|k| k % step == 0 || *k == 1) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{k}</text><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{k}</text>"#,
            x_of(k) + cell / 2.0,
            TOP + side + 14.0,
            LEFT - 4.0,
            y_of(k) + cell / 2.0 + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">AoI at transmitter (i)</text><text transform="translate(22 {:.2}) rotate(-90)" text-anchor="middle" font-size="13">AoI at receiver (j)</text>"#,
        LEFT + side / 2.0,
        HEIGHT - 12.0,
        TOP + side / 2.0
    );
    let lx = LEFT + side + 30.0;
    for (k, a) in Action::EXTENDED.iter().enumerate() {
        let ly = TOP + 10.0 + 22.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{ly:.2}" width="14" height="14" fill="{}"/><text x="{:.2}" y="{:.2}" font-size="12">{a}</text>"#,
            action_color(*a),
            lx + 20.0,
            ly + 11.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{lx:.2}" y="{:.2}" font-size="12">theta_t={}, theta_r={}</text>"#,
        TOP + 110.0,
        structure.theta_t,
        structure.theta_r
    );
    s.push_str("</svg>\n");
    s
}
