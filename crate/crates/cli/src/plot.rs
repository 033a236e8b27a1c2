//! Minimal SVG line plots. Output depends only on the input curves, so the
//! same data always renders to the same bytes.

use std::fmt::Write;

use exciton_core::curve::format_polarization;
use exciton_core::{Error, Result, ScanKind, SignalCurve};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Tick positions at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn legend(curve: &SignalCurve) -> String {
    let read = format_polarization(&curve.meta.read);
    match curve.meta.write {
        Some(w) => format!("{} / {}", format_polarization(&w), read),
        None => format!("read {read}"),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render_svg(curves: &[&SignalCurve], title: &str) -> Result<String> {
    if curves.is_empty() || curves.iter().any(|c| c.is_empty()) {
        return Err(Error::MalformedCurve("nothing to plot".into()));
    }
    let scan = curves[0].meta.scan;
    if curves.iter().any(|c| c.meta.scan != scan) {
        return Err(Error::InconsistentMetadata(
            "curves of different scan kinds".into(),
        ));
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&SignalCurve) -> &Vec<f64>| {
        curves
            .iter()
            .flat_map(|c| pick(c).iter().copied())
            .fold(init, f)
    };
    let (x0, x1) = (
        fold(f64::min, f64::INFINITY, |c| &c.abscissa),
        fold(f64::max, f64::NEG_INFINITY, |c| &c.abscissa),
    );
    let (mut y0, mut y1) = (
        fold(f64::min, f64::INFINITY, |c| &c.values).min(0.0),
        fold(f64::max, f64::NEG_INFINITY, |c| &c.values),
    );
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    y1 += pad;
    if y0 < 0.0 {
        y0 -= pad;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let w = &mut out;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for t in ticks(x0, x1) {
        let x = sx(t);
        writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 5.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 20.0,
            label(t)
        )
        .unwrap();
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        writeln!(
            w,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
            LEFT - 5.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            label(t)
        )
        .unwrap();
    }
    let x_label = match scan {
        ScanKind::Delay => "delay (ps)",
        ScanKind::AnglePhi => "phi (rad)",
        ScanKind::AngleTheta => "theta (rad)",
    };
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    )
    .unwrap();
    writeln!(w, r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">PL counts</text>"#, TOP + ph / 2.0, TOP + ph / 2.0).unwrap();

    for (k, c) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = c
            .points()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        )
        .unwrap();
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        writeln!(w, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 25.0).unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            escape(&legend(c))
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 600.0), vec![0.0, 200.0, 400.0, 600.0]);
        assert_eq!(ticks(0.0, 1.0).len(), 6);
        assert_eq!(label(0.30000000000000004), "0.3");
        assert_eq!(label(-0.0), "0");
    }
}
