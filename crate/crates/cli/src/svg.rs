//! Self-contained SVG line chart of SSIM against cycle index.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Plots `values[k]` at cycle `k + 1` with the cycle-0 point fixed at 1.
/// The y axis spans `[min(0, lowest), 1]`.
pub fn decay_chart(values: &[f64], threshold: Option<f64>, title: &str) -> String {
    let n = values.len().max(1) as f64;
    let lowest = values
        .iter()
        .copied()
        .chain(threshold)
        .fold(0.0f64, f64::min)
        .floor();
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |cycle: f64| LEFT + plot_w * cycle / n;
    let y = |v: f64| TOP + plot_h * (1.0 - (v - lowest) / (1.0 - lowest));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // axes
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP + plot_h, TOP);
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    let steps = (5.0 * (1.0 - lowest)).round() as usize;
    for i in 0..=steps {
        let v = lowest + i as f64 * 0.2;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{yy:.2}" x2="{x0}" y2="{yy:.2}" stroke="black"/>"##,
            x0 - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            x0 - 8.0,
            yy + 4.0
        );
    }
    for c in 0..=values.len() {
        let xx = x(c as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{xx:.2}" y1="{y0}" x2="{xx:.2}" y2="{}" stroke="black"/>"#,
            y0 + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{xx:.2}" y="{}" text-anchor="middle">{c}</text>"#,
            y0 + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">cycle</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">SSIM</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    if let Some(t) = threshold {
        let yy = y(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x0}" y1="{yy:.2}" x2="{x1}" y2="{yy:.2}" stroke="gray" stroke-dasharray="6 4"/>"#
        );
    }

    let points: Vec<String> = std::iter::once(1.0)
        .chain(values.iter().copied())
        .enumerate()
        .map(|(c, v)| format!("{:.2},{:.2}", x(c as f64), y(v)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        points.join(" ")
    );
    for p in &points {
        let (px, py) = p.split_once(',').expect("formatted pair");
        let _ = writeln!(s, r#"<circle cx="{px}" cy="{py}" r="3" fill="steelblue"/>"#);
    }
    s.push_str("</svg>\n");
    s
}
