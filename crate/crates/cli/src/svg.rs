//! Bare polyline charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

/// One series against `x`, with a dashed zero line when zero is in range.
/// Non-finite points are skipped.
pub fn line_chart(title: &str, xs: &[f64], ys: &[f64], log_x: bool) -> String {
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (tx(x), y))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (mut x0, mut x1) = bounds(pts.iter().map(|p| p.0));
    let (mut y0, mut y1) = bounds(pts.iter().map(|p| p.1));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
        y0 -= pad;
        y1 += pad;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    )
    .unwrap();
    if y0 < 0.0 && y1 > 0.0 {
        writeln!(
            s,
            r##"<line x1="{MARGIN}" x2="{}" y1="{z:.2}" y2="{z:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
            WIDTH - MARGIN,
            z = py(0.0)
        )
        .unwrap();
    }
    let label = |v: f64, log: bool| {
        if log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3e}")
        }
    };
    let small = r#"font-family="sans-serif" font-size="10""#;
    writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" {small}>{}</text>"#,
        HEIGHT - MARGIN + 16.0,
        label(x0, log_x)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" {small} text-anchor="end">{}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        label(x1, log_x)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="4" y="{}" {small}>{}</text>"#,
        MARGIN + 4.0,
        label(y1, false)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="4" y="{}" {small}>{}</text>"#,
        HEIGHT - MARGIN,
        label(y0, false)
    )
    .unwrap();
    s.push_str(r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.5" points=""##);
    for (i, (x, y)) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{:.2},{:.2}", px(*x), py(*y)).unwrap();
    }
    s.push_str("\"/>\n</svg>\n");
    s
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_has_one_point_per_finite_sample() {
        let svg = line_chart("1/J <t>", &[1.0, 10.0, 100.0], &[-1.0, f64::NAN, 2.0], true);
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 2);
        assert!(svg.contains("1/J &lt;t&gt;"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn degenerate_ranges_do_not_divide_by_zero() {
        let svg = line_chart("flat", &[2.0, 2.0], &[0.0, 0.0], false);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
        assert!(line_chart("empty", &[], &[], false).contains("</svg>"));
    }
}
