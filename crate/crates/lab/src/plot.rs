//! Self-contained SVG line plots with error bars. Output depends only on
//! the input: fixed precision, no timestamps.

use std::fmt::Write as _;

use crate::estimators::CurvePoint;

const W: f64 = 480.0;
const H: f64 = 320.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 44.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Style {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Extent with a little padding; degenerate ranges are widened.
fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Renders the series as one SVG document. With `log_y` non-positive values
/// are dropped and error bars are clipped at the smallest positive value.
pub fn render(series: &[Series], style: &Style) -> String {
    let ty = |v: f64| if style.log_y { if v > 0.0 { v.log10() } else { f64::NAN } } else { v };
    let floor = series.iter().flat_map(|s| &s.points).map(|p| p.value).filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let (x0, x1) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.t)));
    let (y0, y1) = extent(series.iter().flat_map(|s| {
        s.points.iter().flat_map(|p| {
            let lo = if style.log_y { (p.value - p.std_error).max(floor) } else { p.value - p.std_error };
            [ty(lo), ty(p.value + p.std_error)]
        })
    }));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, esc(&style.title)).unwrap();
    let (bx, by) = (LEFT, H - BOTTOM);
    writeln!(s, r#"<path d="M{bx:.1},{TOP:.1}V{by:.1}H{:.1}" stroke="black" fill="none"/>"#, W - RIGHT).unwrap();
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * f64::from(i) / 4.0;
        let fy = y0 + (y1 - y0) * f64::from(i) / 4.0;
        let ylab = if style.log_y { format!("1e{fy:.1}") } else { format!("{fy:.3}") };
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.3}</text>"#, px(fx), by + 14.0).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ylab}</text>"#, bx - 4.0, py(fy) + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 8.0, esc(&style.x_label)).unwrap();
    writeln!(s, r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#, H / 2.0, H / 2.0, esc(&style.y_label)).unwrap();

    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64, &CurvePoint)> =
            ser.points.iter().filter_map(|p| Some((px(p.t), py(ty(p.value)), p)).filter(|q| q.1.is_finite())).collect();
        if pts.len() > 1 {
            let d: Vec<String> = pts.iter().enumerate().map(|(i, (x, y, _))| format!("{}{x:.1},{y:.1}", if i == 0 { 'M' } else { 'L' })).collect();
            writeln!(s, r#"<path d="{}" stroke="{color}" fill="none"/>"#, d.join("")).unwrap();
        }
        for &(x, y, p) in &pts {
            let lo = if style.log_y { (p.value - p.std_error).max(floor) } else { p.value - p.std_error };
            let (ylo, yhi) = (py(ty(lo)), py(ty(p.value + p.std_error)));
            writeln!(s, r#"<path d="M{x:.1},{ylo:.1}V{yhi:.1}M{:.1},{ylo:.1}h6M{:.1},{yhi:.1}h6" stroke="{color}"/>"#, x - 3.0, x - 3.0).unwrap();
            writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#).unwrap();
        }
        let ly = TOP + 6.0 + 14.0 * k as f64;
        writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="10" height="3" fill="{color}"/>"#, W - RIGHT - 120.0, ly - 4.0).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, W - RIGHT - 106.0, esc(&ser.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Several plots stacked into one document.
pub fn dashboard(title: &str, panels: &[(Vec<Series>, Style)]) -> String {
    let mut s = String::new();
    let total = 40.0 + H * panels.len() as f64;
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total}" viewBox="0 0 {W} {total}" font-family="sans-serif">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{total}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{:.1}" y="26" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, esc(title)).unwrap();
    for (i, (series, style)) in panels.iter().enumerate() {
        let body = render(series, style);
        let inner = body.split_once('\n').map_or("", |x| x.1).trim_end().trim_end_matches("</svg>");
        writeln!(s, r#"<g transform="translate(0 {:.1})">"#, 40.0 + H * i as f64).unwrap();
        s.push_str(inner);
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, v: f64, e: f64) -> CurvePoint {
        CurvePoint { t, value: v, std_error: e }
    }

    #[test]
    fn single_point_has_one_marker_and_bar() {
        let svg = render(&[Series { label: "a".into(), points: vec![pt(1.0, 0.5, 0.1)] }], &Style::default());
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("h6").count(), 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn deterministic_and_labeled() {
        let series = vec![
            Series { label: "early <1-ε>".into(), points: vec![pt(10.0, 0.5, 0.01), pt(20.0, 0.6, 0.01)] },
            Series { label: "late".into(), points: vec![pt(10.0, 0.05, 0.01), pt(20.0, 0.04, 0.01)] },
        ];
        let style = Style { title: "cutoff".into(), log_y: false, ..Default::default() };
        let a = render(&series, &style);
        assert_eq!(a, render(&series, &style));
        assert!(a.contains("early &lt;1-ε&gt;") && a.contains(">late<"));
    }

    #[test]
    fn log_scale_drops_non_positive() {
        let s = vec![Series { label: "tail".into(), points: vec![pt(1.0, 0.1, 0.2), pt(2.0, 0.0, 0.0), pt(3.0, 0.01, 0.001)] }];
        let svg = render(&s, &Style { log_y: true, ..Default::default() });
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn dashboard_stacks_panels() {
        let p = (vec![Series { label: "x".into(), points: vec![pt(0.0, 1.0, 0.0)] }], Style::default());
        let d = dashboard("suite", &[p.clone(), p]);
        assert_eq!(d.matches("<g transform").count(), 2);
        assert_eq!(d.matches("<svg").count(), 1);
    }
}
