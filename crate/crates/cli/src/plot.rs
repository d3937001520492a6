//! Static SVG rate plots: grid-point means with error bars against `log2 N`,
//! overlaid with the reference bound when one exists.

use std::fmt::Write;

use tensorconc::experiments::GridSummary;

use crate::format::sig6;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn rate_plot_svg(summary: &[GridSummary]) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let pts: Vec<&GridSummary> = summary.iter().filter(|g| g.mean.is_finite() && g.n > 0).collect();
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let xs: Vec<f64> = pts.iter().map(|g| (g.n as f64).log2()).collect();
    let se = |g: &GridSummary| if g.stderr.is_finite() { g.stderr } else { 0.0 };
    let mut ys: Vec<f64> = pts.iter().flat_map(|g| [g.mean - se(g), g.mean + se(g)]).collect();
    ys.extend(pts.iter().filter_map(|g| g.bound));
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let y0 = y0.min(0.0);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let title = format!("{} ({})", pts[0].statistic, pts[0].experiment_id);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {t} L{m} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for (&x, g) in xs.iter().zip(&pts) {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            sx(x),
            HEIGHT - MARGIN + 16.0,
            g.n
        );
    }
    for y in [y0, (y0 + y1) / 2.0, y1] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            MARGIN - 6.0,
            sy(y) + 4.0,
            sig6(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">N (log scale)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0
    );

    let bound: Vec<(f64, f64)> = xs.iter().zip(&pts).filter_map(|(&x, g)| g.bound.map(|b| (sx(x), sy(b)))).collect();
    if bound.len() > 1 {
        let d: Vec<String> = bound.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" stroke="firebrick" stroke-dasharray="6 4" fill="none"/>"#,
            d.join(" ")
        );
    }
    let line: Vec<String> = xs.iter().zip(&pts).map(|(&x, g)| format!("{:.2},{:.2}", sx(x), sy(g.mean))).collect();
    let _ = writeln!(svg, r#"<polyline points="{}" stroke="navy" fill="none"/>"#, line.join(" "));
    for (&x, g) in xs.iter().zip(&pts) {
        let (cx, lo, hi) = (sx(x), sy(g.mean - se(g)), sy(g.mean + se(g)));
        let _ = writeln!(svg, r#"<line x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}" stroke="navy"/>"#);
        let _ = writeln!(svg, r#"<circle cx="{cx:.2}" cy="{:.2}" r="3" fill="navy"/>"#, sy(g.mean));
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="navy">mean ± stderr</text>"#,
        WIDTH - MARGIN - 130.0,
        MARGIN
    );
    if bound.len() > 1 {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="firebrick">reference bound</text>"#,
            WIDTH - MARGIN - 130.0,
            MARGIN + 14.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: u64, mean: f64, bound: Option<f64>) -> GridSummary {
        GridSummary {
            experiment_id: "e<1>".into(),
            n,
            statistic: "maxprod_stat(s=1)".into(),
            mean,
            stderr: 0.01,
            bound,
            ratio: bound.map(|b| mean / b),
            converged_fraction: 1.0,
            trials: 8,
            low_confidence: false,
        }
    }

    #[test]
    fn plot_has_points_and_overlay() {
        let s = vec![row(16, 1.0, Some(1.5)), row(64, 1.3, Some(2.0)), row(256, 1.5, Some(2.4))];
        let svg = rate_plot_svg(&s);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("e&lt;1&gt;"));
    }

    #[test]
    fn single_point_and_empty_inputs() {
        let svg = rate_plot_svg(&[row(16, 1.0, None)]);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("stroke-dasharray"));
        assert!(rate_plot_svg(&[]).contains("</svg>"));
    }
}
