use std::fmt::Write;

use super::WaitingReport;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Paired bars of anchorage waiting per vessel, without and with prediction.
pub fn waiting_chart_svg(report: &WaitingReport<f64>, title: &str) -> String {
    let n = report.rows.len().max(1) as f64;
    let max = report
        .rows
        .iter()
        .map(|r| r.without_minutes.max(r.with_minutes))
        .fold(0.0, f64::max)
        .max(1.0);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let slot = plot_w / n;
    let bar = (slot * 0.4).max(0.5);
    let y = |m: f64| MARGIN + plot_h * (1.0 - m / max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, esc(title));
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{0}" stroke="black"/>"#,
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    );
    for i in 0..=4 {
        let m = max * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{:.0}</text>"#, MARGIN - 6.0, y(m) + 4.0, m);
    }
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {0})" text-anchor="middle">waiting (min)</text>"#,
        HEIGHT / 2.0
    );
    for (i, r) in report.rows.iter().enumerate() {
        let x0 = MARGIN + slot * i as f64 + slot * 0.1;
        for (k, (m, colour)) in [(r.without_minutes, "#c0504d"), (r.with_minutes, "#4f81bd")].into_iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"><title>{} {:.1}</title></rect>"#,
                x0 + bar * k as f64,
                y(m),
                bar,
                HEIGHT - MARGIN - y(m),
                esc(&r.vessel_id),
                m
            );
        }
    }
    let ly = HEIGHT - MARGIN + 30.0;
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{}" width="12" height="12" fill="#c0504d"/><text x="{}" y="{ly}">without prediction, total {:.0} min</text>"##,
        ly - 10.0,
        MARGIN + 18.0,
        report.total_without
    );
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="12" height="12" fill="#4f81bd"/><text x="{}" y="{ly}">with prediction, total {:.0} min ({:.1}% less)</text>"##,
        WIDTH / 2.0,
        ly - 10.0,
        WIDTH / 2.0 + 18.0,
        report.total_with,
        report.reduction_percent
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::waiting_time_report;

    #[test]
    fn one_bar_pair_per_vessel() {
        let r = waiting_time_report(&[("A".into(), 30.0), ("B".into(), 0.0)], &[("A".into(), 10.0), ("B".into(), 0.0)]).unwrap();
        let svg = waiting_chart_svg(&r, "a < b");
        assert_eq!(svg.matches("<rect x=").count(), 4 + 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
