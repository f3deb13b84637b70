//! Static SVG rendering of a sweep: satisfaction ratio on the left, backhaul
//! load on the right, mean ± standard error per policy.

use std::fmt::Write as _;
use std::path::Path;

use super::config::Policy;
use super::sweep::{PolicySummary, Summary, SweepResult};
use crate::error::{Result, ResultExt};

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 56.0;
const LEGEND_H: f64 = 34.0;

fn colour(policy: Policy) -> &'static str {
    match policy {
        Policy::GroundTruth => "#1b9e77",
        Policy::Random => "#7570b3",
        Policy::Cf => "#d95f02",
        Policy::Tl => "#e7298a",
    }
}

fn marker(policy: Policy, x: f64, y: f64, fill: &str) -> String {
    match policy {
        Policy::GroundTruth => format!(r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}"/>"#),
        Policy::Random => format!(r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="{fill}"/>"#, x - 3.5, y - 3.5),
        Policy::Cf => format!(
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{fill}"/>"#,
            x,
            y - 4.5,
            x - 4.0,
            y + 3.0,
            x + 4.0,
            y + 3.0
        ),
        Policy::Tl => format!(
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{fill}"/>"#,
            x,
            y - 4.5,
            x + 4.5,
            y,
            x,
            y + 4.5,
            x - 4.5,
            y
        ),
    }
}

/// Rounds a span to 1, 2 or 5 times a power of ten.
fn nice_step(span: f64, target_ticks: usize) -> f64 {
    let raw = span / target_ticks as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let step = nice_step((hi - lo).max(1e-9), 5);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let n = ((end - start) / step).round() as usize;
    (start, end, (0..=n).map(|i| start + step * i as f64).collect())
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(
    svg: &mut String,
    result: &SweepResult,
    x0: f64,
    title: &str,
    pick: fn(&PolicySummary) -> Summary,
) {
    let grid = result.grid();
    let (xmin, xmax) = match (grid.first(), grid.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in &result.points {
        for s in &p.policies {
            let m = pick(s);
            if m.mean.is_finite() {
                lo = lo.min(m.mean - m.stderr);
                hi = hi.max(m.mean + m.stderr);
            }
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let (ylo, yhi, yticks) = ticks(lo.max(0.0), hi.min(1.0).max(lo.max(0.0) + 1e-3));
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |v: f64| x0 + MARGIN_L + (v - xmin) / (xmax - xmin) * plot_w;
    let py = |v: f64| MARGIN_T + (1.0 - (v - ylo) / (yhi - ylo)) * plot_h;

    let _ = writeln!(
        svg,
        r#"<g class="panel"><text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        esc(title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{:.2}" y="{MARGIN_T}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333"/>"##,
        x0 + MARGIN_L
    );
    for &t in &yticks {
        let y = py(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"##,
            x0 + MARGIN_L,
            x0 + MARGIN_L + plot_w,
            x0 + MARGIN_L - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let (_, _, xticks) = ticks(xmin, xmax);
    for &t in xticks.iter().filter(|&&t| t >= xmin - 1e-9 && t <= xmax + 1e-9) {
        let x = px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"##,
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0,
            MARGIN_T + plot_h + 18.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        PANEL_H - 14.0,
        esc(result.axis.label())
    );

    for policy in result.policies() {
        let c = colour(policy);
        let pts: Vec<(f64, f64, f64)> = result
            .curve(policy)
            .into_iter()
            .map(|(v, s)| {
                let m = pick(&s);
                (px(v), m.mean, m.stderr)
            })
            .collect();
        let _ = writeln!(svg, r#"<g class="curve" data-policy="{}">"#, policy.name());
        let line: Vec<String> = pts.iter().map(|&(x, m, _)| format!("{x:.2},{:.2}", py(m))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.6"/>"#, line.join(" "));
        for &(x, m, se) in &pts {
            if se > 0.0 {
                let (a, b) = (py(m - se), py(m + se));
                let _ = writeln!(
                    svg,
                    r#"<path d="M{x:.2},{a:.2}V{b:.2}M{:.2},{a:.2}H{:.2}M{:.2},{b:.2}H{:.2}" stroke="{c}"/>"#,
                    x - 3.0,
                    x + 3.0,
                    x - 3.0,
                    x + 3.0
                );
            }
            let _ = writeln!(svg, "{}", marker(policy, x, py(m), c));
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</g>");
}

/// Renders the sweep as an SVG document.
pub fn render_svg(result: &SweepResult) -> String {
    let width = 2.0 * PANEL_W;
    let height = PANEL_H + LEGEND_H;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    panel(&mut svg, result, 0.0, "Users' satisfaction ratio (eta)", |s| s.eta);
    panel(&mut svg, result, PANEL_W, "Backhaul load (rho)", |s| s.rho);

    let policies = result.policies();
    let slot = width / policies.len().max(1) as f64;
    let y = PANEL_H + LEGEND_H / 2.0;
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (i, policy) in policies.iter().enumerate() {
        let x = slot * i as f64 + 24.0;
        let c = colour(*policy);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{c}" stroke-width="1.6"/>{}<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            x - 12.0,
            x + 12.0,
            marker(*policy, x, y, c),
            x + 18.0,
            y + 4.0,
            policy.label()
        );
    }
    let _ = writeln!(
        svg,
        r##"</g>
<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10" fill="#555">R = {}</text>
</svg>"##,
        width - 8.0,
        height - 4.0,
        result.realizations
    );
    svg
}

pub fn emit_plot(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(result))
        .map_err(crate::Error::from)
        .context(format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SweepAxis;
    use crate::harness::sweep::GridPoint;

    #[test]
    fn tick_steps() {
        assert_eq!(nice_step(1.0, 5), 0.2);
        assert_eq!(nice_step(98.0, 5), 20.0);
        let (lo, hi, t) = ticks(0.13, 0.91);
        assert!(lo <= 0.13 && hi >= 0.91 && t.len() >= 3);
        assert_eq!(fmt_tick(0.30000000000000004), "0.3");
    }

    #[test]
    fn one_curve_per_policy_and_panel() {
        let s = Summary { mean: 0.4, stderr: 0.02 };
        let r = SweepResult {
            axis: SweepAxis::Beta,
            points: [2.0, 10.0]
                .iter()
                .map(|&value| GridPoint { value, policies: vec![PolicySummary { policy: Policy::Tl, eta: s, rho: s }] })
                .collect(),
            realizations: 5,
        };
        let svg = render_svg(&r);
        assert_eq!(svg.matches(r#"class="curve""#).count(), 2);
        assert!(svg.starts_with("<svg"));
    }
}
