//! Static picture of an engagement, projected on the x-y plane.

use std::fmt::Write;

use futurecone::engagement::{EngagementResult, Outcome};
use futurecone::vector::Vector;

const SIZE: f64 = 600.0;
const PAD: f64 = 30.0;

pub fn render(result: &EngagementResult, capture_radius: f64) -> String {
    let all = result.trajectory_x.iter().chain(&result.trajectory_y).map(|(_, p)| *p);
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in all {
        lo = (lo.0.min(p.x()), lo.1.min(p.y()));
        hi = (hi.0.max(p.x()), hi.1.max(p.y()));
    }
    let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-9);
    let scale = (SIZE - 2.0 * PAD) / span;
    let map = |p: &Vector| (PAD + (p.x() - lo.0) * scale, SIZE - PAD - (p.y() - lo.1) * scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (traj, color) in [(&result.trajectory_x, "#c0392b"), (&result.trajectory_y, "#2471a3")] {
        let pts: Vec<String> = traj
            .iter()
            .map(|(_, p)| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        if let Some((_, p)) = traj.first() {
            let (x, y) = map(p);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{color}"/>"#);
        }
    }
    if let (Outcome::Intercept { t }, Some((_, p))) = (result.outcome, result.trajectory_y.last()) {
        let (x, y) = map(p);
        let r = (capture_radius * scale).max(3.0);
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="none" stroke="black"><title>intercept at t = {t}</title></circle>"#
        );
    }
    let label = match result.outcome {
        Outcome::Intercept { t } => format!("intercept at t = {t:.3}"),
        Outcome::Escape => format!("escape, min separation {:.4}", result.min_separation),
    };
    let _ = writeln!(s, r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">{label}</text>"#);
    s.push_str("</svg>\n");
    s
}
