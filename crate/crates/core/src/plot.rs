//! Static SVG figures. Purely derived from finished results.

use std::fmt::Write as _;

use crate::coop::CoopState;
use crate::experiment::{ExperimentReport, Phase};
use crate::planner::{BezierPath, Vec2};
use crate::sim::StepRecord;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 40.0;

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

fn state_colour(s: Option<CoopState>) -> &'static str {
    match s {
        Some(CoopState::DriverLedCooperative) => "#2a9d8f",
        Some(CoopState::DriverLedUncooperative) => "#e76f51",
        Some(CoopState::SystemLed) => "#457b9d",
        Some(CoopState::Passive) => "#8d99ae",
        Some(CoopState::DeadZone) => "#e9ecef",
        None => "#ffffff",
    }
}

/// Planned path (dashed) and driven trace in the ground plane, equal axis
/// scaling.
pub fn trajectory_svg(path: &BezierPath, records: &[StepRecord]) -> String {
    let planned: Vec<Vec2> = (0..=200).map(|i| path.point(i as f64 / 200.0)).collect();
    let driven: Vec<Vec2> = records.iter().map(|r| Vec2::new(r.x, r.y)).collect();
    let all = planned.iter().chain(driven.iter());
    let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in all {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-6);
    let scale = ((W - 2.0 * PAD) / span).min((H - 2.0 * PAD) / span);
    let map = |p: &Vec2| (PAD + (p.x - lo.x) * scale, H - PAD - (p.y - lo.y) * scale);
    let poly = |pts: &[Vec2]| {
        pts.iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut out = String::new();
    header(&mut out, W, H);
    let _ = writeln!(
        out,
        r##"<polyline points="{}" fill="none" stroke="#264653" stroke-width="2" stroke-dasharray="6 4"/>"##,
        poly(&planned)
    );
    if !driven.is_empty() {
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#e76f51" stroke-width="1.5"/>"##,
            poly(&driven)
        );
    }
    let (gx, gy) = map(&path.end());
    let _ = writeln!(out, r##"<circle cx="{gx:.2}" cy="{gy:.2}" r="4" fill="#264653"/>"##);
    let _ = writeln!(out, r#"<text x="{PAD}" y="20">planned (dashed) and driven path, span {span:.2} m</text>"#);
    out.push_str("</svg>\n");
    out
}

/// One coloured cell per record along the time axis.
pub fn state_timeline_svg(records: &[StepRecord]) -> String {
    let h = 120.0;
    let mut out = String::new();
    header(&mut out, W, h);
    let n = records.len().max(1) as f64;
    let cell = (W - 2.0 * PAD) / n;
    for (i, r) in records.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="30" width="{:.3}" height="40" fill="{}"/>"#,
            PAD + i as f64 * cell,
            cell.max(0.5),
            state_colour(r.state)
        );
    }
    let labels = [
        CoopState::DriverLedCooperative,
        CoopState::DriverLedUncooperative,
        CoopState::SystemLed,
        CoopState::Passive,
        CoopState::DeadZone,
    ];
    for (i, s) in labels.iter().enumerate() {
        let x = PAD + i as f64 * 70.0;
        let _ = writeln!(
            out,
            r##"<rect x="{x}" y="88" width="12" height="12" fill="{}" stroke="#999"/><text x="{}" y="99">{}</text>"##,
            state_colour(Some(*s)),
            x + 16.0,
            s.label()
        );
    }
    if let (Some(a), Some(b)) = (records.first(), records.last()) {
        let _ = writeln!(out, r#"<text x="{PAD}" y="20">cooperative state, t = {:.2} to {:.2} s</text>"#, a.t, b.t);
    }
    out.push_str("</svg>\n");
    out
}

/// Mean rms error per phase and condition with one-deviation whiskers.
pub fn phase_error_svg(report: &ExperimentReport) -> String {
    let mut out = String::new();
    header(&mut out, W, H);
    let groups = report.conditions.len().max(1);
    let top = report
        .conditions
        .iter()
        .flat_map(|c| c.phases.iter().map(|p| p.aggregate.rms_e.mean + p.aggregate.rms_e.std))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let plot_h = H - 2.0 * PAD - 20.0;
    let group_w = (W - 2.0 * PAD) / groups as f64;
    let bar_w = group_w / (Phase::ALL.len() as f64 + 1.0);
    let colours = ["#8d99ae", "#2a9d8f", "#e9c46a", "#f4a261"];
    let y_of = |v: f64| H - PAD - v / top * plot_h;
    for (gi, c) in report.conditions.iter().enumerate() {
        for (pi, p) in c.phases.iter().enumerate() {
            let x = PAD + gi as f64 * group_w + (pi as f64 + 0.5) * bar_w;
            let m = p.aggregate.rms_e.mean;
            let s = p.aggregate.rms_e.std;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                y_of(m),
                bar_w * 0.9,
                (H - PAD - y_of(m)).max(0.0),
                colours[pi % colours.len()]
            );
            let cx = x + bar_w * 0.45;
            let _ = writeln!(
                out,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                y_of(m + s),
                y_of((m - s).max(0.0))
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">condition {}</text>"#,
            PAD + gi as f64 * group_w + bar_w,
            H - PAD + 16.0,
            c.condition
        );
    }
    for (pi, p) in Phase::ALL.iter().enumerate() {
        let x = PAD + pi as f64 * 120.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="12" width="12" height="12" fill="{}"/><text x="{}" y="23">{}</text>"#,
            colours[pi],
            x + 16.0,
            p.label()
        );
    }
    let _ = writeln!(out, r#"<text x="4" y="{:.2}">rms e (max {:.3} m)</text>"#, PAD + 10.0, top);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svgs_are_well_formed_enough() {
        let path = BezierPath::new([
            Vec2::new(0.0, 0.0),
            Vec2::new(-3.0, 0.0),
            Vec2::new(-6.0, -1.0),
            Vec2::new(-6.0, -4.0),
        ]);
        let s = trajectory_svg(&path, &[]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        let t = state_timeline_svg(&[]);
        assert!(t.contains("</svg>"));
    }
}
