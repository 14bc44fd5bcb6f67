//! Minimal hand-rolled SVG charts.

use std::fmt::Write;

use accpulse::eval::{EvaluationReport, Timeline};
use accpulse::signal::Interval;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        PAD + (v - self.x0) / span * (W - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        H - PAD - v * (H - 2.0 * PAD)
    }
}

fn polyline(frame: &Frame, xs: &[f64], ys: &[f64]) -> String {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn axes(svg: &mut String, frame: &Frame, xlabel: &str, ylabel: &str) {
    let _ = write!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{v:.2}</text>"#,
            PAD - 6.0,
            frame.y(v) + 4.0
        );
        let xv = frame.x0 + v * (frame.x1 - frame.x0);
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{xv:.2}</text>"#,
            frame.x(xv),
            H - PAD + 16.0
        );
    }
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{xlabel}</text>"#,
        W / 2.0,
        H - 10.0
    );
    let _ = write!(
        svg,
        r#"<text x="14" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.1})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
}

fn open() -> String {
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#)
}

/// Mean ROC with its percentile band.
pub fn roc_svg(report: &EvaluationReport) -> String {
    let r = &report.roc_mean;
    let frame = Frame { x0: 0.0, x1: 1.0 };
    let mut svg = open();
    let mut band: Vec<String> = r
        .fpr
        .iter()
        .zip(&r.tpr_hi)
        .map(|(&x, &y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
        .collect();
    band.extend(
        r.fpr
            .iter()
            .zip(&r.tpr_lo)
            .rev()
            .map(|(&x, &y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y))),
    );
    let _ = write!(
        svg,
        r##"<polygon points="{}" fill="#9ab" fill-opacity="0.4"/>"##,
        band.join(" ")
    );
    let _ = write!(
        svg,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4"/>"##,
        frame.x(0.0),
        frame.y(0.0),
        frame.x(1.0),
        frame.y(1.0)
    );
    let _ = write!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#135" stroke-width="2"/>"##,
        polyline(&frame, &r.fpr, &r.tpr_mean)
    );
    if let Some(auc) = report.aggregate.get("auc") {
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="13">mean AUC {:.3} [{:.3}, {:.3}]</text>"#,
            frame.x(0.45),
            frame.y(0.1),
            auc.mean,
            auc.ci_low,
            auc.ci_high
        );
    }
    axes(&mut svg, &frame, "false positive rate", "true positive rate");
    svg.push_str("</svg>\n");
    svg
}

/// Raw and smoothed probabilities with circulation intervals shaded.
pub fn timeline_svg(timeline: &Timeline, circulation: &[Interval], span: (f64, f64)) -> String {
    let frame = Frame {
        x0: span.0,
        x1: span.1,
    };
    let mut svg = open();
    for iv in circulation {
        let (a, b) = (frame.x(iv.start_s.max(span.0)), frame.x(iv.end_s.min(span.1)));
        if b > a {
            let _ = write!(
                svg,
                r##"<rect x="{a:.2}" y="{PAD}" width="{:.2}" height="{}" fill="#cfc" fill-opacity="0.6"/>"##,
                b - a,
                H - 2.0 * PAD
            );
        }
    }
    let _ = write!(
        svg,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4"/>"##,
        frame.x(span.0),
        frame.y(0.5),
        frame.x(span.1),
        frame.y(0.5)
    );
    // snippet centers
    for p in &timeline.points {
        let _ = write!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#c60"/>"##,
            frame.x(p.start_time_s + 2.0),
            frame.y(p.probability)
        );
    }
    let mut i = 0;
    let pts = &timeline.points;
    while i < pts.len() {
        let mut j = i;
        while j < pts.len() && pts[j].pause == pts[i].pause {
            j += 1;
        }
        let xs: Vec<f64> = pts[i..j].iter().map(|p| p.start_time_s + 2.0).collect();
        let ys: Vec<f64> = pts[i..j].iter().map(|p| p.smoothed).collect();
        let _ = write!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#639" stroke-width="2"/>"##,
            polyline(&frame, &xs, &ys)
        );
        i = j;
    }
    axes(&mut svg, &frame, "time (s)", "P(spontaneous circulation)");
    svg.push_str("</svg>\n");
    svg
}
