use std::fmt::Write;

use super::EvalReport;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Charts {
    pub f1_bars: String,
    pub confusion_heatmap: String,
}

const BAR_W: f64 = 48.0;
const BAR_GAP: f64 = 16.0;
const PLOT_H: f64 = 240.0;
const LEFT: f64 = 56.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 120.0;
const CELL: f64 = 44.0;
const HEAT_LEFT: f64 = 140.0;
const HEAT_TOP: f64 = 60.0;
const HEAT_BOTTOM: f64 = 140.0;

/// Renders the per-class F1 bar chart and the confusion heatmap as
/// standalone SVG documents. With `transpose`, heatmap rows are predicted
/// classes and columns true classes.
pub fn render_charts(report: &EvalReport, transpose: bool) -> Charts {
    Charts {
        f1_bars: f1_bars(report),
        confusion_heatmap: heatmap(report, transpose),
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn name_of(report: &EvalReport, c: usize) -> String {
    escape(report.class_names.get(c).map(String::as_str).unwrap_or("?"))
}

fn f1_bars(report: &EvalReport) -> String {
    let n = report.per_class.len() as f64;
    let width = LEFT + n * (BAR_W + BAR_GAP) + BAR_GAP + 20.0;
    let height = TOP + PLOT_H + BOTTOM;
    let base = TOP + PLOT_H;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">Per-class F1 (macro {:.4})</text>"#,
        width / 2.0,
        report.macro_f1()
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let y = base - v * PLOT_H;
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            width - 20.0,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{base:.1}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">F1</text>"#,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0
    );
    for (i, m) in report.per_class.iter().enumerate() {
        let x = LEFT + BAR_GAP + i as f64 * (BAR_W + BAR_GAP);
        let h = m.f1.clamp(0.0, 1.0) * PLOT_H;
        let name = name_of(report, m.class_id);
        let _ = writeln!(
            s,
            r##"<rect class="bar" data-class="{name}" data-f1="{:.6}" x="{x:.1}" y="{:.1}" width="{BAR_W:.1}" height="{h:.1}" fill="#4c72b0"/>"##,
            m.f1,
            base - h
        );
        let lx = x + BAR_W / 2.0;
        let ly = base + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-45 {lx:.1} {ly:.1})">{name}</text>"#
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}

fn heatmap(report: &EvalReport, transpose: bool) -> String {
    let m = if transpose {
        report.confusion.transposed()
    } else {
        report.confusion.clone()
    };
    let k = m.k();
    let (row_title, col_title) = if transpose {
        ("Predicted class", "True class")
    } else {
        ("True class", "Predicted class")
    };
    let max = m
        .counts()
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let width = HEAT_LEFT + k as f64 * CELL + 20.0;
    let height = HEAT_TOP + k as f64 * CELL + HEAT_BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">Confusion matrix</text>"#,
        width / 2.0
    );
    for r in 0..k {
        let y = HEAT_TOP + r as f64 * CELL;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            HEAT_LEFT - 6.0,
            y + CELL / 2.0 + 4.0,
            name_of(report, r)
        );
        for c in 0..k {
            let x = HEAT_LEFT + c as f64 * CELL;
            let count = m.get(r, c);
            let t = count as f64 / max;
            // White to dark blue.
            let shade = |hi: f64, lo: f64| (hi + (lo - hi) * t).round() as u8;
            let (cr, cg, cb) = (shade(255.0, 8.0), shade(255.0, 48.0), shade(255.0, 107.0));
            let ink = if t > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r##"<rect class="cell" data-row="{r}" data-col="{c}" data-count="{count}" x="{x:.1}" y="{y:.1}" width="{CELL:.1}" height="{CELL:.1}" fill="#{cr:02x}{cg:02x}{cb:02x}" stroke="#ffffff"/><text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{ink}">{count}</text>"##,
                x + CELL / 2.0,
                y + CELL / 2.0 + 4.0
            );
        }
    }
    let grid_bottom = HEAT_TOP + k as f64 * CELL;
    for c in 0..k {
        let lx = HEAT_LEFT + c as f64 * CELL + CELL / 2.0;
        let ly = grid_bottom + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-45 {lx:.1} {ly:.1})">{}</text>"#,
            name_of(report, c)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-title" x="{:.1}" y="{:.1}" text-anchor="middle">{col_title}</text>"#,
        HEAT_LEFT + k as f64 * CELL / 2.0,
        height - 12.0
    );
    let mid = HEAT_TOP + k as f64 * CELL / 2.0;
    let _ = writeln!(
        s,
        r#"<text class="axis-title" x="16" y="{mid:.1}" text-anchor="middle" transform="rotate(-90 16 {mid:.1})">{row_title}</text>"#
    );
    let _ = writeln!(s, "</svg>");
    s
}
