//! Static SVG 1.1 charts: p-value against k, and Hill estimates with
//! confidence whiskers. Output is a pure function of the report.

use std::fmt::Write as _;

use crate::report::{HillPanel, ReportDocument};

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 360.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    top: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        MARGIN_L + (x - self.x0) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        let span = if self.y1 > self.y0 { self.y1 - self.y0 } else { 1.0 };
        self.top + MARGIN_T + (1.0 - (y - self.y0) / span) * (PANEL_HEIGHT - MARGIN_T - MARGIN_B)
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (MARGIN_L, WIDTH - MARGIN_R);
        let (t, b) = (self.top + MARGIN_T, self.top + PANEL_HEIGHT - MARGIN_B);
        let _ = writeln!(out, r##"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##, r - l, b - t);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#, (l + r) / 2.0, self.top + 22.0, escape(title));
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#, (l + r) / 2.0, b + 36.0, escape(xlabel));
        let _ = writeln!(out, r#"<text x="16" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#, (t + b) / 2.0, (t + b) / 2.0, escape(ylabel));
        for i in 0..=4 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let (x, y) = (self.px(fx), self.py(fy));
            let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/>"##, b + 5.0);
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#, b + 18.0, tick(fx));
            let _ = writeln!(out, r##"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="#444"/>"##, l - 5.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#, l - 8.0, y + 4.0, tick(fy));
        }
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders every available panel of the report, stacked vertically.
pub fn render(doc: &ReportDocument) -> String {
    let mut ks: Vec<usize> = doc.results.iter().map(|e| e.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let show_pvalues = !doc.results.is_empty() && (ks.len() > 1 || doc.hill.is_none());
    let panels = usize::from(show_pvalues) + usize::from(doc.hill.is_some());
    let height = PANEL_HEIGHT * panels.max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let mut top = 0.0;
    if show_pvalues {
        pvalue_panel(&mut out, doc, &ks, top);
        top += PANEL_HEIGHT;
    }
    if let Some(h) = &doc.hill {
        hill_panel(&mut out, h, top);
    }
    out.push_str("</svg>\n");
    out
}

fn pvalue_panel(out: &mut String, doc: &ReportDocument, ks: &[usize], top: f64) {
    let frame = Frame {
        top,
        x0: ks[0] as f64,
        x1: *ks.last().unwrap() as f64,
        y0: 0.0,
        y1: 1.0,
    };
    frame.axes(out, "p-value against k", "k", "p-value");
    let (l, r) = (MARGIN_L, WIDTH - MARGIN_R);
    let ya = frame.py(doc.alpha);
    let _ = writeln!(out, r##"<line x1="{l:.2}" y1="{ya:.2}" x2="{r:.2}" y2="{ya:.2}" stroke="#888" stroke-dasharray="6 4"/>"##);
    let _ = writeln!(out, r##"<text x="{:.2}" y="{:.2}" font-size="11" fill="#888">α = {}</text>"##, r + 6.0, ya + 4.0, doc.alpha);

    let mut tests: Vec<&str> = Vec::new();
    for e in &doc.results {
        if !tests.contains(&e.test.as_str()) {
            tests.push(&e.test);
        }
    }
    for (ti, test) in tests.iter().enumerate() {
        let color = PALETTE[ti % PALETTE.len()];
        let mut pts: Vec<(usize, Option<f64>)> = doc
            .results
            .iter()
            .filter(|e| e.test == *test)
            .map(|e| (e.k, e.report.as_ref().map(|r| r.p_value)))
            .collect();
        pts.sort_by_key(|&(k, _)| k);
        // failed k values split the curve
        for segment in pts.split(|(_, v)| v.is_none()).filter(|s| !s.is_empty()) {
            if segment.len() == 1 {
                let (k, v) = segment[0];
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, frame.px(k as f64), frame.py(v.unwrap()));
                continue;
            }
            let coords: Vec<String> = segment
                .iter()
                .map(|&(k, v)| format!("{:.2},{:.2}", frame.px(k as f64), frame.py(v.unwrap())))
                .collect();
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        }
        let ly = top + MARGIN_T + 16.0 + 18.0 * ti as f64;
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, r + 6.0, r + 26.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, r + 30.0, ly + 4.0, escape(test));
    }
}

fn hill_panel(out: &mut String, h: &HillPanel, top: f64) {
    let p = h.rows.len();
    let lo = h.rows.iter().map(|r| r.lower).fold(f64::INFINITY, f64::min);
    let hi = h.rows.iter().map(|r| r.upper).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (0.0, 1.0) };
    let pad = 0.05 * (hi - lo);
    let frame = Frame { top, x0: 0.0, x1: p as f64 + 1.0, y0: lo - pad, y1: hi + pad };
    let title = format!("Hill estimates at k = {} with {:.0}% limits", h.k, 100.0 * h.level);
    frame.axes(out, &title, "dimension", "extreme value index");
    for (j, row) in h.rows.iter().enumerate() {
        let x = frame.px(j as f64 + 1.0);
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#1f77b4"/>"##, frame.py(row.lower), frame.py(row.upper));
        let _ = writeln!(out, r##"<circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="#d62728"><title>{}</title></circle>"##, frame.py(row.gamma_hat), escape(&row.column));
    }
}
