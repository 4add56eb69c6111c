use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::sds::{AdaptationReport, EvalRow};

pub const REPORT_HEADER: &str = "iteration,fd_source,fd_target,diversity,cond_score,g_sds,g_dir,g_rec";

fn row_fields(r: &EvalRow) -> String {
    let m = &r.metrics;
    format!(
        "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
        r.iteration, m.fd_source, m.fd_target, m.diversity, m.cond_score, r.g_sds, r.g_dir, r.g_rec
    )
}

pub fn report_csv(report: &AdaptationReport) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in &report.rows {
        writeln!(out, "{}", row_fields(r)).unwrap();
    }
    out
}

/// One comparison table over several runs that differ in a single parameter.
pub fn sweep_csv(param: &str, runs: &[(String, AdaptationReport)]) -> String {
    let mut out = format!("param,value,{REPORT_HEADER}\n");
    for (value, report) in runs {
        for r in &report.rows {
            writeln!(out, "{param},{value},{}", row_fields(r)).unwrap();
        }
    }
    out
}

pub fn loss_csv(losses: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        writeln!(out, "{},{:.8e}", i + 1, l).unwrap();
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_report(path: &Path, report: &AdaptationReport) -> Result<()> {
    write_text(path, &report_csv(report))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const PLOT: f64 = 400.0;
const LEGEND_WIDTH: f64 = 180.0;
const VIEW: f64 = 5.0;

/// Scatter plot of 2-D point sets on the fixed square `[-5, 5]²`.
/// Each point is one `<circle>`; legend swatches are `<rect>`s.
pub fn scatter_svg(title: &str, sets: &[(&str, &Tensor)]) -> String {
    let px = |x: f64| (x + VIEW) / (2.0 * VIEW) * PLOT;
    let py = |y: f64| (VIEW - y) / (2.0 * VIEW) * PLOT;
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = PLOT + LEGEND_WIDTH,
        h = PLOT + 30.0
    )
    .unwrap();
    writeln!(s, "<text x=\"8\" y=\"20\" font-family=\"monospace\" font-size=\"14\">{}</text>", escape(title)).unwrap();
    writeln!(s, "<g transform=\"translate(0,30)\">").unwrap();
    writeln!(
        s,
        "<path d=\"M0 0H{p}V{p}H0Z M{c} 0V{p} M0 {c}H{p}\" fill=\"none\" stroke=\"#bbbbbb\"/>",
        p = PLOT,
        c = PLOT / 2.0
    )
    .unwrap();
    for (i, (_, pts)) in sets.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        writeln!(s, "<g fill=\"{color}\" fill-opacity=\"0.6\">").unwrap();
        for r in 0..pts.rows() {
            let row = pts.row(r);
            writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\"/>", px(row[0]), py(row[1])).unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    for (i, (label, _)) in sets.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = 16.0 + 22.0 * i as f64;
        writeln!(
            s,
            "<rect x=\"{x}\" y=\"{y0}\" width=\"12\" height=\"12\" fill=\"{color}\"/><text x=\"{tx}\" y=\"{ty}\" font-family=\"monospace\" font-size=\"12\">{}</text>",
            escape(label),
            x = PLOT + 12.0,
            y0 = y - 10.0,
            tx = PLOT + 30.0,
            ty = y
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
