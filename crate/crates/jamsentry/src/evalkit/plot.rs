//! Report charts as standalone SVG: accuracy bars per sweep setting with
//! 95% confidence-interval whiskers. No display dependencies; the output
//! is a deterministic function of the report.

use crate::evalkit::experiment::SweepReport;

const BAR_W: f64 = 56.0;
const GAP: f64 = 34.0;
const PLOT_H: f64 = 260.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 58.0;

fn y_of(acc: f64) -> f64 {
    MARGIN_T + PLOT_H * (1.0 - acc.clamp(0.0, 1.0))
}

/// Bar chart of mean accuracy per setting with CI whiskers.
pub fn sweep_bar_chart_svg(report: &SweepReport) -> String {
    let n = report.rows.len().max(1);
    let width = MARGIN_L + n as f64 * (BAR_W + GAP) + GAP;
    let height = MARGIN_T + PLOT_H + MARGIN_B;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{} (control: {})</text>\n",
        width / 2.0,
        xml_escape(&report.name),
        xml_escape(&report.control)
    ));
    // gridlines and y labels
    for tick in 0..=4 {
        let acc = tick as f64 * 0.25;
        let y = y_of(acc);
        s.push_str(&format!(
            "  <line x1=\"{MARGIN_L:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ccc\"/>\n",
            width - GAP
        ));
        s.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{acc:.2}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0
        ));
    }
    s.push_str(&format!(
        "  <text x=\"16\" y=\"{:.1}\" transform=\"rotate(-90 16 {:.1})\" text-anchor=\"middle\">accuracy</text>\n",
        MARGIN_T + PLOT_H / 2.0,
        MARGIN_T + PLOT_H / 2.0
    ));
    for (i, row) in report.rows.iter().enumerate() {
        let x = MARGIN_L + GAP + i as f64 * (BAR_W + GAP);
        let top = y_of(row.report.mean_accuracy);
        let base = y_of(0.0);
        s.push_str(&format!(
            "  <rect x=\"{x:.1}\" y=\"{top:.1}\" width=\"{BAR_W:.1}\" height=\"{:.1}\" fill=\"#4878a8\"/>\n",
            base - top
        ));
        // CI whisker
        let (lo, hi) = row.report.ci95;
        let (ylo, yhi) = (y_of(lo), y_of(hi));
        let cx = x + BAR_W / 2.0;
        s.push_str(&format!(
            "  <line x1=\"{cx:.1}\" y1=\"{yhi:.1}\" x2=\"{cx:.1}\" y2=\"{ylo:.1}\" stroke=\"#c03030\" stroke-width=\"2\"/>\n"
        ));
        for y in [ylo, yhi] {
            s.push_str(&format!(
                "  <line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#c03030\" stroke-width=\"2\"/>\n",
                cx - 9.0,
                cx + 9.0
            ));
        }
        s.push_str(&format!(
            "  <text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_T + PLOT_H + 20.0,
            xml_escape(&row.setting)
        ));
        s.push_str(&format!(
            "  <text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{:.3}</text>\n",
            top - 6.0,
            row.report.mean_accuracy
        ));
    }
    s.push_str(&format!(
        "  <line x1=\"{MARGIN_L:.1}\" y1=\"{:.1}\" x2=\"{MARGIN_L:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
        MARGIN_T,
        y_of(0.0)
    ));
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
