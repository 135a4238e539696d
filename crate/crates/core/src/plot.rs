//! Minimal SVG plots, each a pure function of CSV text written by the
//! runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Half-width of the square shown in zero plots.
pub const VIEW_RADIUS: f64 = 2.5;
pub const HEATMAP_CELLS: usize = 48;

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Rows of a CSV file as string fields, skipping `#` comments and the
/// header.
pub fn read_rows(text: &str) -> Vec<Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.trim().parse().unwrap_or(f64::NAN)
}

/// `(kind, p)` panels present in `zeros.csv`, keeping the largest `p` per
/// kind.
pub fn zero_panels(zeros_csv: &str) -> Vec<(String, usize)> {
    let mut best: BTreeMap<String, usize> = BTreeMap::new();
    for r in read_rows(zeros_csv) {
        if let (Some(k), Some(p)) = (r.first(), r.get(1).and_then(|p| p.parse::<usize>().ok())) {
            let e = best.entry(k.to_string()).or_insert(p);
            *e = (*e).max(p);
        }
    }
    best.into_iter().collect()
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Zeros of one `(kind, p)` panel over the curvature density heatmap.
pub fn zeros_svg(curvature_csv: &str, zeros_csv: &str, kind: &str, p: usize) -> String {
    let side = H - 2.0 * MARGIN;
    let x0 = (W - side) / 2.0;
    let y0 = MARGIN;
    let to_px = |re: f64, im: f64| {
        (
            x0 + (re + VIEW_RADIUS) / (2.0 * VIEW_RADIUS) * side,
            y0 + (VIEW_RADIUS - im) / (2.0 * VIEW_RADIUS) * side,
        )
    };
    let mut svg = header(&format!("zeros of random sections ({kind}, p = {p}) over curvature density"));
    let cells: Vec<(f64, f64, f64)> = read_rows(curvature_csv)
        .iter()
        .filter(|r| r.len() >= 3)
        .map(|r| (num(r[0]), num(r[1]), num(r[2])))
        .collect();
    let top = cells.iter().map(|c| c.2).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let cell = side / HEATMAP_CELLS as f64;
    for &(re, im, v) in &cells {
        let t = if top > 0.0 && v.is_finite() { (v / top).clamp(0.0, 1.0).sqrt() } else { 0.0 };
        let shade = (255.0 * (1.0 - 0.8 * t)) as u8;
        let (cx, cy) = to_px(re, im);
        let _ = writeln!(
            svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb(255,{shade},{shade})\"/>",
            cx - cell / 2.0,
            cy - cell / 2.0,
            cell + 0.1,
            cell + 0.1
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{x0}\" y=\"{y0}\" width=\"{side}\" height=\"{side}\" fill=\"none\" stroke=\"black\"/>"
    );
    let ps = p.to_string();
    for r in read_rows(zeros_csv) {
        if r.len() < 6 || r[0] != kind || r[1] != ps {
            continue;
        }
        let (re, im) = (num(r[3]), num(r[4]));
        if re.abs() > VIEW_RADIUS || im.abs() > VIEW_RADIUS {
            continue;
        }
        let (cx, cy) = to_px(re, im);
        let _ = writeln!(svg, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"1.2\" fill=\"#1f3b73\"/>");
    }
    let _ = writeln!(
        svg,
        "<text x=\"{x0}\" y=\"{}\">[-{VIEW_RADIUS}, {VIEW_RADIUS}]²</text>",
        y0 + side + 16.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Series `(kind → [(p, value)])` for one series name of `report.csv`.
fn series(report_csv: &str, name: &str) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in read_rows(report_csv) {
        if r.len() >= 4 && r[0] == name {
            out.entry(r[1].to_string()).or_default().push((num(r[2]), num(r[3])));
        }
    }
    out
}

/// Log–log line chart with a least-squares line per series.
fn loglog(title: &str, ylabel: &str, data: &BTreeMap<String, Vec<(f64, f64)>>) -> String {
    let mut svg = header(title);
    let pts: Vec<(f64, f64)> = data
        .values()
        .flatten()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.is_empty() {
        svg.push_str("<text x=\"240\" y=\"180\" text-anchor=\"middle\">no data</text>\n</svg>\n");
        return svg;
    }
    let (mut xa, mut xb, mut ya, mut yb) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        xa = xa.min(x);
        xb = xb.max(x);
        ya = ya.min(y);
        yb = yb.max(y);
    }
    let pad = |a: f64, b: f64| if b - a < 1e-9 { (a - 0.5, b + 0.5) } else { (a - 0.05 * (b - a), b + 0.05 * (b - a)) };
    let (xa, xb) = pad(xa, xb);
    let (ya, yb) = pad(ya, yb);
    let px = |x: f64| MARGIN + (x - xa) / (xb - xa) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - ya) / (yb - ya) * (H - 2.0 * MARGIN);
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">log p</text>", W / 2.0, H - 12.0);
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">log {}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for (i, (name, raw)) in data.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let s: Vec<(f64, f64)> = raw
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
            .map(|&(x, y)| (x.ln(), y.ln()))
            .collect();
        for &(x, y) in &s {
            let _ = writeln!(svg, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>", px(x), py(y));
        }
        let mut label = name.clone();
        if s.len() >= 2 {
            let n = s.len() as f64;
            let mx = s.iter().map(|p| p.0).sum::<f64>() / n;
            let my = s.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = s.iter().map(|p| (p.0 - mx).powi(2)).sum();
            if sxx > 0.0 {
                let slope = s.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
                let (a, b) = (s.first().unwrap().0, s.last().unwrap().0);
                let _ = writeln!(
                    svg,
                    "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\"/>",
                    px(a),
                    py(my + slope * (a - mx)),
                    px(b),
                    py(my + slope * (b - mx))
                );
                let _ = write!(label, " (slope {slope:.3})");
            }
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            MARGIN + 8.0,
            MARGIN + 16.0 + 14.0 * i as f64,
            escape(&label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Kernel minimum on the evaluation disk against `p`.
pub fn kernel_fit_svg(report_csv: &str) -> String {
    loglog("kernel minimum on the evaluation disk", "min P_p", &series(report_csv, "min_kernel"))
}

/// `(1/p) ‖log P_p‖_{L¹}` against `p` for every kind.
pub fn l1_decay_svg(report_csv: &str) -> String {
    loglog("L1 norm of (1/p) log P_p", "L1", &series(report_csv, "l1_log_kernel"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const REPORT: &str = "# config_hash: x\nseries,kind,p,value\nmin_kernel,w,2,1.0\nmin_kernel,w,4,2.0\nmin_kernel,w,8,4.0\nl1_log_kernel,w,2,1\n";

    #[test]
    fn rows_skip_comments_and_header() {
        let rows = read_rows(REPORT);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0], vec!["min_kernel", "w", "2", "1.0"]);
    }

    #[test]
    fn fit_line_in_plot() {
        let svg = kernel_fit_svg(REPORT);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("slope 1.000"), "{svg}");
    }

    #[test]
    fn plots_are_pure() {
        assert_eq!(l1_decay_svg(REPORT), l1_decay_svg(REPORT));
        let z = "# h\nkind,p,sample_index,re,im,multiplicity\nw,2,0,0.5,0.5,1\nw,4,0,0.1,0.1,1\nregular,2,0,9,9,1\n";
        assert_eq!(zero_panels(z), vec![("regular".to_string(), 2), ("w".to_string(), 4)]);
        let c = "# h\nre,im,density\n0,0,1\n";
        let svg = zeros_svg(c, z, "w", 4);
        assert_eq!(svg.matches("<circle").count(), 1);
    }
}
