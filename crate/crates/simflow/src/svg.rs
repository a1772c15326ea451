//! Static SVG figures drawn from report content alone.
//!
//! Output is a pure function of the report: fixed canvas sizes, coordinates
//! printed with two decimals, no timestamps or random identifiers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;
use crate::report::RunReport;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

const BAR_FILL: &str = "#9ab8d8";
const BAND_FILL: &str = "#d9d9d9";
const LINE: &str = "#1f4e79";
const MARK: &str = "#c0392b";

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="{stroke}" stroke-width="0.5"/>"#
        );
    }

    fn line(&mut self, (x1, y1): (f64, f64), (x2, y2): (f64, f64), stroke: &str, width: f64, dash: bool) {
        let dash = if dash { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"{dash}/>"#
        );
    }

    fn points(pts: &[(f64, f64)]) -> String {
        pts.iter()
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            Self::points(pts)
        );
    }

    fn polygon(&mut self, pts: &[(f64, f64)], fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" stroke="none"/>"#,
            Self::points(pts)
        );
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="{size:.1}">{}</text>"#,
            esc(s)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Step from {1, 2, 5}·10ᵏ giving roughly five intervals over `span`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Padded finite range; degenerate spans widen to ±0.5.
fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Plot area of one panel with data-to-pixel maps.
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn at(ox: f64, oy: f64, x: (f64, f64), y: (f64, f64)) -> Self {
        Frame {
            left: ox + MARGIN_L,
            top: oy + MARGIN_T,
            width: PANEL_W - MARGIN_L - MARGIN_R,
            height: PANEL_H - MARGIN_T - MARGIN_B,
            x,
            y,
        }
    }

    fn px(&self, v: f64) -> f64 {
        self.left + (v - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, v: f64) -> f64 {
        self.top + self.height - (v - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn p(&self, x: f64, y: f64) -> (f64, f64) {
        (self.px(x), self.py(y))
    }

    fn axes(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        svg.rect(l, t, w, h, "none", "#444444");
        for v in ticks(self.x.0, self.x.1) {
            let x = self.px(v);
            svg.line((x, t + h), (x, t + h + 4.0), "#444444", 0.8, false);
            svg.text(x, t + h + 15.0, &tick_label(v), "middle", 10.0);
        }
        for v in ticks(self.y.0, self.y.1) {
            let y = self.py(v);
            svg.line((l - 4.0, y), (l, y), "#444444", 0.8, false);
            svg.text(l - 6.0, y + 3.5, &tick_label(v), "end", 10.0);
        }
        svg.text(l + w / 2.0, t - 10.0, title, "middle", 12.0);
        svg.text(l + w / 2.0, t + h + 32.0, xlabel, "middle", 11.0);
        let (yx, yy) = (l - 42.0, t + h / 2.0);
        let _ = writeln!(
            svg.body,
            r#"<text x="{yx:.2}" y="{yy:.2}" text-anchor="middle" font-family="sans-serif" font-size="11.0" transform="rotate(-90 {yx:.2} {yy:.2})">{}</text>"#,
            esc(ylabel)
        );
    }
}

fn histogram_panel(
    svg: &mut Svg,
    origin: (f64, f64),
    edges: &[f64],
    counts: &[f64],
    expected: Option<f64>,
    labels: (&str, &str),
) -> Frame {
    let ymax = counts.iter().copied().chain(expected).fold(0.0, f64::max) * 1.1;
    let f = Frame::at(origin.0, origin.1, range(edges.iter().copied()), (0.0, ymax.max(1.0)));
    for (i, &c) in counts.iter().enumerate() {
        let (x0, x1) = (f.px(edges[i]), f.px(edges[i + 1]));
        let y = f.py(c);
        svg.rect(x0, y, x1 - x0, f.py(0.0) - y, BAR_FILL, "#ffffff");
    }
    if let Some(e) = expected {
        svg.line(f.p(f.x.0, e), f.p(f.x.1, e), "#555555", 1.0, true);
    }
    f.axes(svg, labels.0, labels.1, "count");
    f
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .map(|a| a.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect())
        .unwrap_or_default()
}

/// Equal-width histogram over [lo, hi].
fn bin(values: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<f64>, Vec<f64>) {
    let edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
    let mut counts = vec![0.0; bins];
    for &v in values.iter().filter(|v| v.is_finite()) {
        let k = (((v - lo) / (hi - lo)) * bins as f64)
            .floor()
            .clamp(0.0, (bins - 1) as f64) as usize;
        counts[k] += 1.0;
    }
    (edges, counts)
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

/// Histogram of p-values (top) and ECDF difference with its band (bottom).
pub fn calibration_figure(target: &Value) -> Option<String> {
    let name = target["target"].as_str().unwrap_or("target");
    let p = floats(&target["pvalues"]["values"]);
    if p.is_empty() {
        return None;
    }
    let bins = target["verdict"]["bins"].as_u64().unwrap_or(10).max(1) as usize;
    let (edges, counts) = bin(&p, 0.0, 1.0, bins);
    let mut svg = Svg::new(PANEL_W, 2.0 * PANEL_H);
    let expected = p.len() as f64 / bins as f64;
    histogram_panel(&mut svg, (0.0, 0.0), &edges, &counts, Some(expected), (name, "p-value"));

    let ecdf = &target["verdict"]["ecdf"];
    let grid = floats(&ecdf["grid"]);
    let diff = floats(&ecdf["ecdf_diff"]);
    let lower = floats(&ecdf["lower"]);
    let upper = floats(&ecdf["upper"]);
    let ylim = range(diff.iter().chain(&lower).chain(&upper).copied().chain([0.0]));
    let pad = 0.1 * (ylim.1 - ylim.0);
    let f = Frame::at(0.0, PANEL_H, (0.0, 1.0), (ylim.0 - pad, ylim.1 + pad));
    if grid.len() == lower.len() && grid.len() == upper.len() && !grid.is_empty() {
        let mut band: Vec<(f64, f64)> = grid.iter().zip(&upper).map(|(&x, &u)| f.p(x, u)).collect();
        band.extend(grid.iter().zip(&lower).rev().map(|(&x, &l)| f.p(x, l)));
        svg.polygon(&band, BAND_FILL);
    }
    svg.line(f.p(0.0, 0.0), f.p(1.0, 0.0), "#555555", 0.8, true);
    if grid.len() == diff.len() {
        let pts: Vec<(f64, f64)> = grid.iter().zip(&diff).map(|(&x, &d)| f.p(x, d)).collect();
        svg.polyline(&pts, LINE);
    }
    let inside = target["verdict"]["ecdf_inside"].as_bool().unwrap_or(false);
    f.axes(
        &mut svg,
        if inside {
            "ECDF difference (inside band)"
        } else {
            "ECDF difference (outside band)"
        },
        "fractional rank",
        "ECDF - uniform",
    );
    Some(svg.finish())
}

/// Null distribution histogram with the observed statistic marked.
pub fn null_figure(test: &Value) -> Option<String> {
    let edges = floats(&test["null_histogram"]["edges"]);
    let counts = floats(&test["null_histogram"]["counts"]);
    if counts.is_empty() || edges.len() != counts.len() + 1 {
        return None;
    }
    let observed = test["observed_stat"].as_f64();
    let name = test["statistic"].as_str().unwrap_or("statistic");
    let mut svg = Svg::new(PANEL_W, PANEL_H);
    let mut all = edges.clone();
    all.extend(observed);
    let xr = range(all);
    let ymax = counts.iter().copied().fold(0.0, f64::max) * 1.1;
    let f = Frame::at(0.0, 0.0, xr, (0.0, ymax.max(1.0)));
    for (i, &c) in counts.iter().enumerate() {
        let (x0, x1) = (f.px(edges[i]), f.px(edges[i + 1]));
        svg.rect(x0, f.py(c), x1 - x0, f.py(0.0) - f.py(c), BAR_FILL, "#ffffff");
    }
    if let Some(o) = observed {
        svg.line(f.p(o, f.y.0), f.p(o, f.y.1), MARK, 2.0, false);
    }
    let title = match test["p_value"].as_f64() {
        Some(p) => format!("null distribution of {name}, p = {p:.4}"),
        None => format!("null distribution of {name}"),
    };
    f.axes(&mut svg, &title, name, "count");
    Some(svg.finish())
}

/// Replication statistics with the observed value or plausible region.
pub fn predictive_figure(pred: &Value, region: Option<(f64, f64)>) -> Option<String> {
    let reps = floats(&pred["replication_stats"]);
    if reps.is_empty() {
        return None;
    }
    let observed = pred["observed_stat"].as_f64();
    let name = pred["statistic"].as_str().unwrap_or("statistic");
    let mut xs = reps.clone();
    xs.extend(observed);
    let (lo, hi) = range(xs);
    let (edges, counts) = bin(&reps, lo, hi, 40);
    let mut svg = Svg::new(PANEL_W, PANEL_H);
    let f = histogram_panel(&mut svg, (0.0, 0.0), &edges, &counts, None, (name, name));
    if let Some((a, b)) = region {
        for v in [a, b].into_iter().filter(|v| v.is_finite() && (lo..=hi).contains(v)) {
            svg.line(f.p(v, f.y.0), f.p(v, f.y.1), "#2e7d32", 1.5, true);
        }
    }
    if let Some(o) = observed {
        svg.line(f.p(o, f.y.0), f.p(o, f.y.1), MARK, 2.0, false);
    }
    Some(svg.finish())
}

pub fn pvalue_figure(title: &str, p: &[f64]) -> Option<String> {
    if p.is_empty() {
        return None;
    }
    let (edges, counts) = bin(p, 0.0, 1.0, 20);
    let mut svg = Svg::new(PANEL_W, PANEL_H);
    histogram_panel(&mut svg, (0.0, 0.0), &edges, &counts, None, (title, "p-value"));
    Some(svg.finish())
}

pub fn trace_figure(trace: &[f64]) -> Option<String> {
    let vals: Vec<f64> = trace.iter().map(|v| v.max(1e-300).log10()).collect();
    if vals.is_empty() {
        return None;
    }
    let mut svg = Svg::new(PANEL_W, PANEL_H);
    let f = Frame::at(
        0.0,
        0.0,
        (0.0, (vals.len().max(2) - 1) as f64),
        range(vals.iter().copied()),
    );
    let pts: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, &v)| f.p(i as f64, v)).collect();
    svg.polyline(&pts, LINE);
    f.axes(&mut svg, "elicitation loss", "iteration", "log10 loss");
    Some(svg.finish())
}

/// File name and SVG text of every figure the report supports. Payloads
/// with nothing to plot produce a warning instead.
pub fn figures(report: &RunReport) -> (Vec<(String, String)>, Vec<String>) {
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    let r = &report.results;
    let mut push = |name: String, svg: Option<String>, what: &str| match svg {
        Some(s) => out.push((name, s)),
        None => warnings.push(format!("{what}: nothing to plot, no figure written")),
    };
    match report.command.as_str() {
        "sbc" | "post-sbc" | "freq-calibrate" => {
            for t in r["calibration"]["targets"].as_array().into_iter().flatten() {
                let name = t["target"].as_str().unwrap_or("target");
                push(
                    format!("calibration_{}.svg", file_stem(name)),
                    calibration_figure(t),
                    &format!("p-values of {name}"),
                );
            }
        }
        "test" => push("test_null.svg".into(), null_figure(&r["test"]), "null distribution"),
        "ppc" | "prior-check" => {
            let region = r["region"]["lower"].as_f64().zip(r["region"]["upper"].as_f64());
            push(
                "predictive.svg".into(),
                predictive_figure(&r["predictive"], region),
                "replication statistics",
            );
        }
        "power" => push(
            "power_pvalues.svg".into(),
            pvalue_figure(
                "p-values under the alternative",
                &floats(&r["power"]["pvalues"]["values"]),
            ),
            "power p-values",
        ),
        "elicit" => push(
            "elicit_loss.svg".into(),
            trace_figure(&floats(&r["elicitation"]["loss_trace"])),
            "loss trace",
        ),
        other => warnings.push(format!("no figure type for {other} reports; skipped")),
    }
    (out, warnings)
}

/// Writes every figure of `report` into `dir`.
pub fn render(report: &RunReport, dir: &Path) -> Result<(Vec<PathBuf>, Vec<String>), CliError> {
    let (figs, warnings) = figures(report);
    let mut written = Vec::new();
    for (name, text) in figs {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok((written, warnings))
}
