//! SVG plots: the centered curve on the left axis, per-bin population bars on
//! a secondary right axis.
//!
//! Only bars are drawn as `<rect>` (two per bin for FALE, one for ALE) and
//! the curve is the single `<polyline class="curve">`; tests rely on both.
//! Output depends only on the inputs, never on time or environment.

use std::fmt::Write as _;
use std::str::FromStr;

use fale_core::{AleCurve, BinPartition, FaleCurve};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarMode {
    /// Raw in-bin counts.
    #[default]
    Counts,
    /// In-bin count over the group's total.
    Proportions,
}

impl FromStr for BarMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "counts" => Ok(BarMode::Counts),
            "proportions" => Ok(BarMode::Proportions),
            _ => Err(format!(
                "unknown bar mode `{s}` (expected counts or proportions)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub width: u32,
    pub height: u32,
    pub curve_color: String,
    /// Non-protected, protected. ALE bars use the first.
    pub bar_colors: [String; 2],
    /// Placeholders: `{baseline}` (global unfairness, 3 decimals),
    /// `{measure}`, `{feature}`. `None` picks a default per curve type.
    pub y_label: Option<String>,
    pub bar_mode: BarMode,
    pub title: Option<String>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            width: 720,
            height: 440,
            curve_color: "#1b4f9c".into(),
            bar_colors: ["#a9c1e0".into(), "#f0b27a".into()],
            y_label: None,
            bar_mode: BarMode::Counts,
            title: None,
        }
    }
}

pub const DEFAULT_FALE_LABEL: &str = "FALE, {measure} ({baseline})";
pub const DEFAULT_ALE_LABEL: &str = "ALE of {feature}";

struct BarGroup {
    name: String,
    color: String,
    values: Vec<f64>,
}

struct Plot {
    feature: String,
    categorical: bool,
    /// Tick label and x extent of each bin in data coordinates.
    bins: Vec<(String, f64, f64)>,
    /// Where each curve point sits.
    xs: Vec<f64>,
    ys: Vec<f64>,
    bars: Vec<BarGroup>,
    degenerate: Vec<bool>,
    y_label: String,
    bar_label: &'static str,
    curve_name: String,
    title: String,
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn fill_template(template: &str, baseline: Option<f64>, measure: &str, feature: &str) -> String {
    let mut s = template
        .replace("{measure}", measure)
        .replace("{feature}", feature);
    if let Some(b) = baseline {
        s = s.replace("{baseline}", &format!("{b:.3}"));
    }
    s
}

fn layout(partition: &BinPartition) -> (bool, Vec<(String, f64, f64)>, Vec<f64>) {
    match partition.boundaries() {
        Some(b) => {
            let bins = b
                .windows(2)
                .map(|w| (fmt_tick(w[1], 3), w[0], w[1]))
                .collect();
            (false, bins, b[1..].to_vec())
        }
        None => {
            let k = partition.len();
            let bins = (1..=k)
                .map(|i| (partition.high(i).to_string(), (i - 1) as f64, i as f64))
                .collect();
            let xs = (1..=k).map(|i| i as f64 - 0.5).collect();
            (true, bins, xs)
        }
    }
}

fn shares(counts: &[usize], mode: BarMode) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&c| match mode {
            BarMode::Counts => c as f64,
            BarMode::Proportions if total > 0 => c as f64 / total as f64,
            BarMode::Proportions => 0.0,
        })
        .collect()
}

fn bar_label(mode: BarMode) -> &'static str {
    match mode {
        BarMode::Counts => "instances per bin",
        BarMode::Proportions => "share of group",
    }
}

pub fn render_fale(curve: &FaleCurve, spec: &PlotSpec) -> Result<String> {
    if curve.is_empty() {
        return Err(Error::Config("cannot plot an empty curve".into()));
    }
    let (categorical, bins, xs) = layout(&curve.partition);
    let n0: Vec<usize> = curve.per_bin.iter().map(|b| b.n0).collect();
    let n1: Vec<usize> = curve.per_bin.iter().map(|b| b.n1).collect();
    let p = &curve.protected;
    let template = spec.y_label.as_deref().unwrap_or(DEFAULT_FALE_LABEL);
    let plot = Plot {
        feature: curve.feature.clone(),
        categorical,
        bins,
        xs,
        ys: curve.centered(),
        bars: vec![
            BarGroup {
                name: format!("{}={} (non-protected)", p.attribute, p.non_protected_value),
                color: spec.bar_colors[0].clone(),
                values: shares(&n0, spec.bar_mode),
            },
            BarGroup {
                name: format!("{}={} (protected)", p.attribute, p.protected_value),
                color: spec.bar_colors[1].clone(),
                values: shares(&n1, spec.bar_mode),
            },
        ],
        degenerate: curve.per_bin.iter().map(|b| b.degenerate).collect(),
        y_label: fill_template(
            template,
            Some(curve.global_unfairness),
            curve.measure.display_name(),
            &curve.feature,
        ),
        bar_label: bar_label(spec.bar_mode),
        curve_name: "FALE".into(),
        title: spec
            .title
            .clone()
            .unwrap_or_else(|| format!("FALE plot for {}", curve.feature)),
    };
    render(&plot, spec)
}

pub fn render_ale(curve: &AleCurve, spec: &PlotSpec) -> Result<String> {
    if curve.is_empty() {
        return Err(Error::Config("cannot plot an empty curve".into()));
    }
    let (categorical, bins, xs) = layout(&curve.partition);
    let template = spec.y_label.as_deref().unwrap_or(DEFAULT_ALE_LABEL);
    let plot = Plot {
        feature: curve.feature.clone(),
        categorical,
        bins,
        xs,
        ys: curve.centered.clone(),
        bars: vec![BarGroup {
            name: "instances".into(),
            color: spec.bar_colors[0].clone(),
            values: shares(&curve.bin_counts, spec.bar_mode),
        }],
        degenerate: curve.empty_bins.clone(),
        y_label: fill_template(template, None, "ALE", &curve.feature),
        bar_label: bar_label(spec.bar_mode),
        curve_name: "ALE".into(),
        title: spec
            .title
            .clone()
            .unwrap_or_else(|| format!("ALE plot for {}", curve.feature)),
    };
    render(&plot, spec)
}

fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, usize) {
    let step = nice_step(hi - lo, target);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    let values = (first..=last)
        .map(|i| {
            let v = i as f64 * step;
            if v.abs() < step * 1e-9 {
                0.0
            } else {
                v
            }
        })
        .collect();
    (values, decimals)
}

fn fmt_tick(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_owned()
    } else {
        s
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = (hi - lo) * 0.08;
    (lo - pad, hi + pad)
}

struct Scale {
    d0: f64,
    d1: f64,
    r0: f64,
    r1: f64,
}

impl Scale {
    fn at(&self, v: f64) -> f64 {
        self.r0 + (v - self.d0) / (self.d1 - self.d0) * (self.r1 - self.r0)
    }
}

fn render(plot: &Plot, spec: &PlotSpec) -> Result<String> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::Config("plot dimensions must be positive".into()));
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let (left, right, top) = (78.0, 78.0, 72.0);
    let bottom = if plot.categorical { 110.0 } else { 64.0 };
    if w <= left + right + 10.0 || h <= top + bottom + 10.0 {
        return Err(Error::Config(format!(
            "plot of {}x{} px is too small",
            spec.width, spec.height
        )));
    }
    let (x0, x1, y_top, y_bot) = (left, w - right, top, h - bottom);

    let d_lo = plot.bins.first().map(|b| b.1).unwrap_or(0.0);
    let d_hi = plot.bins.last().map(|b| b.2).unwrap_or(1.0);
    let xs = Scale {
        d0: d_lo,
        d1: if d_hi > d_lo { d_hi } else { d_lo + 1.0 },
        r0: x0,
        r1: x1,
    };

    let c_min = plot.ys.iter().cloned().fold(0.0, f64::min);
    let c_max = plot.ys.iter().cloned().fold(0.0, f64::max);
    let (c_lo, c_hi) = padded(c_min, c_max);
    let ys = Scale {
        d0: c_lo,
        d1: c_hi,
        r0: y_bot,
        r1: y_top,
    };

    let b_max = plot
        .bars
        .iter()
        .flat_map(|g| g.values.iter().cloned())
        .fold(0.0, f64::max);
    let b_hi = if b_max > 0.0 { b_max * 1.1 } else { 1.0 };
    let bs = Scale {
        d0: 0.0,
        d1: b_hi,
        r0: y_bot,
        r1: y_top,
    };

    let mut s = String::new();
    let nl = |s: &mut String| s.push('\n');
    let _ = write!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        spec.width, spec.height, spec.width, spec.height
    );
    nl(&mut s);
    let _ = write!(
        s,
        r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(&plot.title)
    );
    nl(&mut s);

    // Bars first so the curve stays on top.
    s.push_str(r#"<g class="bars">"#);
    nl(&mut s);
    let groups = plot.bars.len() as f64;
    for (k, (_, lo, hi)) in plot.bins.iter().enumerate() {
        let (px0, px1) = (xs.at(*lo), xs.at(*hi));
        let span = (px1 - px0).max(0.0);
        let inner = span * 0.8;
        let bar_w = (inner / groups).max(0.5);
        let start = px0 + (span - inner) / 2.0;
        for (g, group) in plot.bars.iter().enumerate() {
            let v = group.values[k];
            let y = bs.at(v);
            let _ = write!(
                s,
                r#"<rect class="bar g{g}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.8"><title>{}: {}</title></rect>"#,
                start + g as f64 * bar_w,
                y,
                bar_w,
                (y_bot - y).max(0.0),
                escape(&group.color),
                escape(&group.name),
                fmt_number(v)
            );
            nl(&mut s);
        }
    }
    s.push_str("</g>");
    nl(&mut s);

    // Axes.
    s.push_str(r##"<g class="axes" stroke="#333" fill="none">"##);
    nl(&mut s);
    let _ = write!(
        s,
        r#"<line x1="{x0:.2}" y1="{y_bot:.2}" x2="{x1:.2}" y2="{y_bot:.2}"/><line x1="{x0:.2}" y1="{y_top:.2}" x2="{x0:.2}" y2="{y_bot:.2}"/><line x1="{x1:.2}" y1="{y_top:.2}" x2="{x1:.2}" y2="{y_bot:.2}"/>"#
    );
    nl(&mut s);
    if c_lo < 0.0 && c_hi > 0.0 {
        let z = ys.at(0.0);
        let _ = write!(
            s,
            r##"<line class="zero" x1="{x0:.2}" y1="{z:.2}" x2="{x1:.2}" y2="{z:.2}" stroke="#999" stroke-dasharray="4 3"/>"##
        );
        nl(&mut s);
    }
    s.push_str("</g>");
    nl(&mut s);

    s.push_str(r#"<g class="ticks">"#);
    nl(&mut s);
    let (ct, cd) = ticks(c_lo, c_hi, 6);
    for v in ct {
        let y = ys.at(v);
        let _ = write!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            fmt_tick(v, cd)
        );
        nl(&mut s);
    }
    let (bt, bd) = ticks(0.0, b_hi, 5);
    for v in bt {
        let y = bs.at(v);
        let _ = write!(
            s,
            r##"<line x1="{x1:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="start">{}</text>"##,
            x1 + 5.0,
            x1 + 8.0,
            y + 4.0,
            fmt_tick(v, bd)
        );
        nl(&mut s);
    }
    if plot.categorical {
        for (label, lo, hi) in &plot.bins {
            let x = xs.at((lo + hi) / 2.0);
            let _ = write!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="end" transform="rotate(-40 {x:.2} {:.2})">{}</text>"#,
                y_bot + 14.0,
                y_bot + 14.0,
                escape(label)
            );
            nl(&mut s);
        }
    } else {
        let (xt, xd) = ticks(d_lo, d_hi, 8);
        for v in xt {
            let x = xs.at(v);
            let _ = write!(
                s,
                r##"<line x1="{x:.2}" y1="{y_bot:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                y_bot + 5.0,
                y_bot + 18.0,
                fmt_tick(v, xd)
            );
            nl(&mut s);
        }
    }
    s.push_str("</g>");
    nl(&mut s);

    let _ = write!(
        s,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        h - 14.0,
        escape(&plot.feature)
    );
    nl(&mut s);
    let ly = (y_top + y_bot) / 2.0;
    let _ = write!(
        s,
        r#"<text class="y-label" x="18" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 18 {ly:.2})">{}</text>"#,
        escape(&plot.y_label)
    );
    nl(&mut s);
    let rx = w - 16.0;
    let _ = write!(
        s,
        r#"<text class="bar-label" x="{rx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(90 {rx:.2} {ly:.2})">{}</text>"#,
        plot.bar_label
    );
    nl(&mut s);

    // Degenerate bins: dashed guide and a cross above the bin.
    if plot.degenerate.iter().any(|&d| d) {
        s.push_str(r#"<g class="degenerate">"#);
        nl(&mut s);
        for (k, (_, lo, hi)) in plot.bins.iter().enumerate() {
            if !plot.degenerate[k] {
                continue;
            }
            let x = xs.at((lo + hi) / 2.0);
            let _ = write!(
                s,
                r##"<line x1="{x:.2}" y1="{y_top:.2}" x2="{x:.2}" y2="{y_bot:.2}" stroke="#c0392b" stroke-dasharray="2 3"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" fill="#c0392b"><title>bin {} lacks one group</title>&#215;</text>"##,
                y_top - 4.0,
                k + 1
            );
            nl(&mut s);
        }
        s.push_str("</g>");
        nl(&mut s);
    }

    let points: Vec<String> = plot
        .xs
        .iter()
        .zip(&plot.ys)
        .map(|(x, y)| format!("{:.2},{:.2}", xs.at(*x), ys.at(*y)))
        .collect();
    let _ = write!(
        s,
        r#"<polyline class="curve" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
        points.join(" "),
        escape(&spec.curve_color)
    );
    nl(&mut s);
    s.push_str(r#"<g class="points">"#);
    nl(&mut s);
    for (x, y) in plot.xs.iter().zip(&plot.ys) {
        let _ = write!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"><title>{}</title></circle>"#,
            xs.at(*x),
            ys.at(*y),
            escape(&spec.curve_color),
            fmt_number(*y)
        );
        nl(&mut s);
    }
    s.push_str("</g>");
    nl(&mut s);

    // Legend with line swatches.
    s.push_str(r#"<g class="legend">"#);
    nl(&mut s);
    let mut entries = vec![(plot.curve_name.clone(), spec.curve_color.clone(), 2.0)];
    entries.extend(
        plot.bars
            .iter()
            .map(|g| (g.name.clone(), g.color.clone(), 8.0)),
    );
    let mut lx = x0 + 8.0;
    for (name, color, stroke) in entries {
        let _ = write!(
            s,
            r#"<line x1="{lx:.2}" y1="44" x2="{:.2}" y2="44" stroke="{}" stroke-width="{stroke}"/><text x="{:.2}" y="48">{}</text>"#,
            lx + 18.0,
            escape(&color),
            lx + 23.0,
            escape(&name)
        );
        nl(&mut s);
        lx += 32.0 + 6.5 * name.chars().count() as f64;
    }
    s.push_str("</g>");
    nl(&mut s);
    s.push_str("</svg>\n");
    Ok(s)
}

fn fmt_number(v: f64) -> String {
    crate::report::format_number(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_markup() {
        assert_eq!(
            escape(r#"a<b & "c">'"#),
            "a&lt;b &amp; &quot;c&quot;&gt;&apos;"
        );
    }

    #[test]
    fn ticks_are_round() {
        let (t, d) = ticks(-0.13, 0.42, 6);
        assert_eq!(d, 1);
        assert_eq!(t, vec![-0.1, 0.0, 0.1, 0.2, 0.30000000000000004, 0.4]);
        assert_eq!(fmt_tick(-0.0001, 2), "0.00");
    }

    #[test]
    fn template_fills_baseline() {
        let s = fill_template(
            DEFAULT_FALE_LABEL,
            Some(0.1774),
            "statistical parity",
            "age",
        );
        assert_eq!(s, "FALE, statistical parity (0.177)");
    }
}
