//! Static SVG figures: trace heatmaps, channel line plots, peak-marker plots,
//! feature scatter panels and the palm comparison chart.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::features::{detect_peaks, feature_index, peak_threshold, smooth, FeatureConfig, FeatureMatrix};
use crate::procedure::{Fig2Report, SensorTrace, Shape};
use crate::scalar::Real;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn shape_colour(s: Shape) -> &'static str {
    match s {
        Shape::Circle => "#1f77b4",
        Shape::Hexagon => "#2ca02c",
        Shape::Square => "#d62728",
    }
}

/// Viridis-like ramp through five anchor colours, `t` in `[0, 1]`.
pub fn colour_ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Linear map from a data box onto a pixel box; y grows upwards in data space.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64), left: f64, top: f64, width: f64, height: f64) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x);
        let (y0, y1) = widen(y);
        Self {
            x0,
            x1,
            y0,
            y1,
            left,
            top,
            width,
            height,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + (1.0 - (y - self.y0) / (self.y1 - self.y0)) * self.height
    }

    fn axes(&self, svg: &mut String, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(
            svg,
            r##"<rect x="{l}" y="{t}" width="{w}" height="{h}" fill="none" stroke="#333"/>"##
        );
        for k in 0..=4 {
            let fx = self.x0 + (self.x1 - self.x0) * k as f64 / 4.0;
            let fy = self.y0 + (self.y1 - self.y0) * k as f64 / 4.0;
            let (x, y) = (self.px(fx), self.py(fy));
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
                t + h,
                t + h + 4.0,
                t + h + 15.0,
                tick(fx)
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{l:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
                l - 4.0,
                l - 6.0,
                y + 3.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            l + w / 2.0,
            t + h + 32.0,
            esc(xlabel)
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate({:.1},{:.1}) rotate(-90)" font-size="12" text-anchor="middle">{}</text>"#,
            l - 42.0,
            t + h / 2.0,
            esc(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn open(width: f64, height: f64, title: &str) -> String {
    let mut s = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    s.push('\n');
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        esc(title)
    );
    s
}

fn close(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

fn polyline(svg: &mut String, frame: &Frame, xs: &[f64], ys: &[f64], colour: &str, extra: &str) {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.2" {extra}/>"#,
        pts.join(" ")
    );
}

fn check_channels(channels: &[usize], count: usize) -> Result<()> {
    match channels.iter().find(|&&c| c >= count) {
        Some(&index) => Err(Error::UnknownChannel { index, count }),
        None => Ok(()),
    }
}

fn trace_title<T: Real>(trace: &SensorTrace<T>, what: &str) -> String {
    format!("{what}: {} (seed {})", trace.meta.label, trace.meta.seed)
}

/// Channel-vs-time heatmap; brightness is pressure on a fixed `[0, 1]` scale.
pub fn heatmap<T: Real>(trace: &SensorTrace<T>) -> String {
    let (w, h) = (900.0, 360.0);
    let mut svg = open(w, h, &trace_title(trace, "Pressure heatmap"));
    let channels = trace.channel_count();
    let n = trace.len();
    let duration = trace.duration().as_f64();
    let frame = Frame::new((0.0, duration.max(1e-9)), (0.5, channels as f64 + 0.5), 70.0, 35.0, 760.0, 270.0);
    let bins = n.clamp(1, 450);
    let row_h = frame.height / channels.max(1) as f64;
    let bin_w = frame.width / bins as f64;
    for c in 0..channels {
        let series = trace.channel(c);
        for b in 0..bins {
            let lo = b * n / bins;
            let hi = ((b + 1) * n / bins).max(lo + 1).min(n);
            let v = if lo < n {
                series[lo..hi].iter().map(|v| v.as_f64()).sum::<f64>() / (hi - lo) as f64
            } else {
                0.0
            };
            // sensor 1 drawn at the top
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                frame.left + b as f64 * bin_w,
                frame.top + c as f64 * row_h,
                bin_w + 0.05,
                row_h + 0.05,
                colour_ramp(v)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">s{}</text>"#,
            frame.left - 6.0,
            frame.top + (c as f64 + 0.6) * row_h,
            c + 1
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        frame.left, frame.top, frame.width, frame.height
    );
    for k in 0..=4 {
        let t = duration * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
            frame.px(t),
            frame.top + frame.height + 15.0,
            tick(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">time (s)</text>"#,
        frame.left + frame.width / 2.0,
        frame.top + frame.height + 32.0
    );
    for k in 0..=20 {
        let t = k as f64 / 20.0;
        let _ = writeln!(
            svg,
            r#"<rect x="850" y="{:.1}" width="14" height="13.6" fill="{}"/>"#,
            frame.top + (1.0 - t) * (frame.height - 13.5),
            colour_ramp(t)
        );
    }
    let _ = writeln!(svg, r#"<text x="868" y="{:.1}" font-size="9">1</text>"#, frame.top + 10.0);
    let _ = writeln!(svg, r#"<text x="868" y="{:.1}" font-size="9">0</text>"#, frame.top + frame.height);
    close(svg)
}

/// Raw pressure of selected channels against time.
pub fn channel_lines<T: Real>(trace: &SensorTrace<T>, channels: &[usize]) -> Result<String> {
    check_channels(channels, trace.channel_count())?;
    let times: Vec<f64> = trace.timestamps().iter().map(|t| t.as_f64()).collect();
    let series: Vec<Vec<f64>> = channels
        .iter()
        .map(|&c| trace.channel(c).iter().map(|v| v.as_f64()).collect())
        .collect();
    let ymax = series.iter().flatten().copied().fold(0.05, f64::max);
    let (w, h) = (900.0, 360.0);
    let mut svg = open(w, h, &trace_title(trace, "Channel pressure"));
    let frame = Frame::new(
        (0.0, times.last().copied().unwrap_or(1.0)),
        (0.0, ymax * 1.05),
        70.0,
        35.0,
        700.0,
        270.0,
    );
    frame.axes(&mut svg, "time (s)", "pressure");
    for (k, (c, ys)) in channels.iter().zip(&series).enumerate() {
        let colour = PALETTE[c % PALETTE.len()];
        polyline(&mut svg, &frame, &times, ys, colour, "");
        let _ = writeln!(
            svg,
            r#"<text x="785" y="{:.1}" font-size="11" fill="{colour}">s{}</text>"#,
            50.0 + 16.0 * k as f64,
            c + 1
        );
    }
    Ok(close(svg))
}

/// Smoothed channel with the segmentation threshold and, for every detected
/// peak, its start, end, maximum and temporal midpoint.
pub fn peak_markers<T: Real>(times: &[T], raw: &[T], config: &FeatureConfig<T>, title: &str) -> Result<String> {
    let smoothed = smooth(raw, config.window)?;
    let thr = peak_threshold(&smoothed, config.abs_threshold, config.rel_threshold).as_f64();
    let peaks = detect_peaks(&smoothed, config);
    let t: Vec<f64> = times.iter().map(|v| v.as_f64()).collect();
    let r: Vec<f64> = raw.iter().map(|v| v.as_f64()).collect();
    let s: Vec<f64> = smoothed.iter().map(|v| v.as_f64()).collect();
    let ymax = r.iter().chain(&s).copied().fold(thr, f64::max);
    let (w, h) = (900.0, 360.0);
    let mut svg = open(w, h, title);
    let frame = Frame::new(
        (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(1.0)),
        (0.0, ymax * 1.1),
        70.0,
        35.0,
        680.0,
        270.0,
    );
    frame.axes(&mut svg, "time (s)", "pressure");
    polyline(&mut svg, &frame, &t, &r, "#bbb", "");
    polyline(&mut svg, &frame, &t, &s, "#1f77b4", "");
    let ty = frame.py(thr);
    let _ = writeln!(
        svg,
        r##"<line x1="{:.1}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#888" stroke-dasharray="5,4"/>"##,
        frame.left,
        frame.left + frame.width
    );
    for p in &peaks {
        let (st, en, tp) = (t[p.span.start], t[p.span.end], t[p.span.ttp]);
        let (xs, xe, xp) = (frame.px(st), frame.px(en), frame.px(tp));
        let _ = writeln!(
            svg,
            r##"<path d="M{xs:.1},{:.1} l-5,9 h10 z" fill="#2ca02c"/>"##,
            ty - 4.0
        );
        let _ = writeln!(
            svg,
            r##"<path d="M{xe:.1},{:.1} l-5,9 h10 z" fill="#d62728"/>"##,
            ty - 4.0
        );
        let _ = writeln!(
            svg,
            r##"<circle cx="{xp:.1}" cy="{:.1}" r="4" fill="none" stroke="#000" stroke-width="1.5"/>"##,
            frame.py(p.amplitude.as_f64())
        );
        let mid = 0.5 * (st + en);
        let my = frame.py(s[p.span.start + (p.span.end - p.span.start) / 2]);
        let xm = frame.px(mid);
        let _ = writeln!(
            svg,
            r##"<path d="M{xm:.1},{:.1} l5,5 l-5,5 l-5,-5 z" fill="#ff7f0e"/>"##,
            my - 5.0
        );
    }
    let legend = [
        ("#bbb", "raw"),
        ("#1f77b4", "smoothed"),
        ("#888", "threshold"),
        ("#2ca02c", "start"),
        ("#d62728", "end"),
        ("#000", "peak (ttp, amplitude)"),
        ("#ff7f0e", "temporal midpoint"),
    ];
    for (k, (c, name)) in legend.iter().enumerate() {
        let y = 50.0 + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="760" y="{:.1}" width="10" height="10" fill="{c}"/><text x="776" y="{:.1}" font-size="11">{name}</text>"#,
            y - 9.0,
            y
        );
    }
    Ok(close(svg))
}

/// Peak-marker plots for selected channels of a trace, one SVG per channel.
pub fn trace_peak_markers<T: Real>(
    trace: &SensorTrace<T>,
    channels: &[usize],
    config: &FeatureConfig<T>,
) -> Result<Vec<(usize, String)>> {
    check_channels(channels, trace.channel_count())?;
    let times = trace.timestamps();
    channels
        .iter()
        .map(|&c| {
            let title = format!("Peaks of s{}: {} (seed {})", c + 1, trace.meta.label, trace.meta.seed);
            peak_markers(&times, &trace.channel(c), config, &title).map(|s| (c, s))
        })
        .collect()
}

/// One panel per channel: first-peak skewness against amplitude, by class.
pub fn feature_scatter<T: Real>(m: &FeatureMatrix<T>, channels: &[usize], peaks_per_channel: usize) -> Result<String> {
    let stride = peaks_per_channel * crate::features::FEATURES_PER_PEAK;
    let count = if stride == 0 { 0 } else { m.width() / stride };
    check_channels(channels, count)?;
    let cols = channels.len().clamp(1, 4);
    let rows = channels.len().div_ceil(cols).max(1);
    let (pw, ph) = (260.0, 220.0);
    let w = 40.0 + cols as f64 * (pw + 40.0) + 110.0;
    let h = 40.0 + rows as f64 * (ph + 60.0);
    let mut svg = open(w, h, "Peak features per sensor: skewness vs amplitude");
    for (k, &c) in channels.iter().enumerate() {
        let left = 70.0 + (k % cols) as f64 * (pw + 40.0);
        let top = 45.0 + (k / cols) as f64 * (ph + 60.0);
        let amp = feature_index(c, 0, 0, peaks_per_channel);
        let skew = feature_index(c, 0, 3, peaks_per_channel);
        let ymax = m.rows.iter().map(|r| r[amp].as_f64()).fold(0.05, f64::max);
        let frame = Frame::new((-50.0, 50.0), (0.0, ymax * 1.05), left, top, pw - 30.0, ph - 30.0);
        frame.axes(&mut svg, &format!("s{} skewness", c + 1), "amplitude");
        for (label, row) in m.labels.iter().zip(&m.rows) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}" fill-opacity="0.7"/>"#,
                frame.px(row[skew].as_f64()),
                frame.py(row[amp].as_f64()),
                shape_colour(*label)
            );
        }
    }
    for (k, s) in Shape::ALL.iter().enumerate() {
        let y = 50.0 + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{}"/><text x="{:.1}" y="{:.1}" font-size="11">{s}</text>"#,
            w - 95.0,
            y - 4.0,
            shape_colour(*s),
            w - 85.0,
            y
        );
    }
    Ok(close(svg))
}

/// Grouped bars comparing fixed and dynamic palm width.
pub fn fig2_chart<T: Real>(r: &Fig2Report<T>) -> String {
    let (w, h) = (560.0, 340.0);
    let mut svg = open(w, h, "Fixed vs dynamic palm width over one pull");
    let groups = [
        ("object rotation (deg)", r.rotation_fixed_deg.as_f64(), r.rotation_dynamic_deg.as_f64()),
        ("contact arc (mm)", r.arc_fixed_mm.as_f64(), r.arc_dynamic_mm.as_f64()),
    ];
    let ymax = groups.iter().map(|g| g.1.max(g.2)).fold(1.0, f64::max) * 1.15;
    let frame = Frame::new((0.0, 2.0), (0.0, ymax), 70.0, 40.0, 360.0, 240.0);
    let base = frame.py(0.0);
    for (g, (name, fixed, dynamic)) in groups.iter().enumerate() {
        for (k, (v, colour)) in [(fixed, "#7f7f7f"), (dynamic, "#1f77b4")].iter().enumerate() {
            let x = frame.px(g as f64 + 0.2 + 0.3 * k as f64);
            let y = frame.py(**v);
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{colour}"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{:.1}</text>"#,
                frame.width * 0.15 - 4.0,
                base - y,
                x + frame.width * 0.075,
                y - 4.0,
                v
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{name}</text>"#,
            frame.px(g as f64 + 0.5),
            base + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{:.1}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="#333"/>"##,
        frame.left,
        frame.left + frame.width
    );
    for (k, (c, name)) in [("#7f7f7f", "fixed width"), ("#1f77b4", "dynamic width")].iter().enumerate() {
        let y = 60.0 + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="450" y="{:.1}" width="10" height="10" fill="{c}"/><text x="466" y="{:.1}" font-size="11">{name}</text>"#,
            y - 9.0,
            y
        );
    }
    close(svg)
}
