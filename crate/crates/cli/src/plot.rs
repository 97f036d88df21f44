//! Static SVG 1.1 charts.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt::Write;
use std::fs;
use std::path::Path;

use spherestat::geostat::{AngularMarginals, CovarianceModel, MarginalBin, RenyiPoint};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::input::{self, InputArgs};
use crate::{PlotArgs, PlotKind};

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 40.0, 50.0);
const MOLLWEIDE_ITER: usize = 25;

pub fn render(a: &PlotArgs, cfg: &Config, seed: u64, degrees: bool) -> CliResult<String> {
    match a.kind {
        PlotKind::Variogram => {
            let curve = crate::commands::read_curve(&a.input, None)?;
            let points: Vec<(f64, f64)> = curve.populated().map(|(h, v, _)| (h, v)).collect();
            let model = a.model.as_deref().map(read_model).transpose()?;
            let ylabel = match curve.estimator {
                spherestat::geostat::Estimator::Covariance => "covariance",
                spherestat::geostat::Estimator::Variogram => "semivariance",
            };
            let overlay = model.map(|m| {
                let top = curve.lags.iter().cloned().fold(0.0, f64::max).min(PI);
                (0..=200)
                    .map(|k| {
                        let h = top * k as f64 / 200.0;
                        let v = match curve.estimator {
                            spherestat::geostat::Estimator::Covariance => m.covariance(h),
                            spherestat::geostat::Estimator::Variogram => m.variogram(h),
                        };
                        v.map(|v| (h, v))
                    })
                    .collect::<spherestat::Result<Vec<_>>>()
                    .map_err(|e| CliError::Compute { stage: "plot", message: e.to_string() })
            });
            let overlay = overlay.transpose()?;
            Ok(xy_plot(a.title.as_deref().unwrap_or("Empirical curve"), "lag (rad)", ylabel, &points, overlay.as_deref()))
        }
        PlotKind::Renyi => {
            let points = read_renyi(&a.input)?;
            let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.q, p.t)).collect();
            Ok(xy_plot(a.title.as_deref().unwrap_or("Rényi function"), "q", "T(q)", &xy, Some(&xy)))
        }
        PlotKind::Angdist => {
            let text = fs::read_to_string(&a.input).map_err(|e| CliError::usage(format!("{}: {e}", a.input.display())))?;
            let m: AngularMarginals =
                serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", a.input.display())))?;
            Ok(angdist_plot(a.title.as_deref().unwrap_or("Angular marginals"), &m))
        }
        PlotKind::Map => {
            let args = InputArgs { input: a.input.clone(), columns: a.columns.clone(), window: a.window.clone(), sample: None };
            let mut frame = input::load(&args, cfg, seed, degrees)?;
            if frame.rows() as u64 > a.max_points {
                frame = frame.sample(a.max_points as usize, seed).map_err(|e| CliError::Compute { stage: "plot", message: e.to_string() })?;
            }
            let values = frame
                .data_column(args.columns.first().map(String::as_str))
                .map_err(|e| CliError::usage(e.to_string()))?;
            let pos = frame.positions();
            let pts: Vec<(f64, f64, f64)> = pos.iter().zip(values).map(|(p, &v)| (p.theta(), p.phi(), v)).collect();
            Ok(map_plot(a.title.as_deref().unwrap_or("Mollweide projection"), &pts))
        }
    }
}

fn read_model(path: &Path) -> CliResult<CovarianceModel> {
    let what = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{what}: {e}")))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{what}: {e}")))?;
    if let Some(inner) = v.get_mut("model") {
        v = inner.take();
    }
    serde_json::from_value(v).map_err(|e| CliError::usage(format!("{what}: {e}")))
}

fn read_renyi(path: &Path) -> CliResult<Vec<RenyiPoint>> {
    let what = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{what}: {e}")))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{what}: {e}")));
    }
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("q,t") {
        return Err(CliError::usage(format!("{what}: expected header q,t")));
    }
    lines
        .map(|l| {
            let (q, t) = l.split_once(',').ok_or_else(|| CliError::usage(format!("{what}: bad row {l}")))?;
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("{what}: bad row {l}")));
            Ok(RenyiPoint { q: num(q)?, t: num(t)? })
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open_svg(title: &str, w: f64, h: f64) -> String {
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="16" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title)).unwrap();
    s
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

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
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone, left: f64, top: f64, width: f64, height: f64) -> Self {
        let range = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if lo == hi {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = range(&mut xs.clone());
        let (y0, y1) = range(&mut ys.clone());
        Frame { x0, x1, y0, y1, left, top, width, height }
    }

    fn x(&self, v: f64) -> f64 {
        self.left + (v - self.x0) / (self.x1 - self.x0) * self.width
    }

    fn y(&self, v: f64) -> f64 {
        self.top + self.height - (v - self.y0) / (self.y1 - self.y0) * self.height
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        writeln!(s, r#"<rect x="{l:.2}" y="{t:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#).unwrap();
        for v in ticks(self.x0, self.x1) {
            let x = self.x(v);
            writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, t + h, t + h + 5.0).unwrap();
            writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, t + h + 18.0, label(v)).unwrap();
        }
        for v in ticks(self.y0, self.y1) {
            let y = self.y(v);
            writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="black"/>"#, l - 5.0).unwrap();
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, y + 4.0, label(v)).unwrap();
        }
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, l + w / 2.0, t + h + 36.0, escape(xlabel)).unwrap();
        writeln!(
            s,
            r#"<text x="{0:.2}" y="{1:.2}" text-anchor="middle" transform="rotate(-90 {0:.2} {1:.2})">{2}</text>"#,
            l - 45.0,
            t + h / 2.0,
            escape(ylabel)
        )
        .unwrap();
    }
}

/// Scatter of `points` with an optional polyline.
fn xy_plot(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)], line: Option<&[(f64, f64)]>) -> String {
    let all = points.iter().chain(line.unwrap_or(&[]));
    let (l, r, t, b) = MARGIN;
    let f = Frame::new(all.clone().map(|p| p.0), all.map(|p| p.1), l, t + 10.0, W - l - r, H - t - b - 10.0);
    let mut s = open_svg(title, W, H);
    f.axes(&mut s, xlabel, ylabel);
    if let Some(line) = line {
        let path: Vec<String> = line.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.x(x), f.y(y))).collect();
        writeln!(s, r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##, path.join(" ")).unwrap();
    }
    for &(x, y) in points {
        writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"/>"##, f.x(x), f.y(y)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn bars(s: &mut String, bins: &[MarginalBin], span: f64, top: f64, height: f64, xlabel: &str) {
    let (l, r, _, _) = MARGIN;
    let f = Frame::new([0.0, span].into_iter(), bins.iter().filter_map(|b| b.mean).chain([0.0]), l, top, W - l - r, height);
    let f = Frame { x0: 0.0, x1: span, ..f };
    f.axes(s, xlabel, "mean");
    let w = span / bins.len().max(1) as f64;
    for b in bins {
        if let Some(m) = b.mean {
            let (x0, x1) = (f.x(b.center - w / 2.0), f.x(b.center + w / 2.0));
            let (ya, yb) = (f.y(m.max(0.0).max(f.y0)), f.y(m.min(0.0).max(f.y0)));
            writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4" stroke="white"/>"##,
                x0,
                ya.min(yb),
                x1 - x0,
                (yb - ya).abs()
            )
            .unwrap();
        }
    }
}

fn angdist_plot(title: &str, m: &AngularMarginals) -> String {
    let h = 2.0 * H;
    let mut s = open_svg(title, W, h);
    let panel = H - MARGIN.2 - MARGIN.3;
    bars(&mut s, &m.theta, PI, MARGIN.2, panel, "colatitude (rad)");
    bars(&mut s, &m.phi, 2.0 * PI, H + MARGIN.2, panel, "longitude (rad)");
    s.push_str("</svg>\n");
    s
}

/// Mollweide projection of colatitude `theta` and longitude `phi` onto
/// `[-2√2, 2√2] × [-√2, √2]`, longitude 0 at the centre, east to the left.
pub fn mollweide(theta: f64, phi: f64) -> (f64, f64) {
    let lat = FRAC_PI_2 - theta;
    let lon = if phi > PI { phi - 2.0 * PI } else { phi };
    let target = PI * lat.sin();
    let mut aux = lat;
    if (lat.abs() - FRAC_PI_2).abs() > 1e-12 {
        for _ in 0..MOLLWEIDE_ITER {
            let step = (2.0 * aux + (2.0 * aux).sin() - target) / (2.0 + 2.0 * (2.0 * aux).cos());
            aux -= step;
            if step.abs() < 1e-12 {
                break;
            }
        }
    }
    (-2.0 * SQRT_2 / PI * lon * aux.cos(), SQRT_2 * aux.sin())
}

/// Anchor colours of the diverging ramp: blue through cream to dark red,
/// after the Planck temperature maps.
const ANCHORS: [(f64, [f64; 3]); 6] = [
    (0.0, [0.0, 0.0, 255.0]),
    (0.33, [0.0, 216.0, 255.0]),
    (0.5, [255.0, 237.0, 217.0]),
    (0.67, [255.0, 180.0, 0.0]),
    (0.83, [255.0, 75.0, 0.0]),
    (1.0, [100.0, 0.0, 0.0]),
];

/// 256-stop table sampled linearly between [`ANCHORS`].
pub fn ramp() -> Vec<[u8; 3]> {
    (0..256)
        .map(|i| {
            let t = i as f64 / 255.0;
            let k = ANCHORS.windows(2).position(|w| t <= w[1].0).unwrap_or(ANCHORS.len() - 2);
            let ((a, ca), (b, cb)) = (ANCHORS[k], ANCHORS[k + 1]);
            let u = (t - a) / (b - a);
            let mut c = [0u8; 3];
            for j in 0..3 {
                c[j] = (ca[j] + u * (cb[j] - ca[j])).round() as u8;
            }
            c
        })
        .collect()
}

fn map_plot(title: &str, pts: &[(f64, f64, f64)]) -> String {
    let (l, r, t, b) = (20.0, 20.0, 40.0, 50.0);
    let width = W - l - r;
    let scale = width / (4.0 * SQRT_2);
    let height = 2.0 * SQRT_2 * scale;
    let total = t + height + b;
    let cx = l + width / 2.0;
    let cy = t + height / 2.0;
    let mut s = open_svg(title, W, total);
    writeln!(
        s,
        r##"<ellipse cx="{cx:.2}" cy="{cy:.2}" rx="{:.2}" ry="{:.2}" fill="#eeeeee" stroke="black"/>"##,
        width / 2.0,
        height / 2.0
    )
    .unwrap();
    let finite = pts.iter().map(|p| p.2).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let table = ramp();
    let dot = (width / (pts.len() as f64).sqrt() / 4.0).clamp(0.6, 4.0);
    for &(theta, phi, v) in pts {
        if !v.is_finite() {
            continue;
        }
        let (x, y) = mollweide(theta, phi);
        let k = if hi > lo { ((v - lo) / (hi - lo) * 255.0).round() as usize } else { 128 };
        let [cr, cg, cb] = table[k.min(255)];
        writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{dot:.2}" fill="rgb({cr},{cg},{cb})"/>"#,
            cx + x * scale,
            cy - y * scale
        )
        .unwrap();
    }
    let bar_y = t + height + 15.0;
    let bar_x = cx - 128.0;
    for (i, [cr, cg, cb]) in table.iter().enumerate() {
        writeln!(s, r#"<rect x="{}" y="{bar_y:.2}" width="1" height="10" fill="rgb({cr},{cg},{cb})"/>"#, bar_x + i as f64).unwrap();
    }
    if lo.is_finite() {
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, bar_x - 5.0, bar_y + 10.0, label(lo)).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, bar_x + 261.0, bar_y + 10.0, label(hi)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
