//! Static SVG charts of experiment records. Output depends only on the
//! record, so re-plotting a record gives the same bytes.

use std::fmt::Write;

use crate::config::{DistSpec, Kind};
use crate::record::ExperimentRecord;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let vals: Vec<f64> = values.filter(|v| v.is_finite() && (!log || *v > 0.0)).collect();
        if vals.is_empty() {
            return if log { Axis { lo: 1.0, hi: 10.0, log } } else { Axis { lo: 0.0, hi: 1.0, log } };
        }
        let t = |v: f64| if log { v.log10() } else { v };
        let mut lo = vals.iter().map(|&v| t(v)).fold(f64::INFINITY, f64::min);
        let mut hi = vals.iter().map(|&v| t(v)).fold(f64::NEG_INFINITY, f64::max);
        if log {
            lo = lo.floor();
            hi = hi.ceil().max(lo + 1.0);
        } else {
            if hi - lo < 1e-12 {
                lo -= 0.5;
                hi += 0.5;
            }
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let t = if self.log { v.log10() } else { v };
        Some((t - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = self.lo;
            while e <= self.hi + 1e-9 {
                out.push(((e - self.lo) / (self.hi - self.lo), format!("1e{}", e as i64)));
                e += step;
            }
            return out;
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let digits = (-step.log10().floor()).max(0.0) as usize;
        let mut out = Vec::new();
        let mut v = (self.lo / step).ceil() * step;
        while v <= self.hi + 1e-12 {
            out.push(((v - self.lo) / (self.hi - self.lo), format!("{:.*}", digits, v)));
            v += step;
        }
        out
    }
}

enum Mark {
    Points,
    Line,
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    mark: Mark,
}

enum Guide {
    H(f64, String),
    V(f64, String),
}

struct Chart {
    title: String,
    xlabel: String,
    ylabel: String,
    xlog: bool,
    ylog: bool,
    series: Vec<Series>,
    guides: Vec<Guide>,
}

fn px(x: f64) -> f64 {
    LEFT + x * (W - LEFT - RIGHT)
}

fn py(y: f64) -> f64 {
    H - BOTTOM - y * (H - TOP - BOTTOM)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Chart {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            xlog: false,
            ylog: false,
            series: Vec::new(),
            guides: Vec::new(),
        }
    }

    fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let gx = self.guides.iter().filter_map(|g| if let Guide::V(v, _) = g { Some(*v) } else { None });
        let ax = Axis::fit(xs.chain(gx), self.xlog);
        let ys = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
        let gy = self.guides.iter().filter_map(|g| if let Guide::H(v, _) = g { Some(*v) } else { None });
        let ay = Axis::fit(ys.chain(gy), self.ylog);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(&self.title));
        let (x0, x1, y0, y1) = (px(0.0), px(1.0), py(0.0), py(1.0));
        let _ = writeln!(s, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        for (u, label) in ax.ticks() {
            let x = px(u);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y0 + 4.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, y0 + 16.0);
        }
        for (u, label) in ay.ticks() {
            let y = py(u);
            let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 6.0, y + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, esc(&self.xlabel));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            (y0 + y1) / 2.0,
            esc(&self.ylabel)
        );
        for g in &self.guides {
            match g {
                Guide::H(v, label) => {
                    if let Some(u) = ay.unit(*v) {
                        let y = py(u);
                        let _ = writeln!(
                            s,
                            r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#555" stroke-dasharray="5,4"/>"##
                        );
                        let _ = writeln!(s, r##"<text x="{}" y="{:.2}" text-anchor="end" fill="#555">{}</text>"##, x1 - 4.0, y - 4.0, esc(label));
                    }
                }
                Guide::V(v, label) => {
                    if let Some(u) = ax.unit(*v) {
                        let x = px(u);
                        let _ = writeln!(
                            s,
                            r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="#555" stroke-dasharray="5,4"/>"##
                        );
                        let _ = writeln!(s, r##"<text x="{:.2}" y="{}" fill="#555">{}</text>"##, x + 4.0, y1 + 12.0, esc(label));
                    }
                }
            }
        }
        for (i, ser) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<(f64, f64)> = ser
                .points
                .iter()
                .filter_map(|&(x, y)| Some((px(ax.unit(x)?.clamp(0.0, 1.0)), py(ay.unit(y)?.clamp(0.0, 1.0)))))
                .collect();
            match ser.mark {
                Mark::Points => {
                    for (x, y) in &pts {
                        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}" fill-opacity="0.7"/>"#);
                    }
                }
                Mark::Line => {
                    if !pts.is_empty() {
                        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
                    }
                }
            }
            let ly = y1 + 14.0 + 14.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, x0 + 8.0, ly - 9.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, x0 + 22.0, esc(&ser.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn column_pairs(rec: &ExperimentRecord, table: &str, x: &str, y: &str) -> Vec<(f64, f64)> {
    match rec.table(table) {
        Some(t) => t.floats(x).into_iter().zip(t.floats(y)).filter_map(|(a, b)| Some((a?, b?))).collect(),
        None => Vec::new(),
    }
}

/// Chooses the chart for the record's kind. Records without a config or
/// rows give empty axes.
pub fn render(rec: &ExperimentRecord) -> String {
    let Some(cfg) = &rec.config else {
        return Chart::new("empty record", "x", "y").render();
    };
    let stat = |k: &str| rec.aggregate.stats.get(k).copied();
    match cfg.kind {
        Kind::SpheresScan => {
            let d = match cfg.distribution {
                DistSpec::Spheres { d } => d,
                _ => 0,
            };
            let mut c = Chart::new(&format!("best linear loss vs ball mass, d = {d}"), "ball mass", "best linear loss");
            c.xlog = true;
            c.series.push(Series {
                label: "balls".into(),
                points: column_pairs(rec, "scan", "mass", "best_loss"),
                mark: Mark::Points,
            });
            c.guides.push(Guide::H(1.0 / 6.0, "1/6".into()));
            c.guides.push(Guide::V(3f64.powi(1 - d as i32), "3^(1-d)".into()));
            c.render()
        }
        Kind::AuditLower | Kind::AuditUpper => {
            let n = stat("n").unwrap_or(0.0);
            let mut c = Chart::new("failure rate vs n", "n", "failure rate");
            c.xlog = true;
            for (k, v) in &rec.aggregate.stats {
                if let Some(name) = k.strip_prefix("failure_rate.") {
                    c.series.push(Series { label: name.into(), points: vec![(n, *v)], mark: Mark::Points });
                } else if k == "failure_rate" {
                    c.series.push(Series { label: "simple_audit".into(), points: vec![(n, *v)], mark: Mark::Points });
                }
            }
            if cfg.kind == Kind::AuditLower {
                c.guides.push(Guide::H(1.0 / 3.0, "1/3".into()));
            } else {
                c.guides.push(Guide::H(cfg.delta, "delta".into()));
            }
            c.render()
        }
        Kind::LocalitySweep => {
            let mut c = Chart::new("required sample size vs local mass", "lambda", "n");
            c.xlog = true;
            c.ylog = true;
            c.series.push(Series {
                label: "upper bound".into(),
                points: column_pairs(rec, "bounds", "lambda", "upper_n"),
                mark: Mark::Line,
            });
            c.series.push(Series {
                label: "lower bound".into(),
                points: column_pairs(rec, "bounds", "lambda", "lower_n"),
                mark: Mark::Line,
            });
            c.render()
        }
        Kind::MomentCheck => {
            let mut c = Chart::new("max power-sum residual per triple", "triple", "max relative residual");
            c.ylog = true;
            let pts = rec
                .table("residuals")
                .map(|t| t.floats("max_residual").into_iter().enumerate().filter_map(|(i, v)| Some((i as f64, v?))).collect())
                .unwrap_or_default();
            c.series.push(Series { label: "t < 2m".into(), points: pts, mark: Mark::Points });
            c.guides.push(Guide::H(1e-9, "1e-9".into()));
            c.render()
        }
        Kind::WorldSeparation => {
            let mut c = Chart::new("loss at gamma(1+eps1) per draw", "draw", "loss");
            for (w, label) in [(1.0, "world 1"), (0.0, "world 0")] {
                let pts = rec
                    .table("trials")
                    .map(|t| {
                        let idx = t.floats("trial");
                        let world = t.floats("world");
                        let loss = t.floats("loss_at_upper");
                        (0..t.rows.len())
                            .filter(|&i| world[i] == Some(w))
                            .filter_map(|i| Some((idx[i]?, loss[i]?)))
                            .collect()
                    })
                    .unwrap_or_default();
                c.series.push(Series { label: label.into(), points: pts, mark: Mark::Points });
            }
            let e = cfg.eps2;
            for (v, l) in [(0.5 - e, "1/2-eps2"), (0.5 + e, "1/2+eps2"), (0.5 + 3.0 * e, "1/2+3eps2"), (0.5 + 5.0 * e, "1/2+5eps2")] {
                c.guides.push(Guide::H(v, l.into()));
            }
            c.render()
        }
    }
}
