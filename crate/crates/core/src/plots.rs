//! Plot data (CSV) and static SVG renderings of the protocol comparison.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use log::warn;

use crate::metrics::{ChshEstimate, ProtocolReport};

/// A generated plot artifact, relative to the `plots/` directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlotFile {
    pub name: String,
    pub contents: String,
}

/// Area of the radar polygon spanned by `axes` on equally spaced spokes.
pub fn radar_area(axes: &[f64]) -> f64 {
    let n = axes.len();
    if n < 3 {
        return 0.0;
    }
    let wedge = (2.0 * PI / n as f64).sin() / 2.0;
    (0..n).map(|i| axes[i] * axes[(i + 1) % n]).sum::<f64>() * wedge
}

/// One point of the Bell-vs-QBER scatter.
#[derive(Clone, Debug, PartialEq)]
pub struct BellPoint {
    pub protocol: String,
    pub mean_qber: Option<f64>,
    pub s: Option<f64>,
    pub s_std_error: Option<f64>,
}

pub fn bell_points(
    reports: &[ProtocolReport],
    e91_session: Option<&ChshEstimate>,
) -> Vec<BellPoint> {
    reports
        .iter()
        .map(|r| {
            let chsh = match r.protocol {
                crate::protocols::ProtocolKind::E91 => e91_session.or(r.chsh.as_ref()),
                _ => None,
            };
            BellPoint {
                protocol: r.protocol.name().to_string(),
                mean_qber: r.mean_qber,
                s: chsh.map(|c| c.s),
                s_std_error: chsh.map(|c| c.std_error),
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// CSV data files for the key size, key size vs match rate, composite index,
/// radar and Bell-vs-QBER plots. Requires reports for at least two protocols
/// with a computed composite index; otherwise nothing is produced.
pub fn plot_data(reports: &[ProtocolReport], e91_session: Option<&ChshEstimate>) -> Vec<PlotFile> {
    if reports.len() < 2 || reports.iter().any(|r| r.radar.is_none()) {
        warn!("plots need at least two protocols with a composite index; skipped");
        return Vec::new();
    }
    let mut key_size = String::from("Protocol,AvgKeySize\n");
    let mut key_vs_match = String::from("Protocol,AvgKeySize,MatchRate\n");
    let mut composite = String::from("Protocol,CompositeIndex\n");
    let mut radar = String::from("Protocol,KeySize,MatchRate,AvgMeanDiff,AvgMaxDiff\n");
    for r in reports {
        let name = r.protocol.name();
        let _ = writeln!(key_size, "{name},{}", r.avg_key_size);
        let _ = writeln!(key_vs_match, "{name},{},{}", r.avg_key_size, r.match_rate);
        let _ = writeln!(composite, "{name},{}", opt(r.composite_index));
        let axes = r.radar.as_ref().expect("checked above").values();
        let _ = writeln!(
            radar,
            "{name},{},{},{},{}",
            axes[0], axes[1], axes[2], axes[3]
        );
    }
    let mut bell = String::from("Protocol,MeanQBER,S,SStdError\n");
    for p in bell_points(reports, e91_session) {
        let _ = writeln!(
            bell,
            "{},{},{},{}",
            p.protocol,
            opt(p.mean_qber),
            opt(p.s),
            opt(p.s_std_error)
        );
    }
    vec![
        PlotFile {
            name: "avg_key_size.csv".into(),
            contents: key_size,
        },
        PlotFile {
            name: "key_size_vs_match_rate.csv".into(),
            contents: key_vs_match,
        },
        PlotFile {
            name: "composite_index.csv".into(),
            contents: composite,
        },
        PlotFile {
            name: "radar.csv".into(),
            contents: radar,
        },
        PlotFile {
            name: "bell_vs_qber.csv".into(),
            contents: bell,
        },
    ]
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        W / 2.0
    )
}

fn axes_frame(svg: &mut String, y_label: &str, y_max: f64) {
    let (x0, y0, y1) = (MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>",
        W - MARGIN
    );
    for tick in 0..=4 {
        let v = y_max * tick as f64 / 4.0;
        let y = y0 - (y0 - y1) * tick as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{v:.2}</text>",
            x0 - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{:.1}\" transform=\"rotate(-90 14 {:.1})\" text-anchor=\"middle\">{y_label}</text>",
        H / 2.0,
        H / 2.0
    );
}

fn bar_chart(title: &str, y_label: &str, bars: &[(String, f64)], y_max: f64) -> String {
    let mut svg = svg_open(title);
    axes_frame(&mut svg, y_label, y_max);
    let plot_w = W - 2.0 * MARGIN;
    let plot_h = H - 2.0 * MARGIN;
    let slot = plot_w / bars.len().max(1) as f64;
    for (i, (label, value)) in bars.iter().enumerate() {
        let h = if y_max > 0.0 {
            plot_h * value / y_max
        } else {
            0.0
        };
        let x = MARGIN + slot * i as f64 + slot * 0.15;
        let _ = writeln!(
            svg,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"/>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{value:.3}</text>",
            H - MARGIN - h,
            slot * 0.7,
            PALETTE[i % PALETTE.len()],
            x + slot * 0.35,
            H - MARGIN + 16.0,
            x + slot * 0.35,
            H - MARGIN - h - 4.0,
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn scatter(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(String, f64, f64)],
    x_max: f64,
    y_max: f64,
    guides: &[(f64, &str)],
) -> String {
    let mut svg = svg_open(title);
    axes_frame(&mut svg, y_label, y_max);
    let plot_w = W - 2.0 * MARGIN;
    let plot_h = H - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + plot_w * x / x_max;
    let py = |y: f64| H - MARGIN - plot_h * y / y_max;
    for tick in 0..=4 {
        let v = x_max * tick as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{v:.2}</text>",
            px(v),
            H - MARGIN + 16.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>",
        W / 2.0,
        H - 10.0
    );
    for (y, label) in guides {
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" fill=\"gray\">{label}</text>",
            py(*y),
            W - MARGIN,
            py(*y),
            W - MARGIN,
            py(*y) - 3.0
        );
    }
    for (i, (label, x, y)) in points.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"5\" fill=\"{}\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{label}</text>",
            px(*x),
            py(*y),
            PALETTE[i % PALETTE.len()],
            px(*x) + 7.0,
            py(*y) - 7.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn radar_chart(reports: &[ProtocolReport]) -> String {
    let mut svg = svg_open("Normalized protocol metrics");
    let (cx, cy, radius) = (W / 2.0, H / 2.0 + 15.0, 120.0);
    let labels = [
        "KeySize",
        "MatchRate",
        "AvgMeanDiff (inv)",
        "AvgMaxDiff (inv)",
    ];
    let spoke = |k: usize, r: f64| {
        let a = -PI / 2.0 + 2.0 * PI * k as f64 / labels.len() as f64;
        (cx + r * radius * a.cos(), cy + r * radius * a.sin())
    };
    for (k, label) in labels.iter().enumerate() {
        let (x, y) = spoke(k, 1.0);
        let (lx, ly) = spoke(k, 1.15);
        let _ = writeln!(
            svg,
            "<line x1=\"{cx}\" y1=\"{cy}\" x2=\"{x:.1}\" y2=\"{y:.1}\" stroke=\"#bbb\"/>\n<text x=\"{lx:.1}\" y=\"{ly:.1}\" text-anchor=\"middle\">{label}</text>"
        );
    }
    for (i, r) in reports.iter().enumerate() {
        let Some(axes) = r.radar.as_ref().map(|a| a.values()) else {
            continue;
        };
        let pts: Vec<String> = axes
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let (x, y) = spoke(k, v);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"{color}\" stroke-width=\"2\"/>\n<text x=\"12\" y=\"{}\" fill=\"{color}\">{}</text>",
            pts.join(" "),
            50 + 16 * i,
            r.protocol.name()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// SVG renderings of the same data as [`plot_data`].
pub fn plot_svgs(reports: &[ProtocolReport], e91_session: Option<&ChshEstimate>) -> Vec<PlotFile> {
    if reports.len() < 2 || reports.iter().any(|r| r.radar.is_none()) {
        return Vec::new();
    }
    let names: Vec<String> = reports
        .iter()
        .map(|r| r.protocol.name().to_string())
        .collect();
    let key_bars: Vec<(String, f64)> = names
        .iter()
        .cloned()
        .zip(reports.iter().map(|r| r.avg_key_size))
        .collect();
    let composite_bars: Vec<(String, f64)> = names
        .iter()
        .cloned()
        .zip(reports.iter().map(|r| r.composite_index.unwrap_or(0.0)))
        .collect();
    let key_vs_match: Vec<(String, f64, f64)> = reports
        .iter()
        .map(|r| (r.protocol.name().to_string(), r.avg_key_size, r.match_rate))
        .collect();
    let bell: Vec<(String, f64, f64)> = bell_points(reports, e91_session)
        .into_iter()
        .map(|p| {
            let label = match p.s {
                Some(_) => p.protocol.clone(),
                None => format!("{} (no Bell test)", p.protocol),
            };
            (label, p.mean_qber.unwrap_or(0.0), p.s.map_or(0.0, f64::abs))
        })
        .collect();
    let qber_max = bell.iter().map(|p| p.1).fold(0.5, f64::max);
    vec![
        PlotFile {
            name: "avg_key_size.svg".into(),
            contents: bar_chart("Average key size per protocol", "bits", &key_bars, 6.0),
        },
        PlotFile {
            name: "key_size_vs_match_rate.svg".into(),
            contents: scatter(
                "Key size vs match rate",
                "average key size (bits)",
                "match rate",
                &key_vs_match,
                6.0,
                1.0,
                &[],
            ),
        },
        PlotFile {
            name: "composite_index.svg".into(),
            contents: bar_chart("Composite performance index", "index", &composite_bars, 1.0),
        },
        PlotFile {
            name: "radar.svg".into(),
            contents: radar_chart(reports),
        },
        PlotFile {
            name: "bell_vs_qber.svg".into(),
            contents: scatter(
                "Bell violation vs QBER",
                "mean QBER",
                "|S|",
                &bell,
                qber_max,
                3.0,
                &[(2.0, "classical bound"), (2.0 * SQRT_2, "Tsirelson bound")],
            ),
        },
    ]
}
