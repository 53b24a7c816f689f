use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::bench::{DistanceTiming, ExtractorTiming};
use super::curves::{PrCurve, RocCurve, RECALL_LEVELS};
use super::cv::{csv_err, GridReport};
use super::pca::PcaProjection;
use crate::descriptors::DescriptorId;
use crate::error::{Error, Result};
use crate::evalfuncs::EvaluationFunctionId;
use crate::featurestore::Label;

/// Everything one evaluation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub grid: GridReport,
    pub pr: Vec<(DescriptorId, EvaluationFunctionId, PrCurve)>,
    pub roc: Vec<(DescriptorId, EvaluationFunctionId, RocCurve)>,
    /// Projection plus the `(image_id, label)` of each point.
    pub pca: Vec<(DescriptorId, PcaProjection, Vec<(u64, Label)>)>,
    pub extraction: Vec<ExtractorTiming>,
    pub distances: Vec<DistanceTiming>,
}

fn to_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_rows<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    to_string(w)
}

pub fn extractor_timing_csv(rows: &[ExtractorTiming]) -> Result<String> {
    write_rows(
        &["fem", "images", "mean_ms", "std_ms"],
        rows.iter().map(|t| {
            vec![
                t.descriptor.code().to_string(),
                t.images.to_string(),
                format!("{:.4}", t.mean_ms),
                format!("{:.4}", t.std_ms),
            ]
        }),
    )
}

pub fn distance_timing_csv(rows: &[DistanceTiming]) -> Result<String> {
    write_rows(
        &["ef", "evals", "dim", "seconds", "evals_per_sec", "checksum"],
        rows.iter().map(|t| {
            vec![
                t.ef.code().to_string(),
                t.evals.to_string(),
                t.dim.to_string(),
                format!("{:.4}", t.seconds),
                format!("{:.1}", t.evals_per_sec),
                format!("{:e}", t.checksum),
            ]
        }),
    )
}

impl EvaluationReport {
    pub fn pr_csv(&self) -> Result<String> {
        write_rows(
            &["fem", "ef", "recall", "precision", "queries"],
            self.pr.iter().flat_map(|(fem, ef, c)| {
                RECALL_LEVELS.iter().zip(c.precision).map(move |(r, p)| {
                    vec![
                        fem.code().to_string(),
                        ef.code().to_string(),
                        format!("{r:.1}"),
                        format!("{p:.6}"),
                        c.queries.to_string(),
                    ]
                })
            }),
        )
    }

    pub fn roc_csv(&self) -> Result<String> {
        write_rows(
            &["fem", "ef", "fpr", "tpr", "auc"],
            self.roc.iter().flat_map(|(fem, ef, c)| {
                c.points.iter().map(move |(x, y)| {
                    vec![
                        fem.code().to_string(),
                        ef.code().to_string(),
                        format!("{x:.6}"),
                        format!("{y:.6}"),
                        format!("{:.6}", c.auc),
                    ]
                })
            }),
        )
    }

    pub fn pca_csv(&self) -> Result<String> {
        write_rows(
            &["fem", "image_id", "label", "pc1", "pc2"],
            self.pca.iter().flat_map(|(fem, p, meta)| {
                p.coords.iter().zip(meta).map(move |(c, (id, label))| {
                    vec![
                        fem.code().to_string(),
                        id.to_string(),
                        label.to_string(),
                        format!("{:.6}", c[0]),
                        format!("{:.6}", c[1]),
                    ]
                })
            }),
        )
    }

    /// Writes CSV tables and SVG plots into `dir`, returning the paths written.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files: Vec<(String, String)> = vec![("grid.csv".into(), self.grid.to_csv()?)];
        if !self.pr.is_empty() {
            files.push(("pr.csv".into(), self.pr_csv()?));
            let series: Vec<Series> = self
                .pr
                .iter()
                .map(|(fem, ef, c)| Series {
                    name: format!("{fem}x{ef}"),
                    points: RECALL_LEVELS.iter().copied().zip(c.precision).collect(),
                })
                .collect();
            files.push(("pr.svg".into(), svg_lines("Precision vs recall", "recall", "precision", &series)));
        }
        if !self.roc.is_empty() {
            files.push(("roc.csv".into(), self.roc_csv()?));
            let series: Vec<Series> = self
                .roc
                .iter()
                .map(|(fem, ef, c)| Series {
                    name: format!("{fem}x{ef} auc={:.3}", c.auc),
                    points: c.points.clone(),
                })
                .collect();
            files.push(("roc.svg".into(), svg_lines("ROC", "false positive rate", "true positive rate", &series)));
        }
        if !self.pca.is_empty() {
            files.push(("pca.csv".into(), self.pca_csv()?));
            for (fem, p, meta) in &self.pca {
                let series: Vec<Series> = [Label::Fire, Label::NotFire, Label::Unlabeled]
                    .into_iter()
                    .map(|l| Series {
                        name: l.to_string(),
                        points: p
                            .coords
                            .iter()
                            .zip(meta)
                            .filter(|(_, m)| m.1 == l)
                            .map(|(c, _)| (c[0], c[1]))
                            .collect(),
                    })
                    .filter(|s| !s.points.is_empty())
                    .collect();
                let title = format!(
                    "{fem} PCA ({:.1}% + {:.1}%)",
                    100.0 * p.explained_ratio[0],
                    100.0 * p.explained_ratio[1]
                );
                files.push((format!("pca_{}.svg", fem.code().to_lowercase()), svg_scatter(&title, &series)));
            }
        }
        if !self.extraction.is_empty() {
            files.push(("timing_extract.csv".into(), extractor_timing_csv(&self.extraction)?));
            let bars: Vec<(String, f64)> =
                self.extraction.iter().map(|t| (t.descriptor.code().into(), t.mean_ms)).collect();
            files.push(("timing_extract.svg".into(), svg_bars("Extraction time", "ms / image", &bars)));
        }
        if !self.distances.is_empty() {
            files.push(("timing_distance.csv".into(), distance_timing_csv(&self.distances)?));
            let bars: Vec<(String, f64)> = self.distances.iter().map(|t| (t.ef.code().into(), t.seconds)).collect();
            files.push(("timing_distance.svg".into(), svg_bars("Distance evaluation time", "seconds", &bars)));
        }
        let mut written = Vec::with_capacity(files.len());
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// A named polyline or point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(series: &[Series]) -> Frame {
        let pts = || series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in pts() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if x0 > x1 {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn open_svg(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, escape(title));
    s
}

fn axes(s: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, f.px(fx), b + 16.0, tick(fx));
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, f.py(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 4.0 + 16.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, W - MARGIN - 150.0, y);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - MARGIN - 135.0, y + 9.0, escape(name));
    }
}

/// Line plot of each series over a shared frame.
pub fn svg_lines(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let f = Frame::fit(series);
    let mut s = open_svg(title);
    axes(&mut s, &f, x_label, y_label);
    for (i, ser) in series.iter().enumerate() {
        let d: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            d.join(" "),
            PALETTE[i % PALETTE.len()]
        );
    }
    legend(&mut s, &series.iter().map(|x| x.name.as_str()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Scatter plot, one colour per series.
pub fn svg_scatter(title: &str, series: &[Series]) -> String {
    let f = Frame::fit(series);
    let mut s = open_svg(title);
    axes(&mut s, &f, "PC1", "PC2");
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for &(x, y) in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.7"/>"#, f.px(x), f.py(y));
        }
    }
    legend(&mut s, &series.iter().map(|x| x.name.as_str()).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Vertical bar chart starting at zero.
pub fn svg_bars(title: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let top = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let f = Frame {
        x0: 0.0,
        x1: bars.len().max(1) as f64,
        y0: 0.0,
        y1: if top > 0.0 { top * 1.1 } else { 1.0 },
    };
    let mut s = open_svg(title);
    let (l, b) = (MARGIN, H - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {MARGIN} L{l} {b} L{} {b}" fill="none" stroke="black"/>"#, W - MARGIN);
    for i in 0..=4 {
        let fy = f.y1 * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, f.py(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (i, (name, v)) in bars.iter().enumerate() {
        let x = f.px(i as f64 + 0.15);
        let w = f.px(i as f64 + 0.85) - x;
        let y = f.py(*v);
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{:.2}" fill="{}"/>"#,
            b - y,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, x + w / 2.0, b + 16.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}
