use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::hex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // Shortest representation that round-trips; stable across platforms.
            Cell::Real(v) => format!("{v:?}"),
            Cell::Text(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub description: &'static str,
}

/// A delimiter-separated result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub description: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, description: impl Into<String>, columns: &[(&'static str, &'static str)]) -> Self {
        Table {
            name: name.into(),
            description: description.into(),
            columns: columns.iter().map(|&(name, description)| Column { name, description }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Objective(format!("csv encoding failed: {e}"));
        w.write_record(self.columns.iter().map(|c| c.name)).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Objective(format!("csv flush failed: {e}")))
    }
}

/// A finished SVG document.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub svg: String,
}

/// Everything an experiment produced, in emission order.
#[derive(Debug, Clone, Default)]
pub struct Results {
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    /// Per-run stream keys, `(label, key)`.
    pub run_seeds: Vec<(String, u64)>,
    pub notes: Vec<String>,
}

impl Results {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty() && self.plots.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSeed {
    pub label: String,
    pub stream_key: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub run_seeds: Vec<RunSeed>,
    pub versions: Vec<(String, String)>,
    pub wall_clock_seconds: f64,
    pub status: String,
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
}

/// Fail early if `dir` cannot be created or written.
pub fn preflight(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn write(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<FileEntry>) -> Result<()> {
    let path: PathBuf = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    files.push(FileEntry {
        name: name.to_string(),
        bytes: bytes.len(),
        sha256: hex(&Sha256::digest(bytes)),
    });
    Ok(())
}

#[derive(Serialize)]
struct SchemaTable<'a> {
    file: String,
    description: &'a str,
    columns: &'a [Column],
}

/// Write tables (with a `schema.json` sidecar), plots and `manifest.json`.
/// Returns the manifest. With no results only the manifest is written.
pub fn emit_outputs(results: &Results, dir: &Path, mut manifest: RunManifest) -> Result<RunManifest> {
    preflight(dir)?;
    let mut files = Vec::new();
    if !results.tables.is_empty() {
        for t in &results.tables {
            write(dir, &format!("{}.csv", t.name), &t.to_csv()?, &mut files)?;
        }
        let schema: Vec<SchemaTable> = results
            .tables
            .iter()
            .map(|t| SchemaTable {
                file: format!("{}.csv", t.name),
                description: &t.description,
                columns: &t.columns,
            })
            .collect();
        let json = serde_json::to_vec_pretty(&schema).expect("schema serializes");
        write(dir, "schema.json", &json, &mut files)?;
    }
    for p in &results.plots {
        write(dir, &format!("{}.svg", p.name), p.svg.as_bytes(), &mut files)?;
    }
    manifest.files = files;
    manifest.notes.extend(results.notes.iter().cloned());
    manifest.run_seeds = results
        .run_seeds
        .iter()
        .map(|(label, key)| RunSeed {
            label: label.clone(),
            stream_key: format!("{key:016x}"),
        })
        .collect();
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    let path = dir.join("manifest.json");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

// ---- SVG ----

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (64.0, 24.0, 40.0, 52.0); // left, right, top, bottom

/// One curve with an optional +-1 sigma band.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub band: Option<Vec<f64>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(mag * 10.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

/// Line plot with shaded bands and a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], markers: bool) -> String {
    let (ml, mr, mt, mb) = MARGIN;
    let mut xs = series.iter().flat_map(|s| s.x.iter().copied());
    let first = xs.next().unwrap_or(0.0);
    let (mut x0, mut x1) = xs.fold((first, first), |(a, b), v| (a.min(v), b.max(v)));
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (i, &y) in s.y.iter().enumerate() {
            let b = s.band.as_ref().map_or(0.0, |b| b[i]);
            y0 = y0.min(y - b);
            y1 = y1.max(y + b);
        }
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    y0 = y0.min(0.0);
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    y1 += 0.05 * (y1 - y0);
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (W - ml - mr);
    let py = |y: f64| H - mb - (y - y0) / (y1 - y0) * (H - mt - mb);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    for t in nice_ticks(y0, y1) {
        let y = py(t);
        let _ = writeln!(svg, r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, W - mr);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 6.0, y + 4.0, fmt_tick(t));
    }
    for t in nice_ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, H - mb + 16.0, fmt_tick(t));
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{ml}" y="{mt}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        W - ml - mr,
        H - mt - mb
    );
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (ml + W - mr) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (mt + H - mb) / 2.0,
        (mt + H - mb) / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if let Some(band) = &s.band {
            let mut pts: Vec<String> = s.x.iter().zip(&s.y).zip(band).map(|((&x, &y), &b)| format!("{:.2},{:.2}", px(x), py(y + b))).collect();
            pts.extend(s.x.iter().zip(&s.y).zip(band).rev().map(|((&x, &y), &b)| format!("{:.2},{:.2}", px(x), py(y - b))));
            let _ = writeln!(svg, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, pts.join(" "));
        }
        let pts: Vec<String> = s.x.iter().zip(&s.y).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" "));
        if markers {
            for (&x, &y) in s.x.iter().zip(&s.y) {
                let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, px(x), py(y));
            }
        }
        let ly = mt + 16.0 + 18.0 * k as f64;
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#, ml + 12.0, ml + 32.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, ml + 38.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

fn viridis_like(t: f64) -> String {
    // Piecewise-linear dark blue -> teal -> yellow.
    let stops = [(0.0, (68.0, 1.0, 84.0)), (0.5, (33.0, 145.0, 140.0)), (1.0, (253.0, 231.0, 37.0))];
    let t = t.clamp(0.0, 1.0);
    let (a, b) = if t <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let f = (t - a.0) / (b.0 - a.0);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.1 .0, b.1 .0), mix(a.1 .1, b.1 .1), mix(a.1 .2, b.1 .2))
}

/// Square heatmap of a row-major `ny x nx` array.
pub fn heatmap(title: &str, nx: usize, ny: usize, values: &[f64]) -> String {
    let side = 360.0;
    let cell = side / nx.max(ny) as f64;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (ox, oy) = (40.0, 40.0);
    let w = ox * 2.0 + nx as f64 * cell;
    let h = oy + ny as f64 * cell + 30.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w:.2}" height="{h:.2}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    for iy in 0..ny {
        for ix in 0..nx {
            let v = values[iy * nx + ix];
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                ox + ix as f64 * cell,
                oy + iy as f64 * cell,
                cell + 0.05,
                cell + 0.05,
                viridis_like((v - lo) / span)
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">min {} / max {}</text>"#,
        w / 2.0,
        oy + ny as f64 * cell + 20.0,
        fmt_tick(lo),
        fmt_tick(hi)
    );
    svg.push_str("</svg>\n");
    svg
}
