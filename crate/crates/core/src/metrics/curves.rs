use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const LOG_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc,val_precision,val_recall";

/// File names written by [`emit_curves_svg`], one per plotted metric.
pub const CURVE_FILES: [&str; 4] = ["accuracy.svg", "precision.svg", "recall.svg", "loss.svg"];

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub val_precision: f64,
    pub val_recall: f64,
}

impl EpochRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}\n",
            self.epoch,
            self.train_loss,
            self.train_acc,
            self.val_loss,
            self.val_acc,
            self.val_precision,
            self.val_recall
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MetricsError + '_ {
    move |source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads every row of a log file, validating the header.
pub fn read_curve_log(path: &Path) -> Result<Vec<EpochRow>, MetricsError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_log(&text)
}

fn parse_log(text: &str) -> Result<Vec<EpochRow>, MetricsError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| MetricsError::MalformedRow {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != LOG_HEADER {
        return Err(MetricsError::MalformedRow {
            line: 1,
            message: format!("unexpected header `{header}`"),
        });
    }
    let mut rows = Vec::new();
    for record in reader.deserialize::<EpochRow>() {
        let row = record.map_err(|e| MetricsError::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Appends one epoch row, writing the header first if the file is new or
/// empty. The row goes out in a single write so readers never see a partial
/// line. Rejects an epoch number that is already in the file.
pub fn curve_log_append(path: &Path, row: &EpochRow) -> Result<(), MetricsError> {
    let existing = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut chunk = String::new();
    if existing.trim().is_empty() {
        chunk.push_str(LOG_HEADER);
        chunk.push('\n');
    } else if parse_log(&existing)?.iter().any(|r| r.epoch == row.epoch) {
        return Err(MetricsError::DuplicateEpoch(row.epoch));
    }
    chunk.push_str(&row.csv_line());
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    file.write_all(chunk.as_bytes()).map_err(io_err(path))?;
    file.flush().map_err(io_err(path))
}

struct Series {
    label: &'static str,
    color: &'static str,
    values: Vec<(f64, f64)>,
}

struct Chart {
    file: &'static str,
    title: &'static str,
    y_label: &'static str,
    series: Vec<Series>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

fn render(chart: &Chart) -> String {
    let points = chart.series.iter().flat_map(|s| s.values.iter());
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y_max: f64 = 1.0;
    for &(x, y) in points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_max = y_max.max(y);
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let y_max = if y_max > 1.0 { y_max * 1.05 } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| TOP + plot_h - y / y_max * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        chart.title
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.2}</text><line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0,
            LEFT + plot_w
        );
    }
    let span = (x_max - x_min).max(1.0);
    let step = (span / 10.0).ceil().max(1.0);
    let mut tick = x_min;
    while tick <= x_max + 1e-9 {
        let x = sx(tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{tick}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 4.0,
            TOP + plot_h + 17.0
        );
        tick += step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">epoch</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        chart.y_label
    );
    for (i, s) in chart.series.iter().enumerate() {
        let pts: Vec<String> = s
            .values
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            s.color,
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = LEFT + plot_w - 120.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 20.0,
            s.color,
            lx + 26.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders accuracy, precision, recall and loss curves from a log file into
/// `out_dir`. Nothing is written unless the whole log parses.
pub fn emit_curves_svg(log_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, MetricsError> {
    let rows = read_curve_log(log_path)?;
    if rows.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let series = |label, color, f: fn(&EpochRow) -> f64| Series {
        label,
        color,
        values: rows.iter().map(|r| (r.epoch as f64, f(r))).collect(),
    };
    let charts = [
        Chart {
            file: CURVE_FILES[0],
            title: "Training and validation accuracy",
            y_label: "accuracy",
            series: vec![
                series("train", "#1f77b4", |r| r.train_acc),
                series("validation", "#ff7f0e", |r| r.val_acc),
            ],
        },
        Chart {
            file: CURVE_FILES[1],
            title: "Validation precision",
            y_label: "precision",
            series: vec![series("validation", "#ff7f0e", |r| r.val_precision)],
        },
        Chart {
            file: CURVE_FILES[2],
            title: "Validation recall",
            y_label: "recall",
            series: vec![series("validation", "#ff7f0e", |r| r.val_recall)],
        },
        Chart {
            file: CURVE_FILES[3],
            title: "Training and validation loss",
            y_label: "loss",
            series: vec![
                series("train", "#1f77b4", |r| r.train_loss),
                series("validation", "#ff7f0e", |r| r.val_loss),
            ],
        },
    ];
    let rendered: Vec<(PathBuf, String)> = charts.iter().map(|c| (out_dir.join(c.file), render(c))).collect();
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::with_capacity(rendered.len());
    for (path, svg) in rendered {
        fs::write(&path, svg).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(epoch: usize) -> EpochRow {
        EpochRow {
            epoch,
            train_loss: 0.7 / epoch as f64,
            train_acc: 0.5 + 0.01 * epoch as f64,
            val_loss: 0.8 / epoch as f64,
            val_acc: 0.5,
            val_precision: 0.25,
            val_recall: 0.125,
        }
    }

    #[test]
    fn header_then_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        for e in 1..=30 {
            curve_log_append(&path, &row(e)).unwrap();
        }
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(LOG_HEADER));
        assert_eq!(lines.count(), 30);
        assert_eq!(read_curve_log(&path).unwrap(), (1..=30).map(row).collect::<Vec<_>>());
    }

    #[test]
    fn duplicate_epoch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        curve_log_append(&path, &row(1)).unwrap();
        curve_log_append(&path, &row(2)).unwrap();
        assert!(matches!(
            curve_log_append(&path, &row(2)),
            Err(MetricsError::DuplicateEpoch(2))
        ));
        assert_eq!(read_curve_log(&path).unwrap().len(), 2);
    }

    #[test]
    fn unwritable_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("log.csv");
        assert!(matches!(curve_log_append(&path, &row(1)), Err(MetricsError::Io { .. })));
    }

    #[test]
    fn four_wellformed_svgs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        for e in 1..=30 {
            curve_log_append(&path, &row(e)).unwrap();
        }
        let out = dir.path().join("plots");
        let files = emit_curves_svg(&path, &out).unwrap();
        assert_eq!(files.len(), 4);
        for f in files {
            let text = fs::read_to_string(&f).unwrap();
            let doc = roxmltree::Document::parse(&text).unwrap();
            assert_eq!(doc.root_element().tag_name().name(), "svg");
            assert!(doc.descendants().any(|n| n.has_tag_name("polyline")));
        }
    }

    #[test]
    fn empty_log_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        fs::write(&path, format!("{LOG_HEADER}\n")).unwrap();
        let out = dir.path().join("plots");
        assert!(matches!(emit_curves_svg(&path, &out), Err(MetricsError::EmptyLog)));
        assert!(!out.exists());
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        fs::write(
            &path,
            format!("{LOG_HEADER}\n1,0.5,0.5,0.5,0.5,0.5,0.5\n2,oops,0.5,0.5,0.5,0.5,0.5\n"),
        )
        .unwrap();
        match emit_curves_svg(&path, dir.path()) {
            Err(MetricsError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
