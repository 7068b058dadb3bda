//! Serialization of sweep results: CSV records, a JSON aggregate summary
//! (written atomically), and a self-contained SVG line chart.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sweep::{Aggregate, SweepRecord};

pub const CSV_HEADER: [&str; 7] =
    ["metric", "d", "n", "seed", "value", "wall_ms", "extra_json"];

/// Incremental CSV sink. The header goes out at open time and every record
/// is flushed on write, so a sweep killed mid-run still leaves a parseable
/// prefix behind.
pub struct CsvSink {
    writer: csv::Writer<File>,
    path: std::path::PathBuf,
}

impl CsvSink {
    pub fn open(path: &Path) -> Result<CsvSink> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(CSV_HEADER)?;
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(CsvSink { writer, path: path.to_path_buf() })
    }

    pub fn append(&mut self, record: &SweepRecord) -> Result<()> {
        self.writer.serialize(record)?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(())
    }
}

pub fn emit_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    let mut sink = CsvSink::open(path)?;
    for rec in records {
        sink.append(rec)?;
    }
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct JsonSummary<'a> {
    metric: &'a str,
    per_d: Vec<PerD>,
}

#[derive(Debug, Serialize)]
struct PerD {
    d: usize,
    n: usize,
    mean: f64,
    median: f64,
    std: f64,
    count: usize,
}

/// Writes `{metric, per_d: [...]}` via a temp file and rename, so readers
/// never observe a partially written summary.
pub fn emit_json_summary(metric: &str, aggregates: &[Aggregate], path: &Path) -> Result<()> {
    let summary = JsonSummary {
        metric,
        per_d: aggregates
            .iter()
            .map(|a| PerD {
                d: a.d,
                n: a.n,
                mean: a.mean,
                median: a.median,
                std: a.std,
                count: a.count,
            })
            .collect(),
    };
    let body = serde_json::to_string_pretty(&summary)?;
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(b"\n").map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One plotted line: (d, mean, std) triples.
#[derive(Debug, Clone)]
pub struct SvgSeries {
    pub label: String,
    pub points: Vec<(usize, f64, f64)>,
}

impl SvgSeries {
    pub fn from_aggregates(label: impl Into<String>, aggs: &[Aggregate]) -> Self {
        SvgSeries {
            label: label.into(),
            points: aggs.iter().map(|a| (a.d, a.mean, a.std)).collect(),
        }
    }
}

const PALETTE: [&str; 6] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Self-contained SVG line chart: x = d on a log2 scale, y = mean value,
/// error bars at ±1 std. No external assets.
pub fn emit_svg(series: &[SvgSeries], path: &Path) -> Result<()> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidParameter("nothing to plot: empty aggregates".into()));
    }

    let (width, height) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (80.0, 150.0, 30.0, 55.0);
    let plot_w = width - ml - mr;
    let plot_h = height - mt - mb;

    let mut ds: Vec<usize> =
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    ds.sort_unstable();
    ds.dedup();
    let (lx0, lx1) = (
        (ds[0] as f64).log2(),
        (*ds.last().unwrap() as f64).log2(),
    );
    let x_of = |d: usize| -> f64 {
        if lx1 > lx0 {
            ml + plot_w * ((d as f64).log2() - lx0) / (lx1 - lx0)
        } else {
            ml + plot_w / 2.0
        }
    };

    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(_, m, sd) in &s.points {
            y_min = y_min.min(m - sd);
            y_max = y_max.max(m + sd);
        }
    }
    if !(y_max > y_min) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    let y_of = |v: f64| -> f64 { mt + plot_h * (y_max - v) / (y_max - y_min) };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    // axes
    svg.push_str(&format!(
        "  <line x1=\"{ml}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    ));
    svg.push_str(&format!(
        "  <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        mt + plot_h
    ));
    // x ticks at each d
    for &d in &ds {
        let x = x_of(d);
        svg.push_str(&format!(
            "  <line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            mt + plot_h,
            mt + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{d}</text>\n",
            mt + plot_h + 20.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">d (log2)</text>\n",
        ml + plot_w / 2.0,
        height - 12.0
    ));
    // y ticks
    for k in 0..=5 {
        let v = y_min + (y_max - y_min) * k as f64 / 5.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{ml}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            ml - 9.0,
            y + 4.0,
            fmt_tick(v)
        ));
        svg.push_str(&format!(
            "  <line x1=\"{ml}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\" stroke-dasharray=\"3,3\"/>\n",
            ml + plot_w
        ));
    }

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(d, m, _)| format!("{:.2},{:.2}", x_of(d), y_of(m)))
            .collect();
        if pts.len() > 1 {
            svg.push_str(&format!(
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            ));
        }
        for &(d, m, sd) in &s.points {
            let x = x_of(d);
            let (y_lo, y_hi) = (y_of(m - sd), y_of(m + sd));
            svg.push_str(&format!(
                "  <line x1=\"{x:.2}\" y1=\"{y_lo:.2}\" x2=\"{x:.2}\" y2=\"{y_hi:.2}\" stroke=\"{color}\"/>\n"
            ));
            for y in [y_lo, y_hi] {
                svg.push_str(&format!(
                    "  <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\"/>\n",
                    x - 3.0,
                    x + 3.0
                ));
            }
            svg.push_str(&format!(
                "  <circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                y_of(m)
            ));
        }
        // legend
        let ly = mt + 10.0 + 18.0 * si as f64;
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            ml + plot_w + 10.0,
            ml + plot_w + 30.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            ml + plot_w + 35.0,
            ly + 4.0,
            xml_escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");

    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(svg.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempdir::tmp_path;

    mod tempdir {
        use std::path::PathBuf;
        use std::sync::atomic::{AtomicU64, Ordering};

        static COUNTER: AtomicU64 = AtomicU64::new(0);

        pub fn tmp_path(name: &str) -> PathBuf {
            let k = COUNTER.fetch_add(1, Ordering::SeqCst);
            std::env::temp_dir().join(format!(
                "phaseprobe_emit_test_{}_{k}_{name}",
                std::process::id()
            ))
        }
    }

    fn sample_records() -> Vec<SweepRecord> {
        vec![
            SweepRecord {
                metric: "q".into(),
                d: 256,
                n: 512,
                seed: 0,
                value: 0.5,
                wall_ms: 0,
                extra: "{\"r\":0.1}".into(),
            },
            SweepRecord {
                metric: "q".into(),
                d: 512,
                n: 1024,
                seed: 1,
                value: -1.25,
                wall_ms: 0,
                extra: "{}".into(),
            },
        ]
    }

    #[test]
    fn csv_round_trips_and_uses_shortest_decimals() {
        let path = tmp_path("roundtrip.csv");
        let records = sample_records();
        emit_csv(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("metric,d,n,seed,value,wall_ms,extra_json\n"));
        assert!(text.contains(",0.5,"), "shortest round-trip decimal: {text}");
        assert!(!text.contains("0.50000000"));
        assert!(!text.contains('\r'));
        let back = read_csv(&path).unwrap();
        assert_eq!(back, records);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn empty_record_list_writes_header_only() {
        let path = tmp_path("header_only.csv");
        emit_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "metric,d,n,seed,value,wall_ms,extra_json\n");
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn unwritable_path_reports_the_path() {
        let path = std::path::PathBuf::from("/no_such_dir_phaseprobe/x.csv");
        let err = emit_csv(&sample_records(), &path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("no_such_dir"), "{msg}");
    }

    #[test]
    fn json_summary_shape() {
        let path = tmp_path("summary.json");
        let aggs = vec![Aggregate {
            metric: "q".into(),
            d: 256,
            n: 512,
            mean: 0.5,
            median: 0.5,
            std: 0.1,
            count: 10,
        }];
        emit_json_summary("q", &aggs, &path).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["metric"], "q");
        assert_eq!(v["per_d"][0]["d"], 256);
        assert_eq!(v["per_d"][0]["mean"], 0.5);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn svg_requires_data_and_is_self_contained() {
        let path = tmp_path("plot.svg");
        assert!(emit_svg(&[], &path).is_err());
        let series = vec![SvgSeries {
            label: "ratio=2".into(),
            points: vec![(256, 0.5, 0.1), (512, 0.2, 0.15), (1024, -0.1, 0.2)],
        }];
        emit_svg(&series, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.contains("polyline"));
        assert!(text.contains("ratio=2"));
        assert!(!text.contains("http://") || text.contains("xmlns"), "no external assets");
        std::fs::remove_file(&path).ok();
    }
}
