//! CSV, JSON and SVG output of result records.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Verdict;
use crate::runner::ResultRecord;

/// Frozen CSV column order.
pub const CSV_HEADER: [&str; 15] = [
    "experiment",
    "k",
    "n",
    "family",
    "set_id",
    "eps1",
    "eps2",
    "gamma",
    "p_hat",
    "ci_low",
    "ci_high",
    "bound",
    "verdict",
    "samples",
    "seed",
];

/// One CSV row: a probed set at one radius pair. For lemma rows `p_hat` is
/// the violation rate; for Stein residual rows it is the residual; for
/// `sup:` rows it is the largest discrepancy. Inapplicable fields are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: String,
    pub k: usize,
    pub n: usize,
    pub family: String,
    pub set_id: String,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub gamma: Option<f64>,
    pub p_hat: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub bound: f64,
    pub verdict: Verdict,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

fn io_error(context: &str) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        context: context.to_string(),
        source,
    }
}

pub fn write_csv<W: Write>(record: &ResultRecord, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let fail = |e: csv::Error| Error::Io {
        context: "cannot write csv".into(),
        source: e.into(),
    };
    w.write_record(CSV_HEADER).map_err(fail)?;
    for row in &record.rows {
        w.serialize(row).map_err(fail)?;
    }
    w.flush().map_err(io_error("cannot write csv"))
}

pub fn to_json(record: &ResultRecord) -> Result<String> {
    serde_json::to_string_pretty(record).map_err(|e| Error::Parse {
        line: None,
        message: e.to_string(),
    })
}

pub fn from_json(text: &str) -> Result<ResultRecord> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        message: e.to_string(),
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Plot of `p_hat` with its interval and the bound for each set, over the
/// set's grid. Each set contributes two polylines, one for `p_hat` and one
/// for the bound.
pub fn to_svg(record: &ResultRecord) -> String {
    const W: f64 = 720.0;
    const H: f64 = 420.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

    let mut groups: Vec<(String, Vec<&Row>)> = Vec::new();
    for r in &record.rows {
        let key = r.set_id.split(':').next().unwrap_or_default().to_string();
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let data_max = record
        .rows
        .iter()
        .map(|r| r.ci_high.unwrap_or(r.p_hat).max(r.p_hat))
        .fold(0.0, f64::max);
    let bound_max = record.rows.iter().map(|r| r.bound).fold(0.0, f64::max).min(1.0);
    let y_max = data_max.max(bound_max).max(1e-12) * 1.05;
    let longest = groups.iter().map(|g| g.1.len()).max().unwrap_or(1).max(2);
    let x = |i: usize| M + (W - 2.0 * M) * i as f64 / (longest - 1) as f64;
    let y = |v: f64| H - M - (H - 2.0 * M) * v.clamp(0.0, y_max) / y_max;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{M}" y="20" font-family="sans-serif" font-size="14">{} (k={}, n={})</text>"#,
        escape(record.config.experiment.as_str()),
        record.config.k,
        record.config.n
    );
    let _ = writeln!(
        s,
        r#"<line x1="{M}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{M}" y1="{M}" x2="{M}" y2="{b}" stroke="black"/>"#,
        b = H - M,
        r = W - M
    );
    let _ = writeln!(
        s,
        r#"<text x="5" y="{}" font-family="sans-serif" font-size="10">{y_max:.3e}</text>"#,
        M + 4.0
    );
    for (g, (name, rows)) in groups.iter().enumerate() {
        let color = COLORS[g % COLORS.len()];
        let points = |f: &dyn Fn(&Row) -> f64| {
            rows.iter()
                .enumerate()
                .map(|(i, r)| format!("{:.2},{:.2}", x(i), y(f(r))))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(
            s,
            r#"<polyline data-series="{n}:p_hat" fill="none" stroke="{color}" points="{}"/>"#,
            points(&|r| r.p_hat),
            n = escape(name)
        );
        let _ = writeln!(
            s,
            r#"<polyline data-series="{n}:bound" fill="none" stroke="{color}" stroke-dasharray="4 3" points="{}"/>"#,
            points(&|r| r.bound),
            n = escape(name)
        );
        for (i, r) in rows.iter().enumerate() {
            if let (Some(lo), Some(hi)) = (r.ci_low, r.ci_high) {
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    y(lo),
                    y(hi),
                    x = x(i)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            W - M - 150.0,
            M + 14.0 * g as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `record` to `path`, or to stdout when `path` is `None`.
pub fn emit(record: &ResultRecord, format: Format, path: Option<&Path>) -> Result<()> {
    let mut out: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(io_error(&format!("cannot create {}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    match format {
        Format::Csv => write_csv(record, &mut out)?,
        Format::Json => writeln!(out, "{}", to_json(record)?).map_err(io_error("cannot write json"))?,
        Format::Svg => out.write_all(to_svg(record).as_bytes()).map_err(io_error("cannot write svg"))?,
    }
    out.flush().map_err(io_error("cannot write output"))
}
