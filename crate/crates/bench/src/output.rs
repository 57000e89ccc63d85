//! Record serialization.
//!
//! The ratio CSV has a fixed column set, one row per ratio:
//!
//! | column       | meaning                                           |
//! |--------------|---------------------------------------------------|
//! | `experiment` | matrix family and shape, e.g. `hc_8192x500`       |
//! | `algo`       | `srrqr`, `rand-rank`, `rand-tau` or `qrcp`        |
//! | `seed`       | sketch seed                                       |
//! | `k`          | selected rank                                     |
//! | `series`     | `leading`, `trailing`, `l_value` or `r_value`     |
//! | `i_or_j`     | zero-based index within the series                |
//! | `ratio`      | the value; empty where a trailing ratio is undefined |
//! | `bound`      | `√(1 + f²k(n−k))` for ratio series, empty otherwise |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::run::Record;
use crate::{BenchError, Result};

pub const CSV_HEADER: [&str; 8] = ["experiment", "algo", "seed", "k", "series", "i_or_j", "ratio", "bound"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Serialize)]
struct Row<'a> {
    experiment: &'a str,
    algo: &'a str,
    seed: u64,
    k: usize,
    series: &'a str,
    i_or_j: usize,
    ratio: Option<f64>,
    bound: Option<f64>,
}

pub fn write_csv<W: Write>(records: &[Record], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        let base = |series, i, ratio, bound| Row {
            experiment: &r.experiment,
            algo: r.algo.name(),
            seed: r.run.seed,
            k: r.run.k,
            series,
            i_or_j: i,
            ratio,
            bound,
        };
        let b = Some(r.run.bound);
        for (i, &x) in r.run.ratios.leading.iter().enumerate() {
            out.serialize(base("leading", i, Some(x), b))?;
        }
        for (j, &x) in r.run.ratios.trailing.iter().enumerate() {
            out.serialize(base("trailing", j, x, b))?;
        }
        for (i, &x) in r.run.l_values.iter().enumerate() {
            out.serialize(base("l_value", i, Some(x), None))?;
        }
        for (i, &x) in r.run.r_values.iter().enumerate() {
            out.serialize(base("r_value", i, Some(x), None))?;
        }
    }
    out.flush().map_err(|e| BenchError::Io { path: "<csv>".into(), source: e })?;
    Ok(())
}

/// A JSON array of records.
pub fn write_json<W: Write>(records: &[Record], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, records)?;
    Ok(())
}

pub fn write_records<W: Write>(records: &[Record], format: Format, w: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(records, w),
        Format::Json => write_json(records, w),
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BenchError::Io { path: path.display().to_string(), source: e })
}

/// Gnuplot script plotting columns `x_col` against `y_col` of a CSV file.
pub fn gnuplot_script(csv_path: &str, title: &str, x_col: usize, y_col: usize, logscale_y: bool) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key off\n");
    s.push_str(&format!("set title \"{title}\"\n"));
    if logscale_y {
        s.push_str("set logscale y\nset format y '%.0e'\n");
    }
    s.push_str(&format!("plot '{csv_path}' every ::1 using {x_col}:{y_col} with linespoints pt 7 ps 0.5\n"));
    s
}
