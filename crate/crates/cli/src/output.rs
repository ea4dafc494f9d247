//! CSV results, manifest and plot-data files.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::sweep::ResultRow;

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const PLOT_DIR: &str = "plotdata";

const HEADER: [&str; 21] = [
    "cell",
    "mode",
    "noise",
    "per_unit",
    "dx",
    "n",
    "l1",
    "l1_used",
    "seed",
    "nu",
    "d",
    "alpha",
    "err_nu",
    "err_d",
    "err_alpha",
    "err_combined",
    "iterations",
    "converged",
    "stop",
    "cond",
    "error",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn record(row: &ResultRow) -> [String; 21] {
    [
        row.cell.to_string(),
        row.mode.clone(),
        float(row.noise),
        float(row.per_unit),
        float(row.dx),
        row.n.to_string(),
        float(row.l1),
        float(row.l1_used),
        row.seed.to_string(),
        float(row.nu),
        float(row.d),
        float(row.alpha),
        float(row.err_nu),
        float(row.err_d),
        float(row.err_alpha),
        float(row.err_combined),
        row.iterations.to_string(),
        row.converged.to_string(),
        row.stop.clone(),
        float(row.cond),
        row.error.clone(),
    ]
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.context("reading results row"))
        .collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    tool_version: &'static str,
    library_version: &'static str,
    cells: usize,
    failed_cells: usize,
    results: &'a str,
    plot_files: Vec<String>,
    config: &'a ExperimentSpec,
}

/// Writes results, plot data and the manifest under `dir`. Returns the files written.
pub fn write_all(dir: &Path, spec: &ExperimentSpec, rows: &[ResultRow]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join(PLOT_DIR))
        .with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();

    let results = dir.join(RESULTS_FILE);
    write_rows(fs::File::create(&results)?, rows)?;
    written.push(results);

    let mut plot_files = Vec::new();
    for (name, body) in emit_plotdata(rows) {
        let path = dir.join(PLOT_DIR).join(name);
        fs::write(&path, body)?;
        plot_files.push(format!("{PLOT_DIR}/{name}"));
        written.push(path);
    }

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        tool_version: env!("CARGO_PKG_VERSION"),
        library_version: fade_modfun::VERSION,
        cells: rows.len(),
        failed_cells: rows.iter().filter(|r| r.failed()).count(),
        results: RESULTS_FILE,
        plot_files,
        config: spec,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, toml::to_string(&manifest)?)?;
    written.push(path);
    Ok(written)
}

#[derive(Clone, Copy, PartialEq)]
enum Axis {
    Noise,
    PerUnit,
    N,
    L1,
}

impl Axis {
    const ALL: [Axis; 4] = [Axis::Noise, Axis::PerUnit, Axis::N, Axis::L1];

    fn name(self) -> &'static str {
        match self {
            Axis::Noise => "noise",
            Axis::PerUnit => "per_unit",
            Axis::N => "n",
            Axis::L1 => "l1",
        }
    }

    fn value(self, row: &ResultRow) -> f64 {
        match self {
            Axis::Noise => row.noise,
            Axis::PerUnit => row.per_unit,
            Axis::N => row.n as f64,
            Axis::L1 => row.l1,
        }
    }
}

type Quantity = (&'static str, fn(&ResultRow) -> f64);

const ESTIMATES: [Quantity; 3] = [("nu", |r| r.nu), ("d", |r| r.d), ("alpha", |r| r.alpha)];
const ERRORS: [Quantity; 3] = [
    ("err_nu", |r| r.err_nu),
    ("err_d", |r| r.err_d),
    ("err_alpha", |r| r.err_alpha),
];

/// Seed-averaged `(x, series, value)` table.
///
/// The series label is the quantity name, or the `by` axis value when given,
/// followed by any other axis that takes more than one value in `rows`.
fn family(rows: &[&ResultRow], x: Axis, by: Option<Axis>, quantities: &[Quantity]) -> String {
    let varying: Vec<Axis> = Axis::ALL
        .into_iter()
        .filter(|a| *a != x && Some(*a) != by)
        .filter(|a| rows.iter().any(|r| a.value(r) != a.value(rows[0])))
        .collect();
    let mut acc: Vec<(String, f64, f64, usize)> = Vec::new();
    for row in rows {
        let context: String = varying
            .iter()
            .map(|a| format!(" {}={}", a.name(), a.value(row)))
            .collect();
        for (name, get) in quantities {
            let head = match by {
                Some(axis) => format!("{}={}", axis.name(), axis.value(row)),
                None => name.to_string(),
            };
            let label = format!("{head}{context}");
            let xv = x.value(row);
            match acc.iter_mut().find(|(l, v, _, _)| *l == label && *v == xv) {
                Some(slot) => {
                    slot.2 += get(row);
                    slot.3 += 1;
                }
                None => acc.push((label, xv, get(row), 1)),
            }
        }
    }
    acc.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut body = String::from("x,series,value\n");
    for (label, xv, sum, count) in acc {
        body += &format!("{},{label},{}\n", float(xv), float(sum / count as f64));
    }
    body
}

/// One tidy CSV per plot, averaged over seeds. Failed cells are skipped.
pub fn emit_plotdata(rows: &[ResultRow]) -> Vec<(&'static str, String)> {
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.error.is_empty()).collect();
    let two_param = ok.iter().all(|r| r.mode == "two-param");
    let fitted = if two_param { 2 } else { 3 };
    vec![
        (
            "estimates_vs_l1.csv",
            family(&ok, Axis::L1, None, &ESTIMATES[..fitted]),
        ),
        (
            "errors_vs_l1.csv",
            family(&ok, Axis::L1, None, &ERRORS[..fitted]),
        ),
        (
            "estimates_vs_noise.csv",
            family(&ok, Axis::Noise, None, &ESTIMATES[..fitted]),
        ),
        (
            "estimates_vs_n.csv",
            family(&ok, Axis::N, None, &ESTIMATES[..fitted]),
        ),
        (
            "err_d_vs_n.csv",
            family(&ok, Axis::N, Some(Axis::Noise), &ERRORS[1..2]),
        ),
        (
            "err_nu_vs_n.csv",
            family(&ok, Axis::N, Some(Axis::Noise), &ERRORS[..1]),
        ),
    ]
}
