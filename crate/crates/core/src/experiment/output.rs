use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::run::{Dispersion, ResultRow, RowStatus};
use crate::error::{Error, Result};
use crate::heuristics::Algorithm;

pub const CSV_HEADER: [&str; 11] = [
    "algorithm",
    "n",
    "k",
    "s",
    "seed",
    "rep",
    "budget",
    "saved_avg",
    "saved_pct",
    "wall_time_s",
    "status",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<csv>", e),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Writes rows as CSV. Floats use the shortest text that parses back to the
/// same value, so `parse_csv` restores rows exactly.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.s.to_string(),
            r.seed.to_string(),
            r.rep.to_string(),
            r.budget.to_string(),
            opt(r.saved_avg),
            opt(r.saved_pct),
            r.wall_time_s.to_string(),
            r.status.name().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn with_path(path: &Path, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    with_path(path, write_csv(rows, create(path)?))
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format(format!("unexpected header {:?}", header)));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let field = |j: usize| rec.get(j).unwrap_or("");
        fn num<T: std::str::FromStr>(line: usize, name: &str, text: &str) -> Result<T> {
            text.parse()
                .map_err(|_| Error::parse(line, format!("bad {name} `{text}`")))
        }
        let optf = |j: usize| -> Result<Option<f64>> {
            match field(j) {
                "" => Ok(None),
                t => num(line, CSV_HEADER[j], t).map(Some),
            }
        };
        rows.push(ResultRow {
            algorithm: field(0)
                .parse::<Algorithm>()
                .map_err(|e| Error::parse(line, e.to_string()))?,
            n: num(line, "n", field(1))?,
            k: num(line, "k", field(2))?,
            s: num(line, "s", field(3))?,
            seed: num(line, "seed", field(4))?,
            rep: num(line, "rep", field(5))?,
            budget: num(line, "budget", field(6))?,
            saved_avg: optf(7)?,
            saved_pct: optf(8)?,
            wall_time_s: num(line, "wall_time_s", field(9))?,
            status: RowStatus::parse(field(10)).map_err(|e| Error::parse(line, e.to_string()))?,
        });
    }
    Ok(rows)
}

pub fn parse_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Mean wall time per (algorithm, n) over rows with status ok.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub algorithm: Algorithm,
    pub n: usize,
    pub runs: usize,
    pub mean_wall_time_s: f64,
}

impl PlotPoint {
    pub fn log10_n(&self) -> f64 {
        (self.n as f64).log10()
    }

    pub fn log10_time(&self) -> f64 {
        self.mean_wall_time_s.log10()
    }
}

pub fn plot_points(rows: &[ResultRow]) -> Vec<PlotPoint> {
    let mut acc: BTreeMap<(Algorithm, usize), (usize, f64)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.status == RowStatus::Ok) {
        let e = acc.entry((r.algorithm, r.n)).or_default();
        e.0 += 1;
        e.1 += r.wall_time_s;
    }
    acc.into_iter()
        .map(|((algorithm, n), (runs, total))| PlotPoint {
            algorithm,
            n,
            runs,
            mean_wall_time_s: total / runs as f64,
        })
        .collect()
}

pub fn write_plot_data<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "n", "runs", "mean_wall_time_s", "log10_n", "log10_time"])
        .map_err(csv_err)?;
    for p in plot_points(rows) {
        w.write_record([
            p.algorithm.name().to_string(),
            p.n.to_string(),
            p.runs.to_string(),
            p.mean_wall_time_s.to_string(),
            p.log10_n().to_string(),
            p.log10_time().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn emit_plot_data(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    with_path(path, write_plot_data(rows, create(path)?))
}

pub fn write_dispersion<W: Write>(stats: &[Dispersion], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "s", "executions", "mean", "q1", "q3", "iqr"])
        .map_err(csv_err)?;
    for d in stats {
        w.write_record([
            d.algorithm.name().to_string(),
            d.s.to_string(),
            d.executions.to_string(),
            d.mean.to_string(),
            d.q1.to_string(),
            d.q3.to_string(),
            d.iqr().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn emit_dispersion(stats: &[Dispersion], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    with_path(path, write_dispersion(stats, create(path)?))
}
