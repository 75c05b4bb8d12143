//! Product × country grid files: first row holds country codes, first column
//! product codes.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every value bit for bit.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::indicator::IndicatorId;
use crate::panel::{ChurnPolicy, ExportPanel, Registry};
use crate::rca::{BinaryRcaMatrix, ChangeMatrix, ContinuousRcaMatrix};

const CORNER: &str = "product";

#[derive(Debug, Clone)]
pub struct Grid {
    pub rows: Registry,
    pub cols: Registry,
    pub values: Array2<f64>,
}

pub fn write_grid<W: io::Write, T: Display>(
    out: W,
    rows: &Registry,
    cols: &Registry,
    values: &Array2<T>,
) -> Result<()> {
    assert_eq!(values.dim(), (rows.len(), cols.len()));
    let mut w = csv::Writer::from_writer(out);
    let mut header = Vec::with_capacity(cols.len() + 1);
    header.push(CORNER.to_owned());
    header.extend(cols.codes().iter().cloned());
    w.write_record(&header)?;
    let mut line = Vec::with_capacity(cols.len() + 1);
    for (i, row) in values.rows().into_iter().enumerate() {
        line.clear();
        line.push(rows.code(i).to_owned());
        line.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid_file<T: Display>(
    path: &Path,
    rows: &Registry,
    cols: &Registry,
    values: &Array2<T>,
) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    write_grid(f, rows, cols, values)
}

pub fn read_grid<R: io::Read>(source: R, path: &Path) -> Result<Grid> {
    let fmt_err = |msg: String| Error::Format {
        path: path.to_owned(),
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| fmt_err("empty file".into()))??;
    let cols = Registry::from_codes(header.iter().skip(1).map(str::to_owned).collect())?;
    let mut codes = Vec::new();
    let mut data = Vec::new();
    for (k, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() != cols.len() + 1 {
            return Err(fmt_err(format!("row {} has {} fields", k + 2, rec.len())));
        }
        codes.push(rec[0].to_owned());
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| fmt_err(format!("row {}: bad number `{field}`", k + 2)))?;
            data.push(v);
        }
    }
    let rows = Registry::from_codes(codes)?;
    let values = Array2::from_shape_vec((rows.len(), cols.len()), data)
        .map_err(|e| fmt_err(e.to_string()))?;
    Ok(Grid { rows, cols, values })
}

pub fn read_grid_file(path: &Path) -> Result<Grid> {
    let f = File::open(path)?;
    read_grid(io::BufReader::new(f), path)
}

/// Files in `dir` named `<prefix><year>.csv`, keyed by year.
pub fn year_files(dir: &Path, prefix: &str) -> Result<BTreeMap<i32, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(year) = name
            .strip_prefix(prefix)
            .and_then(|rest| rest.strip_suffix(".csv"))
            .and_then(|y| y.parse::<i32>().ok())
        {
            out.insert(year, path);
        }
    }
    Ok(out)
}

pub fn exports_file(dir: &Path, year: i32) -> PathBuf {
    dir.join(format!("exports_{year}.csv"))
}

/// One `exports_<year>.csv` per year over the full panel registries.
pub fn write_panel(panel: &ExportPanel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for year in panel.years() {
        let values = panel.values(year).expect("year listed");
        write_grid_file(
            &exports_file(dir, year),
            panel.products(),
            panel.countries(),
            values,
        )?;
    }
    Ok(())
}

pub fn read_panel(dir: &Path, churn: ChurnPolicy) -> Result<ExportPanel> {
    let files = year_files(dir, "exports_")?;
    if files.is_empty() {
        return Err(Error::Format {
            path: dir.to_owned(),
            msg: "no exports_<year>.csv files".into(),
        });
    }
    let mut registries: Option<(Registry, Registry)> = None;
    let mut matrices = BTreeMap::new();
    for (year, path) in files {
        let g = read_grid_file(&path)?;
        match &registries {
            None => registries = Some((g.rows, g.cols)),
            Some((p, c)) if *p == g.rows && *c == g.cols => {}
            Some(_) => {
                return Err(Error::RegistryMismatch(format!(
                    "{} does not share the panel registries",
                    path.display()
                )))
            }
        }
        matrices.insert(year, g.values);
    }
    let (products, countries) = registries.expect("at least one file");
    ExportPanel::new(products, countries, matrices, churn)
}

pub fn rca_file(dir: &Path, year: i32) -> PathBuf {
    dir.join(format!("rca_{year}.csv"))
}

pub fn chi_file(dir: &Path, year: i32) -> PathBuf {
    dir.join(format!("chi_{year}.csv"))
}

pub fn rho_file(dir: &Path, year: i32) -> PathBuf {
    dir.join(format!("rho_{year}.csv"))
}

pub fn delta_file(dir: &Path, from: i32, to: i32) -> PathBuf {
    dir.join(format!("delta_{from}_{to}.csv"))
}

pub fn indicator_file(dir: &Path, id: IndicatorId, year: i32) -> PathBuf {
    dir.join(format!("indicator_{id}_{year}.csv"))
}

pub fn write_rca(dir: &Path, x: &BinaryRcaMatrix) -> Result<()> {
    write_grid_file(&rca_file(dir, x.year()), x.products(), x.countries(), x.x())
}

/// Writes χ and ρ grids. χ is printed in shortest round-trip form, so ρ is
/// recovered exactly from it.
pub fn write_continuous(dir: &Path, c: &ContinuousRcaMatrix) -> Result<()> {
    write_grid_file(&chi_file(dir, c.year()), c.products(), c.countries(), c.chi())?;
    write_grid_file(&rho_file(dir, c.year()), c.products(), c.countries(), c.rho())
}

pub fn write_delta(dir: &Path, d: &ChangeMatrix) -> Result<()> {
    let p = d.period();
    write_grid_file(&delta_file(dir, p.from, p.to), d.products(), d.countries(), d.delta())
}

pub fn read_rca_file(path: &Path, year: i32) -> Result<BinaryRcaMatrix> {
    let g = read_grid_file(path)?;
    if g.values.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Format {
            path: path.to_owned(),
            msg: "RCA grid must hold only 0 and 1".into(),
        });
    }
    let x = g.values.mapv(|v| v as u8);
    BinaryRcaMatrix::new(year, Arc::new(g.rows), Arc::new(g.cols), x)
}

pub fn read_chi_file(path: &Path, year: i32) -> Result<ContinuousRcaMatrix> {
    let g = read_grid_file(path)?;
    ContinuousRcaMatrix::from_chi(year, Arc::new(g.rows), Arc::new(g.cols), g.values)
}

/// Every `rca_<year>.csv` in `dir`.
pub fn read_rca_dir(dir: &Path) -> Result<BTreeMap<i32, BinaryRcaMatrix>> {
    year_files(dir, "rca_")?
        .into_iter()
        .map(|(y, path)| read_rca_file(&path, y).map(|x| (y, x)))
        .collect()
}
