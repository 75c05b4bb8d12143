//! Test result files: `scope,unit,indicator,direction,from,to,N,N1,
//! observed_mean,p_value,skipped,reason`.

use std::io;
use std::path::Path;

use crate::bootstrap::{SkipReason, TestResult};
use crate::error::{Error, Result};
use crate::rca::YearPair;

pub const HEADER: [&str; 12] = [
    "scope",
    "unit",
    "indicator",
    "direction",
    "from",
    "to",
    "N",
    "N1",
    "observed_mean",
    "p_value",
    "skipped",
    "reason",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results<W: io::Write>(out: W, results: &[TestResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in results {
        w.write_record([
            r.scope.as_str().to_owned(),
            r.unit.clone(),
            r.indicator.to_string(),
            r.direction.to_string(),
            r.period.from.to_string(),
            r.period.to.to_string(),
            r.n.to_string(),
            r.n1.to_string(),
            opt(r.observed_mean),
            opt(r.p_value),
            r.is_skipped().to_string(),
            r.skipped.map(|s| s.as_str()).unwrap_or("").to_owned(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: io::Read>(source: R, path: &Path) -> Result<Vec<TestResult>> {
    let bad = |line: usize, msg: String| Error::Format {
        path: path.to_owned(),
        msg: format!("record {line}: {msg}"),
    };
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(bad(0, "unexpected header".into()));
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 1;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<usize> {
            f(i).parse().map_err(|_| bad(line, format!("bad count `{}`", f(i))))
        };
        let year = |i: usize| -> Result<i32> {
            f(i).parse().map_err(|_| bad(line, format!("bad year `{}`", f(i))))
        };
        let real = |i: usize| -> Result<Option<f64>> {
            match f(i) {
                "" => Ok(None),
                s => s
                    .parse()
                    .map(Some)
                    .map_err(|_| bad(line, format!("bad number `{s}`"))),
            }
        };
        let skipped = match (f(10), f(11)) {
            ("false", "") => None,
            ("true", reason) => Some(reason.parse::<SkipReason>()?),
            (s, r) => return Err(bad(line, format!("bad skip fields `{s}`, `{r}`"))),
        };
        out.push(TestResult {
            scope: f(0).parse()?,
            unit: f(1).to_owned(),
            indicator: f(2).parse()?,
            direction: f(3).parse()?,
            period: YearPair::new(year(4)?, year(5)?)?,
            n: num(6)?,
            n1: num(7)?,
            observed_mean: real(8)?,
            p_value: real(9)?,
            skipped,
        });
    }
    Ok(out)
}
