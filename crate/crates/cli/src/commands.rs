use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use relspace::bootstrap::{Direction, ScopeKind, SuiteConfig, TestResult};
use relspace::grid::{
    chi_file, indicator_file, read_chi_file, read_panel, read_rca_dir, write_continuous, write_delta,
    write_grid_file, write_panel, write_rca,
};
use relspace::kde::GRID_POINTS;
use relspace::panel::{ingest_exports, ingest_lall, ChurnPolicy, IngestOptions};
use relspace::pipeline::{compute_all_rca, compute_indicators, run_period_tests};
use relspace::rca::{compute_changes_aligned, enumerate_year_pairs, BinaryRcaMatrix, YearPair};
use relspace::report::{self, Grouping, DEFAULT_CUTOFFS};
use relspace::results_csv::{read_results, write_results};
use relspace::{Error, IndicatorId};

use crate::error::{CliError, CliResult};

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn churn(allow: bool) -> ChurnPolicy {
    if allow {
        ChurnPolicy::Exclude
    } else {
        ChurnPolicy::Reject
    }
}

fn write_manifest(out: &Path, stage: &str, body: Value) -> CliResult<()> {
    let mut doc = json!({ "stage": stage, "version": VERSION });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    let path = out.join(format!("manifest_{stage}.json"));
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .collect()
}

fn load_rca(out: &Path) -> CliResult<BTreeMap<i32, BinaryRcaMatrix>> {
    if !out.is_dir() {
        return Err(CliError::MissingUpstream(format!("{} does not exist", out.display())));
    }
    let rca = read_rca_dir(out)?;
    if rca.is_empty() {
        return Err(CliError::MissingUpstream(format!(
            "no rca_<year>.csv in {}; run `relspace rca` first",
            out.display()
        )));
    }
    Ok(rca)
}

pub fn parse_ids(text: &str) -> CliResult<Vec<IndicatorId>> {
    let ids = IndicatorId::parse_list(text).map_err(|e| CliError::BadFlag(e.to_string()))?;
    if ids.is_empty() {
        return Err(CliError::BadFlag("no indicator ids given".into()));
    }
    Ok(ids)
}

fn parse_many<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    let mut out = Vec::new();
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        out.push(
            tok.parse()
                .map_err(|_| CliError::BadFlag(format!("unknown {what} `{tok}`")))?,
        );
    }
    if out.is_empty() {
        return Err(CliError::BadFlag(format!("no {what} given")));
    }
    Ok(out)
}

fn dedup<T: PartialEq + Copy>(v: Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(v.len());
    for x in v {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// `all`, `length=k`, or explicit `from-to` pairs.
pub fn parse_periods(text: &str, years: &[i32]) -> CliResult<Vec<YearPair>> {
    let text = text.trim();
    let by_length = enumerate_year_pairs(years)?;
    if text == "all" {
        let mut all: Vec<YearPair> = by_length.into_values().flatten().collect();
        all.sort();
        return Ok(all);
    }
    if let Some(k) = text.strip_prefix("length=") {
        let k: u32 = k
            .trim()
            .parse()
            .map_err(|_| CliError::BadFlag(format!("bad period length `{k}`")))?;
        return by_length
            .get(&k)
            .cloned()
            .ok_or_else(|| CliError::BadFlag(format!("no year pairs of length {k}")));
    }
    let mut out = Vec::new();
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (a, b) = tok
            .split_once('-')
            .and_then(|(a, b)| Some((a.trim().parse::<i32>().ok()?, b.trim().parse::<i32>().ok()?)))
            .ok_or_else(|| CliError::BadFlag(format!("bad period `{tok}`")))?;
        for y in [a, b] {
            if !years.contains(&y) {
                return Err(Error::YearNotFound(y).into());
            }
        }
        out.push(YearPair::new(a, b)?);
    }
    if out.is_empty() {
        return Err(CliError::BadFlag("no periods given".into()));
    }
    Ok(dedup(out))
}

pub fn ingest(out: &Path, exports: &Path, sum_duplicates: bool, allow_churn: bool) -> CliResult<()> {
    let f = File::open(exports)
        .map_err(|e| CliError::MissingUpstream(format!("{}: {e}", exports.display())))?;
    let opts = IngestOptions {
        sum_duplicates,
        churn: churn(allow_churn),
    };
    let panel = ingest_exports(BufReader::new(f), &opts)?;
    write_panel(&panel, out)?;
    let exclusions: BTreeMap<String, Value> = panel
        .years()
        .into_iter()
        .filter_map(|y| {
            let e = panel.exclusions(y)?;
            (!e.is_empty()).then(|| {
                (y.to_string(), json!({ "products": e.products, "countries": e.countries }))
            })
        })
        .collect();
    write_manifest(
        out,
        "ingest",
        json!({
            "config": {
                "exports": exports.display().to_string(),
                "sum_duplicates": sum_duplicates,
                "allow_churn": allow_churn,
            },
            "years": panel.years(),
            "products": panel.products().len(),
            "countries": panel.countries().len(),
            "excluded": exclusions,
        }),
    )
}

pub fn rca(out: &Path, threshold: f64, allow_churn: bool) -> CliResult<()> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(CliError::BadFlag(format!("--rca-threshold must be positive, got {threshold}")));
    }
    if !out.is_dir() {
        return Err(CliError::MissingUpstream(format!("{} does not exist", out.display())));
    }
    let panel = match read_panel(out, churn(allow_churn)) {
        Err(Error::Format { msg, .. }) if msg.contains("no exports_") => {
            return Err(CliError::MissingUpstream(format!(
                "no exports_<year>.csv in {}; run `relspace ingest` first",
                out.display()
            )))
        }
        other => other?,
    };
    let all = compute_all_rca(&panel, threshold)?;
    let mut years = BTreeMap::new();
    for (year, (x, c)) in &all {
        write_rca(out, x)?;
        write_continuous(out, c)?;
        years.insert(
            year.to_string(),
            json!({ "products": x.m(), "countries": x.n(), "rca_count": x.r() }),
        );
    }
    write_manifest(
        out,
        "rca",
        json!({
            "config": { "rca_threshold": threshold, "allow_churn": allow_churn },
            "years": years,
        }),
    )
}

pub fn indicators(out: &Path, ids: &str, years: Option<&str>) -> CliResult<()> {
    let ids = parse_ids(ids)?;
    let rca = load_rca(out)?;
    let years: Vec<i32> = match years {
        None => rca.keys().copied().collect(),
        Some(text) => dedup(parse_many(text, "year")?),
    };
    let mut written = Vec::new();
    for year in &years {
        let x = rca.get(year).ok_or(Error::YearNotFound(*year))?;
        let set = compute_indicators(x, &ids)?;
        for id in &ids {
            let m = &set[id];
            let path = indicator_file(out, *id, *year);
            write_grid_file(&path, &m.products, &m.countries, &m.values)?;
            written.push(path);
        }
    }
    write_manifest(
        out,
        "indicators",
        json!({
            "config": { "ids": ids.iter().map(|i| i.as_str()).collect::<Vec<_>>(), "years": years },
            "files": file_names(&written),
        }),
    )
}

pub struct TestArgs<'a> {
    pub indicators: &'a str,
    pub reps: usize,
    pub seed: u64,
    pub min_candidates: usize,
    pub scope: &'a str,
    pub directions: &'a str,
    pub periods: &'a str,
    pub results: &'a str,
}

pub fn test(out: &Path, a: &TestArgs<'_>) -> CliResult<()> {
    let ids = parse_ids(a.indicators)?;
    let scopes: Vec<ScopeKind> = dedup(parse_many(a.scope, "scope")?);
    let directions: Vec<Direction> = dedup(parse_many(a.directions, "direction")?);
    if a.reps == 0 {
        return Err(CliError::BadFlag("--reps must be at least 1".into()));
    }
    if a.min_candidates < 2 {
        return Err(CliError::BadFlag("--min-candidates must be at least 2".into()));
    }
    let rca = load_rca(out)?;
    let years: Vec<i32> = rca.keys().copied().collect();
    let periods = parse_periods(a.periods, &years)?;
    let config = SuiteConfig {
        repetitions: a.reps,
        min_candidates: a.min_candidates,
        seed: a.seed,
    };

    for p in &periods {
        let (delta, _) = compute_changes_aligned(&rca[&p.from], &rca[&p.to])?;
        write_delta(out, &delta)?;
    }
    let suite = run_period_tests(&rca, &periods, &ids, &scopes, &directions, &config, |_, x| {
        compute_indicators(x, &ids)
    })?;

    let path = out.join(a.results);
    write_results(BufWriter::new(File::create(&path)?), &suite.results)?;

    let mut skips: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &suite.results {
        if let Some(s) = r.skipped {
            *skips.entry(s.as_str()).or_default() += 1;
        }
    }
    let alignment: BTreeMap<String, Value> = suite
        .alignment
        .iter()
        .map(|(p, r)| {
            (
                p.to_string(),
                json!({ "dropped_products": r.dropped_products, "dropped_countries": r.dropped_countries }),
            )
        })
        .collect();
    write_manifest(
        out,
        "test",
        json!({
            "config": {
                "indicators": ids.iter().map(|i| i.as_str()).collect::<Vec<_>>(),
                "reps": a.reps,
                "seed": a.seed,
                "min_candidates": a.min_candidates,
                "scopes": scopes.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                "directions": directions.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
                "periods": periods.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "results": a.results,
            },
            "tests": suite.results.len(),
            "skipped": skips,
            "alignment": alignment,
        }),
    )
}

pub struct ReportArgs<'a> {
    pub results: &'a str,
    pub lall: Option<&'a Path>,
    pub reps: usize,
    pub baseline_year: Option<i32>,
}

fn csv_out(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs an optional diagnostic, keeping its error in the manifest when the
/// data cannot support it.
fn soft<T>(r: relspace::Result<T>) -> CliResult<Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ Error::EmptySample(_)) => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

pub fn report(out: &Path, a: &ReportArgs<'_>) -> CliResult<()> {
    if a.reps == 0 {
        return Err(CliError::BadFlag("--reps must be at least 1".into()));
    }
    let rca = load_rca(out)?;
    let results_path = out.join(a.results);
    let results: Vec<TestResult> = match File::open(&results_path) {
        Ok(f) => read_results(BufReader::new(f), &results_path)?,
        Err(_) => {
            return Err(CliError::MissingUpstream(format!(
                "{} not found; run `relspace test` first",
                results_path.display()
            )))
        }
    };
    let lall = match a.lall {
        None => None,
        Some(p) => {
            let f = File::open(p).map_err(|e| CliError::MissingUpstream(format!("{}: {e}", p.display())))?;
            Some(ingest_lall(BufReader::new(f))?)
        }
    };
    let mut written: Vec<PathBuf> = Vec::new();
    let mut emit = |name: &str| {
        let p = out.join(name);
        written.push(p.clone());
        p
    };

    let xs: Vec<&BinaryRcaMatrix> = rca.values().collect();
    report::write_rca_counts(csv_out(&emit("rca_counts.csv"))?, &report::rca_count_table(&xs))?;

    let mut periods: Vec<YearPair> = results.iter().map(|r| r.period).collect();
    periods.sort();
    periods.dedup();
    let mut deltas = Vec::new();
    for p in &periods {
        let (x0, x1) = match (rca.get(&p.from), rca.get(&p.to)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(CliError::MissingUpstream(format!(
                    "RCA files for period {p} referenced by the results"
                )))
            }
        };
        deltas.push(compute_changes_aligned(x0, x1)?.0);
    }
    let delta_refs: Vec<_> = deltas.iter().collect();
    report::write_change_stats(csv_out(&emit("change_stats.csv"))?, &report::change_stats_table(&delta_refs))?;

    for (grouping, tag) in [(Grouping::Pooled, "pooled"), (Grouping::PeriodLength, "by_length")] {
        let cdf = report::pvalue_cdf(&results, grouping, a.reps);
        report::write_cdf(csv_out(&emit(&format!("pvalue_cdf_{tag}.csv")))?, &cdf)?;
        let summary = report::threshold_summary(&results, &DEFAULT_CUTOFFS, grouping);
        report::write_summary(csv_out(&emit(&format!("summary_{tag}.csv")))?, &summary)?;
    }

    let mut lall_info = Value::Null;
    if let Some(lall) = &lall {
        let b = report::lall_breakdown(&results, lall, &DEFAULT_CUTOFFS);
        report::write_summary(csv_out(&emit("lall_summary.csv"))?, &b.table)?;
        let names: BTreeMap<String, &str> = (1..=11u8)
            .filter_map(|g| lall.group_name(g).map(|n| (g.to_string(), n)))
            .collect();
        lall_info = json!({ "unmapped_products": b.unmapped, "group_names": names });
    }

    // Decomposition diagnostics for one baseline year.
    let base = a.baseline_year.unwrap_or(*rca.keys().next().expect("non-empty"));
    let x = rca.get(&base).ok_or(Error::YearNotFound(base))?;
    use IndicatorId::*;
    let set = compute_indicators(x, &[E, E1, E2, Estar, E1star, E2star])?;
    let inputs = report::DecompositionInputs {
        e: &set[&E],
        e1: &set[&E1],
        e2: &set[&E2],
        estar: &set[&Estar],
        e1star: &set[&E1star],
        e2star: &set[&E2star],
        s: x.s(),
        s_star: x.s_star(),
    };
    let decomposition = match soft(report::decomposition_diagnostics(&inputs))? {
        Ok(d) => {
            report::write_scatter(csv_out(&emit("decomposition_scatter.csv"))?, &d)?;
            let dens = [
                d.product.kde_e.clone(),
                d.product.kde_e2.clone(),
                d.country.kde_e.clone(),
                d.country.kde_e2.clone(),
            ];
            report::write_density(csv_out(&emit("decomposition_density.csv"))?, &dens)?;
            let side = |s: &report::SideDiagnostics| {
                json!({
                    "slope": s.fit.slope,
                    "intercept": s.fit.intercept,
                    "r_squared": s.fit.r_squared,
                    "mode_e": s.kde_e.mode(),
                    "mode_e2": s.kde_e2.mode(),
                    "bandwidth_e": s.kde_e.bandwidth,
                    "bandwidth_e2": s.kde_e2.bandwidth,
                })
            };
            json!({ "year": base, "product": side(&d.product), "country": side(&d.country) })
        }
        Err(msg) => json!({ "year": base, "error": msg }),
    };

    // ρ-change densities need χ at both ends of every period.
    let mut chi = BTreeMap::new();
    for p in &periods {
        for y in [p.from, p.to] {
            if chi.contains_key(&y) {
                continue;
            }
            let path = chi_file(out, y);
            if !path.is_file() {
                return Err(CliError::MissingUpstream(format!("{} not found", path.display())));
            }
            chi.insert(y, read_chi_file(&path, y)?);
        }
    }
    let triples: Vec<_> = deltas
        .iter()
        .map(|d| (&chi[&d.period().from], &chi[&d.period().to], d))
        .collect();
    let rho_info = if triples.is_empty() {
        Value::Null
    } else {
        match soft(report::rho_change_density(&triples))? {
            Ok(dens) => {
                report::write_density(csv_out(&emit("rho_change_density.csv"))?, &dens)?;
                dens.iter()
                    .map(|k| (k.label.clone(), json!({ "bandwidth": k.bandwidth, "sample_size": k.sample_size })))
                    .collect::<serde_json::Map<_, _>>()
                    .into()
            }
            Err(msg) => json!({ "error": msg }),
        }
    };

    let tested = results.iter().filter(|r| !r.is_skipped()).count();
    write_manifest(
        out,
        "report",
        json!({
            "config": {
                "results": a.results,
                "lall": a.lall.map(|p| p.display().to_string()),
                "reps": a.reps,
                "baseline_year": base,
                "cutoffs": DEFAULT_CUTOFFS,
            },
            "kde": {
                "kernel": "gaussian",
                "bandwidth": "silverman 0.9*min(sd, iqr/1.34)*n^-0.2",
                "grid_points": GRID_POINTS,
                "rho_change_support": [-2.0, 2.0],
            },
            "zero_p_plotted_at": 1.0 / (10.0 * a.reps as f64),
            "tests": results.len(),
            "tested": tested,
            "skipped": results.len() - tested,
            "lall": lall_info,
            "decomposition": decomposition,
            "rho_change": rho_info,
            "files": file_names(&written),
        }),
    )
}
