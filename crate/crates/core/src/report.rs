//! Descriptive tables and plot-ready series: RCA counts, change statistics,
//! p-value distributions, cutoff summaries, Lall-group breakdowns, the E/E2
//! decomposition diagnostics and densities of ρ-changes.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;

use crate::bootstrap::{Direction, ScopeKind, TestResult};
use crate::error::{Error, Result};
use crate::indicator::{IndicatorId, IndicatorMatrix, Space};
use crate::kde::{bounded_gaussian_kde, gaussian_kde, KernelDensity};
use crate::panel::LallConcordance;
use crate::rca::{BinaryRcaMatrix, ChangeMatrix, ContinuousRcaMatrix};

pub const DEFAULT_CUTOFFS: [f64; 3] = [0.01, 0.05, 0.10];

fn mean_sd(counts: &[usize]) -> (f64, f64) {
    let n = counts.len() as f64;
    if counts.is_empty() {
        return (0.0, 0.0);
    }
    let mean = counts.iter().sum::<usize>() as f64 / n;
    if counts.len() < 2 {
        return (mean, 0.0);
    }
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcaCountRow {
    pub year: i32,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcaCountTable {
    pub rows: Vec<RcaCountRow>,
    pub average_count: f64,
    pub average_fraction: f64,
}

/// Number of RCAs per year and their share of all m·n cells.
pub fn rca_count_table(matrices: &[&BinaryRcaMatrix]) -> RcaCountTable {
    let rows: Vec<RcaCountRow> = matrices
        .iter()
        .map(|x| {
            let cells = x.m() * x.n();
            RcaCountRow {
                year: x.year(),
                count: x.r(),
                fraction: if cells == 0 { 0.0 } else { x.r() as f64 / cells as f64 },
            }
        })
        .collect();
    let k = rows.len().max(1) as f64;
    RcaCountTable {
        average_count: rows.iter().map(|r| r.count as f64).sum::<f64>() / k,
        average_fraction: rows.iter().map(|r| r.fraction).sum::<f64>() / k,
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    fn of(counts: &[usize]) -> Self {
        let (mean, sd) = mean_sd(counts);
        MeanSd { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeStatsRow {
    pub from: i32,
    pub to: i32,
    pub length: u32,
    pub gains: usize,
    pub losses: usize,
    pub gains_per_country: MeanSd,
    pub losses_per_country: MeanSd,
    pub gains_per_product: MeanSd,
    pub losses_per_product: MeanSd,
}

/// Gains and losses per period with per-country (over n) and per-product
/// (over m) means and sample standard deviations, ordered by period length.
pub fn change_stats_table(deltas: &[&ChangeMatrix]) -> Vec<ChangeStatsRow> {
    let mut rows: Vec<ChangeStatsRow> = deltas
        .iter()
        .map(|d| ChangeStatsRow {
            from: d.period().from,
            to: d.period().to,
            length: d.period().length(),
            gains: d.gains(),
            losses: d.losses(),
            gains_per_country: MeanSd::of(&d.gains_per_country()),
            losses_per_country: MeanSd::of(&d.losses_per_country()),
            gains_per_product: MeanSd::of(&d.gains_per_product()),
            losses_per_product: MeanSd::of(&d.losses_per_product()),
        })
        .collect();
    rows.sort_by_key(|r| (r.length, r.from));
    rows
}

/// How results are split into groups beyond scope, direction and indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// All periods together.
    Pooled,
    /// One group per period length.
    PeriodLength,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GroupKey {
    pub scope: ScopeKind,
    pub direction: Direction,
    pub space: Space,
    pub indicator: IndicatorId,
    /// `None` when periods are pooled.
    pub period_length: Option<u32>,
    pub lall_group: Option<u8>,
}

impl GroupKey {
    fn of(r: &TestResult, grouping: Grouping) -> Self {
        GroupKey {
            scope: r.scope,
            direction: r.direction,
            space: r.indicator.space(),
            indicator: r.indicator,
            period_length: match grouping {
                Grouping::Pooled => None,
                Grouping::PeriodLength => Some(r.period.length()),
            },
            lall_group: None,
        }
    }

    pub fn period_label(&self) -> String {
        self.period_length
            .map_or_else(|| "pooled".to_owned(), |l| l.to_string())
    }
}

/// Non-skipped p-values and the skipped count per group.
fn collect_groups<'a, I>(results: I, key: impl Fn(&TestResult) -> Option<GroupKey>) -> BTreeMap<GroupKey, (Vec<f64>, usize)>
where
    I: IntoIterator<Item = &'a TestResult>,
{
    let mut groups: BTreeMap<GroupKey, (Vec<f64>, usize)> = BTreeMap::new();
    for r in results {
        let Some(k) = key(r) else { continue };
        let entry = groups.entry(k).or_default();
        match r.p_value {
            Some(p) if !r.is_skipped() => entry.0.push(p),
            _ => entry.1 += 1,
        }
    }
    for (ps, _) in groups.values_mut() {
        ps.sort_by(f64::total_cmp);
    }
    groups
}

fn share_at_most(sorted: &[f64], cutoff: f64) -> usize {
    sorted.partition_point(|&p| p <= cutoff)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfPoint {
    pub p: f64,
    /// `p` with zeros replaced by 1/(10·reps) for log axes.
    pub plot_p: f64,
    pub zero_substituted: bool,
    /// Share of non-skipped tests with p-value ≤ `p`.
    pub fraction_tested: f64,
    /// Same count over all units including skipped ones.
    pub fraction_all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfSeries {
    pub key: GroupKey,
    pub tested: usize,
    pub skipped: usize,
    pub points: Vec<CdfPoint>,
}

impl CdfSeries {
    /// Step-function value at `p` over tested units.
    pub fn at(&self, p: f64) -> f64 {
        self.points
            .iter()
            .take_while(|pt| pt.p <= p)
            .last()
            .map_or(0.0, |pt| pt.fraction_tested)
    }
}

/// Empirical CDF of p-values per group, one point per distinct p-value.
pub fn pvalue_cdf(results: &[TestResult], grouping: Grouping, repetitions: usize) -> Vec<CdfSeries> {
    let floor = 1.0 / (10.0 * repetitions.max(1) as f64);
    collect_groups(results, |r| Some(GroupKey::of(r, grouping)))
        .into_iter()
        .filter(|(_, (ps, _))| !ps.is_empty())
        .map(|(key, (ps, skipped))| {
            let tested = ps.len();
            let all = (tested + skipped) as f64;
            let mut points = Vec::new();
            let mut k = 0;
            while k < tested {
                let p = ps[k];
                k = share_at_most(&ps, p);
                points.push(CdfPoint {
                    p,
                    plot_p: if p == 0.0 { floor } else { p },
                    zero_substituted: p == 0.0,
                    fraction_tested: k as f64 / tested as f64,
                    fraction_all: k as f64 / all,
                });
            }
            CdfSeries {
                key,
                tested,
                skipped,
                points,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub key: GroupKey,
    pub tested: usize,
    pub skipped: usize,
    /// Share of tested units with p ≤ each cutoff.
    pub fractions: Vec<f64>,
    /// Same counts over tested + skipped units.
    pub fractions_all: Vec<f64>,
    /// Per cutoff: highest in its category (scope, direction, period, Lall
    /// group).
    pub category_max: Vec<bool>,
    /// Per cutoff: highest in its category and space family.
    pub subcategory_max: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub cutoffs: Vec<f64>,
    pub rows: Vec<SummaryRow>,
}

fn summarize(groups: BTreeMap<GroupKey, (Vec<f64>, usize)>, cutoffs: &[f64]) -> SummaryTable {
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|(key, (ps, skipped))| {
            let tested = ps.len();
            let all = tested + skipped;
            let frac = |den: usize, c: f64| {
                if den == 0 {
                    0.0
                } else {
                    share_at_most(&ps, c) as f64 / den as f64
                }
            };
            SummaryRow {
                fractions: cutoffs.iter().map(|&c| frac(tested, c)).collect(),
                fractions_all: cutoffs.iter().map(|&c| frac(all, c)).collect(),
                category_max: vec![false; cutoffs.len()],
                subcategory_max: vec![false; cutoffs.len()],
                key,
                tested,
                skipped,
            }
        })
        .collect();

    let category = |k: &GroupKey| (k.scope, k.direction, k.period_length, k.lall_group);
    let mut best_cat: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    let mut best_sub: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.tested > 0) {
        let b = best_cat
            .entry(category(&r.key))
            .or_insert_with(|| vec![f64::NEG_INFINITY; cutoffs.len()]);
        let s = best_sub
            .entry((category(&r.key), r.key.space))
            .or_insert_with(|| vec![f64::NEG_INFINITY; cutoffs.len()]);
        for (c, &f) in r.fractions.iter().enumerate() {
            b[c] = b[c].max(f);
            s[c] = s[c].max(f);
        }
    }
    for r in rows.iter_mut().filter(|r| r.tested > 0) {
        let b = &best_cat[&category(&r.key)];
        let s = &best_sub[&(category(&r.key), r.key.space)];
        for c in 0..cutoffs.len() {
            r.category_max[c] = r.fractions[c] == b[c];
            r.subcategory_max[c] = r.fractions[c] == s[c];
        }
    }
    SummaryTable {
        cutoffs: cutoffs.to_vec(),
        rows,
    }
}

/// Fractions of tests at or below each cutoff, grouped by scope, direction,
/// indicator and (optionally) period length.
pub fn threshold_summary(results: &[TestResult], cutoffs: &[f64], grouping: Grouping) -> SummaryTable {
    summarize(
        collect_groups(results, |r| Some(GroupKey::of(r, grouping))),
        cutoffs,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LallBreakdown {
    pub table: SummaryTable,
    /// Tested products without a group, excluded from the table.
    pub unmapped: Vec<String>,
}

/// Per-product test results split by Lall group, periods pooled.
pub fn lall_breakdown(results: &[TestResult], lall: &LallConcordance, cutoffs: &[f64]) -> LallBreakdown {
    let mut unmapped: Vec<String> = results
        .iter()
        .filter(|r| r.scope == ScopeKind::Product && lall.group(&r.unit).is_none())
        .map(|r| r.unit.clone())
        .collect();
    unmapped.sort();
    unmapped.dedup();
    let groups = collect_groups(results, |r| {
        if r.scope != ScopeKind::Product {
            return None;
        }
        let g = lall.group(&r.unit)?;
        let mut k = GroupKey::of(r, Grouping::Pooled);
        k.lall_group = Some(g);
        Some(k)
    });
    LallBreakdown {
        table: summarize(groups, cutoffs),
        unmapped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x` with intercept.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::EmptySample("regression needs two or more points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::EmptySample("regressor has no variation".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SideDiagnostics {
    /// (autonomous probability, ubiquity or diversification) per item.
    pub points: Vec<(f64, f64)>,
    pub fit: LinearFit,
    pub kde_e: KernelDensity,
    pub kde_e2: KernelDensity,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionDiagnostics {
    pub product: SideDiagnostics,
    pub country: SideDiagnostics,
}

pub struct DecompositionInputs<'a> {
    pub e: &'a IndicatorMatrix,
    pub e1: &'a IndicatorMatrix,
    pub e2: &'a IndicatorMatrix,
    pub estar: &'a IndicatorMatrix,
    pub e1star: &'a IndicatorMatrix,
    pub e2star: &'a IndicatorMatrix,
    /// Product ubiquity.
    pub s: &'a [usize],
    /// Country diversification.
    pub s_star: &'a [usize],
}

/// Ubiquity against the autonomous component, and densities of the elements
/// of E vs E2 (and their starred versions).
pub fn decomposition_diagnostics(inp: &DecompositionInputs<'_>) -> Result<DecompositionDiagnostics> {
    let (m, n) = inp.e.values.dim();
    if inp.s.len() != m || inp.s_star.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "E is {m}x{n}, got {} ubiquities and {} diversifications",
            inp.s.len(),
            inp.s_star.len()
        )));
    }
    let side = |auto: Vec<f64>, counts: &[usize], e: &IndicatorMatrix, e2: &IndicatorMatrix| -> Result<SideDiagnostics> {
        let y: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let fit = ols(&auto, &y)?;
        let flat = |m: &IndicatorMatrix| m.values.iter().copied().collect::<Vec<f64>>();
        Ok(SideDiagnostics {
            points: auto.into_iter().zip(y).collect(),
            fit,
            kde_e: gaussian_kde(&flat(e), e.id.as_str())?,
            kde_e2: gaussian_kde(&flat(e2), e2.id.as_str())?,
        })
    };
    let product_auto = inp.e1.values.column(0).to_vec();
    let country_auto = inp.e1star.values.row(0).to_vec();
    Ok(DecompositionDiagnostics {
        product: side(product_auto, inp.s, inp.e, inp.e2)?,
        country: side(country_auto, inp.s_star, inp.estar, inp.e2star)?,
    })
}

/// ρ(t1) − ρ(t0) over the cells that gained (or lost) RCA.
pub fn rho_changes(
    c0: &ContinuousRcaMatrix,
    c1: &ContinuousRcaMatrix,
    delta: &ChangeMatrix,
    direction: Direction,
) -> Result<Vec<f64>> {
    let c0 = c0.restrict(delta.products(), delta.countries())?;
    let c1 = c1.restrict(delta.products(), delta.countries())?;
    let want = match direction {
        Direction::Gain => 1,
        Direction::Loss => -1,
    };
    Ok(delta
        .delta()
        .indexed_iter()
        .filter(|(_, &d)| d == want)
        .map(|(ij, _)| c1.rho()[ij] - c0.rho()[ij])
        .collect())
}

/// Kernel densities of ρ-changes on [−2, 2], one per direction and period
/// length, pooling every period of that length. `triples` holds the
/// continuous RCA at both ends and the change matrix of each period.
pub fn rho_change_density(
    triples: &[(&ContinuousRcaMatrix, &ContinuousRcaMatrix, &ChangeMatrix)],
) -> Result<Vec<KernelDensity>> {
    let mut samples: BTreeMap<(Direction, u32), Vec<f64>> = BTreeMap::new();
    for (c0, c1, delta) in triples {
        let len = delta.period().length();
        for dir in [Direction::Gain, Direction::Loss] {
            samples
                .entry((dir, len))
                .or_default()
                .extend(rho_changes(c0, c1, delta, dir)?);
        }
    }
    if samples.values().all(Vec::is_empty) {
        return Err(Error::EmptySample("RCA changes".into()));
    }
    samples
        .into_iter()
        .filter(|(_, s)| !s.is_empty())
        .map(|((dir, len), s)| bounded_gaussian_kde(&s, -2.0, 2.0, &format!("{dir}_{len}")))
        .collect()
}

fn fmt_opt_len(k: &GroupKey) -> String {
    k.period_label()
}

pub fn write_rca_counts<W: io::Write>(out: W, table: &RcaCountTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "count", "fraction"])?;
    for r in &table.rows {
        w.write_record([r.year.to_string(), r.count.to_string(), r.fraction.to_string()])?;
    }
    w.write_record([
        "average".to_owned(),
        table.average_count.to_string(),
        table.average_fraction.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_change_stats<W: io::Write>(out: W, rows: &[ChangeStatsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "from",
        "to",
        "length",
        "gains",
        "gains_per_country_mean",
        "gains_per_country_sd",
        "losses_per_country_mean",
        "losses_per_country_sd",
        "losses",
        "gains_per_product_mean",
        "gains_per_product_sd",
        "losses_per_product_mean",
        "losses_per_product_sd",
    ])?;
    for r in rows {
        w.write_record([
            r.from.to_string(),
            r.to.to_string(),
            r.length.to_string(),
            r.gains.to_string(),
            r.gains_per_country.mean.to_string(),
            r.gains_per_country.sd.to_string(),
            r.losses_per_country.mean.to_string(),
            r.losses_per_country.sd.to_string(),
            r.losses.to_string(),
            r.gains_per_product.mean.to_string(),
            r.gains_per_product.sd.to_string(),
            r.losses_per_product.mean.to_string(),
            r.losses_per_product.sd.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cdf<W: io::Write>(out: W, series: &[CdfSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scope",
        "direction",
        "space",
        "indicator",
        "period_length",
        "p_value",
        "plot_p",
        "zero_substituted",
        "fraction_tested",
        "fraction_all",
    ])?;
    for s in series {
        for pt in &s.points {
            w.write_record([
                s.key.scope.to_string(),
                s.key.direction.to_string(),
                s.key.space.to_string(),
                s.key.indicator.to_string(),
                fmt_opt_len(&s.key),
                pt.p.to_string(),
                pt.plot_p.to_string(),
                pt.zero_substituted.to_string(),
                pt.fraction_tested.to_string(),
                pt.fraction_all.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Renders a p-value, printing zeros as `< 1/reps`.
pub fn render_p(p: f64, repetitions: usize) -> String {
    if p == 0.0 {
        format!("< {}", 1.0 / repetitions as f64)
    } else {
        p.to_string()
    }
}

pub fn write_summary<W: io::Write>(out: W, table: &SummaryTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "scope",
        "direction",
        "space",
        "indicator",
        "period_length",
        "lall_group",
        "tested",
        "skipped",
    ]
    .map(String::from)
    .to_vec();
    for c in &table.cutoffs {
        header.push(format!("p_le_{c}"));
    }
    for c in &table.cutoffs {
        header.push(format!("p_le_{c}_all_units"));
    }
    for c in &table.cutoffs {
        header.push(format!("category_max_{c}"));
    }
    for c in &table.cutoffs {
        header.push(format!("subcategory_max_{c}"));
    }
    w.write_record(&header)?;
    for r in &table.rows {
        let mut rec = vec![
            r.key.scope.to_string(),
            r.key.direction.to_string(),
            r.key.space.to_string(),
            r.key.indicator.to_string(),
            fmt_opt_len(&r.key),
            r.key.lall_group.map(|g| g.to_string()).unwrap_or_default(),
            r.tested.to_string(),
            r.skipped.to_string(),
        ];
        rec.extend(r.fractions.iter().map(f64::to_string));
        rec.extend(r.fractions_all.iter().map(f64::to_string));
        rec.extend(r.category_max.iter().map(bool::to_string));
        rec.extend(r.subcategory_max.iter().map(bool::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_density<W: io::Write>(out: W, densities: &[KernelDensity]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "x", "density", "bandwidth", "sample_size"])?;
    for d in densities {
        for (x, y) in d.grid.iter().zip(&d.density) {
            w.write_record([
                d.label.clone(),
                x.to_string(),
                y.to_string(),
                d.bandwidth.to_string(),
                d.sample_size.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter<W: io::Write>(out: W, diag: &DecompositionDiagnostics) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["space", "autonomous_probability", "count"])?;
    for (label, side) in [("product", &diag.product), ("country", &diag.country)] {
        for (a, c) in &side.points {
            w.write_record([label.to_owned(), a.to_string(), c.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
