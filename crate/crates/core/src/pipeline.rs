//! Glue between the stages: RCA for every year, all indicators for a
//! baseline year, and test suites over year pairs.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::bootstrap::{run_suite, Direction, PeriodData, ScopeKind, SuiteConfig, TestResult};
use crate::combined_space::combined_indicators;
use crate::country_space::country_indicators;
use crate::error::Result;
use crate::indicator::{IndicatorId, IndicatorMatrix, Space};
use crate::panel::ExportPanel;
use crate::product_space::product_indicators;
use crate::rca::{
    common_registries, compute_changes, compute_rca, AlignmentReport, BinaryRcaMatrix,
    ContinuousRcaMatrix, YearPair,
};

pub type IndicatorSet = BTreeMap<IndicatorId, IndicatorMatrix>;

pub fn compute_all_rca(
    panel: &ExportPanel,
    threshold: f64,
) -> Result<BTreeMap<i32, (BinaryRcaMatrix, ContinuousRcaMatrix)>> {
    panel
        .years()
        .into_par_iter()
        .map(|y| compute_rca(panel, y, threshold).map(|r| (y, r)))
        .collect()
}

/// The requested indicators for one baseline X. Only the spaces needed are
/// computed; combined indicators need both. Asking for the E^Tot family of
/// an X without RCA is an error.
pub fn compute_indicators(x: &BinaryRcaMatrix, ids: &[IndicatorId]) -> Result<IndicatorSet> {
    let wants = |s: Space| ids.iter().any(|id| id.space() == s);
    let combined = wants(Space::Combined);
    let mut all = Vec::new();
    let product = (wants(Space::Product) || combined).then(|| {
        let (terms, ind) = product_indicators(x);
        all.extend(ind);
        terms
    });
    let country = (wants(Space::Country) || combined).then(|| {
        let (terms, ind) = country_indicators(x);
        all.extend(ind);
        terms
    });
    if let (true, Some(p), Some(c)) = (combined, &product, &country) {
        all.extend(combined_indicators(x, p, c));
    }
    let set: IndicatorSet = all
        .into_iter()
        .filter(|m| ids.contains(&m.id))
        .map(|m| (m.id, m))
        .collect();
    if ids.iter().any(|id| !set.contains_key(id)) {
        return Err(crate::Error::EmptyRcaMatrix(x.year()));
    }
    Ok(set)
}

#[derive(Debug, Default)]
pub struct SuiteOutput {
    pub results: Vec<TestResult>,
    /// Codes left out of a period because they were inactive in one of its
    /// years; only non-empty reports are kept.
    pub alignment: BTreeMap<YearPair, AlignmentReport>,
}

/// Runs every test for the given periods. `indicators_for` supplies the
/// indicator set of a baseline year and is called once per distinct
/// baseline, in increasing year order.
pub fn run_period_tests<F>(
    rca: &BTreeMap<i32, BinaryRcaMatrix>,
    periods: &[YearPair],
    ids: &[IndicatorId],
    scopes: &[ScopeKind],
    directions: &[Direction],
    config: &SuiteConfig,
    mut indicators_for: F,
) -> Result<SuiteOutput>
where
    F: FnMut(i32, &BinaryRcaMatrix) -> Result<IndicatorSet>,
{
    let mut by_base: BTreeMap<i32, Vec<YearPair>> = BTreeMap::new();
    for p in periods {
        by_base.entry(p.from).or_default().push(*p);
    }
    let mut per_period: BTreeMap<YearPair, Vec<TestResult>> = BTreeMap::new();
    let mut out = SuiteOutput::default();
    for (base, pairs) in by_base {
        let x0_full = rca.get(&base).ok_or(crate::Error::YearNotFound(base))?;
        let full_set = indicators_for(base, x0_full)?;
        for period in pairs {
            let x1_full = rca.get(&period.to).ok_or(crate::Error::YearNotFound(period.to))?;
            let (products, countries, report) = common_registries(
                x0_full.products(),
                x0_full.countries(),
                x1_full.products(),
                x1_full.countries(),
            );
            let x0 = x0_full.restrict(&products, &countries)?;
            let x1 = x1_full.restrict(&products, &countries)?;
            let delta = compute_changes(&x0, &x1)?;
            let set: IndicatorSet = full_set
                .iter()
                .filter(|(id, _)| ids.contains(id))
                .map(|(id, m)| m.restrict(&products, &countries).map(|r| (*id, r)))
                .collect::<Result<_>>()?;
            let data = [PeriodData {
                x0: &x0,
                delta: &delta,
                indicators: &set,
            }];
            let results = run_suite(&data, ids, scopes, directions, config)?;
            per_period.insert(period, results);
            if !(report.dropped_products.is_empty() && report.dropped_countries.is_empty()) {
                out.alignment.insert(period, report);
            }
        }
    }
    // Emit in the caller's period order.
    for p in periods {
        if let Some(r) = per_period.remove(p) {
            out.results.extend(r);
        }
    }
    Ok(out)
}
