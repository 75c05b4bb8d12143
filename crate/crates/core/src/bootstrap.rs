//! Monte Carlo resampling test of an indicator's power to predict RCA gains
//! or losses.
//!
//! For one scope slice of the baseline matrix X₀ (all cells, one product row
//! or one country column) the candidates are the cells that can move: zeros
//! for gains, ones for losses. With N candidates of which N₁ actually moved,
//! the observed statistic is the mean indicator value over the movers. Each
//! repetition draws a uniformly random N₁-subset of the candidates without
//! replacement and compares its mean A₁ with the observed one. The p-value is
//! the share of repetitions with A₁ ≥ observed (gains) or A₁ ≤ observed
//! (losses). It is a one-sided permutation test realized by Monte Carlo.
//!
//! Every test draws from its own ChaCha8 stream keyed by the master seed and
//! the test's identity, so results do not depend on scheduling or thread
//! count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::indicator::{IndicatorId, IndicatorMatrix};
use crate::rca::{BinaryRcaMatrix, ChangeMatrix, YearPair};

pub const DEFAULT_REPETITIONS: usize = 5_000;
/// Smallest admissible candidate count; 16 keeps only slices with N > 15.
pub const DEFAULT_MIN_CANDIDATES: usize = 16;

/// Relative tolerance under which two means count as tied. Sums taken in a
/// different order can differ in the last bits for mathematically equal
/// means; those must tie.
pub const TIE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Gain,
    Loss,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Gain => "gain",
            Direction::Loss => "loss",
        }
    }

    /// The X₀ value of a candidate cell.
    fn candidate_state(self) -> u8 {
        match self {
            Direction::Gain => 0,
            Direction::Loss => 1,
        }
    }

    /// The change value of a mover.
    fn mover_delta(self) -> i8 {
        match self {
            Direction::Gain => 1,
            Direction::Loss => -1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gain" | "gains" => Ok(Direction::Gain),
            "loss" | "losses" => Ok(Direction::Loss),
            other => Err(Error::InvalidTestSpec(format!("unknown direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScopeKind {
    Pooled,
    Product,
    Country,
}

impl ScopeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScopeKind::Pooled => "pooled",
            ScopeKind::Product => "product",
            ScopeKind::Country => "country",
        }
    }
}

impl fmt::Display for ScopeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScopeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pooled" => Ok(ScopeKind::Pooled),
            "product" | "products" => Ok(ScopeKind::Product),
            "country" | "countries" => Ok(ScopeKind::Country),
            other => Err(Error::InvalidTestSpec(format!("unknown scope `{other}`"))),
        }
    }
}

/// Slice of the product × country grid a test runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    Pooled,
    /// One product row.
    Product(usize),
    /// One country column.
    Country(usize),
}

impl Scope {
    pub fn kind(self) -> ScopeKind {
        match self {
            Scope::Pooled => ScopeKind::Pooled,
            Scope::Product(_) => ScopeKind::Product,
            Scope::Country(_) => ScopeKind::Country,
        }
    }

    fn unit_index(self) -> Option<usize> {
        match self {
            Scope::Pooled => None,
            Scope::Product(i) | Scope::Country(i) => Some(i),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSpec {
    pub indicator: IndicatorId,
    pub direction: Direction,
    pub scope: Scope,
    pub period: YearPair,
    pub repetitions: usize,
    pub min_candidates: usize,
    pub seed: u64,
}

impl TestSpec {
    pub fn new(indicator: IndicatorId, direction: Direction, scope: Scope, period: YearPair, seed: u64) -> Self {
        TestSpec {
            indicator,
            direction,
            scope,
            period,
            repetitions: DEFAULT_REPETITIONS,
            min_candidates: DEFAULT_MIN_CANDIDATES,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::InvalidTestSpec("repetitions must be at least 1".into()));
        }
        if self.min_candidates < 2 {
            return Err(Error::InvalidTestSpec("min_candidates must be at least 2".into()));
        }
        Ok(())
    }

    /// Key of this test's random stream.
    pub fn stream_seed(&self) -> [u8; 32] {
        let unit = self
            .scope
            .unit_index()
            .map_or_else(|| "-".to_owned(), |i| i.to_string());
        let key = format!(
            "{}|{}|{}|{}|{}|{}|{}",
            self.seed,
            self.indicator,
            self.scope.kind(),
            unit,
            self.period.from,
            self.period.to,
            self.direction
        );
        Sha256::digest(key.as_bytes()).into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkipReason {
    /// N below the candidate minimum.
    TooFewCandidates,
    /// N₁ = 0.
    NoMovers,
    /// N₁ = N: every subset is the whole set.
    AllMovers,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::TooFewCandidates => "too_few_candidates",
            SkipReason::NoMovers => "no_movers",
            SkipReason::AllMovers => "all_movers",
        }
    }
}

impl FromStr for SkipReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "too_few_candidates" => Ok(SkipReason::TooFewCandidates),
            "no_movers" => Ok(SkipReason::NoMovers),
            "all_movers" => Ok(SkipReason::AllMovers),
            other => Err(Error::InvalidTestSpec(format!("unknown skip reason `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub scope: ScopeKind,
    /// Product or country code, `all` for pooled tests.
    pub unit: String,
    pub indicator: IndicatorId,
    pub direction: Direction,
    pub period: YearPair,
    /// Candidates.
    pub n: usize,
    /// Actual movers among the candidates.
    pub n1: usize,
    pub observed_mean: Option<f64>,
    pub p_value: Option<f64>,
    pub skipped: Option<SkipReason>,
}

impl TestResult {
    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }
}

/// Counts repetitions whose random N₁-subset mean is at least (gains) or at
/// most (losses) `observed_mean`.
///
/// `values` is reordered in place. Subsets are drawn by a partial
/// Fisher–Yates shuffle; when N₁ > N/2 the complement is drawn instead and
/// its sum subtracted from the total.
pub fn resample_count<R: Rng>(
    values: &mut [f64],
    n1: usize,
    observed_mean: f64,
    direction: Direction,
    repetitions: usize,
    rng: &mut R,
) -> usize {
    let n = values.len();
    assert!(n1 >= 1 && n1 <= n, "need 1 <= n1 <= n");
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = TIE_RTOL * scale;
    let draw_complement = n1 > n / 2;
    let draws = if draw_complement { n - n1 } else { n1 };
    let total: f64 = if draw_complement { values.iter().sum() } else { 0.0 };
    let n1f = n1 as f64;

    let mut hits = 0;
    for _ in 0..repetitions {
        let mut sum = 0.0;
        for k in 0..draws {
            let j = rng.random_range(k..n);
            values.swap(k, j);
            sum += values[k];
        }
        let mean = if draw_complement { (total - sum) / n1f } else { sum / n1f };
        let hit = match direction {
            Direction::Gain => mean >= observed_mean - tol,
            Direction::Loss => mean <= observed_mean + tol,
        };
        hits += usize::from(hit);
    }
    hits
}

fn same_registry(ind: &IndicatorMatrix, x0: &BinaryRcaMatrix, delta: &ChangeMatrix) -> bool {
    x0.same_registries(&ind.products, &ind.countries)
        && x0.same_registries(delta.products(), delta.countries())
}

/// Candidate indicator values and mover flags in row-major order of the
/// scope slice.
fn gather(
    scope: Scope,
    direction: Direction,
    indicator: &IndicatorMatrix,
    x0: &BinaryRcaMatrix,
    delta: &ChangeMatrix,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let (m, n) = x0.x().dim();
    let state = direction.candidate_state();
    let mover = direction.mover_delta();
    let mut values = Vec::new();
    let mut movers = Vec::new();
    let mut visit = |i: usize, j: usize| {
        if x0.x()[[i, j]] == state {
            values.push(indicator.values[[i, j]]);
            movers.push(delta.delta()[[i, j]] == mover);
        }
    };
    match scope {
        Scope::Pooled => (0..m).for_each(|i| (0..n).for_each(|j| visit(i, j))),
        Scope::Product(i) if i < m => (0..n).for_each(|j| visit(i, j)),
        Scope::Country(j) if j < n => (0..m).for_each(|i| visit(i, j)),
        _ => {
            return Err(Error::InvalidTestSpec(format!(
                "scope {scope:?} outside {m}x{n} grid"
            )))
        }
    }
    Ok((values, movers))
}

fn unit_label(scope: Scope, x0: &BinaryRcaMatrix) -> String {
    match scope {
        Scope::Pooled => "all".to_owned(),
        Scope::Product(i) => x0.products().code(i).to_owned(),
        Scope::Country(j) => x0.countries().code(j).to_owned(),
    }
}

/// One test. `indicator` must be computed at the period's first year and
/// share registries with `x0` and `delta`.
pub fn run_test(
    spec: &TestSpec,
    indicator: &IndicatorMatrix,
    x0: &BinaryRcaMatrix,
    delta: &ChangeMatrix,
) -> Result<TestResult> {
    spec.validate()?;
    if !same_registry(indicator, x0, delta) {
        return Err(Error::RegistryMismatch(format!(
            "{} test for {}: indicator, X0 and change matrix differ",
            spec.indicator, spec.period
        )));
    }
    if delta.period() != spec.period || x0.year() != spec.period.from || indicator.year != spec.period.from {
        return Err(Error::PeriodMismatch {
            expected: spec.period.to_string(),
            found: format!(
                "change {}, X0 {}, indicator {}",
                delta.period(),
                x0.year(),
                indicator.year
            ),
        });
    }
    let (mut values, movers) = gather(spec.scope, spec.direction, indicator, x0, delta)?;
    let n = values.len();
    let n1 = movers.iter().filter(|&&b| b).count();
    let mut result = TestResult {
        scope: spec.scope.kind(),
        unit: unit_label(spec.scope, x0),
        indicator: spec.indicator,
        direction: spec.direction,
        period: spec.period,
        n,
        n1,
        observed_mean: None,
        p_value: None,
        skipped: None,
    };
    if n1 > 0 {
        let sum: f64 = values.iter().zip(&movers).filter(|(_, &m)| m).map(|(v, _)| v).sum();
        result.observed_mean = Some(sum / n1 as f64);
    }
    result.skipped = if n < spec.min_candidates {
        Some(SkipReason::TooFewCandidates)
    } else if n1 == 0 {
        Some(SkipReason::NoMovers)
    } else if n1 == n {
        Some(SkipReason::AllMovers)
    } else {
        None
    };
    if result.skipped.is_some() {
        return Ok(result);
    }
    let observed = result.observed_mean.expect("n1 > 0");
    let mut rng = ChaCha8Rng::from_seed(spec.stream_seed());
    let hits = resample_count(&mut values, n1, observed, spec.direction, spec.repetitions, &mut rng);
    result.p_value = Some(hits as f64 / spec.repetitions as f64);
    Ok(result)
}

/// Settings shared by every test of a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub repetitions: usize,
    pub min_candidates: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn with_seed(seed: u64) -> Self {
        SuiteConfig {
            repetitions: DEFAULT_REPETITIONS,
            min_candidates: DEFAULT_MIN_CANDIDATES,
            seed,
        }
    }
}

/// Inputs for all tests of one period, on a common registry.
pub struct PeriodData<'a> {
    pub x0: &'a BinaryRcaMatrix,
    pub delta: &'a ChangeMatrix,
    pub indicators: &'a BTreeMap<IndicatorId, IndicatorMatrix>,
}

/// Cartesian product of periods × indicators × scopes × units × directions,
/// in that order. Tests run in parallel; output order and values do not
/// depend on the thread count.
pub fn run_suite(
    periods: &[PeriodData<'_>],
    indicators: &[IndicatorId],
    scopes: &[ScopeKind],
    directions: &[Direction],
    config: &SuiteConfig,
) -> Result<Vec<TestResult>> {
    let mut tasks = Vec::new();
    for (k, pd) in periods.iter().enumerate() {
        let period = pd.delta.period();
        for &id in indicators {
            if !pd.indicators.contains_key(&id) {
                return Err(Error::InvalidTestSpec(format!(
                    "indicator {id} not supplied for {period}"
                )));
            }
            for &kind in scopes {
                let units: Vec<Scope> = match kind {
                    ScopeKind::Pooled => vec![Scope::Pooled],
                    ScopeKind::Product => (0..pd.x0.m()).map(Scope::Product).collect(),
                    ScopeKind::Country => (0..pd.x0.n()).map(Scope::Country).collect(),
                };
                for scope in units {
                    for &direction in directions {
                        let spec = TestSpec {
                            indicator: id,
                            direction,
                            scope,
                            period,
                            repetitions: config.repetitions,
                            min_candidates: config.min_candidates,
                            seed: config.seed,
                        };
                        tasks.push((k, spec));
                    }
                }
            }
        }
    }
    tasks
        .par_iter()
        .map(|(k, spec)| {
            let pd = &periods[*k];
            run_test(spec, &pd.indicators[&spec.indicator], pd.x0, pd.delta)
        })
        .collect()
}
