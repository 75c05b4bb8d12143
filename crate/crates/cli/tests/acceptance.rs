//! Acceptance run: one PASS/FAIL line per criterion. Built without the test
//! harness so the lines always show in `cargo test` output.
//!
//! Criterion 9 needs the real export panel; point `RELSPACE_COMTRADE_EXPORTS`
//! at a long-format CSV (year,country,product,value) covering 2012–2018 to
//! enable it.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{binary, ks_uniform, library, max_diff, oracle_indicators, random_suite, BootstrapCase};
use relspace::bootstrap::{Direction, ScopeKind, SuiteConfig};
use relspace::panel::{ingest_exports, IngestOptions};
use relspace::pipeline::{compute_all_rca, compute_indicators, run_period_tests};
use relspace::rca::{compute_changes, enumerate_year_pairs, BinaryRcaMatrix, YearPair};
use relspace::report::{threshold_summary, Grouping, DEFAULT_CUTOFFS};
use relspace::IndicatorId::{self, *};

const SUITE_SIZE: usize = 1000;
const SUITE_SEED: u64 = 2024;

/// Criteria expected to fail with the reason. They still print FAIL; the
/// run only errors if one of them unexpectedly passes, or anything else
/// fails.
const EXPECTED_FAILURES: &[(u8, &str)] = &[(
    4,
    "D^Tot adds the country-space density, which for an all-RCA country stays \
     below one for any product lacking RCA somewhere (X = [[1,1],[1,0]] gives 5/6)",
)];

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    id: u8,
    title: &'static str,
    status: Status,
    detail: String,
}

fn outcome(id: u8, title: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome {
        id,
        title,
        status: if pass { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn criterion_1(suite: &[Vec<Vec<u8>>]) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for x in suite {
        let lib = library(&binary(x));
        let p = common::oracle::row_indicators(x);
        let c = common::oracle::column_indicators(x);
        for (a, b) in [
            (&lib.c.values, &p.c),
            (&lib.b.values, &p.b),
            (&lib.k.values, &p.k),
            (&lib.cs.values, &c.cs),
            (&lib.bs.values, &c.bs),
            (&lib.ks.values, &c.ks),
        ] {
            worst = worst.max(max_diff(a, b));
        }
        for (id, expected) in oracle_indicators(x) {
            worst = worst.max(max_diff(&lib.fused[&id].values, &expected));
            let op = lib.ops.iter().find(|m| m.id == id).expect("op path covers every id");
            worst = worst.max(max_diff(&op.values, &expected));
            compared += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        1,
        "oracle equivalence",
        worst <= 1e-12 && secs < 10.0,
        format!(
            "{} matrices, {compared} indicator matrices on two paths, max |diff| {worst:.2e} (tol 1e-12), {secs:.2} s (limit 10 s)",
            suite.len()
        ),
    )
}

fn criterion_2(suite: &[Vec<Vec<u8>>]) -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for x in suite {
        let bx = binary(x);
        if bx.r() == 0 {
            continue;
        }
        checked += 1;
        let set = compute_indicators(&bx, &IndicatorId::ALL).unwrap();
        let (m, n, r) = (bx.m(), bx.n(), bx.r() as f64);
        let e = &set[&E].values;
        let es = &set[&Estar].values;
        for i in 0..m {
            worst = worst.max((e.row(i).sum() - bx.s()[i] as f64).abs());
        }
        for j in 0..n {
            worst = worst.max((es.column(j).sum() - bx.s_star()[j] as f64).abs());
        }
        let etot = &set[&Etot].values;
        worst = worst.max((etot.sum() - 1.0).abs());
        let unnorm = library(&bx).unnorm;
        worst = worst.max((unnorm.sum() - r).abs());
        let mixed = (e * m as f64 + es * n as f64) / (m + n) as f64;
        let lhs = &unnorm * (m + n) as f64;
        let rhs = &mixed * (m + n) as f64;
        worst = (&lhs - &rhs).iter().fold(worst, |w, v| w.max(v.abs()));
        for (whole, a, b) in [(E, E1, E2), (Estar, E1star, E2star), (Etot, E1tot, E2tot)] {
            let split = &set[&a].values + &set[&b].values;
            worst = (&set[&whole].values - &split).iter().fold(worst, |w, v| w.max(v.abs()));
        }
    }
    outcome(
        2,
        "conservation identities",
        worst <= 1e-10,
        format!("{checked} matrices with r > 0, max deviation {worst:.2e} (tol 1e-10)"),
    )
}

fn criterion_3(suite: &[Vec<Vec<u8>>]) -> Outcome {
    let pairs = [(Dstar, D), (DtildeStar, Dtilde), (Estar, E), (E1star, E1), (E2star, E2)];
    let mut mismatches = 0;
    for x in suite {
        let bx = binary(x);
        let star = compute_indicators(&bx, &pairs.map(|p| p.0)).unwrap();
        let prod = compute_indicators(&bx.transposed(), &pairs.map(|p| p.1)).unwrap();
        for (s, p) in pairs {
            if star[&s].values != prod[&p].values.t() {
                mismatches += 1;
            }
        }
    }
    outcome(
        3,
        "duality",
        mismatches == 0,
        format!("{} matrices x 5 indicators, {mismatches} not bit-identical", suite.len()),
    )
}

fn criterion_4(suite: &[Vec<Vec<u8>>]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut d_bad, mut dtot_bad, mut cases) = (0, 0, 0);
    let mut dtot_worst = 0.0f64;
    for x in suite {
        for full in [true, false] {
            let mut x = x.clone();
            let j = rng.random_range(0..x[0].len());
            for row in x.iter_mut() {
                row[j] = u8::from(full);
            }
            cases += 1;
            let set = compute_indicators(&binary(&x), &[D, Dtot]).unwrap();
            let want = if full { 1.0 } else { 0.0 };
            if set[&D].values.column(j).iter().any(|&v| v != want) {
                d_bad += 1;
            }
            let col = set[&Dtot].values.column(j).to_owned();
            if col.iter().any(|&v| v != want) {
                dtot_bad += 1;
                dtot_worst = col.iter().fold(dtot_worst, |w, v| w.max((v - want).abs()));
            }
        }
    }
    outcome(
        4,
        "boundary columns",
        d_bad == 0 && dtot_bad == 0,
        format!(
            "{cases} forced columns: D wrong in {d_bad}; D^Tot wrong in {dtot_bad} (max |D^Tot - target| {dtot_worst:.3})"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut inside = 0;
    let instances = 200;
    for k in 0..instances {
        let n = rng.random_range(2..=12);
        let n1 = rng.random_range(1..n);
        let gain = rng.random_bool(0.5);
        let case = BootstrapCase::random(&mut rng, n, n1, gain, k);
        let mc = case.run().p_value.unwrap();
        let exact = case.exact_p();
        if (mc - exact).abs() <= 3.0 * (exact * (1.0 - exact) / 5000.0).sqrt() {
            inside += 1;
        }
    }
    let share = inside as f64 / instances as f64;

    let mut p = Vec::with_capacity(1000);
    for k in 0..1000u64 {
        let n = rng.random_range(100..400);
        let n1 = rng.random_range(5..60);
        let mut case = BootstrapCase::random(&mut rng, n, n1, k % 2 == 0, 10_000 + k);
        for v in case.indicator.values.iter_mut() {
            *v = rng.random_range(0.0..1.0);
        }
        p.push(case.run().p_value.unwrap());
    }
    let ks = ks_uniform(p);
    outcome(
        5,
        "bootstrap exactness",
        share >= 0.99 && ks <= 0.06,
        format!(
            "{inside}/{instances} within 3 sigma of enumeration (need 99%); null KS distance {ks:.4} over 1000 tests (limit 0.06)"
        ),
    )
}

/// Long-format exports: lognormal values with a share of zeros, seeded.
fn synthetic_exports(years: std::ops::RangeInclusive<i32>, m: usize, n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("year,country,product,value\n");
    let base: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    for y in years {
        for j in 0..n {
            for (i, row) in base.iter().enumerate() {
                let v = if rng.random_bool(0.05) && i != j % m {
                    0.0
                } else {
                    (row[j] + rng.random_range(-0.7..0.7)).exp()
                };
                out.push_str(&format!("{y},C{j:03},P{i:04},{v}\n"));
            }
        }
    }
    out
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_relspace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let exports = dir.path().join("exports.csv");
    fs::write(&exports, synthetic_exports(2012..=2016, 40, 15, 6)).unwrap();
    let work = dir.path().join("work");
    let w = work.to_str().unwrap();
    let ok = |o: std::process::Output| o.status.success();
    let mut good = ok(run_cli(&["--out", w, "ingest", "--exports", exports.to_str().unwrap()]))
        && ok(run_cli(&["--out", w, "rca"]));
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let name = format!("results_{threads}.csv");
        good &= ok(run_cli(&[
            "--out", w, "--threads", threads, "test", "--seed", "20240601", "--scope", "pooled,product,country",
            "--reps", "500", "--results", &name,
        ]));
        files.push(fs::read(work.join(&name)).unwrap_or_default());
    }
    let identical = !files[0].is_empty() && files[0] == files[1];
    let rows = String::from_utf8_lossy(&files[0]).lines().count().saturating_sub(1);
    outcome(
        6,
        "determinism across thread counts",
        good && identical,
        format!("--threads 1 vs 4: {rows} result rows, byte-identical = {identical}"),
    )
}

fn criterion_7() -> Outcome {
    let text = synthetic_exports(2012..=2015, 200, 40, 7);
    let panel = ingest_exports(text.as_bytes(), &IngestOptions::default()).unwrap();
    let all = compute_all_rca(&panel, 1.0).unwrap();
    let mut rho_bad = 0;
    let (mut change_bad, mut sign_bad, mut gains, mut losses) = (0, 0, 0, 0);
    let mut rho_extremes = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, c) in all.values() {
        for &v in c.rho() {
            rho_extremes = (rho_extremes.0.min(v), rho_extremes.1.max(v));
            rho_bad += usize::from(!(-1.0..=1.0).contains(&v));
        }
    }
    let years: Vec<i32> = all.keys().copied().collect();
    for pairs in enumerate_year_pairs(&years).unwrap().values() {
        for p in pairs {
            let (x0, c0) = &all[&p.from];
            let (x1, c1) = &all[&p.to];
            let d = compute_changes(x0, x1).unwrap();
            for ((i, j), &dv) in d.delta().indexed_iter() {
                let ch = c1.rho()[[i, j]] - c0.rho()[[i, j]];
                change_bad += usize::from(!(-2.0..=2.0).contains(&ch));
                match dv {
                    1 => {
                        gains += 1;
                        sign_bad += usize::from(ch <= 0.0);
                    }
                    -1 => {
                        losses += 1;
                        sign_bad += usize::from(ch >= 0.0);
                    }
                    _ => {}
                }
            }
        }
    }
    outcome(
        7,
        "rho bounds",
        rho_bad == 0 && change_bad == 0 && sign_bad == 0 && gains > 0 && losses > 0,
        format!(
            "rho in [{:.3}, {:.3}], {rho_bad} outside [-1,1]; {change_bad} changes outside [-2,2]; {gains} gains and {losses} losses, {sign_bad} with wrong sign",
            rho_extremes.0, rho_extremes.1
        ),
    )
}

/// Seven years of 5197 × 155 binary matrices with about 10% density and
/// yearly churn of roughly 15k gains and losses.
fn synthetic_rca_years() -> BTreeMap<i32, BinaryRcaMatrix> {
    let (m, n) = (5197, 155);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut x = Array2::from_shape_fn((m, n), |_| u8::from(rng.random_bool(0.10)));
    let mut out = BTreeMap::new();
    for year in 2012..=2018 {
        if year > 2012 {
            x.mapv_inplace(|v| match v {
                0 if rng.random_bool(0.021) => 1,
                1 if rng.random_bool(0.19) => 0,
                v => v,
            });
        }
        out.insert(year, BinaryRcaMatrix::from_array(year, x.clone()).unwrap());
    }
    out
}

fn criterion_8() -> Outcome {
    let rca = synthetic_rca_years();
    let config = SuiteConfig::with_seed(8);

    // One pooled test on a precomputed indicator.
    let x0 = &rca[&2012];
    let ind = compute_indicators(x0, &[D]).unwrap();
    let period = YearPair::new(2012, 2013).unwrap();
    let start = Instant::now();
    let one = run_period_tests(&rca, &[period], &[D], &[ScopeKind::Pooled], &[Direction::Gain], &config, |_, _| {
        Ok(ind.clone())
    })
    .unwrap();
    let one_secs = start.elapsed().as_secs_f64();
    let r = &one.results[0];

    // Full suite: 21 periods x 12 indicators x 2 directions, indicators
    // computed for every baseline year inside the timing.
    let years: Vec<i32> = rca.keys().copied().collect();
    let mut periods: Vec<YearPair> = enumerate_year_pairs(&years).unwrap().into_values().flatten().collect();
    periods.sort();
    let start = Instant::now();
    let suite = run_period_tests(
        &rca,
        &periods,
        &IndicatorId::HEADLINE,
        &[ScopeKind::Pooled],
        &[Direction::Gain, Direction::Loss],
        &config,
        |_, x| compute_indicators(x, &IndicatorId::HEADLINE),
    )
    .unwrap();
    let suite_secs = start.elapsed().as_secs_f64();
    let tested = suite.results.iter().filter(|r| r.p_value.is_some()).count();
    outcome(
        8,
        "performance",
        one_secs < 60.0 && suite_secs < 1800.0 && suite.results.len() == 504 && tested == 504,
        format!(
            "one pooled test (N = {}, N1 = {}, 5000 reps) {one_secs:.2} s (limit 60 s); {} pooled tests incl. indicators {suite_secs:.1} s (limit 1800 s), {} threads",
            r.n,
            r.n1,
            suite.results.len(),
            rayon::current_num_threads()
        ),
    )
}

const TABLE1: [(i32, usize); 7] = [
    (2012, 80_540),
    (2013, 82_338),
    (2014, 82_268),
    (2015, 81_252),
    (2016, 81_561),
    (2017, 82_083),
    (2018, 81_773),
];

/// (from, to, gains, losses); `None` where only one of the two is quoted.
const TABLE2: [(i32, i32, Option<usize>, Option<usize>); 3] = [
    (2012, 2018, Some(25_300), Some(24_067)),
    (2014, 2015, Some(13_360), None),
    (2012, 2013, None, Some(13_410)),
];

fn criterion_9() -> Outcome {
    let Ok(path) = std::env::var("RELSPACE_COMTRADE_EXPORTS") else {
        return Outcome {
            id: 9,
            title: "real-data reproduction",
            status: Status::Skip,
            detail: "RELSPACE_COMTRADE_EXPORTS not set; no real panel available".into(),
        };
    };
    let f = fs::File::open(Path::new(&path)).expect("readable export file");
    let panel = ingest_exports(std::io::BufReader::new(f), &IngestOptions::default()).unwrap();
    let all = compute_all_rca(&panel, 1.0).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for (y, want) in TABLE1 {
        let Some((x, _)) = all.get(&y) else {
            pass = false;
            notes.push(format!("{y} missing"));
            continue;
        };
        let frac = x.r() as f64 / (x.m() * x.n()) as f64;
        if x.r() != want {
            pass = false;
            notes.push(format!("{y}: {} RCAs (want {want}), fraction {frac:.3}", x.r()));
        }
    }
    for (from, to, g, l) in TABLE2 {
        let d = compute_changes(&all[&from].0, &all[&to].0).unwrap();
        if g.is_some_and(|g| g != d.gains()) || l.is_some_and(|l| l != d.losses()) {
            pass = false;
            notes.push(format!("{from}-{to}: {} gains, {} losses", d.gains(), d.losses()));
        }
    }
    let rca: BTreeMap<i32, BinaryRcaMatrix> = all.into_iter().map(|(y, (x, _))| (y, x)).collect();
    let years: Vec<i32> = rca.keys().copied().collect();
    let mut periods: Vec<YearPair> = enumerate_year_pairs(&years).unwrap().into_values().flatten().collect();
    periods.sort();
    let config = SuiteConfig::with_seed(9);
    let pooled = run_period_tests(
        &rca,
        &periods,
        &IndicatorId::HEADLINE,
        &[ScopeKind::Pooled],
        &[Direction::Gain, Direction::Loss],
        &config,
        |_, x| compute_indicators(x, &IndicatorId::HEADLINE),
    )
    .unwrap();
    let nonzero = pooled.results.iter().filter(|r| r.p_value != Some(0.0)).count();
    if nonzero > 0 || pooled.results.len() != 504 {
        pass = false;
        notes.push(format!("{nonzero} of {} pooled tests with p >= 1/5000", pooled.results.len()));
    }
    let per_product = run_period_tests(
        &rca,
        &periods,
        &[Dstar],
        &[ScopeKind::Product],
        &[Direction::Gain],
        &config,
        |_, x| compute_indicators(x, &[Dstar]),
    )
    .unwrap();
    let table = threshold_summary(&per_product.results, &DEFAULT_CUTOFFS, Grouping::Pooled);
    let got = &table.rows[0].fractions;
    let want = [0.278, 0.510, 0.639];
    if got.iter().zip(want).any(|(g, w)| (g - w).abs() > 0.02) {
        pass = false;
    }
    notes.push(format!("D* gains per product {got:.3?} vs {want:?}"));
    outcome(9, "real-data reproduction", pass, notes.join("; "))
}

fn main() -> ExitCode {
    let suite = random_suite(SUITE_SIZE, SUITE_SEED);
    let criteria: [&dyn Fn() -> Outcome; 9] = [
        &|| criterion_1(&suite),
        &|| criterion_2(&suite),
        &|| criterion_3(&suite),
        &|| criterion_4(&suite),
        &criterion_5,
        &criterion_6,
        &criterion_7,
        &criterion_8,
        &criterion_9,
    ];
    let mut problems = Vec::new();
    for run in criteria {
        let o = run();
        let expected = EXPECTED_FAILURES.iter().find(|(id, _)| *id == o.id);
        let label = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        let note = match (&o.status, expected) {
            (Status::Fail, Some((_, why))) => format!(" [expected: {why}]"),
            _ => String::new(),
        };
        println!("criterion {} {}: {label} - {}{note}", o.id, o.title, o.detail);
        match (&o.status, expected) {
            (Status::Fail, None) => problems.push(format!("criterion {} failed", o.id)),
            (Status::Pass, Some(_)) => problems.push(format!("criterion {} passed but is listed as failing", o.id)),
            _ => {}
        }
    }
    if problems.is_empty() {
        println!("acceptance: ok");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {}", problems.join("; "));
        ExitCode::FAILURE
    }
}
