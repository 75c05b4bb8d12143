#![allow(dead_code)]

pub mod oracle;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relspace::combined_space::{etot_unnormalized, indicator_dtilde_tot, indicator_dtot, indicator_etot};
use relspace::country_space::{cond_prob_bstar, cond_prob_cstar, indicators_star, marginal_kstar};
use relspace::pipeline::{compute_indicators, IndicatorSet};
use relspace::product_space::{
    cond_prob_b, cond_prob_c, density_d, density_dtilde, indicator_e, marginal_k, symmetrize,
};
use relspace::rca::compute_anti_rca;
use relspace::{BinaryRcaMatrix, ConditionalProbMatrix, IndicatorId, IndicatorMatrix};

use oracle::Mat;

pub fn binary(x: &[Vec<u8>]) -> BinaryRcaMatrix {
    let m = x.len();
    let n = x.first().map_or(0, Vec::len);
    let flat: Vec<u8> = x.iter().flatten().copied().collect();
    BinaryRcaMatrix::from_array(2000, Array2::from_shape_vec((m, n), flat).unwrap()).unwrap()
}

pub fn random_x<R: Rng>(rng: &mut R, m: usize, n: usize, density: f64) -> Vec<Vec<u8>> {
    (0..m)
        .map(|_| (0..n).map(|_| u8::from(rng.random_bool(density))).collect())
        .collect()
}

/// `count` matrices of 1..=8 × 1..=6 with densities spread over (0, 1),
/// including empty and full rows and columns by chance.
pub fn random_suite(count: usize, seed: u64) -> Vec<Vec<Vec<u8>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(1..=8);
            let n = rng.random_range(1..=6);
            let density = rng.random_range(0.05..0.95);
            random_x(&mut rng, m, n, density)
        })
        .collect()
}

pub fn max_diff(a: &Array2<f64>, b: &Mat) -> f64 {
    assert_eq!(a.nrows(), b.len());
    let mut worst = 0.0f64;
    for (i, row) in b.iter().enumerate() {
        assert_eq!(a.ncols(), row.len());
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((a[[i, j]] - v).abs());
        }
    }
    worst
}

/// Everything the library computes for one X, through the per-operation
/// functions and through the fused pipeline.
pub struct LibOutputs {
    pub c: ConditionalProbMatrix,
    pub b: ConditionalProbMatrix,
    pub k: ConditionalProbMatrix,
    pub cs: ConditionalProbMatrix,
    pub bs: ConditionalProbMatrix,
    pub ks: ConditionalProbMatrix,
    /// Per-operation results keyed by id.
    pub ops: Vec<IndicatorMatrix>,
    /// Fused pipeline results.
    pub fused: IndicatorSet,
    pub unnorm: Array2<f64>,
}

pub fn library(x: &BinaryRcaMatrix) -> LibOutputs {
    let z = compute_anti_rca(x);
    let c = cond_prob_c(x);
    let b = cond_prob_b(x, &z);
    let k = marginal_k(&c, &b).unwrap();
    let cs = cond_prob_cstar(x);
    let bs = cond_prob_bstar(x, &z);
    let ks = marginal_kstar(&cs, &bs).unwrap();
    let cmin = symmetrize(&c);
    let bmin = symmetrize(&b);
    let csmin = symmetrize(&cs);
    let bsmin = symmetrize(&bs);

    let mut ops = vec![density_d(x, &cmin).unwrap(), density_dtilde(x, &z, &cmin, &bmin).unwrap()];
    let e = indicator_e(x, &z, &c, &b).unwrap();
    ops.extend([e.e, e.e1, e.e2]);
    ops.extend(indicators_star(x, &z, &cs, &bs).unwrap().into_vec());
    ops.push(indicator_dtot(x, &cmin, &csmin).unwrap());
    ops.push(indicator_dtilde_tot(x, &z, &cmin, &bmin, &csmin, &bsmin).unwrap());
    if x.r() > 0 {
        let t = indicator_etot(x, &z, &c, &b, &k, &cs, &bs, &ks).unwrap();
        ops.extend([t.etot, t.e1tot, t.e2tot]);
    }
    let unnorm = etot_unnormalized(x, &b, &k, &bs, &ks).unwrap();
    let ids: Vec<IndicatorId> = if x.r() > 0 {
        IndicatorId::ALL.to_vec()
    } else {
        IndicatorId::ALL
            .into_iter()
            .filter(|id| !matches!(id, IndicatorId::Etot | IndicatorId::E1tot | IndicatorId::E2tot))
            .collect()
    };
    let fused = compute_indicators(x, &ids).unwrap();
    LibOutputs {
        c,
        b,
        k,
        cs,
        bs,
        ks,
        ops,
        fused,
        unnorm,
    }
}

/// Oracle values for every indicator id available for this X.
pub fn oracle_indicators(x: &[Vec<u8>]) -> Vec<(IndicatorId, Mat)> {
    use IndicatorId::*;
    let p = oracle::row_indicators(x);
    let c = oracle::column_indicators(x);
    let t = oracle::combined(x, &p, &c);
    let mut out = vec![
        (Dtot, t.dtot.clone()),
        (DtildeTot, t.dtilde_tot.clone()),
    ];
    if let (Some(e), Some(e1), Some(e2)) = (t.etot, t.e1tot, t.e2tot) {
        out.extend([(Etot, e), (E1tot, e1), (E2tot, e2)]);
    }
    out.extend([
        (D, p.d),
        (Dtilde, p.dtilde),
        (E, p.e),
        (E1, p.e1),
        (E2, p.e2),
        (Dstar, c.d),
        (DtildeStar, c.dtilde),
        (Estar, c.e),
        (E1star, c.e1),
        (E2star, c.e2),
    ]);
    out
}

/// A pooled test over a single product row with `n` candidate cells, of
/// which `n1` move. Indicator values are drawn either from a continuous
/// range or from a five-point grid (to force ties).
pub struct BootstrapCase {
    pub spec: relspace::bootstrap::TestSpec,
    pub indicator: IndicatorMatrix,
    pub x0: BinaryRcaMatrix,
    pub delta: relspace::ChangeMatrix,
    pub values: Vec<f64>,
    pub movers: Vec<bool>,
}

impl BootstrapCase {
    pub fn random<R: Rng>(rng: &mut R, n: usize, n1: usize, gain: bool, seed: u64) -> Self {
        use relspace::bootstrap::{Direction, Scope, TestSpec};
        use relspace::rca::compute_changes;
        use relspace::YearPair;

        let discrete = rng.random_bool(0.5);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                if discrete {
                    rng.random_range(0..5) as f64 * 0.25
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let mut idx: Vec<usize> = (0..n).collect();
        for k in 0..n1 {
            let j = rng.random_range(k..n);
            idx.swap(k, j);
        }
        let mut movers = vec![false; n];
        for &k in &idx[..n1] {
            movers[k] = true;
        }
        let start = u8::from(!gain);
        let x0 = Array2::from_elem((1, n), start);
        let mut x1 = x0.clone();
        for (k, &mv) in movers.iter().enumerate() {
            if mv {
                x1[[0, k]] = 1 - start;
            }
        }
        let x0 = BinaryRcaMatrix::from_array(2000, x0).unwrap();
        let x1 = BinaryRcaMatrix::from_array(2001, x1).unwrap();
        let delta = compute_changes(&x0, &x1).unwrap();
        let indicator = IndicatorMatrix::new(
            IndicatorId::D,
            2000,
            x0.products().clone(),
            x0.countries().clone(),
            Array2::from_shape_vec((1, n), values.clone()).unwrap(),
        )
        .unwrap();
        let direction = if gain { Direction::Gain } else { Direction::Loss };
        let mut spec = TestSpec::new(IndicatorId::D, direction, Scope::Pooled, YearPair::new(2000, 2001).unwrap(), seed);
        spec.min_candidates = 2;
        BootstrapCase {
            spec,
            indicator,
            x0,
            delta,
            values,
            movers,
        }
    }

    pub fn observed_sum(&self) -> f64 {
        self.values.iter().zip(&self.movers).filter(|(_, &m)| m).map(|(v, _)| v).sum()
    }

    pub fn run(&self) -> relspace::bootstrap::TestResult {
        relspace::bootstrap::run_test(&self.spec, &self.indicator, &self.x0, &self.delta).unwrap()
    }

    pub fn exact_p(&self) -> f64 {
        let n1 = self.movers.iter().filter(|&&m| m).count();
        let gain = self.spec.direction == relspace::bootstrap::Direction::Gain;
        oracle::exhaustive_p(&self.values, n1, self.observed_sum(), gain)
    }
}

/// Kolmogorov–Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_uniform(mut p: Vec<f64>) -> f64 {
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    let mut d = 0.0f64;
    for (k, &v) in p.iter().enumerate() {
        d = d.max((k as f64 + 1.0) / n - v).max(v - k as f64 / n);
    }
    d
}
