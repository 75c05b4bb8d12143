//! Product-space relatedness.
//!
//! Conditional probabilities between products are estimated from
//! co-occurrence of comparative advantage across countries:
//!
//! * `C = S⁻¹ X Xᵀ`: probability of RCA in q given RCA in p,
//! * `B = U⁻¹ Z Xᵀ`: probability of RCA in q given no RCA in p,
//! * `K = C − B`: the marginal effect of holding p.
//!
//! The indicators built on them are densities `D`, `D̃` (using the
//! symmetrized `min(C, Cᵀ)` and `min(B, Bᵀ)`) and the ubiquity
//! redistributing `E = (CᵀX + BᵀZ)/m`, split into the autonomous
//! `E1 = BᵀO/m` and the path dependent `E2 = KᵀX/m`.
//!
//! Rows conditioned on an empty set (zero ubiquity for `C`, zero
//! anti-ubiquity for `B`) are set to zero and listed in
//! [`ConditionalProbMatrix::zeroed_rows`]. Density cells with a zero
//! denominator are 0.

use ndarray::{Array1, Array2, Axis, Zip};

use crate::error::{Error, Result};
use crate::indicator::{ConditionalProbMatrix, IndicatorId, IndicatorMatrix, ProbKind, Space};
use crate::rca::{AntiRcaMatrix, BinaryRcaMatrix};

/// Row-normalizes `counts` by `denominators`; rows with a zero denominator
/// become zero.
fn normalize_rows(mut counts: Array2<f64>, denominators: &[usize]) -> (Array2<f64>, Vec<usize>) {
    let mut zeroed = Vec::new();
    for (p, mut row) in counts.axis_iter_mut(Axis(0)).enumerate() {
        match denominators[p] {
            0 => {
                row.fill(0.0);
                zeroed.push(p);
            }
            d => {
                let d = d as f64;
                row.mapv_inplace(|v| v / d);
            }
        }
    }
    (counts, zeroed)
}

/// Co-occurrence counts `k = X Xᵀ`.
pub fn cooccurrence(x: &BinaryRcaMatrix) -> Array2<f64> {
    let xf = x.to_f64();
    xf.dot(&xf.t())
}

pub fn cond_prob_c(x: &BinaryRcaMatrix) -> ConditionalProbMatrix {
    let (values, zeroed_rows) = normalize_rows(cooccurrence(x), x.s());
    ConditionalProbMatrix {
        kind: ProbKind::C,
        space: Space::Product,
        year: x.year(),
        values,
        zeroed_rows,
    }
}

pub fn cond_prob_b(x: &BinaryRcaMatrix, z: &AntiRcaMatrix) -> ConditionalProbMatrix {
    let zx = z.to_f64().dot(&x.to_f64().t());
    let (values, zeroed_rows) = normalize_rows(zx, z.u());
    ConditionalProbMatrix {
        kind: ProbKind::B,
        space: Space::Product,
        year: x.year(),
        values,
        zeroed_rows,
    }
}

/// `B` from co-occurrence counts: `(Z Xᵀ)_pq = s_q − k_pq`.
pub(crate) fn cond_prob_b_from_counts(x: &BinaryRcaMatrix, k: &Array2<f64>) -> ConditionalProbMatrix {
    let s = x.s();
    let mut zx = Array2::zeros(k.dim());
    Zip::indexed(&mut zx).and(k).for_each(|(_, q), out, &kpq| {
        *out = s[q] as f64 - kpq;
    });
    let u: Vec<usize> = s.iter().map(|&sp| x.n() - sp).collect();
    let (values, zeroed_rows) = normalize_rows(zx, &u);
    ConditionalProbMatrix {
        kind: ProbKind::B,
        space: Space::Product,
        year: x.year(),
        values,
        zeroed_rows,
    }
}

fn check_square(a: &ConditionalProbMatrix, dim: usize, what: &str) -> Result<()> {
    if a.values.dim() != (dim, dim) {
        return Err(Error::ShapeMismatch(format!(
            "{what} is {:?}, expected {dim}x{dim}",
            a.values.dim()
        )));
    }
    Ok(())
}

pub fn marginal_k(c: &ConditionalProbMatrix, b: &ConditionalProbMatrix) -> Result<ConditionalProbMatrix> {
    check_square(b, c.dim(), "B")?;
    let mut zeroed_rows = c.zeroed_rows.clone();
    zeroed_rows.extend(&b.zeroed_rows);
    zeroed_rows.sort_unstable();
    zeroed_rows.dedup();
    Ok(ConditionalProbMatrix {
        kind: ProbKind::K,
        space: c.space,
        year: c.year,
        values: &c.values - &b.values,
        zeroed_rows,
    })
}

/// Elementwise `min(A, Aᵀ)`; turns `C` into `Cmin` and `B` into `Bmin`.
pub fn symmetrize(a: &ConditionalProbMatrix) -> ConditionalProbMatrix {
    let n = a.dim();
    let mut values = a.values.clone();
    for p in 0..n {
        for q in p + 1..n {
            let v = a.values[[p, q]].min(a.values[[q, p]]);
            values[[p, q]] = v;
            values[[q, p]] = v;
        }
    }
    let kind = match a.kind {
        ProbKind::B | ProbKind::Bmin => ProbKind::Bmin,
        _ => ProbKind::Cmin,
    };
    ConditionalProbMatrix {
        kind,
        space: a.space,
        year: a.year,
        values,
        zeroed_rows: a.zeroed_rows.clone(),
    }
}

/// Relative gap under which a density counts as exactly one. Every nonzero
/// weight is at least 1/max(m, n) and a denominator at most 2(m + n), so a
/// density short of one is short by far more than this.
const ONE_RTOL: f64 = 1e-12;

/// Density ratio `num / den` with `num <= den`: zero denominators give 0,
/// and a numerator equal to the denominator up to summation order gives
/// exactly 1.
pub(crate) fn safe_ratio(num: &Array2<f64>, den: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(num.dim());
    Zip::from(&mut out).and(num).and(den).for_each(|o, &a, &b| {
        *o = if b == 0.0 {
            0.0
        } else if a >= b * (1.0 - ONE_RTOL) {
            1.0
        } else {
            a / b
        };
    });
    out
}

/// `W O` for an items × holders shape: each row holds the row sum of `w`.
pub(crate) fn row_sums_grid(w: &Array2<f64>, ncols: usize) -> Array2<f64> {
    let sums = w.sum_axis(Axis(1));
    broadcast_rows(&sums, ncols)
}

/// `Wᵀ O`: each row i holds the column sum of `w` at i.
pub(crate) fn col_sums_grid(w: &Array2<f64>, ncols: usize) -> Array2<f64> {
    let sums = w.sum_axis(Axis(0));
    broadcast_rows(&sums, ncols)
}

fn broadcast_rows(v: &Array1<f64>, ncols: usize) -> Array2<f64> {
    let mut out = Array2::zeros((v.len(), ncols));
    for (mut row, &x) in out.axis_iter_mut(Axis(0)).zip(v) {
        row.fill(x);
    }
    out
}

/// The m × n matrix products every indicator of one space is assembled from,
/// in the orientation of that space's own X (items in rows).
#[derive(Debug, Clone)]
pub struct SpaceTerms {
    /// CᵀX
    pub ct_x: Array2<f64>,
    /// BᵀZ
    pub bt_z: Array2<f64>,
    /// BᵀO
    pub bt_o: Array2<f64>,
    /// KᵀX
    pub kt_x: Array2<f64>,
    /// Cmin X
    pub cmin_x: Array2<f64>,
    /// Cmin O
    pub cmin_o: Array2<f64>,
    /// Bmin Z
    pub bmin_z: Array2<f64>,
    /// Bmin O
    pub bmin_o: Array2<f64>,
}

impl SpaceTerms {
    /// Builds C, B and their derivatives one at a time so that at most three
    /// m × m matrices are alive.
    pub fn compute(x: &BinaryRcaMatrix) -> SpaceTerms {
        let xf = x.to_f64();
        let zf = xf.mapv(|v| 1.0 - v);
        let n = x.n();
        let k = cooccurrence(x);
        let b = cond_prob_b_from_counts(x, &k);
        let (c_vals, _) = normalize_rows(k, x.s());

        let ct_x = c_vals.t().dot(&xf);
        let bt_z = b.values.t().dot(&zf);
        let bt_o = col_sums_grid(&b.values, n);
        let kt_x = (&c_vals - &b.values).t().dot(&xf);

        let c = ConditionalProbMatrix {
            kind: ProbKind::C,
            space: Space::Product,
            year: x.year(),
            values: c_vals,
            zeroed_rows: Vec::new(),
        };
        let cmin = symmetrize(&c);
        drop(c);
        let cmin_x = cmin.values.dot(&xf);
        let cmin_o = row_sums_grid(&cmin.values, n);
        drop(cmin);
        let bmin = symmetrize(&b);
        drop(b);
        let bmin_z = bmin.values.dot(&zf);
        let bmin_o = row_sums_grid(&bmin.values, n);

        SpaceTerms {
            ct_x,
            bt_z,
            bt_o,
            kt_x,
            cmin_x,
            cmin_o,
            bmin_z,
            bmin_o,
        }
    }

    pub fn transposed(self) -> SpaceTerms {
        let t = |a: Array2<f64>| a.reversed_axes().as_standard_layout().into_owned();
        SpaceTerms {
            ct_x: t(self.ct_x),
            bt_z: t(self.bt_z),
            bt_o: t(self.bt_o),
            kt_x: t(self.kt_x),
            cmin_x: t(self.cmin_x),
            cmin_o: t(self.cmin_o),
            bmin_z: t(self.bmin_z),
            bmin_o: t(self.bmin_o),
        }
    }

    pub fn density(&self) -> Array2<f64> {
        safe_ratio(&self.cmin_x, &self.cmin_o)
    }

    pub fn density_tilde(&self) -> Array2<f64> {
        safe_ratio(&(&self.cmin_x + &self.bmin_z), &(&self.cmin_o + &self.bmin_o))
    }

    /// (E, E1, E2) with `items` the averaging dimension (m or n).
    pub fn redistribution(&self, items: usize) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let d = items as f64;
        let e = (&self.ct_x + &self.bt_z) / d;
        let e1 = &self.bt_o / d;
        let e2 = &self.kt_x / d;
        (e, e1, e2)
    }
}

fn check_xz(x: &BinaryRcaMatrix, z: &AntiRcaMatrix) -> Result<()> {
    if x.x().dim() != z.z().dim() {
        return Err(Error::ShapeMismatch(format!(
            "X is {:?}, Z is {:?}",
            x.x().dim(),
            z.z().dim()
        )));
    }
    Ok(())
}

fn wrap(x: &BinaryRcaMatrix, id: IndicatorId, values: Array2<f64>) -> IndicatorMatrix {
    IndicatorMatrix::new(id, x.year(), x.products().clone(), x.countries().clone(), values)
        .expect("shape follows X")
}

/// `D = Cmin X / Cmin O`, elementwise.
pub fn density_d(x: &BinaryRcaMatrix, cmin: &ConditionalProbMatrix) -> Result<IndicatorMatrix> {
    check_square(cmin, x.m(), "Cmin")?;
    let num = cmin.values.dot(&x.to_f64());
    let den = row_sums_grid(&cmin.values, x.n());
    Ok(wrap(x, IndicatorId::D, safe_ratio(&num, &den)))
}

/// `D̃ = (Cmin X + Bmin Z) / (Cmin O + Bmin O)`.
pub fn density_dtilde(
    x: &BinaryRcaMatrix,
    z: &AntiRcaMatrix,
    cmin: &ConditionalProbMatrix,
    bmin: &ConditionalProbMatrix,
) -> Result<IndicatorMatrix> {
    check_xz(x, z)?;
    check_square(cmin, x.m(), "Cmin")?;
    check_square(bmin, x.m(), "Bmin")?;
    let num = cmin.values.dot(&x.to_f64()) + bmin.values.dot(&z.to_f64());
    let den = row_sums_grid(&cmin.values, x.n()) + row_sums_grid(&bmin.values, x.n());
    Ok(wrap(x, IndicatorId::Dtilde, safe_ratio(&num, &den)))
}

/// E and its autonomous / path dependent split.
#[derive(Debug, Clone)]
pub struct Redistribution {
    pub e: IndicatorMatrix,
    pub e1: IndicatorMatrix,
    pub e2: IndicatorMatrix,
}

/// `E = (CᵀX + BᵀZ)/m`, `E1 = BᵀO/m`, `E2 = KᵀX/m` with `K = C − B`.
pub fn indicator_e(
    x: &BinaryRcaMatrix,
    z: &AntiRcaMatrix,
    c: &ConditionalProbMatrix,
    b: &ConditionalProbMatrix,
) -> Result<Redistribution> {
    check_xz(x, z)?;
    check_square(c, x.m(), "C")?;
    check_square(b, x.m(), "B")?;
    let m = x.m() as f64;
    let xf = x.to_f64();
    let e = (c.values.t().dot(&xf) + b.values.t().dot(&z.to_f64())) / m;
    let e1 = col_sums_grid(&b.values, x.n()) / m;
    let k = marginal_k(c, b)?;
    let e2 = k.values.t().dot(&xf) / m;
    Ok(Redistribution {
        e: wrap(x, IndicatorId::E, e),
        e1: wrap(x, IndicatorId::E1, e1),
        e2: wrap(x, IndicatorId::E2, e2),
    })
}

/// All five product-space indicators from a single pass.
pub fn product_indicators(x: &BinaryRcaMatrix) -> (SpaceTerms, Vec<IndicatorMatrix>) {
    let terms = SpaceTerms::compute(x);
    let (e, e1, e2) = terms.redistribution(x.m());
    let out = vec![
        wrap(x, IndicatorId::D, terms.density()),
        wrap(x, IndicatorId::Dtilde, terms.density_tilde()),
        wrap(x, IndicatorId::E, e),
        wrap(x, IndicatorId::E1, e1),
        wrap(x, IndicatorId::E2, e2),
    ];
    (terms, out)
}
