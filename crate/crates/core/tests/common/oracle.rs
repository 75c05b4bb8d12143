//! Loop-based reference implementations. Every quantity is computed by
//! counting cells directly, without matrix products, so they share no code
//! path with the library.

#![allow(dead_code, clippy::needless_range_loop)]

pub type Mat = Vec<Vec<f64>>;

fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub struct Counts {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// Ubiquity per product.
    pub s: Vec<usize>,
    /// Diversification per country.
    pub s_star: Vec<usize>,
}

pub fn counts(x: &[Vec<u8>]) -> Counts {
    let m = x.len();
    let n = x.first().map_or(0, Vec::len);
    let s: Vec<usize> = x.iter().map(|row| row.iter().map(|&v| v as usize).sum()).collect();
    let s_star: Vec<usize> = (0..n).map(|j| (0..m).map(|i| x[i][j] as usize).sum()).collect();
    Counts {
        m,
        n,
        r: s.iter().sum(),
        s,
        s_star,
    }
}

pub fn transpose(x: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let n = x.first().map_or(0, Vec::len);
    (0..n).map(|j| x.iter().map(|row| row[j]).collect()).collect()
}

/// Conditional probabilities between the rows of `x`:
/// `C[p][q] = #{j: x_pj = 1, x_qj = 1} / s_p`,
/// `B[p][q] = #{j: x_pj = 0, x_qj = 1} / u_p`.
pub fn row_space(x: &[Vec<u8>]) -> (Mat, Mat) {
    let m = x.len();
    let n = x.first().map_or(0, Vec::len);
    let mut c = zeros(m, m);
    let mut b = zeros(m, m);
    for p in 0..m {
        let s_p = x[p].iter().filter(|&&v| v == 1).count();
        let u_p = n - s_p;
        for q in 0..m {
            let both = (0..n).filter(|&j| x[p][j] == 1 && x[q][j] == 1).count();
            let only_q = (0..n).filter(|&j| x[p][j] == 0 && x[q][j] == 1).count();
            c[p][q] = ratio(both as f64, s_p as f64);
            b[p][q] = ratio(only_q as f64, u_p as f64);
        }
    }
    (c, b)
}

pub fn sym_min(a: &Mat) -> Mat {
    let m = a.len();
    let mut out = zeros(m, m);
    for p in 0..m {
        for q in 0..m {
            out[p][q] = a[p][q].min(a[q][p]);
        }
    }
    out
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

/// Product-space indicators of `x` (rows = the moving items).
pub struct RowIndicators {
    pub c: Mat,
    pub b: Mat,
    pub k: Mat,
    pub cmin: Mat,
    pub bmin: Mat,
    pub d: Mat,
    pub dtilde: Mat,
    pub e: Mat,
    pub e1: Mat,
    pub e2: Mat,
}

pub fn row_indicators(x: &[Vec<u8>]) -> RowIndicators {
    let m = x.len();
    let n = x.first().map_or(0, Vec::len);
    let (c, b) = row_space(x);
    let k = sub(&c, &b);
    let cmin = sym_min(&c);
    let bmin = sym_min(&b);
    let mut d = zeros(m, n);
    let mut dtilde = zeros(m, n);
    let mut e = zeros(m, n);
    let mut e1 = zeros(m, n);
    let mut e2 = zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let (mut dn, mut dd, mut tn, mut td) = (0.0, 0.0, 0.0, 0.0);
            let (mut ev, mut e1v, mut e2v) = (0.0, 0.0, 0.0);
            for p in 0..m {
                let xp = x[p][j] as f64;
                let zp = 1.0 - xp;
                dn += cmin[i][p] * xp;
                dd += cmin[i][p];
                tn += cmin[i][p] * xp + bmin[i][p] * zp;
                td += cmin[i][p] + bmin[i][p];
                ev += c[p][i] * xp + b[p][i] * zp;
                e1v += b[p][i];
                e2v += k[p][i] * xp;
            }
            d[i][j] = ratio(dn, dd);
            dtilde[i][j] = ratio(tn, td);
            e[i][j] = ev / m as f64;
            e1[i][j] = e1v / m as f64;
            e2[i][j] = e2v / m as f64;
        }
    }
    RowIndicators {
        c,
        b,
        k,
        cmin,
        bmin,
        d,
        dtilde,
        e,
        e1,
        e2,
    }
}

/// Country-space indicators in the m × n orientation, written out directly
/// from the column-wise definitions.
pub struct ColumnIndicators {
    pub cs: Mat,
    pub bs: Mat,
    pub ks: Mat,
    pub csmin: Mat,
    pub bsmin: Mat,
    pub d: Mat,
    pub dtilde: Mat,
    pub e: Mat,
    pub e1: Mat,
    pub e2: Mat,
}

pub fn column_indicators(x: &[Vec<u8>]) -> ColumnIndicators {
    let m = x.len();
    let n = x.first().map_or(0, Vec::len);
    let mut cs = zeros(n, n);
    let mut bs = zeros(n, n);
    for j in 0..n {
        let s_j = (0..m).filter(|&i| x[i][j] == 1).count();
        let u_j = m - s_j;
        for k in 0..n {
            let both = (0..m).filter(|&i| x[i][j] == 1 && x[i][k] == 1).count();
            let only_k = (0..m).filter(|&i| x[i][j] == 0 && x[i][k] == 1).count();
            cs[j][k] = ratio(both as f64, s_j as f64);
            bs[j][k] = ratio(only_k as f64, u_j as f64);
        }
    }
    let ks = sub(&cs, &bs);
    let csmin = sym_min(&cs);
    let bsmin = sym_min(&bs);
    let mut d = zeros(m, n);
    let mut dtilde = zeros(m, n);
    let mut e = zeros(m, n);
    let mut e1 = zeros(m, n);
    let mut e2 = zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let (mut dn, mut dd, mut tn, mut td) = (0.0, 0.0, 0.0, 0.0);
            let (mut ev, mut e1v, mut e2v) = (0.0, 0.0, 0.0);
            for k in 0..n {
                let xk = x[i][k] as f64;
                let zk = 1.0 - xk;
                dn += xk * csmin[k][j];
                dd += csmin[k][j];
                tn += xk * csmin[k][j] + zk * bsmin[k][j];
                td += csmin[k][j] + bsmin[k][j];
                ev += xk * cs[k][j] + zk * bs[k][j];
                e1v += bs[k][j];
                e2v += xk * ks[k][j];
            }
            d[i][j] = ratio(dn, dd);
            dtilde[i][j] = ratio(tn, td);
            e[i][j] = ev / n as f64;
            e1[i][j] = e1v / n as f64;
            e2[i][j] = e2v / n as f64;
        }
    }
    ColumnIndicators {
        cs,
        bs,
        ks,
        csmin,
        bsmin,
        d,
        dtilde,
        e,
        e1,
        e2,
    }
}

pub struct Combined {
    pub dtot: Mat,
    pub dtilde_tot: Mat,
    /// `None` when X has no RCA at all.
    pub etot: Option<Mat>,
    pub e1tot: Option<Mat>,
    pub e2tot: Option<Mat>,
    /// `(BᵀO + KᵀX + OB* + XK*)/(m+n)`.
    pub unnorm: Mat,
}

pub fn combined(x: &[Vec<u8>], p: &RowIndicators, c: &ColumnIndicators) -> Combined {
    let m = x.len();
    let n = x.first().map_or(0, Vec::len);
    let r: usize = x.iter().flatten().map(|&v| v as usize).sum();
    let mut dtot = zeros(m, n);
    let mut dtilde_tot = zeros(m, n);
    let mut auto = zeros(m, n);
    let mut path = zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let (mut dn, mut dd, mut tn, mut td) = (0.0, 0.0, 0.0, 0.0);
            for q in 0..m {
                let xq = x[q][j] as f64;
                dn += p.cmin[i][q] * xq;
                dd += p.cmin[i][q];
                tn += p.cmin[i][q] * xq + p.bmin[i][q] * (1.0 - xq);
                td += p.cmin[i][q] + p.bmin[i][q];
                auto[i][j] += p.b[q][i];
                path[i][j] += p.k[q][i] * xq;
            }
            for k in 0..n {
                let xk = x[i][k] as f64;
                dn += xk * c.csmin[k][j];
                dd += c.csmin[k][j];
                tn += xk * c.csmin[k][j] + (1.0 - xk) * c.bsmin[k][j];
                td += c.csmin[k][j] + c.bsmin[k][j];
                auto[i][j] += c.bs[k][j];
                path[i][j] += xk * c.ks[k][j];
            }
            dtot[i][j] = ratio(dn, dd);
            dtilde_tot[i][j] = ratio(tn, td);
        }
    }
    let scale = |a: &Mat, f: f64| -> Mat { a.iter().map(|row| row.iter().map(|v| v / f).collect()).collect() };
    let mn = (m + n) as f64;
    let unnorm: Mat = auto
        .iter()
        .zip(&path)
        .map(|(ra, rp)| ra.iter().zip(rp).map(|(a, b)| (a + b) / mn).collect())
        .collect();
    let (etot, e1tot, e2tot) = if r == 0 {
        (None, None, None)
    } else {
        let f = mn * r as f64;
        (Some(scale(&unnorm, r as f64)), Some(scale(&auto, f)), Some(scale(&path, f)))
    };
    Combined {
        dtot,
        dtilde_tot,
        etot,
        e1tot,
        e2tot,
        unnorm,
    }
}

/// Exact p-value by enumerating every N₁-subset of `values`: the share of
/// subsets whose mean is at least (`gain`) or at most the observed one.
/// Means are compared through sums scaled by a small relative tolerance.
pub fn exhaustive_p(values: &[f64], n1: usize, observed_sum: f64, gain: bool) -> f64 {
    let n = values.len();
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale * n1 as f64;
    let mut hits = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        let sum: f64 = (0..n).filter(|&k| mask >> k & 1 == 1).map(|k| values[k]).sum();
        total += 1;
        let hit = if gain {
            sum >= observed_sum - tol
        } else {
            sum <= observed_sum + tol
        };
        hits += u64::from(hit);
    }
    hits as f64 / total as f64
}
