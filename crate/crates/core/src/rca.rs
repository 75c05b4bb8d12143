//! Revealed comparative advantage: continuous and binary RCA per year, the
//! anti-RCA complement, and change matrices between years.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::panel::{ExportPanel, Registry};

/// Binary RCA matrix X with cached ubiquity and diversification counts.
#[derive(Debug, Clone)]
pub struct BinaryRcaMatrix {
    year: i32,
    products: Arc<Registry>,
    countries: Arc<Registry>,
    x: Array2<u8>,
    r: usize,
    s: Vec<usize>,
    s_star: Vec<usize>,
}

impl BinaryRcaMatrix {
    pub fn new(
        year: i32,
        products: Arc<Registry>,
        countries: Arc<Registry>,
        x: Array2<u8>,
    ) -> Result<Self> {
        if x.dim() != (products.len(), countries.len()) {
            return Err(Error::ShapeMismatch(format!(
                "X is {:?}, registries are {}x{}",
                x.dim(),
                products.len(),
                countries.len()
            )));
        }
        if x.iter().any(|&v| v > 1) {
            return Err(Error::ShapeMismatch("X must be 0/1".into()));
        }
        let s: Vec<usize> = x
            .axis_iter(Axis(0))
            .map(|row| row.iter().map(|&v| v as usize).sum())
            .collect();
        let s_star: Vec<usize> = x
            .axis_iter(Axis(1))
            .map(|col| col.iter().map(|&v| v as usize).sum())
            .collect();
        let r = s.iter().sum();
        Ok(BinaryRcaMatrix {
            year,
            products,
            countries,
            x,
            r,
            s,
            s_star,
        })
    }

    /// Convenience constructor with generated codes `p0..`, `c0..`.
    pub fn from_array(year: i32, x: Array2<u8>) -> Result<Self> {
        let (m, n) = x.dim();
        let products = Registry::from_codes((0..m).map(|i| format!("p{i}")).collect())?;
        let countries = Registry::from_codes((0..n).map(|j| format!("c{j}")).collect())?;
        Self::new(year, Arc::new(products), Arc::new(countries), x)
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    /// Same matrix labelled with another year.
    pub fn with_year(mut self, year: i32) -> Self {
        self.year = year;
        self
    }

    pub fn products(&self) -> &Arc<Registry> {
        &self.products
    }

    pub fn countries(&self) -> &Arc<Registry> {
        &self.countries
    }

    pub fn x(&self) -> &Array2<u8> {
        &self.x
    }

    /// Number of products m.
    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    /// Number of countries n.
    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    /// Total count of ones.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Product ubiquity (row sums).
    pub fn s(&self) -> &[usize] {
        &self.s
    }

    /// Country diversification (column sums).
    pub fn s_star(&self) -> &[usize] {
        &self.s_star
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.x.mapv(f64::from)
    }

    /// Xᵀ with registries swapped, so products and countries trade roles.
    pub fn transposed(&self) -> BinaryRcaMatrix {
        BinaryRcaMatrix {
            year: self.year,
            products: self.countries.clone(),
            countries: self.products.clone(),
            x: self.x.t().as_standard_layout().into_owned(),
            r: self.r,
            s: self.s_star.clone(),
            s_star: self.s.clone(),
        }
    }

    /// Sub-matrix on the given codes, which must all be present.
    pub fn restrict(&self, products: &Arc<Registry>, countries: &Arc<Registry>) -> Result<Self> {
        if **products == *self.products && **countries == *self.countries {
            return Ok(self.clone());
        }
        let x = select(&self.x, &self.products, &self.countries, products, countries)?;
        Self::new(self.year, products.clone(), countries.clone(), x)
    }

    pub fn same_registries(&self, other_products: &Registry, other_countries: &Registry) -> bool {
        *self.products == *other_products && *self.countries == *other_countries
    }
}

pub(crate) fn select<T: Copy>(
    values: &Array2<T>,
    from_rows: &Registry,
    from_cols: &Registry,
    rows: &Registry,
    cols: &Registry,
) -> Result<Array2<T>> {
    let lookup = |reg: &Registry, from: &Registry, what: &str| -> Result<Vec<usize>> {
        reg.codes()
            .iter()
            .map(|c| {
                from.position(c)
                    .ok_or_else(|| Error::RegistryMismatch(format!("{what} `{c}` not present")))
            })
            .collect()
    };
    let ri = lookup(rows, from_rows, "product")?;
    let ci = lookup(cols, from_cols, "country")?;
    Ok(values.select(Axis(0), &ri).select(Axis(1), &ci))
}

/// Anti-RCA Z = O − X with anti-ubiquity counts.
#[derive(Debug, Clone)]
pub struct AntiRcaMatrix {
    z: Array2<u8>,
    u: Vec<usize>,
    u_star: Vec<usize>,
}

impl AntiRcaMatrix {
    pub fn z(&self) -> &Array2<u8> {
        &self.z
    }

    /// Row sums of Z: countries lacking RCA in each product.
    pub fn u(&self) -> &[usize] {
        &self.u
    }

    /// Column sums of Z: products each country lacks RCA in.
    pub fn u_star(&self) -> &[usize] {
        &self.u_star
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.z.mapv(f64::from)
    }

    pub fn transposed(&self) -> AntiRcaMatrix {
        AntiRcaMatrix {
            z: self.z.t().as_standard_layout().into_owned(),
            u: self.u_star.clone(),
            u_star: self.u.clone(),
        }
    }
}

pub fn compute_anti_rca(x: &BinaryRcaMatrix) -> AntiRcaMatrix {
    let z = x.x.mapv(|v| 1 - v);
    let u = x.s.iter().map(|&s| x.n() - s).collect();
    let u_star = x.s_star.iter().map(|&s| x.m() - s).collect();
    AntiRcaMatrix { z, u, u_star }
}

/// Continuous RCA χ and its symmetric transform ρ = (χ − 1)/(χ + 1).
#[derive(Debug, Clone)]
pub struct ContinuousRcaMatrix {
    year: i32,
    products: Arc<Registry>,
    countries: Arc<Registry>,
    chi: Array2<f64>,
    rho: Array2<f64>,
}

impl ContinuousRcaMatrix {
    /// Rebuilds ρ from a stored χ grid.
    pub fn from_chi(
        year: i32,
        products: Arc<Registry>,
        countries: Arc<Registry>,
        chi: Array2<f64>,
    ) -> Result<Self> {
        if chi.dim() != (products.len(), countries.len()) {
            return Err(Error::ShapeMismatch(format!(
                "chi is {:?}, registries are {}x{}",
                chi.dim(),
                products.len(),
                countries.len()
            )));
        }
        let rho = chi.mapv(rho_from_chi);
        Ok(ContinuousRcaMatrix {
            year,
            products,
            countries,
            chi,
            rho,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn products(&self) -> &Arc<Registry> {
        &self.products
    }

    pub fn countries(&self) -> &Arc<Registry> {
        &self.countries
    }

    pub fn chi(&self) -> &Array2<f64> {
        &self.chi
    }

    pub fn rho(&self) -> &Array2<f64> {
        &self.rho
    }

    pub fn restrict(&self, products: &Arc<Registry>, countries: &Arc<Registry>) -> Result<Self> {
        let chi = select(&self.chi, &self.products, &self.countries, products, countries)?;
        let rho = select(&self.rho, &self.products, &self.countries, products, countries)?;
        Ok(ContinuousRcaMatrix {
            year: self.year,
            products: products.clone(),
            countries: countries.clone(),
            chi,
            rho,
        })
    }
}

pub fn rho_from_chi(chi: f64) -> f64 {
    if chi.is_infinite() {
        return 1.0;
    }
    (chi - 1.0) / (chi + 1.0)
}

/// RCA for one panel year on the year's active codes.
///
/// x_ij = 1 iff χ_ij ≥ `threshold`.
pub fn compute_rca(
    panel: &ExportPanel,
    year: i32,
    threshold: f64,
) -> Result<(BinaryRcaMatrix, ContinuousRcaMatrix)> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::BadThreshold(threshold));
    }
    let (products, countries, values) = panel.active(year)?;
    let row_tot = values.sum_axis(Axis(1));
    let col_tot = values.sum_axis(Axis(0));
    let total: f64 = row_tot.sum();
    if let Some(i) = row_tot.iter().position(|&v| v <= 0.0 || v.is_nan()) {
        return Err(Error::DegenerateTotals {
            year,
            detail: format!("product `{}` has zero total", products.code(i)),
        });
    }
    if let Some(j) = col_tot.iter().position(|&v| v <= 0.0 || v.is_nan()) {
        return Err(Error::DegenerateTotals {
            year,
            detail: format!("country `{}` has zero total", countries.code(j)),
        });
    }

    let mut chi = Array2::zeros(values.dim());
    for ((i, j), c) in chi.indexed_iter_mut() {
        *c = (values[[i, j]] / col_tot[j]) / (row_tot[i] / total);
    }
    let rho = chi.mapv(rho_from_chi);
    let x = chi.mapv(|c| u8::from(c >= threshold));
    let binary = BinaryRcaMatrix::new(year, products.clone(), countries.clone(), x)?;
    let continuous = ContinuousRcaMatrix {
        year,
        products,
        countries,
        chi,
        rho,
    };
    Ok((binary, continuous))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearPair {
    pub from: i32,
    pub to: i32,
}

impl YearPair {
    pub fn new(from: i32, to: i32) -> Result<Self> {
        if from >= to {
            return Err(Error::NonIncreasingYears { from, to });
        }
        Ok(YearPair { from, to })
    }

    pub fn length(&self) -> u32 {
        (self.to - self.from) as u32
    }
}

impl fmt::Display for YearPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.from, self.to)
    }
}

/// All (from, to) pairs with from < to, grouped by period length.
pub fn enumerate_year_pairs(years: &[i32]) -> Result<BTreeMap<u32, Vec<YearPair>>> {
    let mut ys = years.to_vec();
    ys.sort_unstable();
    ys.dedup();
    if ys.len() < 2 {
        return Err(Error::TooFewYears(ys.len()));
    }
    let mut out: BTreeMap<u32, Vec<YearPair>> = BTreeMap::new();
    for (k, &from) in ys.iter().enumerate() {
        for &to in &ys[k + 1..] {
            let p = YearPair { from, to };
            out.entry(p.length()).or_default().push(p);
        }
    }
    Ok(out)
}

/// Δ = X(to) − X(from) over {−1, 0, +1}.
#[derive(Debug, Clone)]
pub struct ChangeMatrix {
    period: YearPair,
    products: Arc<Registry>,
    countries: Arc<Registry>,
    delta: Array2<i8>,
    gains: usize,
    losses: usize,
}

impl ChangeMatrix {
    pub fn period(&self) -> YearPair {
        self.period
    }

    pub fn products(&self) -> &Arc<Registry> {
        &self.products
    }

    pub fn countries(&self) -> &Arc<Registry> {
        &self.countries
    }

    pub fn delta(&self) -> &Array2<i8> {
        &self.delta
    }

    pub fn gains(&self) -> usize {
        self.gains
    }

    pub fn losses(&self) -> usize {
        self.losses
    }

    /// Gains (+1 counts) per product row.
    pub fn gains_per_product(&self) -> Vec<usize> {
        count_axis(&self.delta, Axis(0), 1)
    }

    pub fn losses_per_product(&self) -> Vec<usize> {
        count_axis(&self.delta, Axis(0), -1)
    }

    pub fn gains_per_country(&self) -> Vec<usize> {
        count_axis(&self.delta, Axis(1), 1)
    }

    pub fn losses_per_country(&self) -> Vec<usize> {
        count_axis(&self.delta, Axis(1), -1)
    }
}

fn count_axis(delta: &Array2<i8>, axis: Axis, value: i8) -> Vec<usize> {
    delta
        .axis_iter(axis)
        .map(|lane| lane.iter().filter(|&&d| d == value).count())
        .collect()
}

pub fn compute_changes(x0: &BinaryRcaMatrix, x1: &BinaryRcaMatrix) -> Result<ChangeMatrix> {
    if !x0.same_registries(&x1.products, &x1.countries) {
        return Err(Error::RegistryMismatch(format!(
            "RCA matrices for {} and {} use different registries",
            x0.year, x1.year
        )));
    }
    let period = YearPair::new(x0.year, x1.year)?;
    let mut delta = Array2::zeros(x0.x.dim());
    let (mut gains, mut losses) = (0, 0);
    for ((d, &a), &b) in delta.iter_mut().zip(&x0.x).zip(&x1.x) {
        *d = b as i8 - a as i8;
        match *d {
            1 => gains += 1,
            -1 => losses += 1,
            _ => {}
        }
    }
    Ok(ChangeMatrix {
        period,
        products: x0.products.clone(),
        countries: x0.countries.clone(),
        delta,
        gains,
        losses,
    })
}

/// Codes dropped when two years are put on a common registry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentReport {
    pub dropped_products: Vec<String>,
    pub dropped_countries: Vec<String>,
}

/// Shared product and country registries of two matrices, in the order of
/// the first.
pub fn common_registries(
    a_products: &Arc<Registry>,
    a_countries: &Arc<Registry>,
    b_products: &Registry,
    b_countries: &Registry,
) -> (Arc<Registry>, Arc<Registry>, AlignmentReport) {
    if **a_products == *b_products && **a_countries == *b_countries {
        return (a_products.clone(), a_countries.clone(), AlignmentReport::default());
    }
    let products = Arc::new(a_products.intersection(b_products));
    let countries = Arc::new(a_countries.intersection(b_countries));
    let mut dropped_products = a_products.difference(&products);
    dropped_products.extend(b_products.difference(&products));
    dropped_products.sort();
    dropped_products.dedup();
    let mut dropped_countries = a_countries.difference(&countries);
    dropped_countries.extend(b_countries.difference(&countries));
    dropped_countries.sort();
    dropped_countries.dedup();
    (
        products,
        countries,
        AlignmentReport {
            dropped_products,
            dropped_countries,
        },
    )
}

/// Restricts both matrices to their common codes before differencing.
pub fn compute_changes_aligned(
    x0: &BinaryRcaMatrix,
    x1: &BinaryRcaMatrix,
) -> Result<(ChangeMatrix, AlignmentReport)> {
    let (p, c, report) = common_registries(&x0.products, &x0.countries, &x1.products, &x1.countries);
    let a = x0.restrict(&p, &c)?;
    let b = x1.restrict(&p, &c)?;
    Ok((compute_changes(&a, &b)?, report))
}
