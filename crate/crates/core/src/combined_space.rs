//! Combined-space indicators: product-space and country-space terms added
//! together.
//!
//! `E^Tot = (BᵀO + KᵀX + OB* + XK*) / ((m+n) r)` sums to one over all cells;
//! the unnormalized `(m+n)`-average sums to r. Densities add numerators and
//! denominators of both spaces.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::indicator::{ConditionalProbMatrix, IndicatorId, IndicatorMatrix};
use crate::product_space::{col_sums_grid, row_sums_grid, safe_ratio, SpaceTerms};
use crate::rca::{AntiRcaMatrix, BinaryRcaMatrix};

#[derive(Debug, Clone)]
pub struct CombinedE {
    pub etot: IndicatorMatrix,
    pub e1tot: IndicatorMatrix,
    pub e2tot: IndicatorMatrix,
}

fn wrap(x: &BinaryRcaMatrix, id: IndicatorId, values: Array2<f64>) -> IndicatorMatrix {
    IndicatorMatrix::new(id, x.year(), x.products().clone(), x.countries().clone(), values)
        .expect("shape follows X")
}

fn check(a: &ConditionalProbMatrix, dim: usize, what: &str) -> Result<()> {
    if a.values.dim() != (dim, dim) {
        return Err(Error::ShapeMismatch(format!(
            "{what} is {:?}, expected {dim}x{dim}",
            a.values.dim()
        )));
    }
    Ok(())
}

/// Autonomous and path dependent numerators, `BᵀO + OB*` and `KᵀX + XK*`.
fn etot_parts(
    x: &BinaryRcaMatrix,
    b: &ConditionalProbMatrix,
    k: &ConditionalProbMatrix,
    bstar: &ConditionalProbMatrix,
    kstar: &ConditionalProbMatrix,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (m, n) = (x.m(), x.n());
    check(b, m, "B")?;
    check(k, m, "K")?;
    check(bstar, n, "B*")?;
    check(kstar, n, "K*")?;
    let xf = x.to_f64();
    let bt_o = col_sums_grid(&b.values, n);
    // O B*: column sums of B* repeated down every row.
    let o_bstar = col_sums_grid(&bstar.values, m).reversed_axes();
    let autonomous = bt_o + o_bstar;
    let path = k.values.t().dot(&xf) + xf.dot(&kstar.values);
    Ok((autonomous, path))
}

/// `(BᵀO + KᵀX + OB* + XK*)/(m+n)`; its elements add up to r.
pub fn etot_unnormalized(
    x: &BinaryRcaMatrix,
    b: &ConditionalProbMatrix,
    k: &ConditionalProbMatrix,
    bstar: &ConditionalProbMatrix,
    kstar: &ConditionalProbMatrix,
) -> Result<Array2<f64>> {
    let (auto, path) = etot_parts(x, b, k, bstar, kstar)?;
    Ok((auto + path) / (x.m() + x.n()) as f64)
}

/// E^Tot with its split. `c` and `cstar` only fix the shapes; the combined
/// form needs B, K and their starred versions.
#[allow(clippy::too_many_arguments)]
pub fn indicator_etot(
    x: &BinaryRcaMatrix,
    z: &AntiRcaMatrix,
    c: &ConditionalProbMatrix,
    b: &ConditionalProbMatrix,
    k: &ConditionalProbMatrix,
    cstar: &ConditionalProbMatrix,
    bstar: &ConditionalProbMatrix,
    kstar: &ConditionalProbMatrix,
) -> Result<CombinedE> {
    if x.r() == 0 {
        return Err(Error::EmptyRcaMatrix(x.year()));
    }
    if z.z().dim() != x.x().dim() {
        return Err(Error::ShapeMismatch("X and Z differ in shape".into()));
    }
    check(c, x.m(), "C")?;
    check(cstar, x.n(), "C*")?;
    let (auto, path) = etot_parts(x, b, k, bstar, kstar)?;
    let scale = ((x.m() + x.n()) * x.r()) as f64;
    let e1 = auto / scale;
    let e2 = path / scale;
    let e = &e1 + &e2;
    Ok(CombinedE {
        etot: wrap(x, IndicatorId::Etot, e),
        e1tot: wrap(x, IndicatorId::E1tot, e1),
        e2tot: wrap(x, IndicatorId::E2tot, e2),
    })
}

/// `D^Tot = (Cmin X + X C*min) / (Cmin O + O C*min)`.
pub fn indicator_dtot(
    x: &BinaryRcaMatrix,
    cmin: &ConditionalProbMatrix,
    cstar_min: &ConditionalProbMatrix,
) -> Result<IndicatorMatrix> {
    let (m, n) = (x.m(), x.n());
    check(cmin, m, "Cmin")?;
    check(cstar_min, n, "C*min")?;
    let xf = x.to_f64();
    let num = cmin.values.dot(&xf) + xf.dot(&cstar_min.values);
    let den = row_sums_grid(&cmin.values, n) + col_sums_grid(&cstar_min.values, m).reversed_axes();
    Ok(wrap(x, IndicatorId::Dtot, safe_ratio(&num, &den)))
}

/// `D̃^Tot`: both densities' numerators and denominators with the B terms.
pub fn indicator_dtilde_tot(
    x: &BinaryRcaMatrix,
    z: &AntiRcaMatrix,
    cmin: &ConditionalProbMatrix,
    bmin: &ConditionalProbMatrix,
    cstar_min: &ConditionalProbMatrix,
    bstar_min: &ConditionalProbMatrix,
) -> Result<IndicatorMatrix> {
    let (m, n) = (x.m(), x.n());
    check(cmin, m, "Cmin")?;
    check(bmin, m, "Bmin")?;
    check(cstar_min, n, "C*min")?;
    check(bstar_min, n, "B*min")?;
    let xf = x.to_f64();
    let zf = z.to_f64();
    let num = cmin.values.dot(&xf)
        + bmin.values.dot(&zf)
        + xf.dot(&cstar_min.values)
        + zf.dot(&bstar_min.values);
    let den = row_sums_grid(&cmin.values, n)
        + row_sums_grid(&bmin.values, n)
        + col_sums_grid(&cstar_min.values, m).reversed_axes()
        + col_sums_grid(&bstar_min.values, m).reversed_axes();
    Ok(wrap(x, IndicatorId::DtildeTot, safe_ratio(&num, &den)))
}

/// The combined indicators from already computed space terms. The E^Tot
/// family is left out when X has no RCA, since it divides by r.
pub fn combined_indicators(
    x: &BinaryRcaMatrix,
    product: &SpaceTerms,
    country: &SpaceTerms,
) -> Vec<IndicatorMatrix> {
    let dtot = safe_ratio(
        &(&product.cmin_x + &country.cmin_x),
        &(&product.cmin_o + &country.cmin_o),
    );
    let dtilde = safe_ratio(
        &(&product.cmin_x + &product.bmin_z + &country.cmin_x + &country.bmin_z),
        &(&product.cmin_o + &product.bmin_o + &country.cmin_o + &country.bmin_o),
    );
    let mut out = vec![
        wrap(x, IndicatorId::Dtot, dtot),
        wrap(x, IndicatorId::DtildeTot, dtilde),
    ];
    if x.r() > 0 {
        let scale = ((x.m() + x.n()) * x.r()) as f64;
        let e1 = (&product.bt_o + &country.bt_o) / scale;
        let e2 = (&product.kt_x + &country.kt_x) / scale;
        let e = &e1 + &e2;
        out.extend([
            wrap(x, IndicatorId::Etot, e),
            wrap(x, IndicatorId::E1tot, e1),
            wrap(x, IndicatorId::E2tot, e2),
        ]);
    }
    out
}
