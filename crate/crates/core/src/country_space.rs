//! Country-space counterparts of the product-space objects.
//!
//! Everything here runs the product-space code on Xᵀ, where countries play
//! the role of products, and transposes the m × n results back. The starred
//! matrices are n × n:
//!
//! * `C* = S*⁻¹ XᵀX`, `B* = U*⁻¹ ZᵀX`, `K* = C* − B*`,
//! * `D* = X C*min / O C*min`,
//! * `D̃* = (X C*min + Z B*min) / (O C*min + O B*min)`,
//! * `E* = (X C* + Z B*)/n = (O B* + X K*)/n`.

use ndarray::Array2;

use crate::error::Result;
use crate::indicator::{ConditionalProbMatrix, IndicatorId, IndicatorMatrix, Space};
use crate::product_space::{self as ps, SpaceTerms};
use crate::rca::{AntiRcaMatrix, BinaryRcaMatrix};

fn relabel(mut a: ConditionalProbMatrix) -> ConditionalProbMatrix {
    a.space = Space::Country;
    a
}

pub fn cond_prob_cstar(x: &BinaryRcaMatrix) -> ConditionalProbMatrix {
    relabel(ps::cond_prob_c(&x.transposed()))
}

pub fn cond_prob_bstar(x: &BinaryRcaMatrix, z: &AntiRcaMatrix) -> ConditionalProbMatrix {
    relabel(ps::cond_prob_b(&x.transposed(), &z.transposed()))
}

pub fn marginal_kstar(
    cstar: &ConditionalProbMatrix,
    bstar: &ConditionalProbMatrix,
) -> Result<ConditionalProbMatrix> {
    ps::marginal_k(cstar, bstar).map(relabel)
}

fn back(x: &BinaryRcaMatrix, id: IndicatorId, transposed: IndicatorMatrix) -> IndicatorMatrix {
    let values: Array2<f64> = transposed.values.reversed_axes().as_standard_layout().into_owned();
    IndicatorMatrix::new(id, x.year(), x.products().clone(), x.countries().clone(), values)
        .expect("transposed shape follows X")
}

#[derive(Debug, Clone)]
pub struct StarIndicators {
    pub dstar: IndicatorMatrix,
    pub dtilde_star: IndicatorMatrix,
    pub estar: IndicatorMatrix,
    pub e1star: IndicatorMatrix,
    pub e2star: IndicatorMatrix,
}

impl StarIndicators {
    pub fn into_vec(self) -> Vec<IndicatorMatrix> {
        vec![self.dstar, self.dtilde_star, self.estar, self.e1star, self.e2star]
    }
}

/// D*, D̃*, E*, E1*, E2* from C* and B* (n × n).
pub fn indicators_star(
    x: &BinaryRcaMatrix,
    z: &AntiRcaMatrix,
    cstar: &ConditionalProbMatrix,
    bstar: &ConditionalProbMatrix,
) -> Result<StarIndicators> {
    let xt = x.transposed();
    let zt = z.transposed();
    let cmin = ps::symmetrize(cstar);
    let bmin = ps::symmetrize(bstar);
    let d = ps::density_d(&xt, &cmin)?;
    let dt = ps::density_dtilde(&xt, &zt, &cmin, &bmin)?;
    let r = ps::indicator_e(&xt, &zt, cstar, bstar)?;
    Ok(StarIndicators {
        dstar: back(x, IndicatorId::Dstar, d),
        dtilde_star: back(x, IndicatorId::DtildeStar, dt),
        estar: back(x, IndicatorId::Estar, r.e),
        e1star: back(x, IndicatorId::E1star, r.e1),
        e2star: back(x, IndicatorId::E2star, r.e2),
    })
}

/// Country-space terms in the m × n orientation (X C*, Z B*, O B*, ...).
pub fn country_terms(x: &BinaryRcaMatrix) -> SpaceTerms {
    SpaceTerms::compute(&x.transposed()).transposed()
}

/// All five country-space indicators from a single pass.
pub fn country_indicators(x: &BinaryRcaMatrix) -> (SpaceTerms, Vec<IndicatorMatrix>) {
    let terms = country_terms(x);
    let (e, e1, e2) = terms.redistribution(x.n());
    let wrap = |id, values| {
        IndicatorMatrix::new(id, x.year(), x.products().clone(), x.countries().clone(), values)
            .expect("shape follows X")
    };
    let out = vec![
        wrap(IndicatorId::Dstar, terms.density()),
        wrap(IndicatorId::DtildeStar, terms.density_tilde()),
        wrap(IndicatorId::Estar, e),
        wrap(IndicatorId::E1star, e1),
        wrap(IndicatorId::E2star, e2),
    ];
    (terms, out)
}
