//! Identities and containers for conditional-probability matrices and
//! product × country indicator matrices.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Registry;
use crate::rca::select;

/// Which network the relatedness is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Space {
    Product,
    Country,
    Combined,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Product => "product",
            Space::Country => "country",
            Space::Combined => "combined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndicatorId {
    D,
    Dtilde,
    E,
    E1,
    E2,
    Dstar,
    DtildeStar,
    Estar,
    E1star,
    E2star,
    Dtot,
    DtildeTot,
    Etot,
    E1tot,
    E2tot,
}

impl IndicatorId {
    pub const ALL: [IndicatorId; 15] = [
        IndicatorId::D,
        IndicatorId::Dtilde,
        IndicatorId::E,
        IndicatorId::E1,
        IndicatorId::E2,
        IndicatorId::Dstar,
        IndicatorId::DtildeStar,
        IndicatorId::Estar,
        IndicatorId::E1star,
        IndicatorId::E2star,
        IndicatorId::Dtot,
        IndicatorId::DtildeTot,
        IndicatorId::Etot,
        IndicatorId::E1tot,
        IndicatorId::E2tot,
    ];

    /// The twelve indicators that are tested for predictive power; the
    /// autonomous E1 components are left out.
    pub const HEADLINE: [IndicatorId; 12] = [
        IndicatorId::D,
        IndicatorId::Dtilde,
        IndicatorId::E,
        IndicatorId::E2,
        IndicatorId::Dstar,
        IndicatorId::DtildeStar,
        IndicatorId::Estar,
        IndicatorId::E2star,
        IndicatorId::Dtot,
        IndicatorId::DtildeTot,
        IndicatorId::Etot,
        IndicatorId::E2tot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorId::D => "D",
            IndicatorId::Dtilde => "Dtilde",
            IndicatorId::E => "E",
            IndicatorId::E1 => "E1",
            IndicatorId::E2 => "E2",
            IndicatorId::Dstar => "Dstar",
            IndicatorId::DtildeStar => "DtildeStar",
            IndicatorId::Estar => "Estar",
            IndicatorId::E1star => "E1star",
            IndicatorId::E2star => "E2star",
            IndicatorId::Dtot => "Dtot",
            IndicatorId::DtildeTot => "DtildeTot",
            IndicatorId::Etot => "Etot",
            IndicatorId::E1tot => "E1tot",
            IndicatorId::E2tot => "E2tot",
        }
    }

    pub fn space(self) -> Space {
        use IndicatorId::*;
        match self {
            D | Dtilde | E | E1 | E2 => Space::Product,
            Dstar | DtildeStar | Estar | E1star | E2star => Space::Country,
            Dtot | DtildeTot | Etot | E1tot | E2tot => Space::Combined,
        }
    }

    /// True for the density family (D, D̃ and their variants), whose values
    /// lie in [0, 1].
    pub fn is_density(self) -> bool {
        use IndicatorId::*;
        matches!(self, D | Dtilde | Dstar | DtildeStar | Dtot | DtildeTot)
    }

    /// Parses a comma-separated list; `all` expands to every id and
    /// `headline` to the twelve tested ones.
    pub fn parse_list(text: &str) -> Result<Vec<IndicatorId>> {
        let mut out = Vec::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.to_ascii_lowercase().as_str() {
                "all" => out.extend(IndicatorId::ALL),
                "headline" => out.extend(IndicatorId::HEADLINE),
                _ => out.push(tok.parse()?),
            }
        }
        let mut seen = Vec::with_capacity(out.len());
        out.retain(|id| {
            let fresh = !seen.contains(id);
            seen.push(*id);
            fresh
        });
        Ok(out)
    }
}

impl fmt::Display for IndicatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndicatorId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownIndicator(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbKind {
    C,
    B,
    K,
    Cmin,
    Bmin,
}

/// Square matrix of (marginal) conditional probabilities between products
/// (product space) or between countries (country space).
#[derive(Debug, Clone)]
pub struct ConditionalProbMatrix {
    pub kind: ProbKind,
    pub space: Space,
    pub year: i32,
    pub values: Array2<f64>,
    /// Rows whose conditioning count was zero and were set to 0.
    pub zeroed_rows: Vec<usize>,
}

impl ConditionalProbMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }
}

/// An m × n indicator over products (rows) and countries (columns).
#[derive(Debug, Clone)]
pub struct IndicatorMatrix {
    pub id: IndicatorId,
    pub year: i32,
    pub products: Arc<Registry>,
    pub countries: Arc<Registry>,
    pub values: Array2<f64>,
}

impl IndicatorMatrix {
    pub fn new(
        id: IndicatorId,
        year: i32,
        products: Arc<Registry>,
        countries: Arc<Registry>,
        values: Array2<f64>,
    ) -> Result<Self> {
        if values.dim() != (products.len(), countries.len()) {
            return Err(Error::ShapeMismatch(format!(
                "{id}: values are {:?}, registries are {}x{}",
                values.dim(),
                products.len(),
                countries.len()
            )));
        }
        Ok(IndicatorMatrix {
            id,
            year,
            products,
            countries,
            values,
        })
    }

    pub fn restrict(&self, products: &Arc<Registry>, countries: &Arc<Registry>) -> Result<Self> {
        if **products == *self.products && **countries == *self.countries {
            return Ok(self.clone());
        }
        let values = select(&self.values, &self.products, &self.countries, products, countries)?;
        IndicatorMatrix::new(self.id, self.year, products.clone(), countries.clone(), values)
    }
}
