//! Export panel ingestion: long-format CSV to aligned yearly product × country
//! matrices, plus the Lall technology concordance.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io;
use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Ordered, duplicate-free list of codes with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    codes: Vec<String>,
    index: HashMap<String, usize>,
}

pub type ProductRegistry = Registry;
pub type CountryRegistry = Registry;

impl Registry {
    /// Keeps the given order; fails on duplicates.
    pub fn from_codes(codes: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(codes.len());
        for (i, c) in codes.iter().enumerate() {
            if index.insert(c.clone(), i).is_some() {
                return Err(Error::DuplicateCode(c.clone()));
            }
        }
        Ok(Registry { codes, index })
    }

    /// Lexicographic order, duplicates collapsed.
    pub fn sorted<I, S>(codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = codes.into_iter().map(Into::into).collect();
        Registry::from_codes(set.into_iter().collect()).expect("set has no duplicates")
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn code(&self, i: usize) -> &str {
        &self.codes[i]
    }

    pub fn position(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn contains(&self, code: &str) -> bool {
        self.index.contains_key(code)
    }

    /// Codes kept in this registry's order, restricted to those in `other`.
    pub fn intersection(&self, other: &Registry) -> Registry {
        let codes = self
            .codes
            .iter()
            .filter(|c| other.contains(c))
            .cloned()
            .collect();
        Registry::from_codes(codes).expect("subset of a valid registry")
    }

    /// Codes present here but not in `other`.
    pub fn difference(&self, other: &Registry) -> Vec<String> {
        self.codes
            .iter()
            .filter(|c| !other.contains(c))
            .cloned()
            .collect()
    }
}

/// What ingestion does with a product or country that has no positive value
/// in some year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChurnPolicy {
    /// Fail with [`Error::EmptyRowOrColumn`].
    #[default]
    Reject,
    /// Drop the code from that year's RCA computation and record it.
    Exclude,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Add up repeated (year, country, product) rows instead of failing.
    pub sum_duplicates: bool,
    pub churn: ChurnPolicy,
}

/// Codes that were inactive (all-zero) in one year.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct YearExclusions {
    pub products: Vec<String>,
    pub countries: Vec<String>,
}

impl YearExclusions {
    pub fn is_empty(&self) -> bool {
        self.products.is_empty() && self.countries.is_empty()
    }
}

/// Yearly export matrices (products in rows, countries in columns) over
/// shared registries.
#[derive(Debug, Clone)]
pub struct ExportPanel {
    products: Arc<Registry>,
    countries: Arc<Registry>,
    matrices: BTreeMap<i32, Array2<f64>>,
    exclusions: BTreeMap<i32, YearExclusions>,
}

impl ExportPanel {
    /// Validates values and the per-year positivity of every row and column.
    pub fn new(
        products: Registry,
        countries: Registry,
        matrices: BTreeMap<i32, Array2<f64>>,
        churn: ChurnPolicy,
    ) -> Result<Self> {
        if products.is_empty() || countries.is_empty() || matrices.is_empty() {
            return Err(Error::ShapeMismatch(
                "panel needs at least one product, country and year".into(),
            ));
        }
        let shape = (products.len(), countries.len());
        let mut exclusions = BTreeMap::new();
        for (&year, values) in &matrices {
            if values.dim() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "year {year}: matrix is {:?}, registries are {shape:?}",
                    values.dim()
                )));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::DegenerateTotals {
                    year,
                    detail: format!("invalid export value {v}"),
                });
            }
            let ex = inactive_codes(values, &products, &countries);
            if !ex.is_empty() {
                if churn == ChurnPolicy::Reject {
                    let (kind, code) = match ex.products.first() {
                        Some(p) => ("product", p.clone()),
                        None => ("country", ex.countries[0].clone()),
                    };
                    return Err(Error::EmptyRowOrColumn { year, kind, code });
                }
                if ex.products.len() == products.len() || ex.countries.len() == countries.len() {
                    return Err(Error::EmptyRowOrColumn {
                        year,
                        kind: "year",
                        code: year.to_string(),
                    });
                }
            }
            exclusions.insert(year, ex);
        }
        Ok(ExportPanel {
            products: Arc::new(products),
            countries: Arc::new(countries),
            matrices,
            exclusions,
        })
    }

    pub fn years(&self) -> Vec<i32> {
        self.matrices.keys().copied().collect()
    }

    pub fn products(&self) -> &Arc<Registry> {
        &self.products
    }

    pub fn countries(&self) -> &Arc<Registry> {
        &self.countries
    }

    pub fn values(&self, year: i32) -> Option<&Array2<f64>> {
        self.matrices.get(&year)
    }

    pub fn exclusions(&self, year: i32) -> Option<&YearExclusions> {
        self.exclusions.get(&year)
    }

    /// The year's matrix restricted to codes with positive trade, with the
    /// matching registries. Shares the panel registries when nothing was
    /// excluded.
    pub fn active(&self, year: i32) -> Result<(Arc<Registry>, Arc<Registry>, Array2<f64>)> {
        let values = self.values(year).ok_or(Error::YearNotFound(year))?;
        let ex = &self.exclusions[&year];
        if ex.is_empty() {
            return Ok((self.products.clone(), self.countries.clone(), values.clone()));
        }
        let rows: Vec<usize> = (0..self.products.len())
            .filter(|&i| !ex.products.iter().any(|c| c == self.products.code(i)))
            .collect();
        let cols: Vec<usize> = (0..self.countries.len())
            .filter(|&j| !ex.countries.iter().any(|c| c == self.countries.code(j)))
            .collect();
        let sub = values.select(Axis(0), &rows).select(Axis(1), &cols);
        let products = Registry::from_codes(
            rows.iter().map(|&i| self.products.code(i).to_owned()).collect(),
        )?;
        let countries = Registry::from_codes(
            cols.iter().map(|&j| self.countries.code(j).to_owned()).collect(),
        )?;
        Ok((Arc::new(products), Arc::new(countries), sub))
    }
}

fn inactive_codes(values: &Array2<f64>, products: &Registry, countries: &Registry) -> YearExclusions {
    let products = values
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(_, row)| !row.iter().any(|v| *v > 0.0))
        .map(|(i, _)| products.code(i).to_owned())
        .collect();
    let countries = values
        .axis_iter(Axis(1))
        .enumerate()
        .filter(|(_, col)| !col.iter().any(|v| *v > 0.0))
        .map(|(j, _)| countries.code(j).to_owned())
        .collect();
    YearExclusions {
        products,
        countries,
    }
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::MissingColumn(name.to_owned()))
}

/// Reads long-format rows `year,country,product,value` into a panel.
///
/// Registries are the sorted union of observed codes; missing combinations
/// are zero.
pub fn ingest_exports<R: io::Read>(source: R, opts: &IngestOptions) -> Result<ExportPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    let year_col = header_index(&headers, "year")?;
    let country_col = header_index(&headers, "country")?;
    let product_col = header_index(&headers, "product")?;
    let value_col = header_index(&headers, "value")?;

    let mut cells: BTreeMap<(i32, String, String), f64> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let record = k as u64 + 1;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let year: i32 = field(year_col).parse().map_err(|_| Error::BadValue {
            record,
            column: "year",
            value: field(year_col).to_owned(),
        })?;
        let raw = field(value_col);
        let value: f64 = raw.parse().map_err(|_| Error::BadValue {
            record,
            column: "value",
            value: raw.to_owned(),
        })?;
        if value < 0.0 {
            return Err(Error::NegativeValue {
                record,
                value: raw.to_owned(),
            });
        }
        if !value.is_finite() {
            return Err(Error::BadValue {
                record,
                column: "value",
                value: raw.to_owned(),
            });
        }
        let key = (year, field(country_col).to_owned(), field(product_col).to_owned());
        match cells.get_mut(&key) {
            Some(v) if opts.sum_duplicates => *v += value,
            Some(_) => {
                return Err(Error::DuplicateKey {
                    year: key.0,
                    country: key.1,
                    product: key.2,
                })
            }
            None => {
                cells.insert(key, value);
            }
        }
    }

    let products = Registry::sorted(cells.keys().map(|(_, _, p)| p.as_str()));
    let countries = Registry::sorted(cells.keys().map(|(_, c, _)| c.as_str()));
    let mut matrices: BTreeMap<i32, Array2<f64>> = BTreeMap::new();
    for ((year, country, product), value) in cells {
        let m = matrices
            .entry(year)
            .or_insert_with(|| Array2::zeros((products.len(), countries.len())));
        let i = products.position(&product).expect("registered");
        let j = countries.position(&country).expect("registered");
        m[[i, j]] = value;
    }
    ExportPanel::new(products, countries, matrices, opts.churn)
}

/// Lall technology groups, primary products split into agricultural and
/// mineral.
pub const LALL_GROUP_NAMES: [&str; 11] = [
    "Primary products (agro)",
    "Primary products (mineral)",
    "Resource-based: agro-based",
    "Resource-based: other",
    "Low technology: textile, garment and footwear",
    "Low technology: other",
    "Medium technology: automotive",
    "Medium technology: process",
    "Medium technology: engineering",
    "High technology: electronic and electrical",
    "High technology: other",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LallConcordance {
    groups: BTreeMap<String, u8>,
    names: BTreeMap<u8, String>,
}

impl LallConcordance {
    pub fn new(groups: BTreeMap<String, u8>) -> Result<Self> {
        if let Some((p, g)) = groups.iter().find(|(_, g)| !(1..=11).contains(*g)) {
            return Err(Error::BadGroupId {
                product: p.clone(),
                group: g.to_string(),
            });
        }
        let names = (1..=11u8)
            .map(|g| (g, LALL_GROUP_NAMES[g as usize - 1].to_owned()))
            .collect();
        Ok(LallConcordance { groups, names })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, product: &str) -> Option<u8> {
        self.groups.get(product).copied()
    }

    pub fn group_name(&self, group: u8) -> Option<&str> {
        self.names.get(&group).map(String::as_str)
    }

    /// Panel products with no group, in registry order.
    pub fn unmapped(&self, products: &Registry) -> Vec<String> {
        products
            .codes()
            .iter()
            .filter(|p| !self.groups.contains_key(*p))
            .cloned()
            .collect()
    }
}

/// Reads `product,group_id[,group_name]`. Group names, when given, replace
/// the defaults.
pub fn ingest_lall<R: io::Read>(source: R) -> Result<LallConcordance> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    let product_col = header_index(&headers, "product")?;
    let group_col = header_index(&headers, "group_id")?;
    let name_col = header_index(&headers, "group_name").ok();

    let mut groups = BTreeMap::new();
    let mut names = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let product = rec.get(product_col).unwrap_or("").to_owned();
        let raw = rec.get(group_col).unwrap_or("");
        let group = raw
            .parse::<u8>()
            .ok()
            .filter(|g| (1..=11).contains(g))
            .ok_or_else(|| Error::BadGroupId {
                product: product.clone(),
                group: raw.to_owned(),
            })?;
        if let Some(name) = name_col.and_then(|c| rec.get(c)).filter(|n| !n.is_empty()) {
            names.insert(group, name.to_owned());
        }
        groups.insert(product, group);
    }
    let mut lall = LallConcordance::new(groups)?;
    lall.names.extend(names);
    Ok(lall)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(text: &str) -> Result<ExportPanel> {
        ingest_exports(text.as_bytes(), &IngestOptions::default())
    }

    #[test]
    fn two_by_two_panel_zero_fills() {
        let p = ingest("year,country,product,value\n2012,A,p1,10\n2012,B,p2,10\n").unwrap();
        assert_eq!(p.years(), vec![2012]);
        assert_eq!(p.products().codes(), ["p1", "p2"]);
        assert_eq!(p.countries().codes(), ["A", "B"]);
        let v = p.values(2012).unwrap();
        assert_eq!(v, &ndarray::array![[10.0, 0.0], [0.0, 10.0]]);
    }

    #[test]
    fn negative_value_rejected() {
        let err = ingest("year,country,product,value\n2012,A,p1,-3\n").unwrap_err();
        assert!(matches!(err, Error::NegativeValue { .. }), "{err}");
    }

    #[test]
    fn missing_column() {
        let err = ingest("year,country,value\n2012,A,3\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "product"));
    }

    #[test]
    fn duplicates_error_unless_summed() {
        let text = "year,country,product,value\n2012,A,p1,1\n2012,A,p1,2.5\n";
        assert!(matches!(ingest(text), Err(Error::DuplicateKey { .. })));
        let opts = IngestOptions {
            sum_duplicates: true,
            ..Default::default()
        };
        let p = ingest_exports(text.as_bytes(), &opts).unwrap();
        assert_eq!(p.values(2012).unwrap()[[0, 0]], 3.5);
    }

    #[test]
    fn empty_row_names_year_and_code() {
        let text = "year,country,product,value\n\
                    2012,A,p1,10\n2012,B,p2,10\n\
                    2013,A,p1,0\n2013,B,p2,10\n2013,A,p2,4\n";
        match ingest(text).unwrap_err() {
            Error::EmptyRowOrColumn { year, kind, code } => {
                assert_eq!((year, kind, code.as_str()), (2013, "product", "p1"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn exclusion_policy_records_inactive_codes() {
        let text = "year,country,product,value\n\
                    2012,A,p1,10\n2012,B,p2,10\n2012,A,p3,1\n\
                    2013,A,p1,0\n2013,B,p2,10\n2013,A,p2,4\n2013,A,p3,2\n";
        let opts = IngestOptions {
            churn: ChurnPolicy::Exclude,
            ..Default::default()
        };
        let p = ingest_exports(text.as_bytes(), &opts).unwrap();
        assert!(p.exclusions(2012).unwrap().is_empty());
        assert_eq!(p.exclusions(2013).unwrap().products, ["p1"]);
        let (prod, ctry, sub) = p.active(2013).unwrap();
        assert_eq!(prod.codes(), ["p2", "p3"]);
        assert_eq!(ctry.len(), 2);
        assert_eq!(sub.dim(), (2, 2));
    }

    #[test]
    fn registry_order_ignores_row_order() {
        let a = ingest("year,country,product,value\n2012,B,p2,1\n2012,A,p1,2\n2012,A,p2,3\n").unwrap();
        let b = ingest("year,country,product,value\n2012,A,p2,3\n2012,A,p1,2\n2012,B,p2,1\n").unwrap();
        assert_eq!(a.products(), b.products());
        assert_eq!(a.countries(), b.countries());
        assert_eq!(a.values(2012), b.values(2012));
    }

    #[test]
    fn lall_ingest_and_unmapped_report() {
        let lall = ingest_lall("product,group_id\np1,1\np2,11\n".as_bytes()).unwrap();
        assert_eq!(lall.len(), 2);
        assert_eq!(lall.group("p2"), Some(11));
        let products = Registry::sorted(["p1", "p2", "p3"]);
        assert_eq!(lall.unmapped(&products), ["p3"]);
    }

    #[test]
    fn lall_bad_group() {
        let err = ingest_lall("product,group_id\np1,12\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::BadGroupId { .. }));
        assert!(ingest_lall("product,group_id\np1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn lall_custom_names() {
        let lall = ingest_lall("product,group_id,group_name\np1,3,RB agro\n".as_bytes()).unwrap();
        assert_eq!(lall.group_name(3), Some("RB agro"));
        assert_eq!(lall.group_name(4), Some(LALL_GROUP_NAMES[3]));
    }

    #[test]
    fn registry_rejects_duplicates() {
        assert!(Registry::from_codes(vec!["a".into(), "a".into()]).is_err());
    }
}
