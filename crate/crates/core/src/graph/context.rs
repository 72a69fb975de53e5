//! Per-column statistical type and domain metadata.

use crate::data::{is_missing, DataMatrix};
use crate::error::{Error, Result};

/// Value domain of one data column.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Values encoded 0..cardinality-1.
    Categorical { cardinality: usize },
    /// Closed numeric range.
    Numeric { lo: f64, hi: f64 },
}

impl Domain {
    pub fn is_categorical(&self) -> bool {
        matches!(self, Domain::Categorical { .. })
    }
}

/// Statistical type of one column: leaf family plus domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    family: String,
    domain: Domain,
}

impl ColumnSpec {
    pub fn new(family: &str, domain: Domain) -> Result<Self> {
        match &domain {
            Domain::Categorical { cardinality } if *cardinality < 2 => {
                return Err(Error::Construction(format!(
                    "categorical cardinality {cardinality} must be at least 2"
                )))
            }
            Domain::Numeric { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                return Err(Error::Construction(format!(
                    "numeric range [{lo}, {hi}] must be finite with lo <= hi"
                )))
            }
            _ => {}
        }
        Ok(ColumnSpec {
            family: family.to_lowercase(),
            domain,
        })
    }

    pub fn categorical(family: &str, cardinality: usize) -> Result<Self> {
        ColumnSpec::new(family, Domain::Categorical { cardinality })
    }

    pub fn numeric(family: &str, lo: f64, hi: f64) -> Result<Self> {
        ColumnSpec::new(family, Domain::Numeric { lo, hi })
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
}

/// One [`ColumnSpec`] per data column.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    columns: Vec<ColumnSpec>,
}

impl Context {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Construction("context has no columns".into()));
        }
        Ok(Context { columns })
    }

    /// Derive domains from data: categorical columns get the cardinality
    /// of the largest observed value (at least 2), numeric columns their
    /// observed min/max range.
    pub fn infer(families: &[&str], data: &DataMatrix) -> Result<Self> {
        if families.len() != data.cols() {
            return Err(Error::Construction(format!(
                "{} families given for {} columns",
                families.len(),
                data.cols()
            )));
        }
        let mut columns = Vec::with_capacity(families.len());
        for (col, family) in families.iter().enumerate() {
            let observed: Vec<f64> = (0..data.rows())
                .map(|r| data.get(r, col))
                .filter(|v| !is_missing(*v))
                .collect();
            if observed.is_empty() {
                return Err(Error::Data(format!("column {col} has no observed values")));
            }
            let spec = if family.eq_ignore_ascii_case("categorical") {
                let max = observed.iter().cloned().fold(0.0f64, f64::max);
                ColumnSpec::categorical(family, (max as usize + 1).max(2))?
            } else {
                let lo = observed.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = observed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                ColumnSpec::numeric(family, lo, hi)?
            };
            columns.push(spec);
        }
        Context::new(columns)
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &ColumnSpec {
        &self.columns[index]
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_enforced() {
        assert!(ColumnSpec::categorical("categorical", 1).is_err());
        assert!(ColumnSpec::numeric("gaussian", 2.0, 1.0).is_err());
        assert!(Context::new(vec![]).is_err());
    }

    #[test]
    fn infer_from_data() {
        let data = DataMatrix::from_rows(vec![vec![5.0, 0.0], vec![15.0, 2.0]]).unwrap();
        let ctx = Context::infer(&["gaussian", "categorical"], &data).unwrap();
        assert_eq!(ctx.column(0).domain(), &Domain::Numeric { lo: 5.0, hi: 15.0 });
        assert_eq!(ctx.column(1).domain(), &Domain::Categorical { cardinality: 3 });
    }
}
