//! Code-labelled square matrices shared by the correlation, distance and
//! ultrametric types.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::format::significant;
use crate::market_data::CurrencyCode;

/// Row-major N×N matrix whose rows and columns are labelled by currency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct LabeledMatrix {
    currencies: Vec<CurrencyCode>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    currencies: Vec<CurrencyCode>,
    values: Vec<f64>,
}

impl TryFrom<RawMatrix> for LabeledMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        LabeledMatrix::new(raw.currencies, raw.values)
    }
}

impl LabeledMatrix {
    pub fn new(currencies: Vec<CurrencyCode>, values: Vec<f64>) -> Result<Self> {
        let n = currencies.len();
        if values.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "{} values for {n} labels, expected {}",
                values.len(),
                n * n
            )));
        }
        let mut sorted = currencies.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateCurrency(w[0].clone()));
        }
        Ok(LabeledMatrix { currencies, values })
    }

    pub(crate) fn from_fn(currencies: Vec<CurrencyCode>, f: impl Fn(usize, usize) -> f64) -> Self {
        let n = currencies.len();
        let values = (0..n * n).map(|k| f(k / n, k % n)).collect();
        LabeledMatrix { currencies, values }
    }

    pub fn currencies(&self) -> &[CurrencyCode] {
        &self.currencies
    }

    pub fn len(&self) -> usize {
        self.currencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.currencies.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.currencies.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.currencies.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, code: &CurrencyCode) -> Option<usize> {
        self.currencies.iter().position(|c| c == code)
    }

    /// Checks exact symmetry, the given diagonal value, and `[lo, hi]` range.
    pub(crate) fn validate(&self, diagonal: f64, lo: f64, hi: f64) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.get(i, i) != diagonal {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry {} is {}, expected {diagonal}",
                    self.currencies[i],
                    self.get(i, i)
                )));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if !(v.is_finite() && (lo..=hi).contains(&v)) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({},{}) = {v} outside [{lo}, {hi}]",
                        self.currencies[i], self.currencies[j]
                    )));
                }
                if v != self.get(j, i) {
                    return Err(Error::InvalidMatrix(format!(
                        "not symmetric at ({},{})",
                        self.currencies[i], self.currencies[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reorders rows and columns so that new index `k` is old `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let currencies: Vec<_> = order.iter().map(|&k| self.currencies[k].clone()).collect();
        LabeledMatrix::from_fn(currencies, |i, j| self.get(order[i], order[j]))
    }

    /// CSV with a `code` label column and 10 significant digits per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("code");
        for c in &self.currencies {
            out.push(',');
            out.push_str(c.as_str());
        }
        out.push('\n');
        for (i, c) in self.currencies.iter().enumerate() {
            out.push_str(c.as_str());
            for v in self.row(i) {
                out.push(',');
                out.push_str(&significant(*v, 10));
            }
            out.push('\n');
        }
        out
    }

    /// JSON object `{"currencies": [...], "values": [row-major]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serialization cannot fail")
    }

    /// Hex SHA-256 of the CSV form; used to reference matrices from reports.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv().as_bytes()))
    }
}
