//! Log-returns, Pearson correlations and the correlation distance.

use std::ops::Deref;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{CurrencyCode, RatePanel};
use crate::matrix::LabeledMatrix;

/// Return interval in retained rows. Consecutive rows of an aligned panel
/// count as one interval whatever the calendar gap between them.
pub const RETURN_INTERVAL: usize = 1;

/// Human-readable statement of the calendar-gap policy, echoed in reports.
pub const GAP_POLICY: &str = "consecutive retained dates form one interval; calendar gaps are ignored";

/// `(T-1)×N` matrix of daily log-returns, one column per currency.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    currencies: Vec<CurrencyCode>,
    rows: Vec<Vec<f64>>,
}

impl ReturnPanel {
    pub fn new(currencies: Vec<CurrencyCode>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if currencies.is_empty() {
            return Err(Error::EmptyPanel("no currency columns".into()));
        }
        if rows.is_empty() {
            return Err(Error::EmptyPanel("no return rows".into()));
        }
        for row in &rows {
            if row.len() != currencies.len() {
                return Err(Error::MalformedInput(format!(
                    "return row has {} values for {} currencies",
                    row.len(),
                    currencies.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::MalformedInput(format!("non-finite return {v}")));
            }
        }
        Ok(ReturnPanel { currencies, rows })
    }

    pub fn currencies(&self) -> &[CurrencyCode] {
        &self.currencies
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_currencies(&self) -> usize {
        self.currencies.len()
    }

    pub fn interval(&self) -> usize {
        RETURN_INTERVAL
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// True when every value in column `i` is identical.
    pub fn is_constant(&self, i: usize) -> bool {
        let first = self.rows[0][i];
        self.rows.iter().all(|r| r[i] == first)
    }

    /// Same columns, rows picked by index (with repetition allowed).
    pub fn select_rows(&self, picks: &[usize]) -> ReturnPanel {
        ReturnPanel {
            currencies: self.currencies.clone(),
            rows: picks.iter().map(|&t| self.rows[t].clone()).collect(),
        }
    }
}

/// `R_i(t) = ln P_i(t+1) - ln P_i(t)` over consecutive rows.
pub fn log_returns(panel: &RatePanel) -> Result<ReturnPanel> {
    if !panel.is_complete() {
        return Err(Error::NotAligned);
    }
    let logs: Vec<Vec<f64>> = panel
        .rows()
        .iter()
        .map(|row| row.iter().map(|v| v.expect("complete panel").ln()).collect())
        .collect();
    let rows = logs
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
        .collect();
    ReturnPanel::new(panel.currencies().to_vec(), rows)
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Column with its mean removed. The mean gets one refinement pass so
/// that near-constant series centre to machine precision.
fn centered(column: &[f64]) -> Vec<f64> {
    let n = column.len() as f64;
    let mut mean = compensated_sum(column.iter().copied()) / n;
    mean += compensated_sum(column.iter().map(|x| x - mean)) / n;
    column.iter().map(|x| x - mean).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Symmetric matrix of Pearson correlation coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabeledMatrix", into = "LabeledMatrix")]
pub struct CorrelationMatrix(LabeledMatrix);

impl CorrelationMatrix {
    pub fn new(matrix: LabeledMatrix) -> Result<Self> {
        matrix.validate(1.0, -1.0, 1.0)?;
        Ok(CorrelationMatrix(matrix))
    }

    pub fn into_inner(self) -> LabeledMatrix {
        self.0
    }
}

impl Deref for CorrelationMatrix {
    type Target = LabeledMatrix;

    fn deref(&self) -> &LabeledMatrix {
        &self.0
    }
}

impl TryFrom<LabeledMatrix> for CorrelationMatrix {
    type Error = Error;

    fn try_from(m: LabeledMatrix) -> Result<Self> {
        CorrelationMatrix::new(m)
    }
}

impl From<CorrelationMatrix> for LabeledMatrix {
    fn from(m: CorrelationMatrix) -> Self {
        m.0
    }
}

/// Pearson correlation of every column pair.
///
/// Moments use the same sample count in numerator and denominator, so the
/// normalization convention cancels. Columns are centred with a refined
/// mean before the cross products are accumulated. The result is clamped
/// to `[-1, 1]`, symmetric by construction and has an exact unit diagonal.
/// Each entry has a fixed summation order, so the output does not depend
/// on the number of worker threads.
pub fn pearson_correlation(rp: &ReturnPanel) -> Result<CorrelationMatrix> {
    if rp.n_rows() < 2 {
        return Err(Error::EmptyPanel(format!(
            "{} return row(s), at least 2 required",
            rp.n_rows()
        )));
    }
    let n = rp.n_currencies();
    let columns: Vec<Vec<f64>> = (0..n).map(|i| centered(&rp.column(i))).collect();
    let norms: Vec<f64> = columns.iter().map(|c| dot(c, c)).collect();
    if let Some(i) = norms.iter().position(|&s| s == 0.0) {
        return Err(Error::ConstantSeries(rp.currencies[i].clone()));
    }

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let c = dot(&columns[i], &columns[j]) / (norms[i] * norms[j]).sqrt();
                    c.clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();

    let matrix = LabeledMatrix::from_fn(rp.currencies.clone(), |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => upper[i][j - i - 1],
        std::cmp::Ordering::Greater => upper[j][i - j - 1],
    });
    Ok(CorrelationMatrix(matrix))
}

/// Symmetric matrix of correlation distances in `[0, 2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabeledMatrix", into = "LabeledMatrix")]
pub struct DistanceMatrix(LabeledMatrix);

impl DistanceMatrix {
    /// Wraps an arbitrary matrix after checking symmetry, zero diagonal and
    /// the `[0, 2]` range. The triangle inequality is not enforced.
    pub fn new(matrix: LabeledMatrix) -> Result<Self> {
        matrix.validate(0.0, 0.0, 2.0)?;
        Ok(DistanceMatrix(matrix))
    }

    pub fn from_rows(currencies: Vec<CurrencyCode>, rows: &[Vec<f64>]) -> Result<Self> {
        let values = rows.iter().flatten().copied().collect();
        DistanceMatrix::new(LabeledMatrix::new(currencies, values)?)
    }

    pub fn into_inner(self) -> LabeledMatrix {
        self.0
    }

    /// Same distances with currencies reordered; see [`LabeledMatrix::permuted`].
    pub fn permuted(&self, order: &[usize]) -> DistanceMatrix {
        DistanceMatrix(self.0.permuted(order))
    }
}

impl Deref for DistanceMatrix {
    type Target = LabeledMatrix;

    fn deref(&self) -> &LabeledMatrix {
        &self.0
    }
}

impl TryFrom<LabeledMatrix> for DistanceMatrix {
    type Error = Error;

    fn try_from(m: LabeledMatrix) -> Result<Self> {
        DistanceMatrix::new(m)
    }
}

impl From<DistanceMatrix> for LabeledMatrix {
    fn from(m: DistanceMatrix) -> Self {
        m.0
    }
}

/// `d = sqrt(2 (1 - C))`, with the radicand clamped at zero.
pub fn distance_from_correlation(c: f64) -> f64 {
    (2.0 * (1.0 - c)).max(0.0).sqrt()
}

/// Maps every correlation to its distance; symmetric with zero diagonal.
pub fn correlation_to_distance(cm: &CorrelationMatrix) -> DistanceMatrix {
    DistanceMatrix(LabeledMatrix::from_fn(cm.currencies().to_vec(), |i, j| {
        if i == j {
            0.0
        } else {
            distance_from_correlation(cm.get(i.min(j), i.max(j))).min(2.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn codes(list: &[&str]) -> Vec<CurrencyCode> {
        list.iter().map(|c| CurrencyCode::new(*c).unwrap()).collect()
    }

    fn panel_from_columns(columns: &[Vec<f64>]) -> RatePanel {
        let t = columns[0].len();
        let dates = (0..t)
            .map(|k| NaiveDate::from_ymd_opt(2007, 1, 1).unwrap() + chrono::Days::new(k as u64))
            .collect();
        let names = ["AA", "BB", "CC", "DD"];
        let values = (0..t).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
        RatePanel::from_complete(
            CurrencyCode::new("USD").unwrap(),
            dates,
            codes(&names[..columns.len()]),
            values,
        )
        .unwrap()
    }

    #[test]
    fn constant_series_has_zero_returns() {
        let rp = log_returns(&panel_from_columns(&[vec![3.5; 5]])).unwrap();
        assert_eq!(rp.n_rows(), 4);
        assert!(rp.rows().iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn exponential_series_has_unit_returns() {
        let e = std::f64::consts::E;
        let rp = log_returns(&panel_from_columns(&[vec![1.0, e, e * e]])).unwrap();
        assert!((rp.rows()[0][0] - 1.0).abs() < 1e-15);
        assert!((rp.rows()[1][0] - 1.0).abs() < 1e-15);
        let rp = log_returns(&panel_from_columns(&[vec![2.0, 1.0]])).unwrap();
        assert!((rp.rows()[0][0] + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn log_returns_requires_alignment() {
        let p = RatePanel::new(
            CurrencyCode::new("USD").unwrap(),
            vec![
                NaiveDate::from_ymd_opt(2007, 1, 2).unwrap(),
                NaiveDate::from_ymd_opt(2007, 1, 3).unwrap(),
            ],
            codes(&["EUR"]),
            vec![vec![Some(1.0)], vec![None]],
        )
        .unwrap();
        assert_eq!(log_returns(&p), Err(Error::NotAligned));
    }

    fn returns(columns: &[Vec<f64>]) -> ReturnPanel {
        let t = columns[0].len();
        let rows = (0..t).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
        ReturnPanel::new(codes(&["AA", "BB", "CC", "DD"][..columns.len()]), rows).unwrap()
    }

    #[test]
    fn perfect_and_anti_correlation() {
        let x = vec![0.1, -0.3, 0.25, 0.07, -0.02];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let cm = pearson_correlation(&returns(&[x.clone(), x, neg])).unwrap();
        assert_eq!(cm.get(0, 1), 1.0);
        assert_eq!(cm.get(0, 2), -1.0);
        assert_eq!(cm.get(1, 1), 1.0);
    }

    #[test]
    fn hand_computed_correlation() {
        // Two-pass by hand: means 2.5 and 2.5; centred (-1.5,-.5,.5,1.5) and
        // (-1.5,.5,-.5,1.5); cross 4.0, each norm 5.0, so C = 0.8.
        let cm = pearson_correlation(&returns(&[vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 3.0, 2.0, 4.0]])).unwrap();
        assert!((cm.get(0, 1) - 0.8).abs() < 1e-15);
        assert_eq!(cm.get(0, 1), cm.get(1, 0));
    }

    #[test]
    fn constant_column_is_rejected() {
        let err = pearson_correlation(&returns(&[vec![1.0, 2.0, 3.0], vec![0.5; 3]])).unwrap_err();
        assert_eq!(err, Error::ConstantSeries(CurrencyCode::new("BB").unwrap()));
    }

    #[test]
    fn distance_endpoints() {
        assert_eq!(distance_from_correlation(1.0), 0.0);
        assert_eq!(distance_from_correlation(-1.0), 2.0);
        assert_eq!(distance_from_correlation(0.0), std::f64::consts::SQRT_2);
        assert_eq!(distance_from_correlation(1.0 + 1e-16), 0.0);
    }

    #[test]
    fn distance_matrix_validation() {
        let cs = codes(&["AA", "BB"]);
        assert!(DistanceMatrix::from_rows(cs.clone(), &[vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
        assert!(DistanceMatrix::from_rows(cs.clone(), &[vec![0.0, 1.0], vec![1.5, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(cs.clone(), &[vec![0.0, 2.5], vec![2.5, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(cs, &[vec![0.1, 1.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn matrix_csv_and_json() {
        let cm = pearson_correlation(&returns(&[vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 3.0, 2.0, 4.0]])).unwrap();
        let csv = cm.to_csv();
        assert_eq!(csv.lines().next(), Some("code,AA,BB"));
        assert_eq!(csv.lines().nth(1), Some("AA,1.000000000,0.8000000000"));
        let back: CorrelationMatrix = serde_json::from_str(&cm.to_json()).unwrap();
        assert_eq!(back, cm);
        assert!(serde_json::from_str::<DistanceMatrix>(&cm.to_json()).is_err());
    }
}
