//! Daily exchange-rate panels: ingestion, date alignment and re-basing.
//!
//! A [`RatePanel`] stores rates as *units of base per one unit of the listed
//! currency*. Under that convention changing the numeraire is one division
//! per cell, and the numeraire's own column (identically 1) is dropped from
//! the analyzed set.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Date format accepted in panel files.
pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Ticker-style currency code: 2 to 5 uppercase ASCII letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CurrencyCode(String);

impl CurrencyCode {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let ok = (2..=5).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_uppercase());
        if ok {
            Ok(CurrencyCode(code))
        } else {
            Err(Error::InvalidCurrencyCode(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CurrencyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for CurrencyCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CurrencyCode::new(s)
    }
}

impl TryFrom<String> for CurrencyCode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        CurrencyCode::new(s)
    }
}

impl From<CurrencyCode> for String {
    fn from(c: CurrencyCode) -> String {
        c.0
    }
}

impl AsRef<str> for CurrencyCode {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// The 34 currencies of the reference study, as `(code, name)`.
pub const REFERENCE_CURRENCIES: [(&str, &str); 34] = [
    ("ARS", "Argentinian Peso"),
    ("AUD", "Australian Dollar"),
    ("BRL", "Brazilian Real"),
    ("GBP", "British Pound"),
    ("CAD", "Canadian Dollar"),
    ("CLP", "Chilean Peso"),
    ("CNY", "Chinese Renminbi"),
    ("COP", "Colombian Peso"),
    ("CZK", "Czech Koruna"),
    ("EGP", "Egyptian Pound"),
    ("EUR", "Euro"),
    ("HUF", "Hungarian Forint"),
    ("INR", "Indian Rupee"),
    ("IDR", "Indonesian Rupiah"),
    ("JPY", "Japanese Yen"),
    ("KWD", "Kuwaiti Dinar"),
    ("MXN", "Mexican Peso"),
    ("NZD", "New Zealand Dollar"),
    ("NOK", "Norwegian Krone"),
    ("PEN", "Peruvian New Sol"),
    ("PHP", "Philippine Peso"),
    ("PLN", "Polish Zloty"),
    ("RUB", "Russian Ruble"),
    ("SAR", "Saudi Arabian Riyal"),
    ("SGD", "Singapore Dollar"),
    ("SKK", "Slovak Koruna"),
    ("ZAR", "South African Rand"),
    ("KRW", "South Korean Won"),
    ("SEK", "Swedish Krona"),
    ("CHF", "Swiss Franc"),
    ("TWD", "Taiwan Dollar"),
    ("THB", "Thai Baht"),
    ("TL", "Turkish Lira"),
    ("USD", "US Dollar"),
];

/// Looks up the display name of a code from [`REFERENCE_CURRENCIES`].
pub fn currency_name(code: &CurrencyCode) -> Option<&'static str> {
    REFERENCE_CURRENCIES
        .iter()
        .find(|(c, _)| *c == code.as_str())
        .map(|(_, name)| *name)
}

/// A date-indexed panel of daily rates quoted in `base`.
///
/// `values[t][i]` is the number of base units per one unit of
/// `currencies[i]` on `dates[t]`, or `None` when the source had no quote.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePanel {
    base: CurrencyCode,
    dates: Vec<NaiveDate>,
    currencies: Vec<CurrencyCode>,
    values: Vec<Vec<Option<f64>>>,
}

impl RatePanel {
    /// Builds a panel, checking every structural invariant.
    pub fn new(
        base: CurrencyCode,
        dates: Vec<NaiveDate>,
        currencies: Vec<CurrencyCode>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        check_currencies(&base, &currencies)?;
        if dates.len() < 2 {
            return Err(Error::EmptyPanel(format!(
                "{} row(s), at least 2 required",
                dates.len()
            )));
        }
        if values.len() != dates.len() {
            return Err(Error::MalformedInput(format!(
                "{} value rows for {} dates",
                values.len(),
                dates.len()
            )));
        }
        for w in dates.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateDate(w[0]));
            }
            if w[0] > w[1] {
                return Err(Error::MalformedInput(format!("dates out of order at {}", w[1])));
            }
        }
        for (date, row) in dates.iter().zip(&values) {
            if row.len() != currencies.len() {
                return Err(Error::MalformedInput(format!(
                    "row {date} has {} values for {} currencies",
                    row.len(),
                    currencies.len()
                )));
            }
            for (code, v) in currencies.iter().zip(row) {
                if let Some(v) = *v {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::NonPositiveRate {
                            date: *date,
                            currency: code.clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(RatePanel {
            base,
            dates,
            currencies,
            values,
        })
    }

    /// Builds a complete panel (no missing cells).
    pub fn from_complete(
        base: CurrencyCode,
        dates: Vec<NaiveDate>,
        currencies: Vec<CurrencyCode>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let values = values
            .into_iter()
            .map(|row| row.into_iter().map(Some).collect())
            .collect();
        RatePanel::new(base, dates, currencies, values)
    }

    pub fn base(&self) -> &CurrencyCode {
        &self.base
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn currencies(&self) -> &[CurrencyCode] {
        &self.currencies
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_currencies(&self) -> usize {
        self.currencies.len()
    }

    pub fn value(&self, t: usize, i: usize) -> Option<f64> {
        self.values[t][i]
    }

    pub fn index_of(&self, code: &CurrencyCode) -> Option<usize> {
        self.currencies.iter().position(|c| c == code)
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|row| row.iter().all(Option::is_some))
    }

    /// Every `(date, currency)` without a quote, in row-major order.
    pub fn missing_cells(&self) -> Vec<(NaiveDate, CurrencyCode)> {
        let mut out = Vec::new();
        for (date, row) in self.dates.iter().zip(&self.values) {
            for (code, v) in self.currencies.iter().zip(row) {
                if v.is_none() {
                    out.push((*date, code.clone()));
                }
            }
        }
        out
    }

    /// First and last date of the panel.
    pub fn window(&self) -> (NaiveDate, NaiveDate) {
        (self.dates[0], self.dates[self.dates.len() - 1])
    }

    fn keep_rows(&self, keep: impl Fn(usize) -> bool) -> (Vec<NaiveDate>, Vec<Vec<Option<f64>>>) {
        (0..self.dates.len())
            .filter(|&t| keep(t))
            .map(|t| (self.dates[t], self.values[t].clone()))
            .unzip()
    }
}

fn check_currencies(base: &CurrencyCode, currencies: &[CurrencyCode]) -> Result<()> {
    let mut seen = HashSet::new();
    for code in currencies {
        if code == base {
            return Err(Error::BaseInPanel(code.clone()));
        }
        if !seen.insert(code) {
            return Err(Error::DuplicateCurrency(code.clone()));
        }
    }
    if currencies.is_empty() {
        return Err(Error::EmptyPanel("no currency columns".into()));
    }
    Ok(())
}

/// Parses a CSV panel with header `date,<CODE>,<CODE>,...`.
///
/// Rows are sorted by date. Empty, non-numeric or non-finite cells are
/// recorded as missing; short rows are padded with missing cells.
pub fn parse_panel(text: &str, base: &CurrencyCode) -> Result<RatePanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| Error::MalformedInput(e.to_string()))?
        .clone();
    if header.len() < 2 {
        return Err(Error::EmptyPanel("header has no currency columns".into()));
    }
    let currencies = header
        .iter()
        .skip(1)
        .map(CurrencyCode::new)
        .collect::<Result<Vec<_>>>()?;
    check_currencies(base, &currencies)?;

    let mut rows: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::MalformedInput(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() > header.len() {
            return Err(Error::MalformedInput(format!(
                "row starting {:?} has {} fields, header has {}",
                &record[0],
                record.len(),
                header.len()
            )));
        }
        let date = NaiveDate::parse_from_str(&record[0], DATE_FORMAT)
            .map_err(|e| Error::MalformedInput(format!("bad date {:?}: {e}", &record[0])))?;
        let mut row = Vec::with_capacity(currencies.len());
        for (i, code) in currencies.iter().enumerate() {
            let cell = record.get(i + 1).unwrap_or("");
            let value = match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    if v <= 0.0 {
                        return Err(Error::NonPositiveRate {
                            date,
                            currency: code.clone(),
                            value: v,
                        });
                    }
                    Some(v)
                }
                _ => None,
            };
            row.push(value);
        }
        if rows.insert(date, row).is_some() {
            return Err(Error::DuplicateDate(date));
        }
    }
    if rows.len() < 2 {
        return Err(Error::EmptyPanel(format!(
            "{} parseable row(s), at least 2 required",
            rows.len()
        )));
    }
    let (dates, values) = rows.into_iter().unzip();
    RatePanel::new(base.clone(), dates, currencies, values)
}

/// Reads and parses a panel file.
pub fn read_panel(path: impl AsRef<Path>, base: &CurrencyCode) -> Result<RatePanel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    parse_panel(&text, base)
}

/// Writes the panel in the same CSV layout [`parse_panel`] reads; missing
/// cells are left empty and rates use the shortest round-trip decimal form.
pub fn panel_to_csv(panel: &RatePanel) -> String {
    let mut out = String::from("date");
    for c in &panel.currencies {
        out.push(',');
        out.push_str(c.as_str());
    }
    out.push('\n');
    for (date, row) in panel.dates.iter().zip(&panel.values) {
        out.push_str(&date.format(DATE_FORMAT).to_string());
        for v in row {
            out.push(',');
            if let Some(v) = v {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Keeps only dates on which every currency is quoted.
pub fn align(panel: &RatePanel) -> Result<RatePanel> {
    let (dates, values) = panel.keep_rows(|t| panel.values[t].iter().all(Option::is_some));
    if dates.len() < 2 {
        return Err(Error::InsufficientOverlap(dates.len()));
    }
    Ok(RatePanel {
        base: panel.base.clone(),
        dates,
        currencies: panel.currencies.clone(),
        values,
    })
}

/// Carries the last observed quote forward into missing cells.
///
/// Cells before a currency's first quote stay missing. This is an opt-in
/// alternative to dropping incomplete dates; it introduces zero returns.
pub fn forward_fill(panel: &RatePanel) -> RatePanel {
    let mut last: Vec<Option<f64>> = vec![None; panel.currencies.len()];
    let values = panel
        .values
        .iter()
        .map(|row| {
            row.iter()
                .zip(last.iter_mut())
                .map(|(v, prev)| {
                    if v.is_some() {
                        *prev = *v;
                    }
                    *prev
                })
                .collect()
        })
        .collect();
    RatePanel {
        values,
        ..panel.clone()
    }
}

/// Restricts the panel to `from..=to`; either end may be open.
pub fn restrict_window(panel: &RatePanel, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Result<RatePanel> {
    if let (Some(a), Some(b)) = (from, to) {
        if a > b {
            return Err(Error::InvalidWindow(a, b));
        }
    }
    let (dates, values) = panel.keep_rows(|t| {
        let d = panel.dates[t];
        from.is_none_or(|a| d >= a) && to.is_none_or(|b| d <= b)
    });
    if dates.len() < 2 {
        return Err(Error::InsufficientOverlap(dates.len()));
    }
    Ok(RatePanel {
        base: panel.base.clone(),
        dates,
        currencies: panel.currencies.clone(),
        values,
    })
}

/// Re-expresses the panel in units of `numeraire`.
///
/// The numeraire column is removed and the old base is appended as the
/// last column with value `1 / value[numeraire]`. A missing numeraire
/// quote makes the whole row missing.
pub fn rebase(panel: &RatePanel, numeraire: &CurrencyCode) -> Result<RatePanel> {
    if numeraire == &panel.base {
        return Ok(panel.clone());
    }
    let m = panel
        .index_of(numeraire)
        .ok_or_else(|| Error::UnknownNumeraire(numeraire.clone()))?;

    let mut currencies: Vec<CurrencyCode> = panel
        .currencies
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != m)
        .map(|(_, c)| c.clone())
        .collect();
    currencies.push(panel.base.clone());

    let values = panel
        .values
        .iter()
        .map(|row| {
            let denom = row[m];
            let mut out: Vec<Option<f64>> = row
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != m)
                .map(|(_, v)| Some((*v)? / denom?))
                .collect();
            out.push(denom.map(|d| 1.0 / d));
            out
        })
        .collect();

    Ok(RatePanel {
        base: numeraire.clone(),
        dates: panel.dates.clone(),
        currencies,
        values,
    })
}
