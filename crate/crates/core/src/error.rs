use chrono::NaiveDate;
use thiserror::Error;

use crate::market_data::CurrencyCode;

/// Every failure the analysis pipeline can report.
///
/// Display strings lead with the variant name so that command-line
/// diagnostics can be grepped for the failing condition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("InvalidCurrencyCode({0:?}): expected 2-5 uppercase ASCII letters")]
    InvalidCurrencyCode(String),
    #[error("DuplicateCurrency({0})")]
    DuplicateCurrency(CurrencyCode),
    #[error("DuplicateDate({0})")]
    DuplicateDate(NaiveDate),
    #[error("NonPositiveRate: {currency} on {date} has rate {value}")]
    NonPositiveRate {
        date: NaiveDate,
        currency: CurrencyCode,
        value: f64,
    },
    #[error("EmptyPanel: {0}")]
    EmptyPanel(String),
    #[error("MalformedInput: {0}")]
    MalformedInput(String),
    #[error("BaseInPanel({0}): the base currency cannot also be a panel column")]
    BaseInPanel(CurrencyCode),
    #[error("InsufficientOverlap: only {0} complete date(s) remain, at least 2 are required")]
    InsufficientOverlap(usize),
    #[error("UnknownNumeraire({0}): not the panel base and not a panel currency")]
    UnknownNumeraire(CurrencyCode),
    #[error("InvalidWindow: start {0} is after end {1}")]
    InvalidWindow(NaiveDate, NaiveDate),
    #[error("NotAligned: the panel still contains missing cells")]
    NotAligned,
    #[error("ConstantSeries({0}): the return series has zero variance")]
    ConstantSeries(CurrencyCode),
    #[error("InvalidMatrix: {0}")]
    InvalidMatrix(String),
    #[error("TooFewNodes({0}): at least 2 currencies are required")]
    TooFewNodes(usize),
    #[error("DegenerateReplicas: redraw budget of {budget} exhausted")]
    DegenerateReplicas { budget: usize },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("EmptyTable: no edge reliabilities to average")]
    EmptyTable,
    #[error("ReliabilityMismatch: {0}")]
    ReliabilityMismatch(String),
    #[error("InvalidReport: {0}")]
    InvalidReport(String),
}

pub type Result<T> = std::result::Result<T, Error>;
