//! Synthetic rate panels with planted block structure.
//!
//! Every currency in block `b` has daily log-return
//! `vol * (sqrt(rho) * f_b(t) + sqrt(1 - rho) * e_i(t))` with independent
//! standard normal factors, so two members of one block correlate at `rho`
//! and members of different blocks are uncorrelated.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::market_data::{CurrencyCode, RatePanel};

#[derive(Debug, Clone)]
pub struct PlantedBlocks {
    pub base: CurrencyCode,
    pub blocks: Vec<Vec<CurrencyCode>>,
    /// Within-block return correlation, in `[0, 1]`.
    pub within: f64,
    /// Number of dates; the panel has `days - 1` returns.
    pub days: usize,
    /// Daily return standard deviation.
    pub volatility: f64,
    pub start: NaiveDate,
    pub seed: u64,
}

impl PlantedBlocks {
    /// Blocks of the given sizes with two-letter codes `AA, AB, ..., BA, ...`
    /// (block letter then member letter), quoted in `USD`.
    pub fn lettered(sizes: &[usize], within: f64, days: usize, seed: u64) -> Self {
        let blocks = sizes
            .iter()
            .enumerate()
            .map(|(b, &size)| {
                (0..size)
                    .map(|m| {
                        let code: String = [b'A' + b as u8, b'A' + m as u8].iter().map(|&c| c as char).collect();
                        CurrencyCode::new(code).expect("two uppercase letters")
                    })
                    .collect()
            })
            .collect();
        PlantedBlocks {
            base: CurrencyCode::new("USD").unwrap(),
            blocks,
            within,
            days,
            volatility: 0.005,
            start: NaiveDate::from_ymd_opt(2007, 1, 2).unwrap(),
            seed,
        }
    }

    pub fn currencies(&self) -> Vec<CurrencyCode> {
        self.blocks.iter().flatten().cloned().collect()
    }

    /// `(days - 1) × N` log-returns, columns in block order.
    pub fn returns(&self) -> Result<Vec<Vec<f64>>> {
        if !(0.0..=1.0).contains(&self.within) {
            return Err(Error::InvalidConfig(format!(
                "within-block correlation {} outside [0, 1]",
                self.within
            )));
        }
        if self.days < 2 {
            return Err(Error::InvalidConfig("at least 2 days are required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let common = self.within.sqrt();
        let own = (1.0 - self.within).sqrt();
        let mut rows = Vec::with_capacity(self.days - 1);
        for _ in 1..self.days {
            let factors: Vec<f64> = self.blocks.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut row = Vec::new();
            for (block, f) in self.blocks.iter().zip(&factors) {
                for _ in block {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    row.push(self.volatility * (common * f + own * e));
                }
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Rates starting at 1.0 and compounding [`PlantedBlocks::returns`],
    /// on consecutive weekdays from `start`.
    pub fn panel(&self) -> Result<RatePanel> {
        let returns = self.returns()?;
        let n = self.blocks.iter().map(Vec::len).sum();
        let mut level = vec![0.0_f64; n];
        let mut values = vec![vec![1.0; n]];
        for r in &returns {
            for (l, x) in level.iter_mut().zip(r) {
                *l += x;
            }
            values.push(level.iter().map(|l| l.exp()).collect());
        }
        RatePanel::from_complete(
            self.base.clone(),
            weekdays(self.start, self.days),
            self.currencies(),
            values,
        )
    }
}

/// The first `count` weekdays on or after `start`.
pub fn weekdays(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}
