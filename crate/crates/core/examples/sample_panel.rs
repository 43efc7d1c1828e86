//! Writes the bundled five-currency sample panel to stdout.
//!
//! `cargo run -p fxtree-core --example sample_panel > data/sample_fx.csv`

use fxtree::market_data::{panel_to_csv, CurrencyCode, RatePanel};
use fxtree::synthetic::PlantedBlocks;

fn main() -> fxtree::Result<()> {
    let code = |s: &str| CurrencyCode::new(s).unwrap();
    let mut model = PlantedBlocks::lettered(&[], 0.75, 254, 2007);
    model.blocks = vec![
        vec![code("EUR"), code("CHF"), code("GBP")],
        vec![code("JPY")],
        vec![code("TL")],
    ];
    let unit = model.panel()?;

    // starting levels in USD per unit
    let levels = [1.32, 0.81, 1.96, 0.0084, 0.70];
    let mut rows: Vec<Vec<Option<f64>>> = unit
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(levels)
                .map(|(v, l)| v.map(|v| (v * l * 1e6).round() / 1e6))
                .collect()
        })
        .collect();
    // a few holiday gaps
    rows[17][3] = None;
    rows[120][0] = None;
    rows[121][0] = None;
    rows[200][4] = None;

    let panel = RatePanel::new(
        unit.base().clone(),
        unit.dates().to_vec(),
        unit.currencies().to_vec(),
        rows,
    )?;
    print!("{}", panel_to_csv(&panel));
    Ok(())
}
