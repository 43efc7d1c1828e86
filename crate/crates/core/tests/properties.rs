mod common;

use chrono::NaiveDate;
use proptest::prelude::*;

use common::codes;
use fxtree::market_data::{align, rebase, CurrencyCode, RatePanel};
use fxtree::metrics::{correlation_to_distance, log_returns, pearson_correlation, ReturnPanel};
use fxtree::synthetic::weekdays;
use fxtree::taxonomy::{average_linkage, kruskal_mst, single_linkage, subdominant_ultrametric};

fn usd() -> CurrencyCode {
    CurrencyCode::new("USD").unwrap()
}

/// Complete panels of 2..=6 currencies over 3..=40 dates with rates spanning
/// several orders of magnitude.
fn complete_panel() -> impl Strategy<Value = RatePanel> {
    (2usize..=6, 3usize..=40).prop_flat_map(|(n, t)| {
        prop::collection::vec(prop::collection::vec(-6.0f64..6.0, n), t).prop_map(move |logs| {
            let values = logs
                .into_iter()
                .map(|row| row.into_iter().map(f64::exp).collect())
                .collect();
            let start = NaiveDate::from_ymd_opt(2007, 1, 1).unwrap();
            RatePanel::from_complete(usd(), weekdays(start, t), codes(n), values).unwrap()
        })
    })
}

/// Panels with roughly a fifth of the cells missing.
fn gappy_panel() -> impl Strategy<Value = RatePanel> {
    (2usize..=5, 3usize..=30).prop_flat_map(|(n, t)| {
        prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0.1f64..10.0), n), t).prop_map(
            move |values| {
                let start = NaiveDate::from_ymd_opt(2007, 1, 1).unwrap();
                RatePanel::new(usd(), weekdays(start, t), codes(n), values).unwrap()
            },
        )
    })
}

/// Returns with enough rows that no column is constant.
fn return_panel(max_n: usize) -> impl Strategy<Value = ReturnPanel> {
    (2usize..=max_n, 5usize..=60).prop_flat_map(|(n, t)| {
        prop::collection::vec(prop::collection::vec(-0.05f64..0.05, n), t)
            .prop_filter_map("constant column", move |rows| ReturnPanel::new(codes(n), rows).ok())
            .prop_filter("constant column", move |rp| (0..n).all(|i| !rp.is_constant(i)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rebase_round_trip(panel in complete_panel(), pick in 0usize..6) {
        let x = panel.currencies()[pick % panel.n_currencies()].clone();
        let there = rebase(&panel, &x).unwrap();
        prop_assert_eq!(there.base(), &x);
        let back = rebase(&there, &usd()).unwrap();
        prop_assert_eq!(back.base(), &usd());
        for (i, code) in panel.currencies().iter().enumerate() {
            let j = back.index_of(code).unwrap();
            for t in 0..panel.n_dates() {
                let (a, b) = (panel.value(t, i).unwrap(), back.value(t, j).unwrap());
                prop_assert!((a - b).abs() <= 1e-12 * a.max(b), "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn align_is_idempotent_and_complete(panel in gappy_panel()) {
        if let Ok(once) = align(&panel) {
            prop_assert!(once.is_complete());
            prop_assert_eq!(&align(&once).unwrap(), &once);
            prop_assert!(once.dates().iter().all(|d| panel.dates().contains(d)));
        }
    }

    #[test]
    fn numeraire_change_subtracts_returns(panel in complete_panel(), pick in 0usize..6) {
        let x_idx = pick % panel.n_currencies();
        let x = panel.currencies()[x_idx].clone();
        let r_usd = log_returns(&panel).unwrap();
        let rebased = rebase(&panel, &x).unwrap();
        let r_x = log_returns(&rebased).unwrap();
        let usd_col = r_x.currencies().iter().position(|c| *c == usd()).unwrap();
        for t in 0..r_usd.n_rows() {
            let rx = r_usd.rows()[t][x_idx];
            // Quote inversion: the dollar seen from X moves opposite to X.
            prop_assert!((r_x.rows()[t][usd_col] + rx).abs() <= 1e-12);
            for (i, code) in panel.currencies().iter().enumerate() {
                if i == x_idx {
                    continue;
                }
                let j = r_x.currencies().iter().position(|c| c == code).unwrap();
                let want = r_usd.rows()[t][i] - rx;
                prop_assert!((r_x.rows()[t][j] - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn distance_is_a_metric(rp in return_panel(8)) {
        let dm = correlation_to_distance(&pearson_correlation(&rp).unwrap());
        let n = dm.len();
        for i in 0..n {
            prop_assert_eq!(dm.get(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(dm.get(i, j), dm.get(j, i));
                prop_assert!((0.0..=2.0).contains(&dm.get(i, j)));
                for k in 0..n {
                    prop_assert!(dm.get(i, j) <= dm.get(i, k) + dm.get(k, j) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn relabelling_columns_relabels_everything(rp in return_panel(8), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let n = rp.n_currencies();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled = ReturnPanel::new(
            order.iter().map(|&i| rp.currencies()[i].clone()).collect(),
            rp.rows().iter().map(|r| order.iter().map(|&i| r[i]).collect()).collect(),
        ).unwrap();
        let dm = correlation_to_distance(&pearson_correlation(&rp).unwrap());
        let dm2 = correlation_to_distance(&pearson_correlation(&shuffled).unwrap());
        prop_assert_eq!(&dm.permuted(&order), &dm2);
        let t1 = kruskal_mst(&dm).unwrap();
        let t2 = kruskal_mst(&dm2).unwrap();
        prop_assert_eq!(t1.edge_set(), t2.edge_set());
        prop_assert_eq!(t1.total_weight(), t2.total_weight());
        prop_assert_eq!(single_linkage(&dm).unwrap().leaf_sets(), single_linkage(&dm2).unwrap().leaf_sets());
        prop_assert_eq!(average_linkage(&dm).unwrap().leaf_sets(), average_linkage(&dm2).unwrap().leaf_sets());
    }

    #[test]
    fn hierarchies_are_monotone_and_dual_to_the_tree(rp in return_panel(12)) {
        let dm = correlation_to_distance(&pearson_correlation(&rp).unwrap());
        let tree = kruskal_mst(&dm).unwrap();
        let single = single_linkage(&dm).unwrap();
        let average = average_linkage(&dm).unwrap();
        for den in [&single, &average] {
            prop_assert!(den.heights().windows(2).all(|w| w[0] <= w[1]));
        }
        let mut weights: Vec<f64> = tree.edges().iter().map(|e| e.weight).collect();
        weights.sort_by(f64::total_cmp);
        prop_assert_eq!(single.heights(), weights);
        let u = subdominant_ultrametric(&tree);
        prop_assert_eq!(&*single.cophenetic(), &*u);
        prop_assert_eq!(u.strong_triangle_violation(), None);
    }
}
