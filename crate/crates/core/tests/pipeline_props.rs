use proptest::prelude::*;
use soniq_core::pipeline::{
    downsample, parse_csv, segment_average, segment_average_gapped, segment_bounds, ChannelSet,
};

proptest! {
    #[test]
    fn downsample_length(len in 0usize..2000, factor in 1usize..600) {
        let series: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let kept = downsample(&series, factor).unwrap();
        prop_assert_eq!(kept.len(), len.div_ceil(factor));
        for (n, v) in kept.iter().enumerate() {
            prop_assert_eq!(*v, (n * factor) as f64);
        }
    }

    #[test]
    fn segments_tile_the_series(len in 1usize..500, k in 1usize..20) {
        prop_assume!(k <= len);
        let bounds = segment_bounds(len, k);
        prop_assert_eq!(bounds.len(), k);
        prop_assert_eq!(bounds[0].0, 0);
        prop_assert_eq!(bounds[k - 1].1, len);
        for pair in bounds.windows(2) {
            prop_assert_eq!(pair[0].1, pair[1].0);
        }
        let sizes: Vec<usize> = bounds.iter().map(|(a, b)| b - a).collect();
        let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn weighted_segment_means_recover_global_mean(
        series in prop::collection::vec(-100.0f64..100.0, 9..300),
        k in 1usize..10,
    ) {
        let reduced = segment_average(&series, k).unwrap();
        let bounds = segment_bounds(series.len(), k);
        let weighted: f64 = reduced
            .values
            .iter()
            .zip(&bounds)
            .map(|(m, (a, b))| m * (b - a) as f64)
            .sum();
        let total: f64 = series.iter().sum();
        prop_assert!((weighted - total).abs() < 1e-9 * series.len() as f64 * 100.0);
    }

    #[test]
    fn gapped_average_without_gaps_matches(series in prop::collection::vec(-5.0f64..5.0, 9..100)) {
        let plain = segment_average(&series, 9).unwrap();
        let wrapped: Vec<Option<f64>> = series.iter().copied().map(Some).collect();
        let gapped = segment_average_gapped(&wrapped, 9).unwrap();
        for (a, b) in plain.values.iter().zip(&gapped.values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_text_round_trips(
        data in prop::collection::vec(prop::collection::vec(-1e4f64..1e4, 7), 1..5),
        rate in 1.0f64..5000.0,
    ) {
        let names = (0..data.len()).map(|c| format!("ch{c}")).collect();
        let set = ChannelSet::new(names, rate, data).unwrap();
        let back = parse_csv(&set.to_csv(), None).unwrap();
        prop_assert_eq!(back, set);
    }
}
