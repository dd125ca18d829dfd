use proptest::prelude::*;

use demto::grid::Grid;
use demto_cli::dice_similarity;
use demto_cli::export::{density_csv, density_image, read_density_csv};

proptest! {
    #[test]
    fn dice_is_symmetric_and_bounded(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..200)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ab = dice_similarity(&a, &b).unwrap();
        prop_assert_eq!(ab, dice_similarity(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(dice_similarity(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn dice_ignores_scaling(a in prop::collection::vec(0.0f64..1.0, 1..100), s in prop::sample::select(vec![0.5, 0.25, 0.125])) {
        // The threshold follows each design's own maximum.
        let scaled: Vec<f64> = a.iter().map(|v| v * s).collect();
        prop_assert_eq!(dice_similarity(&a, &scaled).unwrap(), 1.0);
    }

    #[test]
    fn csv_round_trip(rho in prop::collection::vec(0.0f64..1.0, 12)) {
        let g = Grid::new(&[3.0, 1.0], &[5, 4]).unwrap();
        prop_assert_eq!(read_density_csv(&density_csv(&rho, &g)).unwrap(), rho);
    }

    #[test]
    fn gray_level_is_linear(r in 0.0f64..1.0) {
        let g = Grid::new(&[1.0, 1.0], &[3, 2]).unwrap();
        let img = density_image(&[r, r], &g).unwrap();
        let expected = ((1.0 - r) * 255.0).round() as u8;
        prop_assert!(img.pixels().all(|p| p.0[0] == expected));
    }
}
