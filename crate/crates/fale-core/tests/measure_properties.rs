use fale_core::measure::{equal_opportunity, signed_statistical_parity, statistical_parity};
use fale_core::GroupPredictions;
use proptest::prelude::*;

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..40)
}

proptest! {
    #[test]
    fn parity_symmetry(a in scores(), b in scores()) {
        let (ga, gb) = (GroupPredictions::new(&a), GroupPredictions::new(&b));
        let ab = statistical_parity(&ga, &gb).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - statistical_parity(&gb, &ga).unwrap()).abs() <= 1e-12);
        let s = signed_statistical_parity(&ga, &gb).unwrap();
        prop_assert!((s + signed_statistical_parity(&gb, &ga).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(ab, s.abs());
    }

    #[test]
    fn parity_scales_linearly(a in scores(), b in scores(), c in 0.0f64..10.0) {
        let sa: Vec<f64> = a.iter().map(|x| c * x).collect();
        let sb: Vec<f64> = b.iter().map(|x| c * x).collect();
        let base = signed_statistical_parity(&GroupPredictions::new(&a), &GroupPredictions::new(&b)).unwrap();
        let scaled = signed_statistical_parity(&GroupPredictions::new(&sa), &GroupPredictions::new(&sb)).unwrap();
        prop_assert!((c * base - scaled).abs() <= 1e-12);
        let base = statistical_parity(&GroupPredictions::new(&a), &GroupPredictions::new(&b)).unwrap();
        let scaled = statistical_parity(&GroupPredictions::new(&sa), &GroupPredictions::new(&sb)).unwrap();
        prop_assert!((c * base - scaled).abs() <= 1e-12);
    }

    #[test]
    fn within_group_permutation_is_invisible(
        a in scores(), b in scores(), rot in 0usize..40,
    ) {
        let mut pa = a.clone();
        pa.reverse();
        let mut pb = b.clone();
        let r = rot % pb.len();
        pb.rotate_left(r);
        let x = signed_statistical_parity(&GroupPredictions::new(&a), &GroupPredictions::new(&b)).unwrap();
        let y = signed_statistical_parity(&GroupPredictions::new(&pa), &GroupPredictions::new(&pb)).unwrap();
        prop_assert_eq!(x, y);

        let la: Vec<bool> = (0..a.len()).map(|i| i % 2 == 0).collect();
        let lb: Vec<bool> = vec![true; b.len()];
        let mut pla = la.clone();
        pla.reverse();
        let eo = equal_opportunity(&GroupPredictions::with_labels(&a, &la), &GroupPredictions::with_labels(&b, &lb)).unwrap();
        let peo = equal_opportunity(&GroupPredictions::with_labels(&pa, &pla), &GroupPredictions::with_labels(&pb, &lb)).unwrap();
        prop_assert_eq!(eo, peo);
    }
}
