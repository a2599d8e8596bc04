use std::f64::consts::PI;

use proptest::prelude::*;

use ballconv::conv::{conv_s2, DirectionGrid, Kernel};
use ballconv::moments::{complex_to_real, real_to_complex, MomentLayout, MomentVector};
use ballconv::net::cosine_similarity;
use ballconv::special::{sph_harmonic, HarmonicIndex, HarmonicTable};
use ballconv::symmetry::{normalized_symmetry, Axis};

fn moments(order: usize) -> impl Strategy<Value = MomentVector> {
    let layout = MomentLayout::new(order);
    let (len, dim) = (layout.len(), layout.dim());
    prop::collection::vec(-2.0..2.0f64, dim).prop_map(move |mut c| {
        for i in layout.zonal_positions() {
            c[len + i] = 0.0;
        }
        MomentVector::from_coeffs(order, c).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn negative_orders_are_signed_conjugates(l in 0usize..10, m in 0i64..10, theta in 0.0..2.0 * PI, phi in 0.0..PI) {
        prop_assume!(m as usize <= l);
        let pos = sph_harmonic(HarmonicIndex::new(l, m).unwrap(), theta, phi);
        let neg = sph_harmonic(HarmonicIndex::new(l, -m).unwrap(), theta, phi);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((neg - pos.conj() * sign).norm() < 1e-14);
    }

    #[test]
    fn harmonic_power_per_degree_is_constant(l in 0usize..12, theta in 0.0..2.0 * PI, phi in 0.0..PI) {
        let t = HarmonicTable::new(l, theta, phi);
        let li = l as i64;
        let total: f64 = (-li..=li).map(|m| t.get(l, m).norm_sqr()).sum();
        prop_assert!((total - (2 * l + 1) as f64 / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn normalized_symmetry_lies_in_unit_interval(c in moments(4), alpha in 0.0..2.0 * PI, beta in 0.0..PI) {
        prop_assume!(c.norm() > 1e-6);
        let s = normalized_symmetry(&real_to_complex(&c), Axis::new(alpha, beta).unwrap()).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&s), "{}", s);
    }

    #[test]
    fn real_complex_bridge_round_trips(c in moments(5)) {
        let back = complex_to_real(&real_to_complex(&c));
        for (a, b) in back.coeffs().iter().zip(c.coeffs()) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn convolution_is_linear_in_the_input(f1 in moments(3), f2 in moments(3), a in -3.0..3.0f64, zonal in prop::collection::vec(-1.0..1.0f64, 6)) {
        let g = Kernel::from_zonal(3, &zonal).unwrap();
        let grid = DirectionGrid::equiangular(8, 4).unwrap();
        let mix: Vec<f64> = f1.coeffs().iter().zip(f2.coeffs()).map(|(x, y)| a * x + y).collect();
        let fm = MomentVector::from_coeffs(3, mix).unwrap();
        let r1 = conv_s2(&real_to_complex(&f1), &g, &grid).unwrap().values;
        let r2 = conv_s2(&real_to_complex(&f2), &g, &grid).unwrap().values;
        let rm = conv_s2(&real_to_complex(&fm), &g, &grid).unwrap().values;
        for i in 0..rm.len() {
            prop_assert!((rm[i] - (a * r1[i] + r2[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn cosine_similarity_ignores_positive_scaling(v in prop::collection::vec(-1.0..1.0f64, 8), w in prop::collection::vec(-1.0..1.0f64, 8), s in 0.01..100.0f64) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3) && w.iter().any(|x| x.abs() > 1e-3));
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        let a = cosine_similarity(&v, &w).unwrap();
        let b = cosine_similarity(&scaled, &w).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a.abs() <= 1.0 + 1e-12);
    }
}
