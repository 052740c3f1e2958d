//! Property-based checks of the exact geometry, the projection chains and
//! the reflected-walk builders.

use proptest::prelude::*;
use quadwalk::classify::{self, reflection_angles, transform_matrix, wedge_angle};
use quadwalk::model::{IncrementLaw, Side, WalkSpec};
use quadwalk::projection::projection_chain;
use quadwalk::rational::{self, Prob};
use quadwalk::walks::{self, Reflection};
use quadwalk::{ClassifyOptions, Mat2, Vec2};
use std::f64::consts::FRAC_PI_2;

fn pd_sigma() -> impl Strategy<Value = Mat2> {
    (0.05f64..20.0, 0.05f64..20.0, -0.98f64..0.98).prop_map(|(a, b, r)| Mat2::new(a * a, r * a * b, r * a * b, b * b))
}

/// Angles read off the normalized picture directly: `φ₁` from the inward
/// normal of the image of the horizontal axis to `T μ̄₁`, `φ₂` from `T μ̄₂`
/// to the inward normal of the image of the vertical axis.
fn geometric_angles(sigma: &Mat2, mu1: Vec2, mu2: Vec2) -> (f64, f64) {
    let t = transform_matrix(sigma).unwrap();
    let n1 = t.apply(Vec2::E1).rotate(FRAC_PI_2);
    let n2 = t.apply(Vec2::E2).rotate(-FRAC_PI_2);
    (n1.angle_to(t.apply(mu1)), t.apply(mu2).angle_to(n2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn transform_whitens(sigma in pd_sigma()) {
        let t = transform_matrix(&sigma).unwrap();
        let id = t * sigma * t.transpose();
        prop_assert!(id.max_abs_diff(&Mat2::IDENTITY) < 1e-12, "{id:?}");
        prop_assert!(t.a21 == 0.0 && t.a11 > 0.0 && t.a22 > 0.0);
    }

    #[test]
    fn wedge_angle_is_image_angle(sigma in pd_sigma()) {
        let t = transform_matrix(&sigma).unwrap();
        let phi0 = t.apply(Vec2::E1).angle_to(t.apply(Vec2::E2));
        prop_assert!((phi0 - wedge_angle(&sigma).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn formula_angles_match_geometry(
        sigma in pd_sigma(),
        a in -10.0f64..10.0, b in 0.01f64..10.0,
        c in 0.01f64..10.0, d in -10.0f64..10.0,
    ) {
        let (mu1, mu2) = (Vec2::new(a, b), Vec2::new(c, d));
        let ang = reflection_angles(&sigma, mu1, mu2).unwrap();
        let (g1, g2) = geometric_angles(&sigma, mu1, mu2);
        prop_assert!((ang.phi1 - g1).abs() < 1e-9, "phi1 {} vs {}", ang.phi1, g1);
        prop_assert!((ang.phi2 - g2).abs() < 1e-9, "phi2 {} vs {}", ang.phi2, g2);
    }

    #[test]
    fn chi_is_scale_invariant(
        sigma in pd_sigma(), k in 0.01f64..100.0, m1 in 0.01f64..100.0, m2 in 0.01f64..100.0,
        a in -5.0f64..5.0, b in 0.1f64..5.0, c in 0.1f64..5.0, d in -5.0f64..5.0,
    ) {
        let (mu1, mu2) = (Vec2::new(a, b), Vec2::new(c, d));
        let base = reflection_angles(&sigma, mu1, mu2).unwrap();
        let scaled = reflection_angles(&sigma.scale(k), mu1.scale(m1), mu2.scale(m2)).unwrap();
        let phi0 = wedge_angle(&sigma).unwrap();
        let chi = classify::chi(phi0, base.phi1, base.phi2);
        let chi_s = classify::chi(wedge_angle(&sigma.scale(k)).unwrap(), scaled.phi1, scaled.phi2);
        prop_assert!((chi - chi_s).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_reflection_closed_form(sigma in pd_sigma(), b in 0.1f64..5.0, c in 0.1f64..5.0) {
        // Drifts orthogonal to the axes in the original coordinates.
        let ang = reflection_angles(&sigma, Vec2::new(0.0, b), Vec2::new(c, 0.0)).unwrap();
        let phi0 = wedge_angle(&sigma).unwrap();
        let chi = classify::chi(phi0, ang.phi1, ang.phi2);
        prop_assert!((chi - classify::orthogonal_chi(phi0)).abs() < 1e-12);
    }
}

/// Zero-mean law: the base atoms `(±1, 0), (0, ±1)` plus random extra atoms,
/// each paired with its negative.
fn zero_mean_law() -> impl Strategy<Value = IncrementLaw> {
    prop::collection::vec(((-2i64..=2, -2i64..=2), 1i64..6), 0..4).prop_map(|extra| {
        let mut atoms: Vec<(i64, i64, i64)> = vec![(1, 0, 2), (0, 1, 2)];
        atoms.extend(extra.into_iter().filter(|((x, y), _)| (*x, *y) != (0, 0)).map(|((x, y), w)| (x, y, w)));
        let total: i64 = atoms.iter().map(|a| 2 * a.2).sum();
        let pairs = atoms.iter().flat_map(|&(x, y, w)| {
            let p = rational::ratio(w, total);
            [(x, y, p.clone()), (-x, -y, p)]
        });
        IncrementLaw::from_merged(pairs).unwrap()
    })
}

fn reflections() -> impl Strategy<Value = Reflection> {
    prop_oneof![Just(Reflection::Lindley), Just(Reflection::Mirror)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn builders_equal_direct_fold(zeta in zero_mean_law(), kind in reflections()) {
        let spec = walks::reflected_spec(&zeta, kind).unwrap();
        let r = spec.depth() as i64;
        prop_assert_eq!(r, walks::builder_depth(&zeta) as i64);
        for x in 0..3 * r + 2 {
            for y in 0..3 * r + 2 {
                prop_assert_eq!(spec.law_at((x, y)), &walks::folded_law(&zeta, (x, y), kind).unwrap());
            }
        }
    }

    #[test]
    fn builders_have_orthogonal_drifts_and_closed_form_exponent(zeta in zero_mean_law(), kind in reflections()) {
        let spec = walks::reflected_spec(&zeta, kind).unwrap();
        let rep = classify::classify(&spec, &ClassifyOptions::default()).unwrap();
        prop_assert!(rep.mu_bar1.x.abs() <= 1e-12 * rep.mu_bar1.y.abs() && rep.mu_bar1.y > 0.0);
        prop_assert!(rep.mu_bar2.y.abs() <= 1e-12 * rep.mu_bar2.x.abs() && rep.mu_bar2.x > 0.0);
        prop_assert!((rep.chi - classify::orthogonal_chi(rep.phi0)).abs() < 1e-12);
        if rep.rho > 0.0 && rep.rho < 1.0 {
            let e = walks::lindley_exponent(rep.rho).unwrap();
            prop_assert!((rep.chi / 2.0 - e).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_rows_sum_to_one_and_sides_transpose(zeta in zero_mean_law(), kind in reflections()) {
        let spec = walks::reflected_spec(&zeta, kind).unwrap();
        let one = rational::ratio(1, 1);
        for side in [Side::One, Side::Two] {
            let chain = projection_chain(&spec, side).unwrap();
            for i in 0..spec.depth() + 3 {
                let sum: Prob = chain.row(i).values().fold(Prob::from_integer(0.into()), |s, p| s + p);
                prop_assert_eq!(&sum, &one);
            }
        }
        let t = spec.transposed();
        prop_assert_eq!(projection_chain(&spec, Side::Two).unwrap().leading_rows(),
                        projection_chain(&t, Side::One).unwrap().leading_rows());
    }

    #[test]
    fn stationary_measures_are_positive(zeta in zero_mean_law(), kind in reflections()) {
        let spec = walks::reflected_spec(&zeta, kind).unwrap();
        let rep = classify::classify(&spec, &ClassifyOptions::default()).unwrap();
        for pi in [&rep.pi1, &rep.pi2] {
            prop_assert!(pi.min_weight() > 0.0);
            prop_assert!((pi.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

trait Rows {
    fn leading_rows(&self) -> Vec<Vec<(i64, Prob)>>;
}

impl Rows for quadwalk::ProjectionChain {
    fn leading_rows(&self) -> Vec<Vec<(i64, Prob)>> {
        (0..self.depth() + 2).map(|i| self.row(i).into_iter().collect()).collect()
    }
}

#[test]
fn random_walk_spec_roundtrips_through_json() {
    let zeta = IncrementLaw::from_ratios(&[(1, 1, 3, 8), (-1, -1, 3, 8), (1, -1, 1, 8), (-1, 1, 1, 8)]).unwrap();
    for kind in [Reflection::Lindley, Reflection::Mirror] {
        let spec = walks::reflected_spec(&zeta, kind).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: WalkSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
