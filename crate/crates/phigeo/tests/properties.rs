//! Property tests for the algebraic invariants: linearity of the
//! expectation functionals, bilinearity of the semi-inner product,
//! divergence non-negativity and the classical reduction, transport
//! linearity, and deformation self-duality.

use proptest::prelude::*;

use phigeo::{
    divergence, expectation, semi_inner_product, transport, Density, ExpectationOrder,
    FiniteSpace, PhiFamily, PhiFunction, TangentVector,
};

fn values(m: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, m)
}

fn density_values(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..1.0_f64, m)
}

fn phi_strategy() -> impl Strategy<Value = PhiFunction<f64>> {
    prop_oneof![
        Just(PhiFunction::exponential()),
        (-0.9..0.9_f64)
            .prop_filter("kappa must be nonzero", |k| k.abs() > 1e-3)
            .prop_map(|k| PhiFunction::kaniadakis(k).unwrap()),
    ]
}

proptest! {
    #[test]
    fn expectation_is_linear_in_the_integrand(
        phi in phi_strategy(),
        f in values(4, -1.5, 1.5),
        u0 in values(4, 0.2, 2.0),
        h1 in values(4, -3.0, 3.0),
        h2 in values(4, -3.0, 3.0),
        a in -2.0..2.0_f64,
        b in -2.0..2.0_f64,
    ) {
        let space = FiniteSpace::<f64>::counting(4).unwrap();
        let combo: Vec<f64> = h1.iter().zip(&h2).map(|(&x, &y)| a * x + b * y).collect();
        for order in [ExpectationOrder::First, ExpectationOrder::Second, ExpectationOrder::Third] {
            let lhs = expectation(order, &space, &phi, &f, &u0, &combo).unwrap();
            let e1 = expectation(order, &space, &phi, &f, &u0, &h1).unwrap();
            let e2 = expectation(order, &space, &phi, &f, &u0, &h2).unwrap();
            let rhs = a * e1 + b * e2;
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn semi_inner_product_is_bilinear_and_symmetric(
        phi in phi_strategy(),
        f in values(3, -1.0, 1.0),
        u0 in values(3, 0.2, 2.0),
        xv in values(3, -2.0, 2.0),
        yv in values(3, -2.0, 2.0),
        zv in values(3, -2.0, 2.0),
        a in -2.0..2.0_f64,
        b in -2.0..2.0_f64,
    ) {
        let space = FiniteSpace::<f64>::counting(3).unwrap();
        let x = TangentVector::new(space.clone(), xv).unwrap();
        let y = TangentVector::new(space.clone(), yv).unwrap();
        let z = TangentVector::new(space.clone(), zv).unwrap();
        let combo = x.linear_combination(a, &z, b).unwrap();
        let lhs = semi_inner_product(&space, &phi, &f, &u0, &combo, &y).unwrap();
        let xy = semi_inner_product(&space, &phi, &f, &u0, &x, &y).unwrap();
        let zy = semi_inner_product(&space, &phi, &f, &u0, &z, &y).unwrap();
        let rhs = a * xy + b * zy;
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        let yx = semi_inner_product(&space, &phi, &f, &u0, &y, &x).unwrap();
        prop_assert_eq!(xy, yx);
    }

    #[test]
    fn divergence_is_nonnegative_and_zero_on_diagonal(
        phi in phi_strategy(),
        pv in density_values(4),
        qv in density_values(4),
        u0 in values(4, 0.2, 2.0),
    ) {
        let space = FiniteSpace::<f64>::counting(4).unwrap();
        let p = Density::new(space.clone(), pv).unwrap();
        let q = Density::new(space.clone(), qv).unwrap();
        let v = divergence::phi_divergence(&phi, &u0, &p, &q).unwrap();
        prop_assert!(v >= -1e-12, "negative divergence {}", v);
        let self_v = divergence::phi_divergence(&phi, &u0, &p, &p).unwrap();
        prop_assert!(self_v.abs() <= 1e-12);
    }

    #[test]
    fn exponential_divergence_is_kullback_leibler(
        pv in density_values(5),
        qv in density_values(5),
    ) {
        let space = FiniteSpace::<f64>::counting(5).unwrap();
        let p = Density::new(space.clone(), pv).unwrap();
        let q = Density::new(space.clone(), qv).unwrap();
        let phi = PhiFunction::exponential();
        let u0 = vec![1.0; 5];
        let dv = divergence::phi_divergence(&phi, &u0, &p, &q).unwrap();
        let kl = divergence::kl_divergence(&p, &q).unwrap();
        prop_assert!((dv - kl).abs() <= 1e-12 * kl.abs().max(1.0));
    }

    #[test]
    fn kaniadakis_is_self_dual(
        kappa in (-0.9..0.9_f64).prop_filter("nonzero", |k| k.abs() > 1e-3),
        u in -15.0..15.0_f64,
    ) {
        let phi = PhiFunction::kaniadakis(kappa).unwrap();
        let prod = phi.eval(u) * phi.eval(-u);
        prop_assert!((prod - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn closed_form_transport_is_linear(
        theta_to in prop::collection::vec(-0.8..0.8_f64, 2),
        xv in values(4, -2.0, 2.0),
        yv in values(4, -2.0, 2.0),
        a in -2.0..2.0_f64,
        b in -2.0..2.0_f64,
    ) {
        let space = FiniteSpace::<f64>::counting(4).unwrap();
        let center = Density::new(space.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let family = PhiFamily::new(
            PhiFunction::kaniadakis(0.5).unwrap(),
            &center,
            None,
            &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]],
        )
        .unwrap();
        let to = family.point_at(&theta_to).unwrap();
        let x = TangentVector::new(space.clone(), xv).unwrap();
        let y = TangentVector::new(space.clone(), yv).unwrap();
        let combo = x.linear_combination(a, &y, b).unwrap();
        let lhs = transport::transport_1(&to, &combo).unwrap();
        let rhs = transport::transport_1(&to, &x)
            .unwrap()
            .linear_combination(a, &transport::transport_1(&to, &y).unwrap(), b)
            .unwrap();
        for (&l, &r) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((l - r).abs() <= 1e-12 * r.abs().max(1.0));
        }
    }

    #[test]
    fn normalizer_is_convex_along_random_segments(
        ta in prop::collection::vec(-1.2..1.2_f64, 2),
        tb in prop::collection::vec(-1.2..1.2_f64, 2),
        lambda in 0.05..0.95_f64,
    ) {
        let space = FiniteSpace::<f64>::counting(4).unwrap();
        let center = Density::new(space, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let family = PhiFamily::new(
            PhiFunction::kaniadakis(0.5).unwrap(),
            &center,
            None,
            &[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]],
        )
        .unwrap();
        let pa = family.solve_psi(&ta).unwrap();
        let pb = family.solve_psi(&tb).unwrap();
        prop_assert!(pa >= 0.0 && pb >= 0.0);
        let mid: Vec<f64> = ta.iter().zip(&tb).map(|(&x, &y)| lambda * x + (1.0 - lambda) * y).collect();
        let pm = family.solve_psi(&mid).unwrap();
        prop_assert!(pm <= lambda * pa + (1.0 - lambda) * pb + 1e-10);
    }
}
