//! Property tests over randomized inputs: algebraic laws of the expression
//! ring, parser round trips, mass-action structure, and the exactness of
//! the quotient identity on arbitrary compiled systems.

use std::collections::BTreeMap;

use proptest::prelude::*;

use tnc::expr::{parse_expr, rat, ratio, LaurentPolynomial, Monomial, Rational};
use tnc::odesys::{reactions_to_odes, OdeSystem, Reaction};
use tnc::sim::{simulate, PlaceholderMap, SimParams};
use tnc::transform::{compile, estimate_gamma, validate_tn, CompileOptions};
use tnc::verify::symbolic_ratio_identity;

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-12i64..=12, 1i64..=6).prop_map(|(n, d)| ratio(n, d))
}

fn arb_nonzero_rational() -> impl Strategy<Value = Rational> {
    ((1i64..=12, 1i64..=6), any::<bool>()).prop_map(|((n, d), neg)| {
        let r = ratio(n, d);
        if neg {
            -r
        } else {
            r
        }
    })
}

fn arb_monomial() -> impl Strategy<Value = Monomial> {
    (-3i32..=3, -3i32..=3).prop_map(|(a, b)| Monomial::from_pairs(&[("x", a), ("y", b)]))
}

fn arb_poly() -> impl Strategy<Value = LaurentPolynomial> {
    proptest::collection::vec((arb_monomial(), arb_nonzero_rational()), 0..5).prop_map(|terms| {
        let mut p = LaurentPolynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    })
}

/// Monomials without negative exponents, for polynomial (non-Laurent) rhs.
fn arb_plain_monomial(names: &'static [&'static str]) -> impl Strategy<Value = Monomial> {
    proptest::collection::vec(0i32..=2, names.len()).prop_map(move |exps| {
        let pairs: Vec<(&str, i32)> = names.iter().copied().zip(exps).collect();
        Monomial::from_pairs(&pairs)
    })
}

fn arb_system(names: &'static [&'static str]) -> impl Strategy<Value = OdeSystem> {
    let rhs = proptest::collection::vec(
        proptest::collection::vec((arb_plain_monomial(names), arb_nonzero_rational()), 1..4),
        names.len(),
    );
    let inits = proptest::collection::vec(1i64..=8, names.len());
    (rhs, inits).prop_map(move |(rhs, inits)| {
        let mut sys = OdeSystem::new();
        for (name, i0) in names.iter().zip(inits) {
            sys.add_variable(name, ratio(i0, 2)).unwrap();
        }
        for (name, terms) in names.iter().zip(rhs) {
            let mut p = LaurentPolynomial::zero();
            for (m, c) in terms {
                p.add_term(m, c);
            }
            sys.set_rhs(name, p).unwrap();
        }
        sys
    })
}

proptest! {
    #[test]
    fn addition_and_multiplication_obey_ring_laws(
        a in arb_poly(),
        b in arb_poly(),
        c in arb_poly(),
    ) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a + &LaurentPolynomial::zero(), a.clone());
        prop_assert_eq!(&a * &LaurentPolynomial::constant(rat(1)), a.clone());
    }

    #[test]
    fn split_signs_partitions_into_positive_parts(p in arb_poly()) {
        let (plus, minus) = p.split_signs();
        prop_assert!(plus.is_positive());
        prop_assert!(minus.is_positive());
        prop_assert_eq!(&plus - &minus, p);
    }

    #[test]
    fn canonical_printing_parses_back_unchanged(p in arb_poly()) {
        prop_assert_eq!(parse_expr(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn substitution_distributes_over_the_ring(
        a in arb_poly(),
        b in arb_poly(),
        m in arb_monomial(),
        c in arb_nonzero_rational(),
    ) {
        // A single-monomial binding stays invertible, so it can be pushed
        // through negative exponents.
        let mut bindings = BTreeMap::new();
        bindings.insert("x".to_string(), LaurentPolynomial::term(m, c));
        let subst = |p: &LaurentPolynomial| p.substitute(&bindings).unwrap();
        prop_assert_eq!(subst(&(&a + &b)), &subst(&a) + &subst(&b));
        prop_assert_eq!(subst(&(&a * &b)), &subst(&a) * &subst(&b));
    }

    #[test]
    fn shifting_a_variable_is_invertible(
        sys in arb_system(&["x", "y"]),
        c in arb_rational(),
    ) {
        let shifted = sys.shift_variable("x", &c).unwrap();
        let back = shifted.shift_variable("x", &(-&c)).unwrap();
        for v in sys.variables() {
            prop_assert_eq!(back.rhs(v).unwrap(), sys.rhs(v).unwrap());
            prop_assert_eq!(back.initial(v).unwrap(), sys.initial(v).unwrap());
        }
    }

    #[test]
    fn mass_action_systems_are_always_hungarian(
        seeds in proptest::collection::vec(
            (0u32..=2, 0u32..=2, 0u32..=2, 0u32..=2, 1i64..=10),
            1..4,
        ),
    ) {
        let mut reactions = Vec::new();
        for (ra, rb, pa, pb, k) in seeds {
            if ra + rb + pa + pb == 0 {
                continue;
            }
            reactions.push(
                Reaction::new(&[("A", ra), ("B", rb)], &[("A", pa), ("B", pb)], ratio(k, 2))
                    .unwrap(),
            );
        }
        prop_assume!(!reactions.is_empty());
        let sys = reactions_to_odes(&reactions, &BTreeMap::new()).unwrap();
        for v in sys.variables() {
            prop_assert!(sys.hungarian_quotient(v).is_some(), "{v} not Hungarian");
        }
    }

    #[test]
    fn compiled_networks_satisfy_the_quotient_identity(
        sys in arb_system(&["u", "v"]),
        g in 1i64..=20,
    ) {
        let opts = CompileOptions::new(ratio(g, 2));
        let tn = compile(&sys, &opts).unwrap();
        prop_assert!(validate_tn(&tn.base, &tn.gamma).is_ok());
        prop_assert!(symbolic_ratio_identity(&tn, &sys).unwrap().is_exact());
    }

    #[test]
    fn gamma_estimates_are_half_integer_grid_points(
        c in 1i64..=3,
        k in 0i64..=4,
        margin in 1.0f64..2.0,
    ) {
        let mut sys = OdeSystem::new();
        sys.add_variable("u", rat(2)).unwrap();
        sys.set_rhs("u", parse_expr(&format!("-{c}*u + {k}")).unwrap()).unwrap();
        let g = estimate_gamma(&sys, &[], 5.0, margin, &PlaceholderMap::new()).unwrap();
        prop_assert!(g >= ratio(1, 2));
        prop_assert!((&g * &rat(2)).is_integer());
    }

    #[test]
    fn sample_grids_are_uniform_and_complete(
        points in 1usize..=40,
        t_end in 0.5f64..5.0,
    ) {
        let mut sys = OdeSystem::new();
        sys.add_variable("u", rat(1)).unwrap();
        sys.set_rhs("u", parse_expr("-u + 1/2").unwrap()).unwrap();
        let params = SimParams { t_end, points, ..SimParams::default() };
        let traj = simulate(&sys, &[], &params, &PlaceholderMap::new()).unwrap();
        prop_assert_eq!(traj.times.len(), points + 1);
        prop_assert_eq!(traj.values[0].len(), points + 1);
        prop_assert_eq!(traj.times[0], 0.0);
        let h = t_end / points as f64;
        for (i, t) in traj.times.iter().enumerate() {
            prop_assert!((t - i as f64 * h).abs() < 1e-12);
        }
    }
}
