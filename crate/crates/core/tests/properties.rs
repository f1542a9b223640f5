//! Cross-module invariants, checked on random inputs.

use bernsim_core::bernstein::{apply, apply_polynomial, iterate, iterate_polynomial};
use bernsim_core::moments::{central_moment_binomial, central_moment_recursion};
use bernsim_core::mutation::uniform_mutation;
use bernsim_core::semigroup::exact_tt;
use bernsim_core::simplex::random_simplex_points;
use bernsim_core::Polynomial;
use proptest::prelude::*;

fn polynomial(d: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    proptest::collection::vec(
        (proptest::collection::vec(0u32..=max_deg, d), -2.0f64..2.0),
        1..5,
    )
    .prop_map(move |terms| Polynomial::from_terms(d, terms))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn polynomial_route_agrees_with_lattice_sum(
        p in polynomial(3, 3),
        n in 1u32..12,
        theta in 0.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let qn = uniform_mutation(n as u64, 3, theta).unwrap();
        let bp = apply_polynomial(&p, n, Some(&qn)).unwrap();
        prop_assert!(bp.degree() <= p.degree());
        for x in random_simplex_points(3, 4, seed) {
            let lattice = apply(&p, &x, n, Some(&qn)).unwrap();
            prop_assert!((bp.eval(x.coords()) - lattice).abs() <= 1e-10 * (1.0 + lattice.abs()));
        }
    }

    #[test]
    fn iterates_agree_across_routes(p in polynomial(2, 4), n in 2u32..15, steps in 0usize..6, seed in any::<u64>()) {
        let poly = iterate_polynomial(&p, n, steps, None).unwrap();
        for x in random_simplex_points(2, 3, seed) {
            let lattice = iterate(&p, &x, n, steps, None).unwrap();
            prop_assert!((poly.eval(x.coords()) - lattice).abs() <= 1e-9 * (1.0 + lattice.abs()));
        }
    }

    #[test]
    fn limit_semigroup_composes(p in polynomial(3, 3), s in 0.0f64..1.0, t in 0.0f64..1.0, seed in any::<u64>()) {
        let q = uniform_mutation(1, 3, 1.0).unwrap();
        let direct = exact_tt(&p, s + t, Some(&q)).unwrap();
        let composed = exact_tt(&exact_tt(&p, s, Some(&q)).unwrap(), t, Some(&q)).unwrap();
        for x in random_simplex_points(3, 4, seed) {
            let (a, b) = (direct.eval(x.coords()), composed.eval(x.coords()));
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn even_central_moments_are_nonnegative_and_consistent(n in 1u64..400, x in 0.0f64..=1.0, half in 1u32..4) {
        let gamma = 2 * half;
        let closed = central_moment_binomial(n, x, gamma);
        let rec = central_moment_recursion(n, x, gamma);
        prop_assert!(closed >= -1e-12);
        prop_assert!((closed - rec).abs() <= 1e-9 * (1.0 + closed.abs()));
    }
}

#[test]
fn uniform_mutation_rows_sum_to_zero() {
    for d in 2..6 {
        let q = uniform_mutation(10, d, 1.5).unwrap();
        for i in 0..d {
            let row: f64 = (0..d).map(|j| q.get(i, j)).sum();
            assert!(row.abs() < 1e-15);
            assert!((q.get(i, i) + 1.5 / 20.0).abs() < 1e-15);
        }
    }
}
