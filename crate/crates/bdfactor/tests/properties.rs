//! Randomized structural invariants of the chains, factorizations, and
//! polynomial recurrences.

use bdfactor::cfrac::{h_closed, h_prime_closed};
use bdfactor::chain::{
    block_index, potential_coeffs, relabel_to_blocks, AlmostBDChain, BDChain,
};
use bdfactor::factor::{
    ar_factorize, ar_reconstruct_block, darboux_ra, ra_factorize, ra_reconstruct, FactorOptions,
};
use bdfactor::mat2::max_abs_diff;
use bdfactor::opoly::{eval_scalar_q, u_sum_identity_check, QEvaluator};
use bdfactor::verify::nstep;
use proptest::prelude::*;

/// Interior transition triples: all three probabilities bounded away from 0.
fn simplex() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05..0.6f64, 0.05..0.6f64)
        .prop_filter("leave room for holding", |(a, c)| a + c < 0.92)
        .prop_map(|(a, c)| (a, 1.0 - a - c, c))
}

/// One-step transition entry, including the `1 <-> -1` jumps.
fn step(chain: &AlmostBDChain, i: i64, j: i64) -> f64 {
    let mut p = 0.0;
    if j == i {
        p += chain.b(i);
    } else if j == i + 1 {
        p += chain.a(i);
    } else if j == i - 1 {
        p += chain.c(i);
    }
    if (i, j) == (1, -1) {
        p += chain.d_plus;
    }
    if (i, j) == (-1, 1) {
        p += chain.d_minus;
    }
    p
}

proptest! {
    // the exact-truncation oracle conserves probability mass
    #[test]
    fn nstep_rows_sum_to_one((a, b, c) in simplex(), i in -3i64..=3, n in 1usize..=4) {
        let chain: AlmostBDChain = BDChain::constant(a, b, c).into();
        let reach = n as i64;
        let sum: f64 = (i - reach..=i + reach).map(|j| nstep(&chain, i, j, n)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12, "row sum {sum}");
    }

    // n-step probabilities form a semigroup, jumps included
    #[test]
    fn nstep_semigroup((a, b, c) in simplex(), i in -2i64..=2, j in -2i64..=2) {
        let chain = AlmostBDChain::ar_boundary_example(a, b, c)?;
        let (n, m) = (2usize, 3usize);
        let reach = (n + m) as i64;
        let split: f64 = (i - reach..=i + reach)
            .map(|k| nstep(&chain, i, k, n) * nstep(&chain, k, j, m))
            .sum();
        prop_assert!((split - nstep(&chain, i, j, n + m)).abs() < 1e-13);
    }

    // multiplying the two factors back together returns the chain, for any
    // admissible seed pair strictly inside the feasible triangle
    #[test]
    fn ra_reconstruction_at_random_seeds(
        (a, b, c) in simplex(),
        u in 0.02..0.9f64,
        v in 0.02..0.9f64,
    ) {
        let chain: AlmostBDChain = BDChain::constant(a, b, c).into();
        let (h, hp) = (h_closed(a, c), h_prime_closed(a, c));
        let slack = 1.0 - h - hp;
        prop_assume!(slack > 0.05);
        // barycentric placement keeps alpha + x0 <= 1
        let (u, v) = (u / (u + v + 1.0), v / (u + v + 1.0));
        let f = ra_factorize(&chain, hp + u * slack, h + v * slack, FactorOptions::default())?;
        let mut worst = 0.0f64;
        for n in -40i64..=40 {
            let (ra, rb, rc) = ra_reconstruct(&f, n);
            worst = worst
                .max((ra - chain.a(n)).abs())
                .max((rb - chain.b(n)).abs())
                .max((rc - chain.c(n)).abs());
        }
        prop_assert!(worst < 1e-10, "worst reconstruction error {worst:.3e}");
    }

    // the reflecting-first Darboux transform is stochastic
    #[test]
    fn ra_darboux_rows_sum_to_one((a, b, c) in simplex(), u in 0.05..0.45f64) {
        let chain: AlmostBDChain = BDChain::constant(a, b, c).into();
        let (h, hp) = (h_closed(a, c), h_prime_closed(a, c));
        let slack = 1.0 - h - hp;
        prop_assume!(slack > 0.1);
        let f = ra_factorize(
            &chain,
            hp + u * slack / 2.0,
            h + u * slack / 2.0,
            FactorOptions::default(),
        )?;
        let (tchain, _) = darboux_ra(&f);
        for i in -20i64..=20 {
            let rs = tchain.row_sum(i);
            prop_assert!((rs - 1.0).abs() < 1e-12, "row {i} sums to {rs}");
        }
    }

    // the absorbing-first factorization reproduces the block chain; it only
    // exists where the escape-weight discriminant is nonnegative, i.e.
    // (1 + c - a)^2 >= 4c, kept away from the degenerate edge
    #[test]
    fn ar_reconstruction_matches_blocks((a, b, c) in simplex()) {
        prop_assume!(a <= (1.0 - c.sqrt()).powi(2) - 0.02);
        let chain = AlmostBDChain::ar_boundary_example(a, b, c)?;
        let blocks = relabel_to_blocks(chain.clone());
        let f = ar_factorize(&chain, FactorOptions::default())?;
        let mut worst = 0.0f64;
        for n in 0..=20usize {
            let (ba, bb, bc) = ar_reconstruct_block(&f, n);
            worst = worst.max(max_abs_diff(&ba, &blocks.a(n)));
            worst = worst.max(max_abs_diff(&bb, &blocks.b(n)));
            if let Some(bc) = bc {
                worst = worst.max(max_abs_diff(&bc, &blocks.c(n)));
            }
        }
        prop_assert!(worst < 1e-12, "worst block reconstruction error {worst:.3e}");
    }

    // state relabeling to block form loses nothing
    #[test]
    fn relabeling_round_trips((a, b, c) in simplex(), i in -20i64..=20) {
        let chain = AlmostBDChain::ar_boundary_example(a, b, c)?;
        let blocks = relabel_to_blocks(chain.clone());
        let (bi, ci) = block_index(i);
        prop_assert!(bi <= 20 && ci < 2);
        for j in i - 2..=i + 2 {
            let err = (blocks.scalar_entry(i, j) - step(&chain, i, j)).abs();
            prop_assert!(err < 1e-15);
        }
    }

    // the potential coefficients balance every edge of the chain
    #[test]
    fn potential_coeffs_balance_edges((a, b, c) in simplex()) {
        let chain = AlmostBDChain::ar_boundary_example(a, b, c)?;
        let pot = potential_coeffs(&chain, 24)?;
        for n in -23i64..23 {
            let lhs = pot.pi(n)? * chain.a(n);
            let rhs = pot.pi(n + 1)? * chain.c(n + 1);
            prop_assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1.0));
        }
        let jump = pot.pi(1)? * chain.d_plus - pot.pi(-1)? * chain.d_minus;
        prop_assert!(jump.abs() < 1e-13);
    }

    // block and scalar three-term recurrences describe the same polynomials
    #[test]
    fn scalar_and_block_recurrences_agree((a, b, c) in simplex(), x in -1.0..=1.0f64) {
        let chain = AlmostBDChain::ar_boundary_example(a, b, c)?;
        let blocks = relabel_to_blocks(chain.clone());
        let qe = QEvaluator::new(&blocks, 6)?;
        let qs = qe.eval(x);
        let scale = qs.iter().map(bdfactor::mat2::max_abs).fold(1.0f64, f64::max);
        for row in eval_scalar_q(&chain, x, 6)? {
            let (bi, ci) = block_index(row.n);
            if bi <= 6 {
                let err = (row.q1 - qs[bi][(ci, 0)]).abs().max((row.q2 - qs[bi][(ci, 1)]).abs());
                prop_assert!(err < 1e-11 * scale, "state {} error {err:.3e}", row.n);
            }
        }
    }

    // telescoping sum identity of the factor polynomials at random points
    #[test]
    fn u_sum_identity_holds(x in -1.0..=1.0f64, shift in 0.01..0.3f64, n in 0usize..=10) {
        let (a, b, c) = (0.125, 0.75, 0.125);
        let chain: AlmostBDChain = BDChain::constant(a, b, c).into();
        let (h, hp) = (h_closed(a, c), h_prime_closed(a, c));
        let f = ra_factorize(&chain, hp + shift, h + shift, FactorOptions::default())?;
        let blocks = relabel_to_blocks(chain);
        let res = u_sum_identity_check(&blocks, &f, x, n)?;
        prop_assert!(res < 1e-9, "residual {res:.3e} at x = {x}, n = {n}");
    }
}
