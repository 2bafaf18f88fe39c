//! Factor a birth-death chain as P = P_R P_A (a chain reflecting at the
//! origin times a chain absorbing there), sweep the two free parameters over
//! the admissible triangle, and verify the product reproduces the chain.

use bdfactor::chain::{AlmostBDChain, BDChain};
use bdfactor::factor::{ra_admissible, ra_factorize, ra_reconstruct, FactorOptions};

fn main() -> bdfactor::Result<()> {
    let (a, b, c) = (0.125, 0.75, 0.125);
    let chain: AlmostBDChain = BDChain::constant(a, b, c).into();

    // admissibility: alpha >= H', x0 >= H, alpha + x0 <= 1
    let adm = ra_admissible(&chain, 1e-13, 10_000)?;
    println!(
        "admissible parameter triangle: alpha >= {:.6}, x0 >= {:.6}, alpha + x0 <= 1",
        adm.h_prime, adm.h
    );

    // factor at an interior point and at the critical corner (H', H)
    for (alpha, x0, label) in [
        (0.3, 0.4, "interior"),
        (adm.h_prime, adm.h, "critical corner"),
    ] {
        let f = ra_factorize(&chain, alpha, x0, FactorOptions::default())?;
        let worst = (-32..=32)
            .map(|n| {
                let (ra, rb, rc) = ra_reconstruct(&f, n);
                (ra - chain.a(n))
                    .abs()
                    .max((rb - chain.b(n)).abs())
                    .max((rc - chain.c(n)).abs())
            })
            .fold(0.0f64, f64::max);
        println!(
            "({alpha:.6}, {x0:.6}) [{label}]: tails frozen at {:?}/{:?}, \
             reconstruction error {worst:.3e}",
            f.seqs.pos_frozen, f.seqs.neg_frozen
        );
        // the reflecting factor keeps x_n inside (H, 1) and the absorbing
        // factor keeps s_n inside (0, 1); print the first few coefficients
        for n in 0..3 {
            println!(
                "  n = {n}: x = {:.6}, y = {:.6}, s = {:.6}, r = {:.6}",
                f.seqs.x(n),
                f.seqs.y(n),
                f.seqs.s(n),
                f.seqs.r(n)
            );
        }
    }

    // outside the triangle the factor coefficients leave [0, 1] and the
    // recursion reports which one failed
    match ra_factorize(&chain, 0.05, 0.4, FactorOptions::default()) {
        Err(e) => println!("alpha below H' rejected: {e}"),
        Ok(_) => unreachable!("0.05 < H'"),
    }
    Ok(())
}
