//! Factor a chain as P = P_A P_R with the absorbing factor first. This order
//! only works for almost birth-death chains whose 1 <-> -1 jumps have the
//! exact sizes forced by the factorization; when it works it is unique, and
//! for the boundary-jump example the coefficients have closed forms.

use bdfactor::cfrac::j_convergents;
use bdfactor::chain::AlmostBDChain;
use bdfactor::factor::{ar_compatible, ar_factorize, ar_reconstruct_block, FactorOptions};

fn main() -> bdfactor::Result<()> {
    let (a, b, c) = (0.125, 0.75, 0.125);
    let chain = AlmostBDChain::ar_boundary_example(a, b, c)?;
    println!(
        "chain jumps: d_plus = {:.8}, d_minus = {:.8}",
        chain.d_plus, chain.d_minus
    );

    // the compatibility conditions: jumps must equal c(0)c(1)/b(0) and
    // a(-1)a(0)/b(0), and b(0) must dominate both products and the interior
    // escape weights
    let compat = ar_compatible(&chain)?;
    println!(
        "compatible: {} (expected jumps {:.8} and {:.8})",
        compat.ok(),
        compat.d_plus_expected,
        compat.d_minus_expected
    );

    let f = ar_factorize(&chain, FactorOptions::default())?;
    println!("absorbing factor alpha~ = c(0) = {}", f.alpha_tilde);

    // closed forms: x~_n = a/(1 - j_{2n}) and r~_n = j_{2n} on the positive
    // side, with the odd convergents on the negative side
    let js = j_convergents(a, c, 70);
    let mut worst = 0.0f64;
    for n in 1..=32usize {
        worst = worst
            .max((f.seqs.x(n as i64) - a / (1.0 - js[2 * n])).abs())
            .max((f.seqs.r(n as i64) - js[2 * n]).abs())
            .max((f.seqs.x(-(n as i64)) - js[2 * n + 1]).abs())
            .max((f.seqs.r(-(n as i64)) - a / (1.0 - js[2 * n - 1])).abs());
    }
    println!("factor coefficients vs convergent closed forms, |n| <= 32: {worst:.3e}");

    // the product of the factors reproduces the chain block by block,
    // including the off-diagonal entries that hold the jumps
    let mut recon = 0.0f64;
    let blocks = bdfactor::chain::relabel_to_blocks(chain);
    for n in 0..8usize {
        let (aa, bb, cc) = ar_reconstruct_block(&f, n);
        recon = recon.max(bdfactor::mat2::max_abs_diff(&bb, &blocks.b(n)));
        recon = recon.max(bdfactor::mat2::max_abs_diff(&aa, &blocks.a(n)));
        if let Some(cc) = cc {
            recon = recon.max(bdfactor::mat2::max_abs_diff(&cc, &blocks.c(n)));
        }
    }
    println!("block reconstruction error, n < 8: {recon:.3e}");

    // a pure constant chain has zero jumps, which do not match the forced
    // values, so the absorbing-first order is refused
    let pure: AlmostBDChain = bdfactor::BDChain::constant(a, b, c).into();
    match ar_factorize(&pure, FactorOptions::default()) {
        Err(e) => println!("pure chain refused: {e}"),
        Ok(_) => unreachable!("zero jumps are incompatible"),
    }
    Ok(())
}
