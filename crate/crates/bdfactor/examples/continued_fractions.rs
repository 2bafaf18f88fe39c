//! Escape-weight continued fractions: evaluate `H` and `H'` with the
//! convergent table, compare against the constant-chain closed forms, and
//! show the alternating convergent family that solves the absorbing-first
//! factorization in closed form.

use bdfactor::cfrac::{
    eval_h, eval_h_prime, h_closed, h_prime_closed, j_convergents, j_root, CF_MAX_ITER, CF_TOL,
};
use bdfactor::chain::{AlmostBDChain, BDChain};

fn main() -> bdfactor::Result<()> {
    let (a, b, c) = (0.1, 0.7, 0.2);
    let chain: AlmostBDChain = BDChain::constant(a, b, c).into();

    // H is the weight of never escaping to the right of the origin; it is a
    // continued fraction in the chain coefficients and bounds the reflecting
    // factorization parameter x0 from below
    let h = eval_h(&chain, CF_TOL, CF_MAX_ITER)?;
    let hp = eval_h_prime(&chain, CF_TOL, CF_MAX_ITER)?;
    println!(
        "H  = {:.15} ({} iterations), closed form {:.15}",
        h.value,
        h.iterations,
        h_closed(a, c)
    );
    println!(
        "H' = {:.15} ({} iterations), closed form {:.15}",
        hp.value,
        hp.iterations,
        h_prime_closed(a, c)
    );

    // the convergents show the geometric approach to the limit
    println!("last four convergents of H:");
    for conv in h.convergents.iter().rev().take(4).rev() {
        println!(
            "  k = {:2}: h_k = {:.15}, error {:.3e}",
            conv.k,
            conv.h,
            (conv.h - h.value).abs()
        );
    }

    // the alternating family j_k converges to c / J = H'; the absorbing-first
    // factor coefficients of the boundary-jump chain are rational in the j_k
    let js = j_convergents(a, c, 16);
    println!(
        "j_16 = {:.15}, limit c/J = {:.15}",
        js[16],
        c / j_root(a, c)
    );
    assert!((js[16] - h_prime_closed(a, c)).abs() < 1e-9);
    Ok(())
}
