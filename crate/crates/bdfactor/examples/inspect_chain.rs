//! Build birth-death chains three ways (constant, perturbed window, boundary
//! jumps), check stochasticity, and read off reversibility coefficients.

use bdfactor::chain::{potential_coeffs, validate_stochastic, AlmostBDChain, BDChain};
use bdfactor::seq::CoeffSeq;
use std::collections::BTreeMap;

fn main() -> bdfactor::Result<()> {
    // a constant chain: step right with 0.125, stay with 0.75, left with 0.125
    let rw: AlmostBDChain = BDChain::constant(0.125, 0.75, 0.125).into();
    println!(
        "constant chain: a(7) = {}, b(-3) = {}, pure = {}",
        rw.a(7),
        rw.b(-3),
        rw.is_pure()
    );

    // the same chain with a perturbed window around the origin
    let perturbed: AlmostBDChain = BDChain {
        a: CoeffSeq::with_window(0.125, BTreeMap::from([(0, 0.2)]), 0.125),
        b: CoeffSeq::with_window(0.75, BTreeMap::from([(0, 0.675)]), 0.75),
        c: CoeffSeq::constant(0.125),
        }
    .into();
    let issues = validate_stochastic(&perturbed, 8);
    println!(
        "perturbed chain: window extent {}, stochasticity issues: {}",
        perturbed.window_extent(),
        issues.len()
    );

    // an almost birth-death chain: 1 <-> -1 jumps sized so that the unique
    // absorbing-first factorization exists
    let jumpy = AlmostBDChain::ar_boundary_example(0.125, 0.75, 0.125)?;
    println!(
        "boundary-jump chain: d_plus = {:.6}, d_minus = {:.6}, row sum at 1 = {}",
        jumpy.d_plus,
        jumpy.d_minus,
        jumpy.row_sum(1)
    );

    // reversibility coefficients pi(n): pi-weighted detailed balance holds,
    // including across the jumps (pi(1) d_plus = pi(-1) d_minus)
    let pot = potential_coeffs(&jumpy, 5)?;
    print!("potential coefficients:");
    for (n, pi) in pot.entries() {
        print!(" pi({n}) = {pi:.6}");
    }
    println!();
    let balance = pot.pi(1)? * jumpy.d_plus - pot.pi(-1)? * jumpy.d_minus;
    println!("detailed balance across the jumps: {balance:.2e}");

    // broken input is reported, not silently accepted
    let bad: AlmostBDChain = BDChain::constant(0.5, 0.6, 0.2).into();
    match bad.validate() {
        Err(e) => println!("rejected bad chain: {e}"),
        Ok(()) => unreachable!("row sums exceed 1"),
    }
    Ok(())
}
