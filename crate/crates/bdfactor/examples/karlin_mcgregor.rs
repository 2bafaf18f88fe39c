//! n-step transition probabilities from the spectral side: integrate
//! Q_i(x) x^n dPsi(x) Q_j(x)^T against the measure, pick the right scalar
//! entry, and compare with the dense truncation oracle (exact for finitely
//! many steps by finite propagation speed).

use bdfactor::chain::{block_index, potential_coeffs, relabel_to_blocks, AlmostBDChain, BDChain};
use bdfactor::opoly::{norm_matrices, Family, FamilyEvaluator, NormKind};
use bdfactor::spectral::{constant_chain_measure, km_quad_options, km_table};
use bdfactor::verify::nstep;

fn main() -> bdfactor::Result<()> {
    let (a, b, c) = (0.125, 0.75, 0.125);
    let chain: AlmostBDChain = BDChain::constant(a, b, c).into();
    let meas = constant_chain_measure(a, b, c)?;

    let imax = 5usize;
    let nmax = 10usize;
    let blocks = relabel_to_blocks(chain.clone());
    let family = FamilyEvaluator::new(Family::Q, &blocks, None, None, imax)?;
    let pot = potential_coeffs(&chain, imax as i64 + 2)?;
    let norms = norm_matrices(NormKind::Base, &pot, None, None, imax)?;
    let table = km_table(&meas, &family, &norms, imax, nmax, km_quad_options())?;
    println!(
        "quadrature used {} nodes (converged: {})",
        table.info.nodes, table.info.converged
    );

    // a few states, all step counts; the worst deviation from the oracle
    let mut worst = 0.0f64;
    for i in -(imax as i64)..=imax as i64 {
        for j in -(imax as i64)..=imax as i64 {
            if block_index(i).0 > imax || block_index(j).0 > imax {
                continue;
            }
            for n in 0..=nmax {
                let v = table.scalar(i, j, n);
                worst = worst.max((v.raw - nstep(&chain, i, j, n)).abs());
            }
        }
    }
    println!("spectral vs oracle over |i|,|j| <= {imax}, n <= {nmax}: {worst:.3e}");

    // one concrete row: starting at -2, where is the walker after 8 steps?
    print!("P(X_8 = j | X_0 = -2):");
    for j in [-4i64, -3, -2, -1, 0, 1, 2] {
        print!(" {j}:{:.5}", table.scalar(-2, j, 8).clamped);
    }
    println!();

    // odd steps cannot outrun the range: the probability of i -> j in n
    // steps is zero when |i - j| > n, and the quadrature sees that as noise
    // below the clamp threshold
    let far = table.scalar(-5, 5, 4);
    println!(
        "unreachable 4-step -5 -> 5: raw {:.2e}, clamped {}",
        far.raw, far.clamped
    );
    Ok(())
}
