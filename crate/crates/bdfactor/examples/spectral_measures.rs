//! Spectral matrix measures and their Darboux counterparts: the constant
//! chain's explicit measure, the Geronimus transform (divide by x, add an
//! atom at the origin), and the Christoffel transform (multiply by x), which
//! undoes it.

use bdfactor::chain::{potential_coeffs, AlmostBDChain, BDChain};
use bdfactor::factor::{ar_factorize, ra_admissible, ra_factorize, FactorOptions};
use bdfactor::mat2::sym_eigenvalues;
use bdfactor::spectral::{christoffel, constant_chain_measure, geronimus};

fn main() -> bdfactor::Result<()> {
    let (a, b, c) = (0.125, 0.75, 0.125);
    let meas = constant_chain_measure(a, b, c)?;
    println!(
        "constant-chain measure on [{:.4}, {:.4}], mass diag ({:.6}, {:.6})",
        meas.lo,
        meas.hi,
        meas.mass()?.0[(0, 0)],
        meas.mass()?.0[(1, 1)]
    );

    // Geronimus: the transformed measure carries 1/x and an atom at 0 whose
    // weight is fixed by the factorization parameters
    let chain: AlmostBDChain = BDChain::constant(a, b, c).into();
    let adm = ra_admissible(&chain, 1e-13, 10_000)?;
    let pot = potential_coeffs(&chain, 4)?;
    let pi0 = pot.block(0)?;

    for shift in [0.05, 0.0] {
        let ra = ra_factorize(
            &chain,
            adm.h_prime + shift,
            adm.h + shift,
            FactorOptions::default(),
        )?;
        let g = geronimus(&meas, &ra, &pi0)?;
        let (lo_ev, hi_ev) = sym_eigenvalues(&g.atom_raw);
        println!(
            "shift {shift}: atom kept = {}, weight eigenvalues ({:.3e}, {:.3e})",
            g.atom_kept, lo_ev, hi_ev
        );
        // at the critical corner the atom weight vanishes identically; away
        // from it the atom is a genuine positive-semidefinite point mass
        if g.atom_kept {
            let (mass, _) = g.measure.mass()?;
            println!(
                "  transformed mass diag ({:.6}, {:.6})",
                mass[(0, 0)],
                mass[(1, 1)]
            );

            // Christoffel multiplies by x and cancels the 1/x instead of
            // raising the polynomial degree; the atom at the origin dies
            let jumpy = AlmostBDChain::ar_boundary_example(a, b, c)?;
            let ar = ar_factorize(&jumpy, FactorOptions::default())?;
            let back = christoffel(&g.measure, &ar)?;
            println!(
                "  christoffel(geronimus): inverse factor gone = {}, atoms left = {}",
                !back.inverse_x,
                back.atoms.len()
            );
        }
    }

    // moments at the critical corner: the atom at the origin vanishes and the
    // continuous support sits strictly right of zero, so even the inverse
    // moment is finite
    let ra = ra_factorize(&chain, adm.h_prime, adm.h, FactorOptions::default())?;
    let g = geronimus(&meas, &ra, &pi0)?;
    for k in [-1i64, 0, 1, 2] {
        let (m, info) = g.measure.moment(k)?;
        println!(
            "  moment {k}: trace {:.8} ({} quadrature nodes)",
            m[(0, 0)] + m[(1, 1)],
            info.nodes
        );
    }

    // away from the corner the surviving atom sits exactly at zero, so the
    // inverse moment is undefined and the measure must refuse it
    let ra = ra_factorize(&chain, adm.h_prime + 0.05, adm.h + 0.05, FactorOptions::default())?;
    let g = geronimus(&meas, &ra, &pi0)?;
    println!(
        "  atom-carrying measure refuses the inverse moment: {}",
        g.measure.moment(-1).is_err()
    );
    Ok(())
}
