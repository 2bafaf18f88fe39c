//! The square of the theory: a Darboux transformation of the chain matches
//! the corresponding transformation of its spectral measure. Transition
//! probabilities of the transformed chain computed spectrally (transformed
//! measure + transformed polynomials + transformed norms) agree with the
//! truncation oracle run on the transformed chain.

use bdfactor::chain::{potential_coeffs, relabel_to_blocks, AlmostBDChain, BDChain};
use bdfactor::factor::{
    ar_factorize, darboux_ar, darboux_ra, ra_admissible, ra_factorize, FactorOptions,
};
use bdfactor::opoly::{norm_matrices, Family, FamilyEvaluator, NormKind};
use bdfactor::spectral::{
    ar_stieltjes, christoffel, constant_chain_measure, geronimus, km_quad_options, km_table,
};
use bdfactor::verify::nstep;

fn main() -> bdfactor::Result<()> {
    let (a, b, c) = (0.125, 0.75, 0.125);
    let imax = 4usize;
    let nmax = 8usize;

    // reflecting-first: chain transform is darboux_ra, measure transform is
    // Geronimus; the transformed polynomials are Q~ and the norms Pi~
    let chain: AlmostBDChain = BDChain::constant(a, b, c).into();
    let meas = constant_chain_measure(a, b, c)?;
    let adm = ra_admissible(&chain, 1e-13, 10_000)?;
    let ra = ra_factorize(&chain, adm.h_prime + 0.05, adm.h + 0.05, FactorOptions::default())?;
    let (tchain, tblocks) = darboux_ra(&ra);
    let gmeas = geronimus(&meas, &ra, &potential_coeffs(&chain, 4)?.block(0)?)?;

    let blocks = relabel_to_blocks(chain.clone());
    let fam = FamilyEvaluator::new(Family::QTilde, &blocks, Some(&ra), None, imax)?;
    let pot = potential_coeffs(&chain, imax as i64 + 4)?;
    let norms = norm_matrices(NormKind::RaDarboux, &pot, Some(&ra), None, imax)?;
    let table = km_table(&gmeas.measure, &fam, &norms, imax, nmax, km_quad_options())?;

    let mut worst = 0.0f64;
    for i in -(imax as i64)..=imax as i64 {
        for j in -(imax as i64)..=imax as i64 {
            for n in 0..=nmax {
                let v = table.scalar(i, j, n).raw;
                worst = worst.max((v - nstep(&tchain, i, j, n)).abs());
            }
        }
    }
    println!("Geronimus side: spectral vs oracle on the transformed chain: {worst:.3e}");
    let _ = tblocks;

    // absorbing-first: chain transform is darboux_ar, measure transform is
    // Christoffel applied to the recovered measure of the jump chain
    let jumpy = AlmostBDChain::ar_boundary_example(a, b, c)?;
    let ar = ar_factorize(&jumpy, FactorOptions::default())?;
    let (hchain, _) = darboux_ar(&ar);
    let hchain: AlmostBDChain = hchain.into();
    let cmeas = christoffel(&ar_stieltjes(a, c)?.invert()?.measure, &ar)?;

    let jblocks = relabel_to_blocks(jumpy.clone());
    let fam = FamilyEvaluator::new(Family::QHat, &jblocks, None, Some(&ar), imax)?;
    let jpot = potential_coeffs(&jumpy, imax as i64 + 4)?;
    let norms = norm_matrices(NormKind::ArDarboux, &jpot, None, Some(&ar), imax)?;
    let table = km_table(&cmeas, &fam, &norms, imax, nmax, km_quad_options())?;

    let mut worst = 0.0f64;
    for i in -(imax as i64)..=imax as i64 {
        for j in -(imax as i64)..=imax as i64 {
            for n in 0..=nmax {
                let v = table.scalar(i, j, n).raw;
                worst = worst.max((v - nstep(&hchain, i, j, n)).abs());
            }
        }
    }
    println!("Christoffel side: spectral vs oracle on the transformed chain: {worst:.3e}");
    Ok(())
}
