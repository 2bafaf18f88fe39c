//! n-step transition probabilities from the spectral data: the block of
//! `P^n` joining block indices `(i, j)` equals
//! `int x^n F_i(x) dPsi(x) F_j(x)^T Pi_j` for the polynomial family `F`
//! orthogonal with respect to `Psi` with norm matrices `Pi_j^{-1}`.

use crate::chain::block_index;
use crate::error::{Error, Result};
use crate::mat2::{max_abs_diff, Mat2};
use crate::opoly::FamilyEvaluator;
use crate::spectral::measure::{MatrixMeasure, QuadInfo, QuadOptions, SqrtKind, ATOM_DROP_TOL};
use serde::Serialize;

/// Computed probabilities within this distance below 0 or above 1 are
/// rounded to the exact bound; the raw value is always kept alongside.
pub const KM_CLAMP: f64 = 1e-9;

/// Raw and clamped versions of one probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmValue {
    pub raw: f64,
    pub clamped: f64,
}

/// Round values a hair outside [0, 1] back onto the boundary.
pub fn clamp_probability(raw: f64) -> f64 {
    if (-KM_CLAMP..0.0).contains(&raw) {
        0.0
    } else if raw > 1.0 && raw <= 1.0 + KM_CLAMP {
        1.0
    } else {
        raw
    }
}

/// Table of `P^n` blocks for `n <= nmax` and block indices `<= imax`.
#[derive(Debug, Clone)]
pub struct KmTable {
    pub imax: usize,
    pub nmax: usize,
    pub info: QuadInfo,
    data: Vec<Mat2>,
}

impl KmTable {
    fn slot(&self, n: usize, bi: usize, bj: usize) -> usize {
        (n * (self.imax + 1) + bi) * (self.imax + 1) + bj
    }

    /// Block of `P^n` joining block rows `bi` and `bj`.
    pub fn block(&self, n: usize, bi: usize, bj: usize) -> Mat2 {
        assert!(n <= self.nmax && bi <= self.imax && bj <= self.imax);
        self.data[self.slot(n, bi, bj)]
    }

    /// Scalar n-step probability between original states `i` and `j`.
    pub fn scalar(&self, i: i64, j: i64, n: usize) -> KmValue {
        let (bi, ci) = block_index(i);
        let (bj, cj) = block_index(j);
        let raw = self.block(n, bi, bj)[(ci, cj)];
        KmValue {
            raw,
            clamped: clamp_probability(raw),
        }
    }
}

/// Build the table by quadrature with the polynomial family evaluated once
/// per node. `norms` must provide `Pi_0..Pi_imax`; `family` must evaluate at
/// least `imax + 1` polynomials (its construction depth governs `imax`).
pub fn km_table(
    meas: &MatrixMeasure,
    family: &FamilyEvaluator,
    norms: &[Mat2],
    imax: usize,
    nmax: usize,
    opts: QuadOptions,
) -> Result<KmTable> {
    if norms.len() <= imax {
        return Err(Error::Config(format!(
            "need {} norm matrices, got {}",
            imax + 1,
            norms.len()
        )));
    }
    let nb = imax + 1;
    let mid = 0.5 * (meas.hi + meas.lo);
    let h = 0.5 * (meas.hi - meas.lo);

    let sample = |m: usize| -> Vec<Mat2> {
        let mut acc = vec![Mat2::zeros(); (nmax + 1) * nb * nb];
        for t in 0..m {
            let theta = (t as f64 + 0.5) * std::f64::consts::PI / m as f64;
            let (sin_t, cos_t) = theta.sin_cos();
            let x = mid + h * cos_t;
            let mut wt = std::f64::consts::PI / m as f64;
            if meas.sqrt_kind == SqrtKind::Direct {
                wt *= (h * sin_t) * (h * sin_t);
            }
            if meas.inverse_x {
                wt /= x;
            }
            let fs = family.eval(x);
            let dens = meas.rational_part(x);
            // left products F_i(x) dPsi and transposed right factors
            let left: Vec<Mat2> = (0..nb).map(|bi| fs[bi] * dens).collect();
            let right: Vec<Mat2> = (0..nb).map(|bj| fs[bj].transpose()).collect();
            let mut xnw = wt;
            for n in 0..=nmax {
                for bi in 0..nb {
                    let lf = left[bi] * xnw;
                    for bj in 0..nb {
                        acc[(n * nb + bi) * nb + bj] += lf * right[bj];
                    }
                }
                xnw *= x;
            }
        }
        acc
    };

    let mut m = opts.start_nodes.max(4);
    let mut prev = sample(m);
    let mut converged = false;
    while m * 2 <= opts.max_nodes {
        m *= 2;
        let cur = sample(m);
        let diff = cur
            .iter()
            .zip(&prev)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold(0.0f64, f64::max);
        prev = cur;
        if diff < opts.tol {
            converged = true;
            break;
        }
    }

    for atom in &meas.atoms {
        let w = atom.weight_mat();
        if w.abs().max() < ATOM_DROP_TOL {
            continue;
        }
        let fs = family.eval(atom.location);
        for n in 0..=nmax {
            // x^n kills any atom at the origin for n >= 1
            if n >= 1 && atom.location == 0.0 {
                continue;
            }
            let xn = atom.location.powi(n as i32);
            for bi in 0..nb {
                let lf = fs[bi] * w * xn;
                for bj in 0..nb {
                    prev[(n * nb + bi) * nb + bj] += lf * fs[bj].transpose();
                }
            }
        }
    }

    for n in 0..=nmax {
        for bi in 0..nb {
            for bj in 0..nb {
                prev[(n * nb + bi) * nb + bj] *= norms[bj];
            }
        }
    }

    Ok(KmTable {
        imax,
        nmax,
        info: QuadInfo {
            nodes: m,
            converged,
        },
        data: prev,
    })
}

/// Default quadrature setup for probability tables: starts finer than the
/// moment quadrature because the integrands oscillate with the polynomial
/// degree.
pub fn km_quad_options() -> QuadOptions {
    QuadOptions {
        start_nodes: 256,
        ..QuadOptions::default()
    }
}
