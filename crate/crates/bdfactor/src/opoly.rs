//! Matrix and scalar polynomial families attached to a block chain.
//!
//! `Q_n` solves the block three-term recurrence of the chain
//! (`Q_0 = I`, `A_0 Q_1 = xI - B_0`,
//! `A_n Q_{n+1} = (xI - B_n) Q_n - C_n Q_{n-1}`). The factor families are
//! `U_n = R_n Q_{n-1} + S_n Q_n` (reflecting-first) and
//! `T_n = S~_n^{-1}(Q_n - R~_n T_{n-1})` (absorbing-first); the Darboux
//! transforms are orthogonal with respect to the transformed measures after
//! the constant normalizations `Q~_n = U_n S_0^{-1}` and `Q^_n = T_n S~_0`.

use crate::chain::{AlmostBDChain, BlockChain, PotentialCoeffs, DIV_GUARD};
use crate::error::{Error, Result};
use crate::factor::{ARFactors, RAFactors};
use crate::mat2::{inv2, max_abs, Mat2};
use serde::{Deserialize, Serialize};

/// Off-diagonal tolerance when reducing norm-matrix products to diagonals.
pub const NORM_OFFDIAG_TOL: f64 = 1e-12;

/// Polynomial family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Chain polynomials `Q_n`.
    Q,
    /// Reflecting-first factor polynomials `U_n`.
    U,
    /// Darboux polynomials `Q~_n = U_n S_0^{-1}`.
    #[value(alias = "qtilde")]
    QTilde,
    /// Absorbing-first factor polynomials `T_n`.
    T,
    /// Darboux polynomials `Q^_n = T_n S~_0`.
    #[value(alias = "qhat")]
    QHat,
}

/// Evaluator for `Q_0..Q_nmax` with the block inverses precomputed.
pub struct QEvaluator {
    a_inv: Vec<Mat2>,
    b: Vec<Mat2>,
    c: Vec<Mat2>,
    nmax: usize,
}

impl QEvaluator {
    pub fn new(blocks: &BlockChain, nmax: usize) -> Result<Self> {
        let mut a_inv = Vec::with_capacity(nmax);
        let mut b = Vec::with_capacity(nmax);
        let mut c = Vec::with_capacity(nmax);
        for n in 0..nmax {
            a_inv.push(inv2(&blocks.a(n), &format!("up block at {n}"))?);
            b.push(blocks.b(n));
            c.push(if n >= 1 { blocks.c(n) } else { Mat2::zeros() });
        }
        if nmax == 0 {
            b.push(blocks.b(0));
        }
        Ok(QEvaluator { a_inv, b, c, nmax })
    }

    /// Values `[Q_0(x), ..., Q_nmax(x)]`.
    pub fn eval(&self, x: f64) -> Vec<Mat2> {
        let mut q = Vec::with_capacity(self.nmax + 1);
        q.push(Mat2::identity());
        if self.nmax == 0 {
            return q;
        }
        let xi = Mat2::identity() * x;
        q.push(self.a_inv[0] * (xi - self.b[0]));
        for n in 1..self.nmax {
            let next = self.a_inv[n] * ((xi - self.b[n]) * q[n] - self.c[n] * q[n - 1]);
            q.push(next);
        }
        q
    }
}

/// Evaluator for any supported family; pointwise evaluation is infallible
/// because every needed inverse is taken during construction.
pub struct FamilyEvaluator {
    family: Family,
    q: QEvaluator,
    /// U: `S_n`; T: `S~_n^{-1}`.
    diag: Vec<Mat2>,
    /// U: `R_n`; T: `R~_n`.
    sub: Vec<Mat2>,
    /// Right normalization (`S_0^{-1}` or `S~_0`).
    post: Option<Mat2>,
    nmax: usize,
}

impl FamilyEvaluator {
    pub fn new(
        family: Family,
        blocks: &BlockChain,
        ra: Option<&RAFactors>,
        ar: Option<&ARFactors>,
        nmax: usize,
    ) -> Result<Self> {
        let need_q = match family {
            Family::Q => nmax,
            _ => nmax + 1,
        };
        let q = QEvaluator::new(blocks, need_q.max(1))?;
        let mut diag = Vec::new();
        let mut sub = Vec::new();
        let mut post = None;
        match family {
            Family::Q => {}
            Family::U | Family::QTilde => {
                let ra = ra.ok_or_else(|| {
                    Error::Config("this family needs reflecting-first factors".into())
                })?;
                for n in 0..=nmax {
                    diag.push(ra.s_block(n));
                    sub.push(ra.r_block(n));
                }
                if family == Family::QTilde {
                    post = Some(inv2(&ra.s_block(0), "absorbing factor block at 0")?);
                }
            }
            Family::T | Family::QHat => {
                let ar = ar.ok_or_else(|| {
                    Error::Config("this family needs absorbing-first factors".into())
                })?;
                for n in 0..=nmax {
                    diag.push(inv2(
                        &ar.s_block(n),
                        &format!("absorbing factor block at {n}"),
                    )?);
                    sub.push(ar.r_block(n));
                }
                if family == Family::QHat {
                    post = Some(ar.s_block(0));
                }
            }
        }
        Ok(FamilyEvaluator {
            family,
            q,
            diag,
            sub,
            post,
            nmax,
        })
    }

    /// Values `[F_0(x), ..., F_nmax(x)]`.
    pub fn eval(&self, x: f64) -> Vec<Mat2> {
        let qs = self.q.eval(x);
        let mut out = match self.family {
            Family::Q => qs,
            Family::U | Family::QTilde => {
                let mut u = Vec::with_capacity(self.nmax + 1);
                u.push(self.diag[0]);
                for n in 1..=self.nmax {
                    u.push(self.sub[n] * qs[n - 1] + self.diag[n] * qs[n]);
                }
                u
            }
            Family::T | Family::QHat => {
                let mut t: Vec<Mat2> = Vec::with_capacity(self.nmax + 1);
                t.push(self.diag[0]);
                for n in 1..=self.nmax {
                    let prev = t[n - 1];
                    t.push(self.diag[n] * (qs[n] - self.sub[n] * prev));
                }
                t
            }
        };
        if let Some(p) = self.post {
            for m in &mut out {
                *m *= p;
            }
        }
        out
    }
}

/// Values of `U_0(0)..U_n(0)` by the stable product form
/// `U_k(0) = -X_{k-1}^{-1} Y_{k-1} U_{k-1}(0)` starting from `U_0(0) = S_0`.
///
/// The three-term route cancels catastrophically here (the two summands grow
/// geometrically while the value decays), so the product form is the one to
/// use whenever `U` is needed at the origin.
pub fn u_at_zero(ra: &RAFactors, n: usize) -> Result<Vec<Mat2>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(ra.s_block(0));
    for k in 1..=n {
        let xk = inv2(&ra.x_block(k - 1), &format!("reflecting factor block at {}", k - 1))?;
        let prev = out[k - 1];
        out.push(-(xk * ra.y_block(k - 1) * prev));
    }
    Ok(out)
}

/// Residual of the summation identity
/// `U_n(x) = U_n(0) [I + x Σ_{k<n} U_{k+1}(0)^{-1} X_k^{-1} Q_k(x)]`,
/// normalized by `max(1, |U_n(x)|)` so it is meaningful even where the
/// polynomials are huge (far outside the support the raw values reach 1e12
/// and an absolute residual would only measure f64 granularity).
pub fn u_sum_identity_check(
    blocks: &BlockChain,
    ra: &RAFactors,
    x: f64,
    n: usize,
) -> Result<f64> {
    let qe = QEvaluator::new(blocks, n.max(1))?;
    let qs = qe.eval(x);
    let ue = FamilyEvaluator::new(Family::U, blocks, Some(ra), None, n)?;
    let us = ue.eval(x);
    let u0 = u_at_zero(ra, n)?;
    let mut sum = Mat2::zeros();
    for k in 0..n {
        let u_inv = inv2(&u0[k + 1], &format!("factor polynomial at 0, index {}", k + 1))?;
        let x_inv = inv2(&ra.x_block(k), &format!("reflecting factor block at {k}"))?;
        sum += u_inv * x_inv * qs[k];
    }
    let rhs = u0[n] * (Mat2::identity() + sum * x);
    let denom = max_abs(&us[n]).max(1.0);
    Ok(max_abs(&(us[n] - rhs)) / denom)
}

/// Leading coefficient of `Q_n`: `(A_0 A_1 ... A_{n-1})^{-1}`.
pub fn leading_coeff(blocks: &BlockChain, n: usize) -> Result<Mat2> {
    let mut lead = Mat2::identity();
    for k in 0..n {
        lead = inv2(&blocks.a(k), &format!("up block at {k}"))? * lead;
    }
    Ok(lead)
}

/// Norm matrix family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// `Pi_n = diag(pi(n), pi(-n-1))` of the base chain.
    Base,
    /// Reflecting-first Darboux norms `Pi~_n = Y_n^T Pi_n S_n^{-1}`.
    RaDarboux,
    /// Absorbing-first Darboux norms `Pi^_n = Y~_n^{-T} Pi_n S~_n`.
    ArDarboux,
}

/// Norm matrices `0..=nmax` of the requested family. The Darboux norms are
/// computed as full 2x2 products and must come out diagonal; a larger
/// off-diagonal remainder means the factors do not belong to the chain.
pub fn norm_matrices(
    kind: NormKind,
    pot: &PotentialCoeffs,
    ra: Option<&RAFactors>,
    ar: Option<&ARFactors>,
    nmax: usize,
) -> Result<Vec<Mat2>> {
    let mut out = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        let pi_n = pot.block(n)?;
        let m = match kind {
            NormKind::Base => pi_n,
            NormKind::RaDarboux => {
                let ra = ra.ok_or_else(|| {
                    Error::Config("Darboux norms need reflecting-first factors".into())
                })?;
                let s_inv = inv2(&ra.s_block(n), &format!("absorbing factor block at {n}"))?;
                ra.y_block(n).transpose() * pi_n * s_inv
            }
            NormKind::ArDarboux => {
                let ar = ar.ok_or_else(|| {
                    Error::Config("Darboux norms need absorbing-first factors".into())
                })?;
                let y_inv = inv2(&ar.y_block(n), &format!("reflecting factor block at {n}"))?;
                y_inv.transpose() * pi_n * ar.s_block(n)
            }
        };
        let off = m[(0, 1)].abs().max(m[(1, 0)].abs());
        if off > NORM_OFFDIAG_TOL {
            return Err(Error::Validation(format!(
                "norm matrix {n} is not diagonal (off-diagonal magnitude {off:.3e})"
            )));
        }
        out.push(crate::mat2::diag2(m[(0, 0)], m[(1, 1)]));
    }
    Ok(out)
}

/// One row of the scalar recurrence solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarQRow {
    pub n: i64,
    pub q1: f64,
    pub q2: f64,
}

/// The two scalar solutions of `x Q(i) = a_i Q(i+1) + b_i Q(i) + c_i Q(i-1)`
/// (plus the `1 <-> -1` jump terms on rows +-1) fixed by
/// `Q1(0) = 1, Q1(-1) = 0` and `Q2(0) = 0, Q2(-1) = 1`, extended by running
/// the recurrence upward and downward until |n| = range.
pub fn eval_scalar_q(chain: &AlmostBDChain, x: f64, range: i64) -> Result<Vec<ScalarQRow>> {
    if range < 1 {
        return Err(Error::Config("range must be at least 1".into()));
    }
    let mut q1 = std::collections::BTreeMap::from([(0i64, 1.0f64), (-1, 0.0)]);
    let mut q2 = std::collections::BTreeMap::from([(0i64, 0.0f64), (-1, 1.0)]);
    // upward: row i determines Q(i+1)
    for i in 0..range {
        let a = chain.a(i);
        if a.abs() < DIV_GUARD {
            return Err(Error::SingularRecursion {
                index: i,
                what: "scalar recurrence divides by vanishing up-probability",
            });
        }
        let d_term = if i == 1 { chain.d_plus } else { 0.0 };
        let next1 = ((x - chain.b(i)) * q1[&i] - chain.c(i) * q1[&(i - 1)] - d_term * q1[&-1]) / a;
        let next2 = ((x - chain.b(i)) * q2[&i] - chain.c(i) * q2[&(i - 1)] - d_term * q2[&-1]) / a;
        q1.insert(i + 1, next1);
        q2.insert(i + 1, next2);
    }
    // downward: row i determines Q(i-1); row -1 needs Q(1), computed above
    for m in 1..range {
        let i = -m;
        let c = chain.c(i);
        if c.abs() < DIV_GUARD {
            return Err(Error::SingularRecursion {
                index: i,
                what: "scalar recurrence divides by vanishing down-probability",
            });
        }
        let d_term = if i == -1 { chain.d_minus } else { 0.0 };
        let next1 =
            ((x - chain.b(i)) * q1[&i] - chain.a(i) * q1[&(i + 1)] - d_term * q1[&1]) / c;
        let next2 =
            ((x - chain.b(i)) * q2[&i] - chain.a(i) * q2[&(i + 1)] - d_term * q2[&1]) / c;
        q1.insert(i - 1, next1);
        q2.insert(i - 1, next2);
    }
    Ok(q1
        .keys()
        .map(|&n| ScalarQRow {
            n,
            q1: q1[&n],
            q2: q2[&n],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfrac::{h_closed, h_prime_closed};
    use crate::chain::{relabel_to_blocks, BDChain};
    use crate::factor::{ar_factorize, ra_factorize, FactorOptions};
    use crate::mat2::max_abs_diff;

    fn rw() -> AlmostBDChain {
        BDChain::constant(0.125, 0.75, 0.125).into()
    }

    fn rw_ra() -> RAFactors {
        let (h, hp) = (h_closed(0.125, 0.125), h_prime_closed(0.125, 0.125));
        ra_factorize(&rw(), hp + 0.05, h + 0.05, FactorOptions::default()).unwrap()
    }

    #[test]
    fn q_satisfies_recurrence() {
        let blocks = relabel_to_blocks(rw());
        let qe = QEvaluator::new(&blocks, 12).unwrap();
        for &x in &[-0.9, -0.3, 0.0, 0.3, 0.9] {
            let qs = qe.eval(x);
            for n in 1..12 {
                let lhs = qs[n] * x;
                let rhs = blocks.a(n) * qs[n + 1] + blocks.b(n) * qs[n] + blocks.c(n) * qs[n - 1];
                let scale = max_abs(&lhs).max(1.0);
                assert!(max_abs_diff(&lhs, &rhs) / scale < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn scalar_solutions_assemble_into_blocks() {
        let ch = AlmostBDChain::ar_boundary_example(0.1, 0.7, 0.2).unwrap();
        let blocks = relabel_to_blocks(ch.clone());
        let qe = QEvaluator::new(&blocks, 8).unwrap();
        for &x in &[-0.4, 0.2, 0.8] {
            let qs = qe.eval(x);
            let rows = eval_scalar_q(&ch, x, 9).unwrap();
            let val = |n: i64, which: usize| {
                let row = rows.iter().find(|r| r.n == n).unwrap();
                if which == 0 {
                    row.q1
                } else {
                    row.q2
                }
            };
            for n in 0..=8usize {
                let ni = n as i64;
                let b = qs[n];
                let scale = max_abs(&b).max(1.0);
                assert!((b[(0, 0)] - val(ni, 0)).abs() / scale < 1e-11, "Q1({ni})");
                assert!((b[(0, 1)] - val(ni, 1)).abs() / scale < 1e-11, "Q2({ni})");
                assert!((b[(1, 0)] - val(-ni - 1, 0)).abs() / scale < 1e-11, "Q1({})", -ni - 1);
                assert!((b[(1, 1)] - val(-ni - 1, 1)).abs() / scale < 1e-11, "Q2({})", -ni - 1);
            }
        }
    }

    #[test]
    fn u_family_satisfies_cross_relation() {
        // x Q_n = Y_n U_n + X_n U_{n+1}
        let ch = rw();
        let ra = rw_ra();
        let blocks = relabel_to_blocks(ch);
        let qe = QEvaluator::new(&blocks, 14).unwrap();
        let ue = FamilyEvaluator::new(Family::U, &blocks, Some(&ra), None, 13).unwrap();
        for &x in &[0.3, 0.8] {
            let qs = qe.eval(x);
            let us = ue.eval(x);
            for n in 0..12 {
                let lhs = qs[n] * x;
                let rhs = ra.y_block(n) * us[n] + ra.x_block(n) * us[n + 1];
                let scale = max_abs(&rhs).max(1.0);
                assert!(max_abs_diff(&lhs, &rhs) / scale < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn t_family_satisfies_cross_relation() {
        // x T_n = Y~_n Q_n + X~_n Q_{n+1}
        let ch = AlmostBDChain::ar_boundary_example(0.125, 0.75, 0.125).unwrap();
        let ar = ar_factorize(&ch, FactorOptions::default()).unwrap();
        let blocks = relabel_to_blocks(ch);
        let qe = QEvaluator::new(&blocks, 14).unwrap();
        let te = FamilyEvaluator::new(Family::T, &blocks, None, Some(&ar), 13).unwrap();
        for &x in &[0.3, 0.8] {
            let qs = qe.eval(x);
            let ts = te.eval(x);
            for n in 0..12 {
                let lhs = ts[n] * x;
                let rhs = ar.y_block(n) * qs[n] + ar.x_block(n) * qs[n + 1];
                let scale = max_abs(&rhs).max(1.0);
                assert!(max_abs_diff(&lhs, &rhs) / scale < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn u_at_zero_matches_recurrence_termwise() {
        // the product form and the recurrence agree relative to the size of
        // the cancelling summands R_n Q_{n-1}(0) and S_n Q_n(0)
        let ra = rw_ra();
        let blocks = relabel_to_blocks(rw());
        let qe = QEvaluator::new(&blocks, 13).unwrap();
        let qs0 = qe.eval(0.0);
        let u0 = u_at_zero(&ra, 12).unwrap();
        for n in 0..=12usize {
            let direct = if n == 0 {
                ra.s_block(0)
            } else {
                ra.r_block(n) * qs0[n - 1] + ra.s_block(n) * qs0[n]
            };
            let term = if n == 0 {
                1.0f64
            } else {
                max_abs(&(ra.r_block(n) * qs0[n - 1]))
                    .max(max_abs(&(ra.s_block(n) * qs0[n])))
                    .max(1.0)
            };
            assert!(
                max_abs_diff(&direct, &u0[n]) / term < 1e-12,
                "termwise agreement at {n}"
            );
        }
    }

    #[test]
    fn u_sum_identity_residual_is_small() {
        let ra = rw_ra();
        let blocks = relabel_to_blocks(rw());
        for &x in &[-0.9, -0.3, 0.3, 0.9, 1.0] {
            for n in 0..13 {
                let res = u_sum_identity_check(&blocks, &ra, x, n).unwrap();
                assert!(res < 1e-10, "residual {res:.3e} at x={x} n={n}");
            }
        }
    }

    #[test]
    fn leading_coeffs_stay_nonsingular() {
        let blocks = relabel_to_blocks(AlmostBDChain::ar_boundary_example(0.125, 0.75, 0.125).unwrap());
        for n in 0..=16 {
            let lead = leading_coeff(&blocks, n).unwrap();
            assert!(crate::mat2::try_inv2(&lead).is_some(), "n={n}");
        }
    }

    #[test]
    fn darboux_norms_are_diagonal_with_known_seed() {
        let ch = rw();
        let ra = rw_ra();
        let pot = crate::chain::potential_coeffs(&ch, 40).unwrap();
        let norms = norm_matrices(NormKind::RaDarboux, &pot, Some(&ra), None, 10).unwrap();
        // Pi~_0 = diag(y0, alpha / r(-1))
        let expect_11 = ra.seqs.y(0);
        let expect_22 = ra.alpha / ra.seqs.r(-1);
        assert!((norms[0][(0, 0)] - expect_11).abs() < 1e-13);
        assert!((norms[0][(1, 1)] - expect_22).abs() < 1e-12);

        let cha = AlmostBDChain::ar_boundary_example(0.125, 0.75, 0.125).unwrap();
        let ar = ar_factorize(&cha, FactorOptions::default()).unwrap();
        let pot_a = crate::chain::potential_coeffs(&cha, 40).unwrap();
        let hat = norm_matrices(NormKind::ArDarboux, &pot_a, None, Some(&ar), 10).unwrap();
        assert!((hat[0][(0, 0)] - 4.0 / 3.0).abs() < 1e-13);
        assert!((hat[0][(1, 1)] - 1.170_731_707_317_073_3).abs() < 1e-12);
    }
}
