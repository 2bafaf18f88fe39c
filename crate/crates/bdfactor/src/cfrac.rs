//! Continued-fraction evaluation of escape weights.
//!
//! All fractions here have the shape `t1/(1 - t2/(1 - t3/(1 - ...)))` and are
//! evaluated by the standard forward convergent recursion
//! `A_k = A_{k-1} + p_k A_{k-2}`, `B_k = B_{k-1} + p_k B_{k-2}` with partial
//! numerators `p_1 = t1`, `p_k = -t_k` for `k >= 2`; the convergent is
//! `h_k = A_k/B_k`. Convergence is declared after three consecutive
//! convergent differences fall below the tolerance.

use crate::chain::AlmostBDChain;
use crate::error::{Error, Result};

/// Default convergence tolerance on successive convergents.
pub const CF_TOL: f64 = 1e-13;

/// Default iteration cap.
pub const CF_MAX_ITER: usize = 10_000;

/// Magnitude at which the recursion state is rescaled to avoid overflow.
const RESCALE_AT: f64 = 1e100;

/// One convergent of a continued fraction. `a_num` and `b_den` are the
/// forward-recursion state (jointly rescaled by powers of 1e-100 when large,
/// which leaves `h = a_num/b_den` unchanged).
#[derive(Debug, Clone, PartialEq)]
pub struct Convergent {
    pub k: usize,
    pub a_num: f64,
    pub b_den: f64,
    pub h: f64,
}

/// Result of a converged evaluation.
#[derive(Debug, Clone)]
pub struct CfEvaluation {
    pub value: f64,
    pub iterations: usize,
    pub convergents: Vec<Convergent>,
}

/// Evaluate `t1/(1 - t2/(1 - ...))` for the given term stream.
pub fn eval_cf(
    terms: impl IntoIterator<Item = f64>,
    tol: f64,
    max_iter: usize,
) -> Result<CfEvaluation> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let (mut a_prev, mut a) = (1.0f64, 0.0f64);
    let (mut b_prev, mut b) = (0.0f64, 1.0f64);
    let mut h_prev: Option<f64> = None;
    let mut small_streak = 0usize;
    let mut convergents = Vec::new();
    for (k, t) in terms.into_iter().enumerate() {
        let k = k + 1;
        let p = if k == 1 { t } else { -t };
        (a, a_prev) = (a + p * a_prev, a);
        (b, b_prev) = (b + p * b_prev, b);
        if a.abs() > RESCALE_AT || b.abs() > RESCALE_AT {
            a *= 1e-100;
            a_prev *= 1e-100;
            b *= 1e-100;
            b_prev *= 1e-100;
        }
        let h = a / b;
        convergents.push(Convergent {
            k,
            a_num: a,
            b_den: b,
            h,
        });
        if let Some(hp) = h_prev {
            if (h - hp).abs() < tol {
                small_streak += 1;
                if small_streak >= 3 {
                    return Ok(CfEvaluation {
                        value: h,
                        iterations: k,
                        convergents,
                    });
                }
            } else {
                small_streak = 0;
            }
        }
        h_prev = Some(h);
        if k >= max_iter {
            let last: Vec<f64> = convergents.iter().rev().take(5).map(|c| c.h).collect();
            return Err(Error::NonConvergence {
                iterations: k,
                last,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: convergents.len(),
        last: convergents.iter().rev().take(5).map(|c| c.h).collect(),
    })
}

/// Up-escape weight `H`: terms `a(0); c(1), a(1); c(2), a(2); ...`.
pub fn eval_h(chain: &AlmostBDChain, tol: f64, max_iter: usize) -> Result<CfEvaluation> {
    let terms = std::iter::once(chain.a(0)).chain((1i64..).flat_map(|n| [chain.c(n), chain.a(n)]));
    eval_cf(terms, tol, max_iter)
}

/// Down-escape weight `H'`: terms `c(0); a(-1), c(-1); a(-2), c(-2); ...`.
pub fn eval_h_prime(chain: &AlmostBDChain, tol: f64, max_iter: usize) -> Result<CfEvaluation> {
    let terms =
        std::iter::once(chain.c(0)).chain((1i64..).flat_map(|n| [chain.a(-n), chain.c(-n)]));
    eval_cf(terms, tol, max_iter)
}

/// Interior up-escape weight used by the absorbing-first factorization:
/// terms `c(1); a(1), c(2); a(2), ...` (no leading `a(0)`).
pub fn eval_h_tilde(chain: &AlmostBDChain, tol: f64, max_iter: usize) -> Result<CfEvaluation> {
    let terms = (1i64..).flat_map(|n| [chain.c(n), chain.a(n)]);
    eval_cf(terms, tol, max_iter)
}

/// Interior down-escape weight: terms `a(-1); c(-1), a(-2); ...`.
pub fn eval_h_tilde_prime(
    chain: &AlmostBDChain,
    tol: f64,
    max_iter: usize,
) -> Result<CfEvaluation> {
    let terms = (1i64..).flat_map(|n| [chain.a(-n), chain.c(-n)]);
    eval_cf(terms, tol, max_iter)
}

/// Both interior escape weights of the absorbing-first factorization.
pub fn eval_h_ar(
    chain: &AlmostBDChain,
    tol: f64,
    max_iter: usize,
) -> Result<(CfEvaluation, CfEvaluation)> {
    Ok((
        eval_h_tilde(chain, tol, max_iter)?,
        eval_h_tilde_prime(chain, tol, max_iter)?,
    ))
}

/// Discriminant root shared by the constant-chain closed forms.
fn disc(a: f64, c: f64) -> f64 {
    let t = 1.0 + c - a;
    (t * t - 4.0 * c).sqrt()
}

/// Closed form of `H` for a constant chain (requires `(1+c-a)^2 >= 4c`).
pub fn h_closed(a: f64, c: f64) -> f64 {
    0.5 * (1.0 + a - c - disc(a, c))
}

/// Closed form of `H'` for a constant chain.
pub fn h_prime_closed(a: f64, c: f64) -> f64 {
    0.5 * (1.0 + c - a - disc(a, c))
}

/// Larger root of `z^2 - (1+c-a) z + c`; the alternating continued fraction
/// below has convergents tending to `c / j_root = H'`, and the factorization
/// closed forms are rational in these convergents.
pub fn j_root(a: f64, c: f64) -> f64 {
    0.5 * (1.0 + c - a + disc(a, c))
}

/// First `n` convergents of `c/(1 - a/(1 - c/(1 - a/(1 - ...))))`,
/// returned as `j_0 = 0, j_1, ..., j_n`.
pub fn j_convergents(a: f64, c: f64, n: usize) -> Vec<f64> {
    let mut js = Vec::with_capacity(n + 1);
    js.push(0.0);
    let (mut a_prev, mut acc_a) = (1.0f64, 0.0f64);
    let (mut b_prev, mut acc_b) = (0.0f64, 1.0f64);
    for k in 1..=n {
        let t = if k % 2 == 1 { c } else { a };
        let p = if k == 1 { t } else { -t };
        (acc_a, a_prev) = (acc_a + p * a_prev, acc_a);
        (acc_b, b_prev) = (acc_b + p * b_prev, acc_b);
        js.push(acc_a / acc_b);
    }
    js
}
