//! Stochastic factorizations of birth-death chains and the induced
//! Darboux transformations.
//!
//! A chain `P` splits as `P = P_R * P_A` where `P_R` is an upper bidiagonal
//! stochastic factor (entries `y_n`, `x_n` on the folded index set) and `P_A`
//! a lower bidiagonal one (entries `s_n`, `r_n`). On the integers this
//! reflecting-first split has two free parameters `(alpha, x0)`; the
//! admissible region is `alpha >= H'`, `x0 >= H`, `alpha + x0 <= 1`, with
//! `H`, `H'` the up/down escape weights from state 0. Swapping the order,
//! `P = P_A~ * P_R~` (absorbing first) is parameter free but requires the
//! `1 <-> -1` jump compatibility conditions. Multiplying each pair in the
//! reverse order yields the Darboux transform of the chain.
//!
//! Tail handling: for eventually constant chains the factor recursions reach
//! a fixed point of the tail map. Iterates are frozen at the first index
//! (at least `window_extent + 2`) where two successive values agree within
//! the stability tolerance. Checking this early matters: seeding exactly at
//! the critical parameters puts the recursion on the *repelling* fixed point
//! of the tail map, where rounding noise grows geometrically (factor ~30 per
//! step for the reference chains) and would otherwise drift the iterates to
//! the attracting fixed point, which belongs to a different factorization.
//! Seeds carrying a few ulps of noise (e.g. continued-fraction evaluations of
//! the critical parameters) start with successive gaps already above the
//! stability tolerance; those are recognized by their growth pattern (tiny
//! first gap, geometric increase) and the tail is pinned to the earliest
//! post-window iterate pair, which satisfies the reconstruction identities
//! exactly.

use crate::cfrac::{self, CfEvaluation, CF_MAX_ITER, CF_TOL};
use crate::chain::{relabel_to_blocks, AlmostBDChain, BDChain, BlockChain, DIV_GUARD};
use crate::error::{Error, Result};
use crate::mat2::{diag2, mat2, Mat2};
use crate::seq::CoeffSeq;
use std::collections::BTreeMap;

/// Default stability tolerance for freezing factor tails.
pub const STAB_TOL: f64 = 1e-13;

/// Ceiling on the first post-window iterate gap below which geometric growth
/// of the gaps is treated as rounding noise around the repelling fixed point
/// of the tail map rather than genuine motion of the iterates.
pub const REPEL_TOL: f64 = 1e-10;

/// Hard cap on the number of factor indices computed per side.
pub const N_MAX: i64 = 256;

/// Values in [-NEG_CLAMP, 0) are clamped to 0 (and mirrored at 1); anything
/// further outside [0, 1] is a stochasticity error.
pub const NEG_CLAMP: f64 = 1e-12;

/// Slack applied to admissibility inequalities so that parameters computed
/// from closed forms or continued fractions are not rejected by rounding.
pub const BOUND_SLACK: f64 = 1e-12;

/// Tolerance for the `1 <-> -1` jump compatibility conditions.
pub const COMPAT_TOL: f64 = 1e-12;

/// A stay-probability `y(0)` below this is treated as the degenerate boundary
/// `alpha + x0 = 1`, where the spectral transforms divide by zero.
pub const DEGEN_TOL: f64 = 1e-12;

/// Options shared by both factorizations.
#[derive(Debug, Clone, Copy)]
pub struct FactorOptions {
    /// Successive-difference tolerance for freezing the factor tails.
    pub stab_tol: f64,
    /// Cap on computed indices per side.
    pub n_max: i64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            stab_tol: STAB_TOL,
            n_max: N_MAX,
        }
    }
}

fn clamp_unit(v: f64, index: i64, what: &'static str) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else if (-NEG_CLAMP..0.0).contains(&v) {
        Ok(0.0)
    } else if v > 1.0 && v <= 1.0 + NEG_CLAMP {
        Ok(1.0)
    } else {
        Err(Error::Stochasticity {
            index,
            what: what.to_string(),
            value: v,
        })
    }
}

fn guarded_div(num: f64, den: f64, index: i64, what: &'static str) -> Result<f64> {
    if den.abs() < DIV_GUARD {
        return Err(Error::SingularRecursion { index, what });
    }
    Ok(num / den)
}

/// The four factor coefficient sequences with frozen tails.
///
/// Indices run over the window actually computed; queries beyond it return
/// the frozen tail value of the corresponding side. `pos_frozen`/`neg_frozen`
/// are `None` when the recursion hit the cap without stabilizing.
#[derive(Debug, Clone)]
pub struct FactorSeqs {
    x: BTreeMap<i64, f64>,
    y: BTreeMap<i64, f64>,
    s: BTreeMap<i64, f64>,
    r: BTreeMap<i64, f64>,
    pos_end: i64,
    neg_end: i64,
    pub pos_frozen: Option<i64>,
    pub neg_frozen: Option<i64>,
}

impl FactorSeqs {
    fn key(&self, n: i64) -> i64 {
        if n > self.pos_end {
            self.pos_end
        } else if n < -self.neg_end {
            -self.neg_end
        } else {
            n
        }
    }

    pub fn x(&self, n: i64) -> f64 {
        self.x[&self.key(n)]
    }

    pub fn y(&self, n: i64) -> f64 {
        self.y[&self.key(n)]
    }

    pub fn s(&self, n: i64) -> f64 {
        self.s[&self.key(n)]
    }

    pub fn r(&self, n: i64) -> f64 {
        self.r[&self.key(n)]
    }

    /// Largest explicitly computed positive index.
    pub fn pos_end(&self) -> i64 {
        self.pos_end
    }

    /// Magnitude of the smallest explicitly computed negative index.
    pub fn neg_end(&self) -> i64 {
        self.neg_end
    }

    /// True when both sides stabilized before the cap.
    pub fn stabilized(&self) -> bool {
        self.pos_frozen.is_some() && self.neg_frozen.is_some()
    }

    /// Rows `(n, x, y, s, r)` over the computed window, ordered by index.
    pub fn rows(&self) -> Vec<(i64, f64, f64, f64, f64)> {
        self.x
            .keys()
            .map(|&n| (n, self.x[&n], self.y[&n], self.s[&n], self.r[&n]))
            .collect()
    }
}

/// Reflecting-first factorization data.
#[derive(Debug, Clone)]
pub struct RAFactors {
    /// Free down-probability parameter at state 0 of the absorbing factor.
    pub alpha: f64,
    pub seqs: FactorSeqs,
    /// Set when `alpha + x0 = 1` makes `y0 = 0`; the factorization itself is
    /// valid but spectral transforms based on it are undefined.
    pub degenerate: bool,
}

/// Absorbing-first factorization data.
#[derive(Debug, Clone)]
pub struct ARFactors {
    /// Down-probability `alpha~ = c(0)` of the absorbing factor at state 0.
    pub alpha_tilde: f64,
    pub seqs: FactorSeqs,
}

/// Admissibility report for the reflecting-first factorization.
#[derive(Debug, Clone)]
pub struct RAAdmissibility {
    pub h: f64,
    pub h_prime: f64,
    /// Whether any admissible `(alpha, x0)` exists, i.e. `H + H' <= 1`.
    pub feasible: bool,
    pub h_eval: CfEvaluation,
    pub h_prime_eval: CfEvaluation,
}

/// Escape weights and feasibility of the reflecting-first factorization.
pub fn ra_admissible(chain: &AlmostBDChain, tol: f64, max_iter: usize) -> Result<RAAdmissibility> {
    let h_eval = cfrac::eval_h(chain, tol, max_iter)?;
    let h_prime_eval = cfrac::eval_h_prime(chain, tol, max_iter)?;
    let (h, h_prime) = (h_eval.value, h_prime_eval.value);
    Ok(RAAdmissibility {
        h,
        h_prime,
        feasible: h + h_prime <= 1.0 + BOUND_SLACK,
        h_eval,
        h_prime_eval,
    })
}

/// Reflecting-first factorization of a pure birth-death chain at parameters
/// `(alpha, x0)`.
pub fn ra_factorize(
    chain: &AlmostBDChain,
    alpha: f64,
    x0: f64,
    opts: FactorOptions,
) -> Result<RAFactors> {
    if !chain.is_pure() {
        return Err(Error::Incompatible(
            "reflecting-first factorization requires a pure birth-death chain (no 1 <-> -1 jumps)"
                .into(),
        ));
    }
    let adm = ra_admissible(chain, CF_TOL, CF_MAX_ITER)?;
    if !adm.feasible {
        return Err(Error::BoundViolation(format!(
            "H + H' <= 1 fails: H = {:.17e}, H' = {:.17e}",
            adm.h, adm.h_prime
        )));
    }
    if alpha + BOUND_SLACK < adm.h_prime {
        return Err(Error::BoundViolation(format!(
            "alpha >= H' fails: alpha = {:.17e}, H' = {:.17e}",
            alpha, adm.h_prime
        )));
    }
    if x0 + BOUND_SLACK < adm.h {
        return Err(Error::BoundViolation(format!(
            "x0 >= H fails: x0 = {:.17e}, H = {:.17e}",
            x0, adm.h
        )));
    }
    if alpha + x0 > 1.0 + BOUND_SLACK {
        return Err(Error::BoundViolation(format!(
            "alpha + x0 <= 1 fails: alpha + x0 = {:.17e}",
            alpha + x0
        )));
    }
    let win = chain.window_extent();
    let stab = opts.stab_tol;
    if !(stab > 0.0) {
        return Err(Error::Config(format!(
            "stability tolerance must be positive, got {stab}"
        )));
    }

    let mut y0 = clamp_unit(1.0 - alpha - x0, 0, "y")?;
    // boundary alpha + x0 = 1 up to roundoff: make y(0) an exact zero so the
    // transformed chain is emitted cleanly, and flag the degeneracy
    if y0 < DEGEN_TOL {
        y0 = 0.0;
    }
    let mut x = BTreeMap::from([(0i64, x0)]);
    let mut y = BTreeMap::from([(0i64, y0)]);
    let mut s = BTreeMap::from([(0i64, 1.0)]);
    let mut r = BTreeMap::from([(0i64, 0.0)]);

    // positive side: s(1) = a(0)/x(0), then r = 1-s, y = c(n)/r, x = 1-y
    let mut pos_frozen = None;
    let mut sv = clamp_unit(guarded_div(chain.a(0), x0, 0, "x")?, 1, "s")?;
    let mut n = 1i64;
    let mut gap_first = f64::INFINITY;
    let pos_end = loop {
        let rv = clamp_unit(1.0 - sv, n, "r")?;
        let yv = clamp_unit(guarded_div(chain.c(n), rv, n, "r")?, n, "y")?;
        let xv = clamp_unit(1.0 - yv, n, "x")?;
        s.insert(n, sv);
        r.insert(n, rv);
        y.insert(n, yv);
        x.insert(n, xv);
        if n >= win + 2 {
            let gap = (sv - s[&(n - 1)]).abs().max((xv - x[&(n - 1)]).abs());
            if gap < stab {
                pos_frozen = Some(n);
                break n;
            }
            if n == win + 2 {
                gap_first = gap;
            } else if n == win + 3 && gap_first < REPEL_TOL && gap > 2.0 * gap_first {
                // seed noise amplified by the repelling tail map: pin the
                // tail to the earliest post-window pair, for which
                // a = x * s holds exactly
                let (xf, yf) = (x[&(win + 1)], y[&(win + 1)]);
                let (sf, rf) = (s[&(win + 2)], r[&(win + 2)]);
                for k in (win + 2)..=n {
                    x.insert(k, xf);
                    y.insert(k, yf);
                    s.insert(k, sf);
                    r.insert(k, rf);
                }
                pos_frozen = Some(win + 2);
                break n;
            }
        }
        if n >= opts.n_max {
            break n;
        }
        sv = clamp_unit(guarded_div(chain.a(n), xv, n, "x")?, n + 1, "s")?;
        n += 1;
    };

    // negative side: s(-1) = c(0)/alpha, then r = 1-s, y = a(-n)/r, x = 1-y
    let mut neg_frozen = None;
    let mut sv = clamp_unit(guarded_div(chain.c(0), alpha, 0, "alpha")?, -1, "s")?;
    let mut n = 1i64;
    let mut gap_first = f64::INFINITY;
    let neg_end = loop {
        let rv = clamp_unit(1.0 - sv, -n, "r")?;
        let yv = clamp_unit(guarded_div(chain.a(-n), rv, -n, "r")?, -n, "y")?;
        let xv = clamp_unit(1.0 - yv, -n, "x")?;
        s.insert(-n, sv);
        r.insert(-n, rv);
        y.insert(-n, yv);
        x.insert(-n, xv);
        if n >= win + 2 {
            let gap = (sv - s[&(-n + 1)]).abs().max((xv - x[&(-n + 1)]).abs());
            if gap < stab {
                neg_frozen = Some(n);
                break n;
            }
            if n == win + 2 {
                gap_first = gap;
            } else if n == win + 3 && gap_first < REPEL_TOL && gap > 2.0 * gap_first {
                // same repelling-fixed-point pinning as the positive side;
                // here c = x * s holds exactly for the pinned pair
                let (xf, yf) = (x[&(-win - 1)], y[&(-win - 1)]);
                let (sf, rf) = (s[&(-win - 2)], r[&(-win - 2)]);
                for k in (win + 2)..=n {
                    x.insert(-k, xf);
                    y.insert(-k, yf);
                    s.insert(-k, sf);
                    r.insert(-k, rf);
                }
                neg_frozen = Some(win + 2);
                break n;
            }
        }
        if n >= opts.n_max {
            break n;
        }
        sv = clamp_unit(guarded_div(chain.c(-n), xv, -n, "x")?, -n - 1, "s")?;
        n += 1;
    };

    Ok(RAFactors {
        alpha,
        degenerate: y0 == 0.0,
        seqs: FactorSeqs {
            x,
            y,
            s,
            r,
            pos_end,
            neg_end,
            pos_frozen,
            neg_frozen,
        },
    })
}

/// Rebuild `(a_n, b_n, c_n)` of the original chain from its factors.
pub fn ra_reconstruct(f: &RAFactors, n: i64) -> (f64, f64, f64) {
    let q = &f.seqs;
    if n == 0 {
        (
            q.x(0) * q.s(1),
            q.y(0) + q.x(0) * q.r(1) + f.alpha * q.r(-1),
            f.alpha * q.s(-1),
        )
    } else if n > 0 {
        (
            q.x(n) * q.s(n + 1),
            q.y(n) * q.s(n) + q.x(n) * q.r(n + 1),
            q.y(n) * q.r(n),
        )
    } else {
        let m = -n;
        (
            q.y(-m) * q.r(-m),
            q.y(-m) * q.s(-m) + q.x(-m) * q.r(-m - 1),
            q.x(-m) * q.s(-m - 1),
        )
    }
}

fn trim_window(mut w: BTreeMap<i64, f64>, left: f64, right: f64) -> BTreeMap<i64, f64> {
    w.retain(|&k, &mut v| v != if k < 0 { left } else { right });
    w
}

/// Darboux transform of the reflecting-first factorization: the chain of
/// `P_A * P_R`, an almost birth-death chain with `1 <-> -1` jumps
/// `d_plus = r(1) alpha`, `d_minus = r(-1) x(0)`.
pub fn darboux_ra(f: &RAFactors) -> (AlmostBDChain, BlockChain) {
    let q = &f.seqs;
    let n_end = q.pos_end().max(q.neg_end()) + 1;
    let mut aw = BTreeMap::new();
    let mut bw = BTreeMap::new();
    let mut cw = BTreeMap::new();
    aw.insert(0, q.x(0));
    bw.insert(0, q.y(0));
    cw.insert(0, f.alpha);
    bw.insert(-1, q.r(-1) * f.alpha + q.s(-1) * q.y(-1));
    aw.insert(-1, q.y(0) * q.r(-1));
    for n in 1..=n_end {
        aw.insert(n, q.s(n) * q.x(n));
        bw.insert(n, q.r(n) * q.x(n - 1) + q.s(n) * q.y(n));
        cw.insert(n, q.r(n) * q.y(n - 1));
        aw.insert(-n - 1, q.y(-n) * q.r(-n - 1));
        cw.insert(-n, q.s(-n) * q.x(-n));
        if n >= 2 {
            bw.insert(-n, q.r(-n) * q.x(-n + 1) + q.s(-n) * q.y(-n));
        }
    }
    let (a_l, a_r) = (aw[&(-n_end - 1)], aw[&n_end]);
    let (b_l, b_r) = (bw[&(-n_end)], bw[&n_end]);
    let (c_l, c_r) = (cw[&(-n_end)], cw[&n_end]);
    let chain = AlmostBDChain {
        base: BDChain {
            a: CoeffSeq::with_window(a_l, trim_window(aw, a_l, a_r), a_r),
            b: CoeffSeq::with_window(b_l, trim_window(bw, b_l, b_r), b_r),
            c: CoeffSeq::with_window(c_l, trim_window(cw, c_l, c_r), c_r),
        },
        d_plus: q.r(1) * f.alpha,
        d_minus: q.r(-1) * q.x(0),
    };
    let blocks = relabel_to_blocks(chain.clone());
    (chain, blocks)
}

fn y_block_at(seqs: &FactorSeqs, alpha: f64, n: usize) -> Mat2 {
    let n = n as i64;
    if n == 0 {
        mat2(seqs.y(0), alpha, 0.0, seqs.y(-1))
    } else {
        diag2(seqs.y(n), seqs.y(-n - 1))
    }
}

fn s_block_at(seqs: &FactorSeqs, n: usize) -> Mat2 {
    let n = n as i64;
    if n == 0 {
        mat2(1.0, 0.0, seqs.r(-1), seqs.s(-1))
    } else {
        diag2(seqs.s(n), seqs.s(-n - 1))
    }
}

fn x_block_at(seqs: &FactorSeqs, n: usize) -> Mat2 {
    let n = n as i64;
    diag2(seqs.x(n), seqs.x(-n - 1))
}

fn r_block_at(seqs: &FactorSeqs, n: usize) -> Mat2 {
    let n = n as i64;
    if n == 0 {
        Mat2::zeros()
    } else {
        diag2(seqs.r(n), seqs.r(-n - 1))
    }
}

impl RAFactors {
    /// Upper bidiagonal reflecting factor blocks: diagonal `Y_n`,
    /// superdiagonal `X_n`.
    pub fn y_block(&self, n: usize) -> Mat2 {
        y_block_at(&self.seqs, self.alpha, n)
    }

    pub fn x_block(&self, n: usize) -> Mat2 {
        x_block_at(&self.seqs, n)
    }

    /// Lower bidiagonal absorbing factor blocks: diagonal `S_n`,
    /// subdiagonal `R_n` (R_0 is unused and returned as zero).
    pub fn s_block(&self, n: usize) -> Mat2 {
        s_block_at(&self.seqs, n)
    }

    pub fn r_block(&self, n: usize) -> Mat2 {
        r_block_at(&self.seqs, n)
    }
}

impl ARFactors {
    pub fn y_block(&self, n: usize) -> Mat2 {
        y_block_at(&self.seqs, self.alpha_tilde, n)
    }

    pub fn x_block(&self, n: usize) -> Mat2 {
        x_block_at(&self.seqs, n)
    }

    pub fn s_block(&self, n: usize) -> Mat2 {
        s_block_at(&self.seqs, n)
    }

    pub fn r_block(&self, n: usize) -> Mat2 {
        r_block_at(&self.seqs, n)
    }
}

/// Compatibility report for the absorbing-first factorization.
#[derive(Debug, Clone)]
pub struct ArCompatibility {
    /// Jump values forced by the factorization: `c(0) c(1)/b(0)` and
    /// `a(-1) a(0)/b(0)`.
    pub d_plus_expected: f64,
    pub d_minus_expected: f64,
    /// Whether the chain's jumps match the forced values within tolerance.
    pub d_match: bool,
    /// Whether `b(0) > max(a(-1) a(0), c(0) c(1))` holds.
    pub b0_dominates: bool,
}

impl ArCompatibility {
    pub fn ok(&self) -> bool {
        self.d_match && self.b0_dominates
    }
}

/// Check the `1 <-> -1` jump conditions required by the absorbing-first
/// factorization. Errors only when `b(0)` vanishes.
pub fn ar_compatible(chain: &AlmostBDChain) -> Result<ArCompatibility> {
    let b0 = chain.b(0);
    if b0.abs() < DIV_GUARD {
        return Err(Error::Degenerate(
            "absorbing-first factorization needs b(0) > 0".into(),
        ));
    }
    let d_plus_expected = chain.c(0) * chain.c(1) / b0;
    let d_minus_expected = chain.a(-1) * chain.a(0) / b0;
    Ok(ArCompatibility {
        d_plus_expected,
        d_minus_expected,
        d_match: (chain.d_plus - d_plus_expected).abs() < COMPAT_TOL
            && (chain.d_minus - d_minus_expected).abs() < COMPAT_TOL,
        b0_dominates: b0 > chain.a(-1) * chain.a(0) && b0 > chain.c(0) * chain.c(1),
    })
}

/// Absorbing-first factorization (parameter free, unique when it exists).
pub fn ar_factorize(chain: &AlmostBDChain, opts: FactorOptions) -> Result<ARFactors> {
    let compat = ar_compatible(chain)?;
    if !compat.d_match {
        return Err(Error::Incompatible(format!(
            "1 <-> -1 jumps must equal c(0)c(1)/b(0) = {:.17e} and a(-1)a(0)/b(0) = {:.17e}; \
             chain has d_plus = {:.17e}, d_minus = {:.17e}",
            compat.d_plus_expected, compat.d_minus_expected, chain.d_plus, chain.d_minus
        )));
    }
    if !compat.b0_dominates {
        return Err(Error::BoundViolation(format!(
            "b(0) > max(a(-1)a(0), c(0)c(1)) fails: b(0) = {:.17e}",
            chain.b(0)
        )));
    }
    let ht = cfrac::eval_h_tilde(chain, CF_TOL, CF_MAX_ITER)?.value;
    let htp = cfrac::eval_h_tilde_prime(chain, CF_TOL, CF_MAX_ITER)?.value;
    if chain.b(0) + BOUND_SLACK <= ht.max(htp) {
        return Err(Error::BoundViolation(format!(
            "b(0) > max(interior escape weights) fails: b(0) = {:.17e}, \
             weights = ({:.17e}, {:.17e})",
            chain.b(0),
            ht,
            htp
        )));
    }
    let stab = opts.stab_tol;
    if !(stab > 0.0) {
        return Err(Error::Config(format!(
            "stability tolerance must be positive, got {stab}"
        )));
    }
    let win = chain.window_extent();
    let y0 = chain.b(0);
    let mut x = BTreeMap::from([(0i64, chain.a(0))]);
    let mut y = BTreeMap::from([(0i64, y0)]);
    let mut s = BTreeMap::from([(0i64, 1.0)]);
    let mut r = BTreeMap::from([(0i64, 0.0)]);

    // positive side: r(n) = c(n)/y(n-1), s = 1-r, x = a(n)/s, y = 1-x
    let mut yprev = y0;
    let mut n = 1i64;
    let (mut pos_frozen, mut neg_frozen) = (None, None);
    let pos_end = loop {
        let rv = clamp_unit(guarded_div(chain.c(n), yprev, n, "y")?, n, "r")?;
        let sv = clamp_unit(1.0 - rv, n, "s")?;
        let xv = clamp_unit(guarded_div(chain.a(n), sv, n, "s")?, n, "x")?;
        let yv = clamp_unit(1.0 - xv, n, "y")?;
        r.insert(n, rv);
        s.insert(n, sv);
        x.insert(n, xv);
        y.insert(n, yv);
        if n >= win + 2
            && (xv - x[&(n - 1)]).abs() < stab
            && (rv - r[&(n - 1)]).abs() < stab
        {
            pos_frozen = Some(n);
            break n;
        }
        if n >= opts.n_max {
            break n;
        }
        yprev = yv;
        n += 1;
    };

    // negative side: r(-n) = a(-n)/y(-n+1), s = 1-r, x = c(-n)/s, y = 1-x
    let mut yprev = y0;
    let mut n = 1i64;
    let neg_end = loop {
        let rv = clamp_unit(guarded_div(chain.a(-n), yprev, -n, "y")?, -n, "r")?;
        let sv = clamp_unit(1.0 - rv, -n, "s")?;
        let xv = clamp_unit(guarded_div(chain.c(-n), sv, -n, "s")?, -n, "x")?;
        let yv = clamp_unit(1.0 - xv, -n, "y")?;
        r.insert(-n, rv);
        s.insert(-n, sv);
        x.insert(-n, xv);
        y.insert(-n, yv);
        if n >= win + 2
            && (xv - x[&(-n + 1)]).abs() < stab
            && (rv - r[&(-n + 1)]).abs() < stab
        {
            neg_frozen = Some(n);
            break n;
        }
        if n >= opts.n_max {
            break n;
        }
        yprev = yv;
        n += 1;
    };

    Ok(ARFactors {
        alpha_tilde: chain.c(0),
        seqs: FactorSeqs {
            x,
            y,
            s,
            r,
            pos_end,
            neg_end,
            pos_frozen,
            neg_frozen,
        },
    })
}

/// Blocks `(A_n, B_n, C_n)` of the product `P_A~ * P_R~`, which must
/// reproduce the original block chain (C_0 is returned as `None`).
pub fn ar_reconstruct_block(f: &ARFactors, n: usize) -> (Mat2, Mat2, Option<Mat2>) {
    let a = f.s_block(n) * f.x_block(n);
    let b = if n == 0 {
        f.s_block(0) * f.y_block(0)
    } else {
        f.s_block(n) * f.y_block(n) + f.r_block(n) * f.x_block(n - 1)
    };
    let c = (n >= 1).then(|| f.r_block(n) * f.y_block(n - 1));
    (a, b, c)
}

/// Darboux transform of the absorbing-first factorization: the chain of
/// `P_R~ * P_A~`, a pure birth-death chain.
pub fn darboux_ar(f: &ARFactors) -> (BDChain, BlockChain) {
    let q = &f.seqs;
    let n_end = q.pos_end().max(q.neg_end()) + 1;
    let mut aw = BTreeMap::new();
    let mut bw = BTreeMap::new();
    let mut cw = BTreeMap::new();
    aw.insert(0, q.x(0) * q.s(1));
    cw.insert(0, f.alpha_tilde * q.s(-1));
    bw.insert(0, q.y(0) + q.x(0) * q.r(1) + f.alpha_tilde * q.r(-1));
    for n in 1..=n_end {
        aw.insert(n, q.x(n) * q.s(n + 1));
        cw.insert(n, q.y(n) * q.r(n));
        bw.insert(n, q.y(n) * q.s(n) + q.x(n) * q.r(n + 1));
        aw.insert(-n, q.y(-n) * q.r(-n));
        cw.insert(-n, q.x(-n) * q.s(-n - 1));
        bw.insert(-n, q.y(-n) * q.s(-n) + q.x(-n) * q.r(-n - 1));
    }
    let (a_l, a_r) = (aw[&-n_end], aw[&n_end]);
    let (b_l, b_r) = (bw[&-n_end], bw[&n_end]);
    let (c_l, c_r) = (cw[&-n_end], cw[&n_end]);
    let chain = BDChain {
        a: CoeffSeq::with_window(a_l, trim_window(aw, a_l, a_r), a_r),
        b: CoeffSeq::with_window(b_l, trim_window(bw, b_l, b_r), b_r),
        c: CoeffSeq::with_window(c_l, trim_window(cw, c_l, c_r), c_r),
    };
    let blocks = relabel_to_blocks(chain.clone().into());
    (chain, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfrac::{h_closed, h_prime_closed, j_convergents};
    use crate::chain::validate_stochastic;

    fn rw() -> AlmostBDChain {
        BDChain::constant(0.125, 0.75, 0.125).into()
    }

    #[test]
    fn critical_seed_freezes_immediately() {
        let ch = rw();
        let (h, hp) = (h_closed(0.125, 0.125), h_prime_closed(0.125, 0.125));
        let f = ra_factorize(&ch, hp, h, FactorOptions::default()).unwrap();
        // window extent 0: first admissible freeze index is 2. Freezing there
        // is what keeps the repelling-fixed-point seed from drifting.
        assert_eq!(f.seqs.pos_frozen, Some(2));
        assert_eq!(f.seqs.neg_frozen, Some(2));
        // at the critical seed s = 1 - H' on the positive side
        assert!((f.seqs.s(1) - (1.0 - hp)).abs() < 1e-13);
        assert!((f.seqs.s(200) - (1.0 - hp)).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_round_trip() {
        let ch = rw();
        let (h, hp) = (h_closed(0.125, 0.125), h_prime_closed(0.125, 0.125));
        let slack = 1.0 - h - hp;
        for fi in [0.0, 0.5, 1.0] {
            for fj in [0.0, 0.5, 1.0] {
                let alpha = hp + fi * slack / 2.0;
                let x0 = h + fj * slack / 2.0;
                let f = ra_factorize(&ch, alpha, x0, FactorOptions::default()).unwrap();
                for n in -40..=40 {
                    let (a, b, c) = ra_reconstruct(&f, n);
                    assert!((a - ch.a(n)).abs() < 1e-12, "a at {n}");
                    assert!((b - ch.b(n)).abs() < 1e-12, "b at {n}");
                    assert!((c - ch.c(n)).abs() < 1e-12, "c at {n}");
                }
            }
        }
    }

    #[test]
    fn boundary_parameters_set_degenerate_flag() {
        let ch = rw();
        let (h, hp) = (h_closed(0.125, 0.125), h_prime_closed(0.125, 0.125));
        let slack = 1.0 - h - hp;
        let f = ra_factorize(&ch, hp + slack / 2.0, h + slack / 2.0, FactorOptions::default())
            .unwrap();
        assert!(f.degenerate);
        assert_eq!(f.seqs.y(0), 0.0);
        let (a, b, c) = ra_reconstruct(&f, 0);
        assert!((a - 0.125).abs() < 1e-13);
        assert!((b - 0.75).abs() < 1e-13);
        assert!((c - 0.125).abs() < 1e-13);
    }

    #[test]
    fn inadmissible_parameters_are_rejected_by_name() {
        let ch = rw();
        let (h, hp) = (h_closed(0.125, 0.125), h_prime_closed(0.125, 0.125));
        match ra_factorize(&ch, hp - 0.01, h, FactorOptions::default()) {
            Err(Error::BoundViolation(msg)) => assert!(msg.contains("alpha >= H'")),
            other => panic!("expected bound violation, got {other:?}"),
        }
        match ra_factorize(&ch, 0.9, 0.2, FactorOptions::default()) {
            Err(Error::BoundViolation(msg)) => assert!(msg.contains("alpha + x0 <= 1")),
            other => panic!("expected bound violation, got {other:?}"),
        }
        let almost = AlmostBDChain::ar_boundary_example(0.125, 0.75, 0.125).unwrap();
        assert!(matches!(
            ra_factorize(&almost, hp, h, FactorOptions::default()),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn darboux_ra_rows_are_stochastic() {
        let ch = rw();
        let (h, hp) = (h_closed(0.125, 0.125), h_prime_closed(0.125, 0.125));
        let f = ra_factorize(&ch, hp + 0.05, h + 0.05, FactorOptions::default()).unwrap();
        let (pt, _) = darboux_ra(&f);
        assert!(pt.d_plus > 0.0 && pt.d_minus > 0.0);
        assert!(validate_stochastic(&pt, 40).is_empty());
        // the transform must itself satisfy the absorbing-first compatibility
        let compat = ar_compatible(&pt).unwrap();
        assert!(
            compat.d_match,
            "transformed jumps {} vs {}",
            pt.d_plus, compat.d_plus_expected
        );
    }

    #[test]
    fn ar_factor_values_match_convergent_closed_forms() {
        for (a, b, c) in [(0.125, 0.75, 0.125), (0.1, 0.7, 0.2)] {
            let ch = AlmostBDChain::ar_boundary_example(a, b, c).unwrap();
            assert!(ar_compatible(&ch).unwrap().ok());
            let f = ar_factorize(&ch, FactorOptions::default()).unwrap();
            let js = j_convergents(a, c, 80);
            let q = &f.seqs;
            for n in 0..=32i64 {
                let expect = a / (1.0 - js[2 * n as usize]);
                assert!((q.x(n) - expect).abs() < 1e-12, "x({n}) chain ({a},{c})");
                if n >= 1 {
                    assert!((q.r(n) - js[2 * n as usize]).abs() < 1e-12, "r({n})");
                    assert!((q.x(-n) - js[2 * n as usize + 1]).abs() < 1e-12, "x(-{n})");
                    let expect_r = a / (1.0 - js[2 * n as usize - 1]);
                    assert!((q.r(-n) - expect_r).abs() < 1e-12, "r(-{n})");
                }
            }
        }
    }

    #[test]
    fn ar_requires_compatible_jumps() {
        let ch = rw();
        match ar_factorize(&ch, FactorOptions::default()) {
            Err(Error::Incompatible(msg)) => assert!(msg.contains("1 <-> -1")),
            other => panic!("expected incompatibility, got {other:?}"),
        }
    }

    #[test]
    fn darboux_ar_is_stochastic_and_matches_closed_forms() {
        let a = 0.125;
        let ch = AlmostBDChain::ar_boundary_example(a, 0.75, a).unwrap();
        let f = ar_factorize(&ch, FactorOptions::default()).unwrap();
        let (hat, _) = darboux_ar(&f);
        assert!(validate_stochastic(&hat.clone().into(), 40).is_empty());
        // up probabilities: a (1 - j_{2n+2})/(1 - j_{2n}) for n >= 0
        let js = j_convergents(a, a, 90);
        for n in 0..20i64 {
            let k = n as usize;
            let expect = a * (1.0 - js[2 * k + 2]) / (1.0 - js[2 * k]);
            assert!((hat.a(n) - expect).abs() < 1e-13, "hat a({n})");
        }
        // down probability at 0 comes from the block product and is nonzero
        let expect_c0 = a * 0.75 / (1.0 - a);
        assert!((hat.c(0) - expect_c0).abs() < 1e-14);
        for n in 1..20i64 {
            let k = n as usize;
            let j = js[2 * k];
            let expect = j * (1.0 - a - j) / (1.0 - j);
            assert!((hat.c(n) - expect).abs() < 1e-13, "hat c({n})");
            let jm = js[2 * k + 1];
            let expect_neg = jm * (1.0 - a - jm) / (1.0 - jm);
            assert!((hat.c(-n) - expect_neg).abs() < 1e-13, "hat c(-{n})");
        }
    }

    #[test]
    fn ar_block_products_reproduce_block_chain() {
        let ch = AlmostBDChain::ar_boundary_example(0.1, 0.7, 0.2).unwrap();
        let f = ar_factorize(&ch, FactorOptions::default()).unwrap();
        let blocks = relabel_to_blocks(ch.clone());
        for n in 0..10usize {
            let (a_blk, b_blk, c_blk) = ar_reconstruct_block(&f, n);
            assert!(crate::mat2::max_abs_diff(&a_blk, &blocks.a(n)) < 1e-13, "A_{n}");
            assert!(crate::mat2::max_abs_diff(&b_blk, &blocks.b(n)) < 1e-13, "B_{n}");
            if let Some(c_blk) = c_blk {
                assert!(crate::mat2::max_abs_diff(&c_blk, &blocks.c(n)) < 1e-13, "C_{n}");
            }
        }
    }

    #[test]
    fn block_factor_products_reproduce_block_chain() {
        // P = P_R P_A blockwise: B_n = Y_n S_n + X_n R_{n+1} off the seam,
        // A_n = X_n S_{n+1}, C_n = Y_n R_n.
        let ch = rw();
        let (h, hp) = (h_closed(0.125, 0.125), h_prime_closed(0.125, 0.125));
        let f = ra_factorize(&ch, hp + 0.02, h + 0.03, FactorOptions::default()).unwrap();
        let blocks = relabel_to_blocks(ch.clone());
        for n in 0..10usize {
            let a_blk = f.x_block(n) * f.s_block(n + 1);
            let b_blk = f.y_block(n) * f.s_block(n) + f.x_block(n) * f.r_block(n + 1);
            assert!(crate::mat2::max_abs_diff(&a_blk, &blocks.a(n)) < 1e-13, "A_{n}");
            assert!(crate::mat2::max_abs_diff(&b_blk, &blocks.b(n)) < 1e-13, "B_{n}");
            if n >= 1 {
                let c_blk = f.y_block(n) * f.r_block(n);
                assert!(crate::mat2::max_abs_diff(&c_blk, &blocks.c(n)) < 1e-13, "C_{n}");
            }
        }
    }
}
