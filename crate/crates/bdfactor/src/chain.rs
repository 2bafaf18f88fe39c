//! Birth-death chains on the integers and their 2x2 block relabeling.
//!
//! States are all integers; a pure chain moves `n -> n+1` with probability
//! `a_n`, stays with `b_n`, moves `n -> n-1` with `c_n`. The almost variant
//! adds the two extra jumps `1 -> -1` (`d_plus`) and `-1 -> 1` (`d_minus`).
//! Folding the negative states onto the positive ones (state `i >= 0` becomes
//! component 0 of block `i`; state `i < 0` becomes component 1 of block
//! `-i-1`) turns the chain into a block tridiagonal operator with 2x2 blocks,
//! which is the form all spectral routines consume.

use crate::error::{Error, Result};
use crate::mat2::{diag2, mat2, Mat2};
use crate::seq::CoeffSeq;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Mutex;

/// Guard below which a divisor in a coefficient recursion is treated as zero.
pub const DIV_GUARD: f64 = 1e-14;

/// Tolerance on row sums when validating stochasticity.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Pure birth-death chain: up/stay/down probabilities per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BDChain {
    pub a: CoeffSeq,
    pub b: CoeffSeq,
    pub c: CoeffSeq,
}

impl BDChain {
    /// Chain with state-independent probabilities.
    pub fn constant(a: f64, b: f64, c: f64) -> Self {
        BDChain {
            a: CoeffSeq::constant(a),
            b: CoeffSeq::constant(b),
            c: CoeffSeq::constant(c),
        }
    }

    pub fn a(&self, n: i64) -> f64 {
        self.a.get(n)
    }

    pub fn b(&self, n: i64) -> f64 {
        self.b.get(n)
    }

    pub fn c(&self, n: i64) -> f64 {
        self.c.get(n)
    }

    /// Largest |index| where any coefficient differs from its tail value.
    pub fn window_extent(&self) -> i64 {
        self.a
            .window_extent()
            .max(self.b.window_extent())
            .max(self.c.window_extent())
    }
}

/// Birth-death chain with the extra `1 <-> -1` jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ChainRepr", into = "ChainRepr")]
pub struct AlmostBDChain {
    pub base: BDChain,
    pub d_plus: f64,
    pub d_minus: f64,
}

/// Flat JSON shape of a chain: `{a, b, c, d_plus?, d_minus?}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainRepr {
    a: CoeffSeq,
    b: CoeffSeq,
    c: CoeffSeq,
    #[serde(default)]
    d_plus: f64,
    #[serde(default)]
    d_minus: f64,
}

impl From<ChainRepr> for AlmostBDChain {
    fn from(r: ChainRepr) -> Self {
        AlmostBDChain {
            base: BDChain {
                a: r.a,
                b: r.b,
                c: r.c,
            },
            d_plus: r.d_plus,
            d_minus: r.d_minus,
        }
    }
}

impl From<AlmostBDChain> for ChainRepr {
    fn from(ch: AlmostBDChain) -> Self {
        ChainRepr {
            a: ch.base.a,
            b: ch.base.b,
            c: ch.base.c,
            d_plus: ch.d_plus,
            d_minus: ch.d_minus,
        }
    }
}

impl From<BDChain> for AlmostBDChain {
    fn from(base: BDChain) -> Self {
        AlmostBDChain {
            base,
            d_plus: 0.0,
            d_minus: 0.0,
        }
    }
}

impl AlmostBDChain {
    pub fn a(&self, n: i64) -> f64 {
        self.base.a(n)
    }

    pub fn b(&self, n: i64) -> f64 {
        self.base.b(n)
    }

    pub fn c(&self, n: i64) -> f64 {
        self.base.c(n)
    }

    /// True when the extra jumps vanish and the chain is an ordinary
    /// birth-death chain.
    pub fn is_pure(&self) -> bool {
        self.d_plus == 0.0 && self.d_minus == 0.0
    }

    /// Largest |index| where any coefficient differs from its tail value
    /// (the extra jumps live at |index| = 1 and count when nonzero).
    pub fn window_extent(&self) -> i64 {
        let d_ext = if self.is_pure() { 0 } else { 1 };
        self.base.window_extent().max(d_ext)
    }

    /// Row sum of the transition matrix at state `i`.
    pub fn row_sum(&self, i: i64) -> f64 {
        let d = match i {
            1 => self.d_plus,
            -1 => self.d_minus,
            _ => 0.0,
        };
        self.a(i) + self.b(i) + self.c(i) + d
    }

    /// Hard validation: the first entry-range or row-sum finding across the
    /// exceptional window (plus margin) becomes an error.
    pub fn validate(&self) -> Result<()> {
        let range = self.window_extent() + 2;
        if let Some(issue) = validate_stochastic(self, range).into_iter().next() {
            return Err(Error::Stochasticity {
                index: issue.index,
                what: issue.what,
                value: issue.value,
            });
        }
        Ok(())
    }

    /// Constant chain with the boundary window and `1 <-> -1` jumps that make
    /// the absorbing-first factorization compatible:
    /// `a(-1) = ab/(1-c)`, `c(1) = bc/(1-a)`, `d_plus = c^2/(1-a)`,
    /// `d_minus = a^2/(1-c)`.
    pub fn ar_boundary_example(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0 && b >= 0.0) || (a + b + c - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Validation(format!(
                "need a,c > 0, b >= 0, a+b+c = 1; got a={a}, b={b}, c={c}"
            )));
        }
        if 1.0 - a < DIV_GUARD || 1.0 - c < DIV_GUARD {
            return Err(Error::Degenerate(
                "boundary example needs a < 1 and c < 1".into(),
            ));
        }
        let mut aw = BTreeMap::new();
        aw.insert(-1, a * b / (1.0 - c));
        let mut cw = BTreeMap::new();
        cw.insert(1, b * c / (1.0 - a));
        let base = BDChain {
            a: CoeffSeq::with_window(a, aw, a),
            b: CoeffSeq::constant(b),
            c: CoeffSeq::with_window(c, cw, c),
        };
        Ok(AlmostBDChain {
            base,
            d_plus: c * c / (1.0 - a),
            d_minus: a * a / (1.0 - c),
        })
    }
}

/// One finding of [`validate_stochastic`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticityIssue {
    pub index: i64,
    pub what: String,
    pub value: f64,
}

/// Report-only stochasticity check over states |i| <= range: flags entries
/// outside [0, 1] and row sums off 1 beyond [`ROW_SUM_TOL`]. An empty report
/// means the restriction passes.
pub fn validate_stochastic(chain: &AlmostBDChain, range: i64) -> Vec<StochasticityIssue> {
    let mut issues = Vec::new();
    let entry = |issues: &mut Vec<StochasticityIssue>, index: i64, what: &str, value: f64| {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            issues.push(StochasticityIssue {
                index,
                what: what.to_string(),
                value,
            });
        }
    };
    for i in -range..=range {
        entry(&mut issues, i, "a", chain.a(i));
        entry(&mut issues, i, "b", chain.b(i));
        entry(&mut issues, i, "c", chain.c(i));
        if i == 1 {
            entry(&mut issues, i, "d_plus", chain.d_plus);
        }
        if i == -1 {
            entry(&mut issues, i, "d_minus", chain.d_minus);
        }
        let rs = chain.row_sum(i);
        if (rs - 1.0).abs() > ROW_SUM_TOL {
            issues.push(StochasticityIssue {
                index: i,
                what: "row_sum".to_string(),
                value: rs,
            });
        }
    }
    issues
}

/// Potential (reversibility) coefficients: pi(0) = 1,
/// pi(n+1) = pi(n) a(n)/c(n+1), pi(-n-1) = pi(-n) c(-n)/a(-n-1).
#[derive(Debug, Clone)]
pub struct PotentialCoeffs {
    pi: BTreeMap<i64, f64>,
}

impl PotentialCoeffs {
    /// Scalar coefficient at state `n`; errors if outside the computed range.
    pub fn pi(&self, n: i64) -> Result<f64> {
        self.pi.get(&n).copied().ok_or_else(|| {
            Error::Validation(format!("potential coefficient pi({n}) outside computed range"))
        })
    }

    /// Block norm-matrix seed `diag(pi(n), pi(-n-1))`.
    pub fn block(&self, n: usize) -> Result<Mat2> {
        let n = n as i64;
        Ok(diag2(self.pi(n)?, self.pi(-n - 1)?))
    }

    /// All computed coefficients, ordered by state.
    pub fn entries(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.pi.iter().map(|(&k, &v)| (k, v))
    }
}

/// Compute potential coefficients for |n| <= range.
pub fn potential_coeffs(chain: &AlmostBDChain, range: i64) -> Result<PotentialCoeffs> {
    let mut pi = BTreeMap::new();
    pi.insert(0, 1.0);
    let mut cur = 1.0;
    for n in 0..range {
        let den = chain.c(n + 1);
        if den.abs() < DIV_GUARD {
            return Err(Error::SingularRecursion {
                index: n + 1,
                what: "potential recursion divides by vanishing down-probability",
            });
        }
        cur *= chain.a(n) / den;
        pi.insert(n + 1, cur);
    }
    cur = 1.0;
    for n in 0..range {
        let den = chain.a(-n - 1);
        if den.abs() < DIV_GUARD {
            return Err(Error::SingularRecursion {
                index: -n - 1,
                what: "potential recursion divides by vanishing up-probability",
            });
        }
        cur *= chain.c(-n) / den;
        pi.insert(-n - 1, cur);
    }
    Ok(PotentialCoeffs { pi })
}

/// Block tridiagonal form of an (almost) birth-death chain, with lazily
/// memoized 2x2 blocks. Filling is idempotent (the same block is always
/// recomputed to the same bits), so concurrent access only costs a lock.
#[derive(Debug)]
pub struct BlockChain {
    chain: AlmostBDChain,
    cache: Mutex<BTreeMap<usize, (Mat2, Mat2, Mat2)>>,
}

impl BlockChain {
    fn compute(&self, n: usize) -> (Mat2, Mat2, Mat2) {
        let ch = &self.chain;
        let n_i = n as i64;
        if n == 0 {
            // C_0 is never used; keep zeros as a placeholder.
            let b0 = mat2(ch.b(0), ch.c(0), ch.a(-1), ch.b(-1));
            let a0 = mat2(ch.a(0), 0.0, ch.d_minus, ch.c(-1));
            return (a0, b0, Mat2::zeros());
        }
        let a = diag2(ch.a(n_i), ch.c(-n_i - 1));
        let b = diag2(ch.b(n_i), ch.b(-n_i - 1));
        let c = if n == 1 {
            mat2(ch.c(1), ch.d_plus, 0.0, ch.a(-2))
        } else {
            diag2(ch.c(n_i), ch.a(-n_i - 1))
        };
        (a, b, c)
    }

    fn block(&self, n: usize) -> (Mat2, Mat2, Mat2) {
        let mut cache = self.cache.lock().expect("block cache poisoned");
        *cache.entry(n).or_insert_with(|| self.compute(n))
    }

    /// Up block A_n (couples block n to block n+1), n >= 0.
    pub fn a(&self, n: usize) -> Mat2 {
        self.block(n).0
    }

    /// Diagonal block B_n, n >= 0.
    pub fn b(&self, n: usize) -> Mat2 {
        self.block(n).1
    }

    /// Down block C_n (couples block n to block n-1), n >= 1.
    pub fn c(&self, n: usize) -> Mat2 {
        assert!(n >= 1, "down block is defined for n >= 1 only");
        self.block(n).2
    }

    /// The underlying scalar chain.
    pub fn chain(&self) -> &AlmostBDChain {
        &self.chain
    }

    /// Read a scalar transition probability back out of the block entries
    /// (used to check that relabeling is lossless).
    pub fn scalar_entry(&self, from: i64, to: i64) -> f64 {
        let (bi, ci) = block_index(from);
        let (bj, cj) = block_index(to);
        let d = bj as i64 - bi as i64;
        match d {
            0 => self.b(bi)[(ci, cj)],
            1 => self.a(bi)[(ci, cj)],
            -1 => self.c(bi)[(ci, cj)],
            _ => 0.0,
        }
    }
}

/// Fold the integer-indexed chain into its 2x2 block tridiagonal form.
pub fn relabel_to_blocks(chain: AlmostBDChain) -> BlockChain {
    BlockChain {
        chain,
        cache: Mutex::new(BTreeMap::new()),
    }
}

/// Block coordinates of a scalar state: `i >= 0` lands in component 0 of
/// block `i`, `i < 0` in component 1 of block `-i-1`.
pub fn block_index(i: i64) -> (usize, usize) {
    if i >= 0 {
        (i as usize, 0)
    } else {
        ((-i - 1) as usize, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rw() -> AlmostBDChain {
        BDChain::constant(0.125, 0.75, 0.125).into()
    }

    #[test]
    fn ar_boundary_example_rows_are_stochastic() {
        let ch = AlmostBDChain::ar_boundary_example(0.125, 0.75, 0.125).unwrap();
        assert!(validate_stochastic(&ch, 10).is_empty());
        let asym = AlmostBDChain::ar_boundary_example(0.1, 0.7, 0.2).unwrap();
        assert!(validate_stochastic(&asym, 10).is_empty());
    }

    #[test]
    fn validate_flags_bad_rows() {
        let ch: AlmostBDChain = BDChain::constant(0.5, 0.6, 0.2).into();
        let issues = validate_stochastic(&ch, 2);
        assert!(issues.iter().all(|i| i.what == "row_sum"));
        assert_eq!(issues.len(), 5);
    }

    #[test]
    fn potential_matches_detailed_balance() {
        let ch = AlmostBDChain::ar_boundary_example(0.1, 0.7, 0.2).unwrap();
        let pot = potential_coeffs(&ch, 12).unwrap();
        for n in -11..11 {
            let lhs = pot.pi(n).unwrap() * ch.a(n);
            let rhs = pot.pi(n + 1).unwrap() * ch.c(n + 1);
            assert!(
                (lhs - rhs).abs() <= 1e-15 * lhs.abs().max(1.0),
                "detailed balance fails at {n}"
            );
        }
    }

    #[test]
    fn block_layout_matches_definition() {
        let ch = AlmostBDChain::ar_boundary_example(0.125, 0.75, 0.125).unwrap();
        let (dp, dm) = (ch.d_plus, ch.d_minus);
        let blocks = relabel_to_blocks(ch.clone());
        assert_eq!(
            blocks.b(0),
            mat2(ch.b(0), ch.c(0), ch.a(-1), ch.b(-1))
        );
        assert_eq!(blocks.a(0), mat2(ch.a(0), 0.0, dm, ch.c(-1)));
        assert_eq!(blocks.c(1), mat2(ch.c(1), dp, 0.0, ch.a(-2)));
        assert_eq!(blocks.a(3), diag2(ch.a(3), ch.c(-4)));
        assert_eq!(blocks.b(3), diag2(ch.b(3), ch.b(-4)));
        assert_eq!(blocks.c(3), diag2(ch.c(3), ch.a(-4)));
    }

    #[test]
    fn relabel_round_trip_is_bit_identical() {
        let ch = AlmostBDChain::ar_boundary_example(0.1, 0.7, 0.2).unwrap();
        let blocks = relabel_to_blocks(ch.clone());
        for i in -6..=6i64 {
            assert_eq!(blocks.scalar_entry(i, i + 1), ch.a(i), "a({i})");
            assert_eq!(blocks.scalar_entry(i, i), ch.b(i), "b({i})");
            assert_eq!(blocks.scalar_entry(i, i - 1), ch.c(i), "c({i})");
        }
        assert_eq!(blocks.scalar_entry(1, -1), ch.d_plus);
        assert_eq!(blocks.scalar_entry(-1, 1), ch.d_minus);
        // pure chains must show zero in the extra-jump slots
        let pure = relabel_to_blocks(rw());
        assert_eq!(pure.scalar_entry(1, -1), 0.0);
        assert_eq!(pure.scalar_entry(-1, 1), 0.0);
    }

    #[test]
    fn block_cache_is_idempotent() {
        let blocks = relabel_to_blocks(rw());
        let first = blocks.b(5);
        let second = blocks.b(5);
        assert_eq!(first, second);
    }

    #[test]
    fn chain_json_round_trip_rejects_unknown_fields() {
        let ch = AlmostBDChain::ar_boundary_example(0.125, 0.75, 0.125).unwrap();
        let json = serde_json::to_string(&ch).unwrap();
        let back: AlmostBDChain = serde_json::from_str(&json).unwrap();
        assert_eq!(ch, back);
        let bad = r#"{"a":{"left_tail":0.1,"right_tail":0.1},"b":{"left_tail":0.8,"right_tail":0.8},"c":{"left_tail":0.1,"right_tail":0.1},"zzz":1}"#;
        assert!(serde_json::from_str::<AlmostBDChain>(bad).is_err());
    }
}
