//! Matrix-valued spectral measures with a square-root continuous density and
//! finitely many atoms, plus the adaptive quadrature used to integrate
//! bilinear polynomial forms against them.

use crate::error::{Error, Result};
use crate::mat2::{mat2, Mat2};
use serde::{Deserialize, Serialize};

/// Quadrature refinement stops once a doubling changes the result by less
/// than this.
pub const QUAD_TOL: f64 = 1e-11;
/// Hard cap on the number of quadrature nodes.
pub const QUAD_MAX_NODES: usize = 1 << 14;
/// Atom weights below this magnitude are numerical residue of a vanishing
/// atom; amplified through growing polynomial values they would dominate the
/// result, so they are dropped from integration (the raw weight stays
/// available on the transform result for inspection).
pub const ATOM_DROP_TOL: f64 = 1e-12;
/// Atom weights are flagged non-proper when their smallest eigenvalue is
/// below this.
pub const ATOM_PSD_TOL: f64 = -1e-10;

/// Evaluate a polynomial given by ascending coefficients.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Evaluate with complex argument.
pub fn poly_eval_c(coeffs: &[f64], z: num_complex::Complex64) -> num_complex::Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(num_complex::Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Derivative coefficients.
pub fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// `p + scale * q`, padding with zeros.
pub fn poly_add_scaled(p: &[f64], q: &[f64], scale: f64) -> Vec<f64> {
    let n = p.len().max(q.len());
    (0..n)
        .map(|k| p.get(k).copied().unwrap_or(0.0) + scale * q.get(k).copied().unwrap_or(0.0))
        .collect()
}

/// Multiply by `x` (shift coefficients up).
pub fn poly_shift_up(p: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len() + 1);
    out.push(0.0);
    out.extend_from_slice(p);
    out
}

/// Which square-root factor multiplies the rational part on the support
/// `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqrtKind {
    /// `1 / sqrt((hi - x)(x - lo))`.
    Reciprocal,
    /// `sqrt((hi - x)(x - lo))`.
    Direct,
}

/// A point mass with a symmetric 2x2 weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    /// Row-major entries (m11, m12, m21, m22) of the weight.
    pub weight: [f64; 4],
}

impl Atom {
    pub fn new(location: f64, weight: Mat2) -> Self {
        Atom {
            location,
            weight: [weight[(0, 0)], weight[(0, 1)], weight[(1, 0)], weight[(1, 1)]],
        }
    }

    pub fn weight_mat(&self) -> Mat2 {
        mat2(self.weight[0], self.weight[1], self.weight[2], self.weight[3])
    }
}

/// Symmetric 2x2 matrix of polynomials (ascending coefficients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymPolyMat {
    pub m11: Vec<f64>,
    pub m12: Vec<f64>,
    pub m22: Vec<f64>,
}

impl SymPolyMat {
    pub fn eval(&self, x: f64) -> Mat2 {
        let off = poly_eval(&self.m12, x);
        mat2(poly_eval(&self.m11, x), off, off, poly_eval(&self.m22, x))
    }

    /// Congruence `S N S^T` carried out on the coefficient vectors.
    pub fn congruence(&self, s: &Mat2) -> SymPolyMat {
        let (s11, s12, s21, s22) = (s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
        let m11 = poly_add_scaled(
            &poly_add_scaled(&[], &self.m11, s11 * s11),
            &poly_add_scaled(&[], &self.m12, 2.0 * s11 * s12),
            1.0,
        );
        let m11 = poly_add_scaled(&m11, &self.m22, s12 * s12);
        let m12 = poly_add_scaled(
            &poly_add_scaled(&[], &self.m11, s11 * s21),
            &self.m12,
            s11 * s22 + s12 * s21,
        );
        let m12 = poly_add_scaled(&m12, &self.m22, s12 * s22);
        let m22 = poly_add_scaled(
            &poly_add_scaled(&[], &self.m11, s21 * s21),
            &poly_add_scaled(&[], &self.m12, 2.0 * s21 * s22),
            1.0,
        );
        let m22 = poly_add_scaled(&m22, &self.m22, s22 * s22);
        SymPolyMat { m11, m12, m22 }
    }

    pub fn shift_up(&self) -> SymPolyMat {
        SymPolyMat {
            m11: poly_shift_up(&self.m11),
            m12: poly_shift_up(&self.m12),
            m22: poly_shift_up(&self.m22),
        }
    }
}

/// `dPsi(x) = scale * N(x)/den(x) * w(x) * x^{-inv} dx` on `[lo, hi]` plus
/// atoms, where `w` is the square-root factor selected by `sqrt_kind` and
/// `inv` is 1 when `inverse_x` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeasure {
    pub lo: f64,
    pub hi: f64,
    pub num: SymPolyMat,
    pub den: Vec<f64>,
    pub sqrt_kind: SqrtKind,
    pub inverse_x: bool,
    pub scale: f64,
    pub atoms: Vec<Atom>,
}

impl MatrixMeasure {
    /// Rational part `scale * N(x) / den(x)` without the square-root,
    /// `1/x`, or Jacobian factors.
    pub fn rational_part(&self, x: f64) -> Mat2 {
        self.num.eval(x) * (self.scale / poly_eval(&self.den, x))
    }

    /// Full continuous density at an interior point of the support.
    pub fn density(&self, x: f64) -> Mat2 {
        let root = ((self.hi - x) * (x - self.lo)).max(0.0).sqrt();
        let w = match self.sqrt_kind {
            SqrtKind::Reciprocal => 1.0 / root,
            SqrtKind::Direct => root,
        };
        let inv = if self.inverse_x { 1.0 / x } else { 1.0 };
        self.rational_part(x) * (w * inv)
    }

    /// Total mass of each entry (the matrix `int dPsi`).
    pub fn mass(&self) -> Result<(Mat2, QuadInfo)> {
        self.moment(0)
    }

    /// `int x^k dPsi(x)` for `k >= -1`. The inverse moment needs the support
    /// and all atoms away from zero.
    pub fn moment(&self, k: i64) -> Result<(Mat2, QuadInfo)> {
        if k < -1 {
            return Err(Error::UndefinedMoment(format!(
                "moment order {k} is not supported"
            )));
        }
        let inv_total = (k == -1) as i64 + self.inverse_x as i64;
        if inv_total > 0 && self.lo <= 0.0 {
            return Err(Error::UndefinedMoment(format!(
                "inverse factor with support reaching down to {:.3e}",
                self.lo
            )));
        }
        if k == -1 && self.atoms.iter().any(|a| a.location == 0.0) {
            return Err(Error::UndefinedMoment(
                "inverse moment against an atom at zero".into(),
            ));
        }
        let id = Mat2::identity();
        integrate_bilinear(self, &|x| id * x.powi(k as i32), &|_| id, QuadOptions::default())
    }
}

/// Quadrature controls.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub tol: f64,
    pub start_nodes: usize,
    pub max_nodes: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            tol: QUAD_TOL,
            start_nodes: 64,
            max_nodes: QUAD_MAX_NODES,
        }
    }
}

/// What the adaptive quadrature actually did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadInfo {
    pub nodes: usize,
    pub converged: bool,
}

/// `int fL(x) dPsi(x) fR(x)^T` by midpoint quadrature in the angle variable
/// `x = mid + h cos(theta)`, which absorbs the reciprocal square-root into
/// the Jacobian exactly; node counts double until two successive refinements
/// agree within `tol`. Atoms are added as exact point evaluations.
pub fn integrate_bilinear(
    meas: &MatrixMeasure,
    f_left: &dyn Fn(f64) -> Mat2,
    f_right: &dyn Fn(f64) -> Mat2,
    opts: QuadOptions,
) -> Result<(Mat2, QuadInfo)> {
    let mid = 0.5 * (meas.hi + meas.lo);
    let h = 0.5 * (meas.hi - meas.lo);
    let sample = |m: usize| -> Mat2 {
        let mut acc = Mat2::zeros();
        for t in 0..m {
            let theta = (t as f64 + 0.5) * std::f64::consts::PI / m as f64;
            let (sin_t, cos_t) = theta.sin_cos();
            let x = mid + h * cos_t;
            let mut g = f_left(x) * meas.rational_part(x) * f_right(x).transpose();
            if meas.sqrt_kind == SqrtKind::Direct {
                g *= (h * sin_t) * (h * sin_t);
            }
            if meas.inverse_x {
                g /= x;
            }
            acc += g;
        }
        acc * (std::f64::consts::PI / m as f64)
    };

    let mut m = opts.start_nodes.max(4);
    let mut prev = sample(m);
    let mut converged = false;
    while m * 2 <= opts.max_nodes {
        m *= 2;
        let cur = sample(m);
        let diff = crate::mat2::max_abs_diff(&cur, &prev);
        prev = cur;
        if diff < opts.tol {
            converged = true;
            break;
        }
    }

    let mut total = prev;
    for atom in &meas.atoms {
        if atom.weight_mat().abs().max() < ATOM_DROP_TOL {
            continue;
        }
        total += f_left(atom.location) * atom.weight_mat() * f_right(atom.location).transpose();
    }
    Ok((total, QuadInfo { nodes: m, converged }))
}

/// Spectral measure of the constant chain with probabilities `(a, b, c)`:
/// a reciprocal square-root weight on
/// `[1 - (sqrt a + sqrt c)^2, 1 - (sqrt a - sqrt c)^2]` against the constant
/// matrix polynomial `N(x) = [[1, (x-b)/2c], [(x-b)/2c, a/c]]`.
pub fn constant_chain_measure(a: f64, b: f64, c: f64) -> Result<MatrixMeasure> {
    if !(a > 0.0 && c > 0.0 && b >= 0.0) || (a + b + c - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "constant chain probabilities must be positive and sum to one, got ({a}, {b}, {c})"
        )));
    }
    let (sa, sc) = (a.sqrt(), c.sqrt());
    let lo = 1.0 - (sa + sc) * (sa + sc);
    let hi = 1.0 - (sa - sc) * (sa - sc);
    let num = SymPolyMat {
        m11: vec![1.0],
        m12: vec![-b / (2.0 * c), 1.0 / (2.0 * c)],
        m22: vec![a / c],
    };
    Ok(MatrixMeasure {
        lo,
        hi,
        num,
        den: vec![1.0],
        sqrt_kind: SqrtKind::Reciprocal,
        inverse_x: false,
        scale: 1.0 / std::f64::consts::PI,
        atoms: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{diag2, max_abs_diff};

    #[test]
    fn poly_helpers_work() {
        let p = [1.0, -2.0, 3.0];
        assert_eq!(poly_eval(&p, 2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(poly_derivative(&p), vec![-2.0, 6.0]);
        assert_eq!(poly_add_scaled(&p, &[0.0, 1.0], 2.0), vec![1.0, 0.0, 3.0]);
        assert_eq!(poly_shift_up(&[5.0, 7.0]), vec![0.0, 5.0, 7.0]);
    }

    #[test]
    fn constant_chain_mass_is_block_identity() {
        // int dPsi = Pi_0^{-1} = I for the symmetric constant chain
        let m = constant_chain_measure(0.125, 0.75, 0.125).unwrap();
        let (mass, info) = m.mass().unwrap();
        assert!(info.converged);
        assert!(max_abs_diff(&mass, &Mat2::identity()) < 1e-12, "{mass}");
    }

    #[test]
    fn constant_chain_first_moment_matches_block_operator() {
        // int x dPsi = B_0 Pi_0^{-1} with B_0 = [[b, c], [a, b]] and
        // Pi_0 = diag(1, c/a), so the diagonal is (b, ab/c) and the
        // off-diagonal is (a, a).
        let (a, b, c) = (0.2, 0.5, 0.3);
        let m = constant_chain_measure(a, b, c).unwrap();
        let (m1, _) = m.moment(1).unwrap();
        assert!((m1[(0, 0)] - b).abs() < 1e-12);
        assert!((m1[(0, 1)] - a).abs() < 1e-12);
        assert!((m1[(1, 1)] - a * b / c).abs() < 1e-12);
    }

    #[test]
    fn inverse_moment_needs_positive_support() {
        let m = constant_chain_measure(0.3, 0.1, 0.6).unwrap();
        assert!(m.lo < 0.0);
        assert!(matches!(m.moment(-1), Err(Error::UndefinedMoment(_))));
        let m2 = constant_chain_measure(0.125, 0.75, 0.125).unwrap();
        assert!(m2.lo > 0.0);
        let (inv, _) = m2.moment(-1).unwrap();
        assert!(inv[(0, 0)] > 1.0);
    }

    #[test]
    fn atoms_enter_exactly_and_tiny_atoms_are_dropped(){
        let mut m = constant_chain_measure(0.125, 0.75, 0.125).unwrap();
        m.atoms.push(Atom::new(2.0, diag2(0.5, 0.25)));
        m.atoms.push(Atom::new(3.0, diag2(1e-15, 1e-15)));
        let (mass, _) = m.mass().unwrap();
        assert!((mass[(0, 0)] - 1.5).abs() < 1e-12);
        let (m1, _) = m.moment(1).unwrap();
        // the atom adds 2 * 0.5 to the first moment of the (1,1) entry
        assert!((m1[(0, 0)] - (0.75 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn direct_kind_jacobian_is_applied() {
        // int sqrt((hi-x)(x-lo)) dx over [-1, 1] equals pi/2
        let m = MatrixMeasure {
            lo: -1.0,
            hi: 1.0,
            num: SymPolyMat {
                m11: vec![1.0],
                m12: vec![],
                m22: vec![1.0],
            },
            den: vec![1.0],
            sqrt_kind: SqrtKind::Direct,
            inverse_x: false,
            scale: 1.0,
            atoms: vec![],
        };
        let (mass, info) = m.mass().unwrap();
        assert!(info.converged);
        assert!((mass[(0, 0)] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(mass[(0, 1)], 0.0);
    }

    #[test]
    fn congruence_matches_pointwise_product() {
        let n = SymPolyMat {
            m11: vec![1.0, 2.0],
            m12: vec![0.5, -1.0, 0.25],
            m22: vec![3.0],
        };
        let s = mat2(1.0, 0.5, -0.25, 2.0);
        let conj = n.congruence(&s);
        for &x in &[-1.0, 0.3, 2.0] {
            let direct = s * n.eval(x) * s.transpose();
            assert!(max_abs_diff(&conj.eval(x), &direct) < 1e-12);
        }
    }
}
