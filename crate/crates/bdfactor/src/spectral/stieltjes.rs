//! Closed-form Stieltjes matrix of the boundary-jump example chain and its
//! inversion back to a spectral measure.
//!
//! For the chain that is constant except for the four compatibility entries
//! next to the origin, the 2x2 Stieltjes transform
//! `B(z) = int dPsi(x)/(z - x)` has entries `(p_ij(z) - q_ij(z) w(z)) /
//! (d_ij r(z))` where `w` is the square-root branch that decays like the
//! transform itself at infinity, `r` is a common quartic, and `d_11 = 1`,
//! `d_12 = d_22 = c`. Two independent routes are provided: the hard-coded
//! polynomial family, and a linear solve that peels off the first block and
//! closes the system with the scalar free-chain transform.

use crate::error::{Error, Result};
use crate::spectral::measure::{
    poly_derivative, poly_eval_c, Atom, MatrixMeasure, SqrtKind, SymPolyMat,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

/// Residues whose magnitude stays below this are treated as exact zeros
/// (no atom).
pub const RESIDUE_TOL: f64 = 1e-9;
/// Guard against repeated denominator zeros.
const ROOT_DERIV_GUARD: f64 = 1e-10;
/// A root is treated as real when its imaginary part is below this.
const ROOT_IMAG_TOL: f64 = 1e-8;
/// A polished real root this close to a support endpoint is snapped onto it.
/// The branch factor behaves like sqrt(|z - endpoint|), so a root error of
/// 1e-15 alone would inflate a vanishing residue to ~3e-8; evaluating at the
/// endpoint itself keeps the classification sharp.
const ENDPOINT_SNAP: f64 = 1e-8;

/// The polynomial data of the closed-form transform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StieltjesClosedForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Support endpoints of the continuous part.
    pub lo: f64,
    pub hi: f64,
    pub p11: Vec<f64>,
    pub q11: Vec<f64>,
    pub p12: Vec<f64>,
    pub q12: Vec<f64>,
    pub p22: Vec<f64>,
    pub q22: Vec<f64>,
    /// Common denominator quartic.
    pub r11: Vec<f64>,
}

/// Coefficients (ascending) for the jump-compatible constant chain with
/// transition probabilities `(a, 1-a-c, c)` away from the origin.
pub fn ar_stieltjes(a: f64, c: f64) -> Result<StieltjesClosedForm> {
    let b = 1.0 - a - c;
    if !(a > 0.0 && c > 0.0 && b > 0.0) {
        return Err(Error::Validation(format!(
            "need a > 0, c > 0, a + c < 1; got a={a}, c={c}"
        )));
    }
    let (oa, oc) = (1.0 - a, 1.0 - c);
    let g11 = 2.0 * oa.powi(3) + 2.0 * oc.powi(3) - 2.0
        + 2.0 * a * c * (2.0 + a + c - 4.0 * a * c)
        + b * b * (2.0 * a * c - a - c);
    let g12 = a.powi(3) + a * a * (2.0 * c * c + 2.0 * c - 3.0)
        + a * oc * (2.0 * c * c - 4.0 * c + 3.0)
        - oc * oc * (1.0 - 3.0 * c);
    let g22 = -2.0 * a * a * (1.0 + c) + a * (2.0 * c * c - 5.0 * c + 5.0) - 3.0 * oc * oc;

    let p11 = vec![
        -b * b * ((a - c) * (a - c) - a - c),
        g11,
        -4.0 * b * oa * oc,
        2.0 * oa * oc,
    ];
    let q11 = vec![b * (-a * oa - c * oc), -2.0 * b * oa * oc];
    let r11 = vec![
        -2.0 * a * b * b * c,
        4.0 * a * b * b * c,
        g11 - b * b * (2.0 * a * c - a - c),
        -4.0 * b * oa * oc,
        2.0 * oa * oc,
    ];
    let p12 = vec![
        -b * b * c * (oc * oc - a * (1.0 + c)),
        b * g12,
        b * b * oa * (2.0 - 3.0 * c),
        -b * oa * oc,
    ];
    let q12 = vec![
        b * b * c * oc,
        b * oa * (1.0 + 2.0 * c * c - a - 3.0 * c),
        -b * oa * oc,
    ];
    let p22 = vec![
        -b.powi(3) * (a * c - c * c + a + 2.0 * c - 1.0),
        b * b * g22,
        b * b * oa * (b + 2.0 * oc),
        -b * b * oa,
    ];
    let q22 = vec![
        -b.powi(3) * oc,
        2.0 * b * b * oa * oc,
        -b * oa * (1.0 - c + a),
    ];
    let root = 2.0 * (a * c).sqrt();
    Ok(StieltjesClosedForm {
        a,
        b,
        c,
        lo: b - root,
        hi: b + root,
        p11,
        q11,
        p12,
        q12,
        p22,
        q22,
        r11,
    })
}

/// Square-root branch analytic off `[lo, hi]` and asymptotic to `z`.
fn decay_branch(z: Complex64, lo: f64, hi: f64) -> Complex64 {
    (z - hi).sqrt() * (z - lo).sqrt()
}

impl StieltjesClosedForm {
    /// Transform value at `z` off the support.
    pub fn eval(&self, z: Complex64) -> [[Complex64; 2]; 2] {
        let w = decay_branch(z, self.lo, self.hi);
        let r = poly_eval_c(&self.r11, z);
        let b11 = (poly_eval_c(&self.p11, z) - poly_eval_c(&self.q11, z) * w) / r;
        let b12 = (poly_eval_c(&self.p12, z) - poly_eval_c(&self.q12, z) * w) / (self.c * r);
        let b22 = (poly_eval_c(&self.p22, z) - poly_eval_c(&self.q22, z) * w) / (self.c * r);
        [[b11, b12], [b12, b22]]
    }

    /// Roots of the denominator quartic: companion-matrix eigenvalues
    /// polished by Newton, with real roots that converge onto a support
    /// endpoint snapped exactly onto it.
    pub fn denominator_roots(&self) -> Result<Vec<Complex64>> {
        let lead = *self.r11.last().expect("quartic has coefficients");
        if lead.abs() < 1e-14 {
            return Err(Error::SingularTransform(
                "denominator quartic degenerated".into(),
            ));
        }
        let deg = self.r11.len() - 1;
        let mut comp = DMatrix::<f64>::zeros(deg, deg);
        for k in 0..deg {
            comp[(k, deg - 1)] = -self.r11[k] / lead;
            if k >= 1 {
                comp[(k, k - 1)] = 1.0;
            }
        }
        let rp = poly_derivative(&self.r11);
        let mut roots: Vec<Complex64> = comp.complex_eigenvalues().iter().copied().collect();
        for z in &mut roots {
            for _ in 0..3 {
                let drv = poly_eval_c(&rp, *z);
                if drv.norm() < ROOT_DERIV_GUARD {
                    break;
                }
                *z -= poly_eval_c(&self.r11, *z) / drv;
            }
            if z.im.abs() < ROOT_IMAG_TOL {
                for endpoint in [self.lo, self.hi] {
                    if (z.re - endpoint).abs() < ENDPOINT_SNAP {
                        *z = Complex64::new(endpoint, 0.0);
                    }
                }
            }
        }
        Ok(roots)
    }

    /// Residue matrices at the denominator roots, the continuous density
    /// they leave behind, and the atoms contributed by non-vanishing real
    /// residues outside the support.
    pub fn invert(&self) -> Result<StieltjesInversion> {
        let rp = poly_derivative(&self.r11);
        let mut residues = Vec::new();
        let mut atoms = Vec::new();
        for z0 in self.denominator_roots()? {
            let drv = poly_eval_c(&rp, z0);
            if drv.norm() < ROOT_DERIV_GUARD {
                return Err(Error::MeasureInconsistency(format!(
                    "repeated denominator zero near {:.6} + {:.6}i",
                    z0.re, z0.im
                )));
            }
            let w0 = decay_branch(z0, self.lo, self.hi);
            let entry = |p: &[f64], q: &[f64], den: f64| {
                (poly_eval_c(p, z0) - poly_eval_c(q, z0) * w0) / (den * drv)
            };
            let r = [
                entry(&self.p11, &self.q11, 1.0),
                entry(&self.p12, &self.q12, self.c),
                entry(&self.p22, &self.q22, self.c),
            ];
            let max_abs = r.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            let vanishing = max_abs < RESIDUE_TOL;
            residues.push(ResidueReport {
                location_re: z0.re,
                location_im: z0.im,
                max_abs,
                vanishing,
            });
            if vanishing {
                continue;
            }
            if z0.im.abs() > ROOT_IMAG_TOL {
                return Err(Error::MeasureInconsistency(format!(
                    "non-vanishing residue at complex point {:.6} + {:.6}i",
                    z0.re, z0.im
                )));
            }
            let x0 = z0.re;
            if x0 > self.lo + 1e-10 && x0 < self.hi - 1e-10 {
                return Err(Error::MeasureInconsistency(format!(
                    "denominator zero with non-vanishing residue inside the support at {x0:.6}"
                )));
            }
            let w = crate::mat2::mat2(r[0].re, r[1].re, r[1].re, r[2].re);
            atoms.push(Atom::new(x0, w));
        }
        let inv_c = 1.0 / self.c;
        let measure = MatrixMeasure {
            lo: self.lo,
            hi: self.hi,
            num: SymPolyMat {
                m11: self.q11.clone(),
                m12: self.q12.iter().map(|v| v * inv_c).collect(),
                m22: self.q22.iter().map(|v| v * inv_c).collect(),
            },
            den: self.r11.clone(),
            sqrt_kind: SqrtKind::Direct,
            inverse_x: false,
            scale: 1.0 / std::f64::consts::PI,
            atoms,
        };
        Ok(StieltjesInversion { measure, residues })
    }
}

/// One denominator zero with the size of its residue matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidueReport {
    pub location_re: f64,
    pub location_im: f64,
    pub max_abs: f64,
    pub vanishing: bool,
}

/// Inversion output: the recovered measure plus the residue audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct StieltjesInversion {
    pub measure: MatrixMeasure,
    pub residues: Vec<ResidueReport>,
}

/// Independent route to the transform: peel off block zero and close the
/// resolvent equation with the scalar constant-chain transform of the rest,
/// `B(Psi) Pi [zI - B_0 - A_0 B(Psi0) Pi0 C_1] = I`.
pub fn stieltjes_solve(a: f64, c: f64, z: Complex64) -> Result<[[Complex64; 2]; 2]> {
    let b = 1.0 - a - c;
    if !(a > 0.0 && c > 0.0 && b > 0.0) {
        return Err(Error::Validation(format!(
            "need a > 0, c > 0, a + c < 1; got a={a}, c={c}"
        )));
    }
    let root = 2.0 * (a * c).sqrt();
    let (lo, hi) = (b - root, b + root);
    let w = decay_branch(z, lo, hi);
    // scalar transforms of the two half-line constant chains past block 0
    let e1 = (z - b - w) / (2.0 * a * c);
    let e2 = (z - b - w) / (2.0 * c * c);
    let (am1, d_minus) = (a * b / (1.0 - c), a * a / (1.0 - c));
    let (c1, d_plus) = (b * c / (1.0 - a), c * c / (1.0 - a));
    let a0 = [[Complex64::from(a), Complex64::from(0.0)], [
        Complex64::from(d_minus),
        Complex64::from(c),
    ]];
    let b0 = [[Complex64::from(b), Complex64::from(c)], [
        Complex64::from(am1),
        Complex64::from(b),
    ]];
    let c1m = [[Complex64::from(c1), Complex64::from(d_plus)], [
        Complex64::from(0.0),
        Complex64::from(a),
    ]];
    let pi0 = [c / a, c * (1.0 - c) / (a * b)];
    // M = zI - B0 - A0 diag(e1, e2) diag(1, c/a) C1
    let g = [[e1 * c1m[0][0], e1 * c1m[0][1]], [
        e2 * pi0[0] * c1m[1][0],
        e2 * pi0[0] * c1m[1][1],
    ]];
    let mut m = [[Complex64::from(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let ag = a0[i][0] * g[0][j] + a0[i][1] * g[1][j];
            m[i][j] = -b0[i][j] - ag;
            if i == j {
                m[i][j] += z;
            }
        }
    }
    // B = [diag(1, pi_{-1}) M]^{-1}
    let pm = [[m[0][0], m[0][1]], [pi0[1] * m[1][0], pi0[1] * m[1][1]]];
    let det = pm[0][0] * pm[1][1] - pm[0][1] * pm[1][0];
    if det.norm() < 1e-14 {
        return Err(Error::SingularTransform(format!(
            "resolvent system is singular at z = {:.6} + {:.6}i",
            z.re, z.im
        )));
    }
    Ok([[pm[1][1] / det, -pm[0][1] / det], [
        -pm[1][0] / det,
        pm[0][0] / det,
    ]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::measure::poly_eval;

    #[test]
    fn closed_form_matches_solve_route_both_chains() {
        for (a, c) in [(0.125, 0.125), (0.1, 0.2)] {
            let cf = ar_stieltjes(a, c).unwrap();
            let mut worst = 0.0f64;
            for k in 0..20 {
                let t = k as f64 / 19.0;
                let z = Complex64::new(-3.0 + 6.0 * t, 0.3 + 2.2 * (1.0 - t));
                let closed = cf.eval(z);
                let solved = stieltjes_solve(a, c, z).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        worst = worst.max((closed[i][j] - solved[i][j]).norm());
                    }
                }
            }
            assert!(worst < 1e-9, "a={a} c={c}: {worst:.3e}");
        }
    }

    #[test]
    fn transform_is_symmetric_and_decays_correctly() {
        let cf = ar_stieltjes(0.1, 0.2).unwrap();
        let z = Complex64::new(1.7, 0.9);
        let bm = cf.eval(z);
        assert!((bm[0][1] - bm[1][0]).norm() < 1e-15);
        // z B(z) -> diag(1, 1/pi_{-1}) as z -> infinity
        let zb = Complex64::new(1e7, 0.0);
        let far = cf.eval(zb);
        let pim1 = 0.2 * 0.8 / (0.1 * 0.7);
        assert!((zb * far[0][0] - 1.0).norm() < 1e-5);
        assert!((zb * far[1][1] - 1.0 / pim1).norm() < 1e-5);
        assert!((zb * far[0][1]).norm() < 1e-5);
    }

    #[test]
    fn symmetric_chain_denominator_factors_as_expected() {
        // for c = a: r(x) = 2(1-x)(x(1-a) + a)((a-1)x^2 + b^2 x - a b^2)
        let a = 0.125;
        let b = 1.0 - 2.0 * a;
        let cf = ar_stieltjes(a, a).unwrap();
        for &x in &[-0.9, -0.2, 0.4, 0.95] {
            let spec = 2.0 * (1.0 - x) * (x * (1.0 - a) + a)
                * ((a - 1.0) * x * x + b * b * x - a * b * b);
            assert!((poly_eval(&cf.r11, x) - spec).abs() < 1e-14);
        }
        // known real roots
        let mut roots: Vec<f64> = cf
            .denominator_roots()
            .unwrap()
            .iter()
            .map(|z| {
                assert!(z.im.abs() < 1e-10);
                z.re
            })
            .collect();
        roots.sort_by(f64::total_cmp);
        let disc = (2.0 * b * b - 1.0).sqrt();
        let mut expect = vec![
            1.0,
            -a / (1.0 - a),
            b * (b + disc) / (1.0 + b),
            b * (b - disc) / (1.0 + b),
        ];
        expect.sort_by(f64::total_cmp);
        for (r, e) in roots.iter().zip(&expect) {
            assert!((r - e).abs() < 1e-10, "{r} vs {e}");
        }
    }

    #[test]
    fn all_residues_vanish_for_the_example_chain() {
        let inv = ar_stieltjes(0.125, 0.125).unwrap().invert().unwrap();
        assert_eq!(inv.residues.len(), 4);
        for r in &inv.residues {
            assert!(r.vanishing, "residue {:.3e} at {}", r.max_abs, r.location_re);
        }
        assert!(inv.measure.atoms.is_empty());
    }

    #[test]
    fn recovered_masses_match_the_norm_coefficients() {
        let (a, c) = (0.125, 0.125);
        let inv = ar_stieltjes(a, c).unwrap().invert().unwrap();
        let (mass, info) = inv.measure.mass().unwrap();
        assert!(info.converged);
        let pim1 = c * (1.0 - c) / (a * (1.0 - a - c));
        assert!((mass[(0, 0)] - 1.0).abs() < 1e-10);
        assert!(mass[(0, 1)].abs() < 1e-10);
        assert!((mass[(1, 1)] - 1.0 / pim1).abs() < 1e-10);
    }
}
