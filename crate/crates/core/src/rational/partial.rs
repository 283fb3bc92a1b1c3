use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::poly::{cpoly_deflate, cpoly_eval, Polynomial};
use super::roots::{poly_roots, roots_unchecked, serialize_complex, Root, CLUSTER_TOL};
use crate::error::{Error, Result};

/// Highest pole multiplicity handled by the generalized residue formula.
pub const MAX_MULTIPLICITY: usize = 4;
/// Relative tolerance for the recombination check.
pub const RECOMBINATION_TOL: f64 = 1e-9;
/// A root of `b` near a root of `a` is only cancelled when the Laurent
/// coefficients it removes are below `GCD_RESIDUAL_TOL` times the total
/// residue mass. Distance alone is not enough: near the exact-rank case
/// `a ≈ r·b` the two share many roots only to about 1e-7, and cancelling
/// those changes the function by the same amount.
pub const GCD_RESIDUAL_TOL: f64 = 1e-12;
const CHECK_POINTS: usize = 32;
const CHECK_RADIUS: f64 = 2.0;

/// `Σ_{s=1}^{m} residues[s-1] / (z - pole)^s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialFractionTerm {
    #[serde(serialize_with = "serialize_complex")]
    pub pole: Complex64,
    pub multiplicity: usize,
    #[serde(serialize_with = "serialize_complex_list")]
    pub residues: Vec<Complex64>,
}

fn serialize_complex_list<S: serde::Serializer>(
    v: &[Complex64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

impl PartialFractionTerm {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let d = z - self.pole;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        for c in &self.residues {
            pow *= d;
            acc += c / pow;
        }
        acc
    }

    /// `Σ_s |c_s| / (1 - |pole|)^s`, an upper bound on the Hankel norm of the
    /// term when the pole is inside the unit disc.
    pub fn norm_bound(&self) -> f64 {
        let gap = 1.0 - self.pole.norm();
        if gap <= 0.0 {
            return f64::INFINITY;
        }
        self.residues
            .iter()
            .enumerate()
            .map(|(s, c)| c.norm() / gap.powi(s as i32 + 1))
            .sum()
    }
}

/// `a / b = polynomial_part + Σ terms`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractions {
    pub polynomial_part: Polynomial,
    pub terms: Vec<PartialFractionTerm>,
}

impl PartialFractions {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.polynomial_part.eval_complex(z) + self.terms.iter().map(|t| t.eval(z)).sum::<Complex64>()
    }
}

/// Partial-fraction decomposition of `a / b` after cancelling common roots.
pub fn partial_fractions(a: &Polynomial, b: &Polynomial) -> Result<PartialFractions> {
    let lead = b.leading().ok_or(Error::ZeroPolynomial)?;
    if a.is_zero() {
        return Ok(PartialFractions {
            polynomial_part: Polynomial::zero(),
            terms: Vec::new(),
        });
    }
    let b_roots = poly_roots(b)?;
    let common = common_multiplicities(a, &b_roots)?;
    let (quot, rem) = a.div_rem(b)?;
    let rem_c = rem.to_complex();
    // Laurent coefficients at every root of b, computed from the original pair
    let mut laurent = Vec::with_capacity(b_roots.len());
    for root in &b_roots {
        let m = root.multiplicity;
        let p = root.value;
        // Taylor series at p of b with the (z - p)^m factor removed
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        w[0] = Complex64::new(lead, 0.0);
        for other in &b_roots {
            if other.value == p {
                continue;
            }
            let d = p - other.value;
            for _ in 0..other.multiplicity {
                for l in (0..m).rev() {
                    w[l] = w[l] * d + if l > 0 { w[l - 1] } else { Complex64::new(0.0, 0.0) };
                }
            }
        }
        let num = taylor_coefficients(&rem_c, p, m);
        // h[l] multiplies (z - p)^(l - m)
        laurent.push(series_divide(&num, &w));
    }
    let mass: f64 = laurent.iter().flatten().map(|c| c.norm()).sum();
    let mut terms = Vec::with_capacity(b_roots.len());
    for ((root, h), c) in b_roots.iter().zip(&laurent).zip(&common) {
        let full = root.multiplicity;
        // cancel only when the dropped coefficients are numerically zero
        let negligible = h[..*c].iter().all(|v| v.norm() <= GCD_RESIDUAL_TOL * mass);
        let m = if negligible { full - c } else { full };
        if m == 0 {
            continue;
        }
        if m > MAX_MULTIPLICITY {
            return Err(Error::MultiplicityTooHigh(m));
        }
        terms.push(PartialFractionTerm {
            pole: root.value,
            multiplicity: m,
            residues: (1..=m).map(|s| h[full - s]).collect(),
        });
    }
    symmetrize(&mut terms);

    let out = PartialFractions {
        polynomial_part: quot,
        terms,
    };
    check_recombination(a, b, &out)?;
    Ok(out)
}

/// For each root of `b`, how many of its copies also appear among the roots
/// of `a` within the clustering tolerance.
fn common_multiplicities(a: &Polynomial, b_roots: &[Root]) -> Result<Vec<usize>> {
    let mut a_roots = roots_unchecked(a)?;
    Ok(b_roots
        .iter()
        .map(|root| {
            let tol = CLUSTER_TOL * root.value.norm().max(1.0);
            match a_roots
                .iter_mut()
                .find(|r| r.multiplicity > 0 && (r.value - root.value).norm() <= tol)
            {
                Some(ar) => {
                    let common = ar.multiplicity.min(root.multiplicity);
                    ar.multiplicity -= common;
                    common
                }
                None => 0,
            }
        })
        .collect())
}

/// First `count` Taylor coefficients of `c` around `p`.
fn taylor_coefficients(c: &[Complex64], p: Complex64, count: usize) -> Vec<Complex64> {
    let mut cur = c.to_vec();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (q, r) = cpoly_deflate(&cur, p);
        out.push(r);
        cur = q;
    }
    out
}

/// Truncated power-series quotient `num / den`; `den[0]` must be non-zero.
fn series_divide(num: &[Complex64], den: &[Complex64]) -> Vec<Complex64> {
    let m = num.len();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for l in 0..m {
        let mut acc = num[l];
        for i in 1..=l.min(den.len() - 1) {
            acc -= den[i] * out[l - i];
        }
        out[l] = acc / den[0];
    }
    out
}

/// Real poles get real residues; conjugate poles get conjugate residues.
fn symmetrize(terms: &mut [PartialFractionTerm]) {
    let n = terms.len();
    for i in 0..n {
        if terms[i].pole.im == 0.0 {
            for c in &mut terms[i].residues {
                c.im = 0.0;
            }
        } else if terms[i].pole.im > 0.0 {
            let target = terms[i].pole.conj();
            if let Some(j) = (0..n).find(|&j| terms[j].pole == target) {
                let mirrored: Vec<Complex64> = terms[i].residues.iter().map(|c| c.conj()).collect();
                let avg: Vec<Complex64> = mirrored
                    .iter()
                    .zip(&terms[j].residues)
                    .map(|(x, y)| (x + y) * 0.5)
                    .collect();
                terms[i].residues = avg.iter().map(|c| c.conj()).collect();
                terms[j].residues = avg;
            }
        }
    }
}

fn check_recombination(a: &Polynomial, b: &Polynomial, pf: &PartialFractions) -> Result<()> {
    let ac = a.to_complex();
    let bc = b.to_complex();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for j in 0..CHECK_POINTS {
        let z = Complex64::from_polar(CHECK_RADIUS, 2.0 * PI * j as f64 / CHECK_POINTS as f64);
        let exact = cpoly_eval(&ac, z) / cpoly_eval(&bc, z);
        worst = worst.max((exact - pf.eval(z)).norm());
        scale = scale.max(exact.norm());
    }
    let residual = if scale > 0.0 { worst / scale } else { worst };
    if residual.is_nan() || residual > RECOMBINATION_TOL {
        return Err(Error::DecompositionFailed {
            residual,
            tolerance: RECOMBINATION_TOL,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn term_at(pf: &PartialFractions, pole: f64) -> &PartialFractionTerm {
        pf.terms
            .iter()
            .find(|t| (t.pole - c(pole)).norm() < 1e-10)
            .expect("pole present")
    }

    #[test]
    fn two_simple_poles() {
        let b = &Polynomial::linear(1.0 / 3.0) * &Polynomial::linear(3.0);
        let pf = partial_fractions(&Polynomial::new(vec![0.0, 1.0]), &b).unwrap();
        assert!(pf.polynomial_part.is_zero());
        assert_eq!(pf.terms.len(), 2);
        assert!((term_at(&pf, 1.0 / 3.0).residues[0] - c(-1.0 / 8.0)).norm() < 1e-13);
        assert!((term_at(&pf, 3.0).residues[0] - c(9.0 / 8.0)).norm() < 1e-13);
    }

    #[test]
    fn already_a_partial_fraction() {
        let pf = partial_fractions(&Polynomial::constant(1.0), &Polynomial::new(vec![0.0, 1.0])).unwrap();
        assert_eq!(pf.terms.len(), 1);
        assert_eq!(pf.terms[0].pole, c(0.0));
        assert!((pf.terms[0].residues[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn polynomial_part_from_long_division() {
        let pf = partial_fractions(&Polynomial::new(vec![0.0, 0.0, 1.0]), &Polynomial::linear(2.0)).unwrap();
        assert_eq!(pf.polynomial_part, Polynomial::new(vec![2.0, 1.0]));
        assert!((pf.terms[0].residues[0] - c(4.0)).norm() < 1e-13);
    }

    #[test]
    fn double_pole_residues() {
        // (z + 1) / (z - 0.5)² = 1/(z - 0.5) + 1.5/(z - 0.5)²
        let b = &Polynomial::linear(0.5) * &Polynomial::linear(0.5);
        let pf = partial_fractions(&Polynomial::new(vec![1.0, 1.0]), &b).unwrap();
        assert_eq!(pf.terms.len(), 1);
        let t = &pf.terms[0];
        assert_eq!(t.multiplicity, 2);
        assert!((t.residues[0] - c(1.0)).norm() < 1e-6);
        assert!((t.residues[1] - c(1.5)).norm() < 1e-6);
    }

    #[test]
    fn common_root_is_cancelled() {
        // z (z - 0.2) / (z (z - 0.5)) = (z - 0.2) / (z - 0.5)
        let a = &Polynomial::new(vec![0.0, 1.0]) * &Polynomial::linear(0.2);
        let b = &Polynomial::new(vec![0.0, 1.0]) * &Polynomial::linear(0.5);
        let pf = partial_fractions(&a, &b).unwrap();
        assert_eq!(pf.terms.len(), 1);
        assert!((pf.terms[0].pole - c(0.5)).norm() < 1e-14);
        assert!((pf.terms[0].residues[0] - c(0.3)).norm() < 1e-13);
        assert_eq!(pf.polynomial_part, Polynomial::constant(1.0));
    }

    #[test]
    fn conjugate_residues() {
        // 1 / (z² + 0.25)
        let pf = partial_fractions(&Polynomial::constant(1.0), &Polynomial::new(vec![0.25, 0.0, 1.0])).unwrap();
        assert_eq!(pf.terms.len(), 2);
        let up = pf.terms.iter().find(|t| t.pole.im > 0.0).unwrap();
        let down = pf.terms.iter().find(|t| t.pole.im < 0.0).unwrap();
        assert_eq!(up.residues[0].conj(), down.residues[0]);
        assert!((up.residues[0] - Complex64::new(0.0, -1.0)).norm() < 1e-13);
    }

    #[test]
    fn five_fold_pole_rejected() {
        let mut b = Polynomial::constant(1.0);
        for _ in 0..5 {
            b = &b * &Polynomial::linear(0.0);
        }
        // exact zeros at the origin are counted exactly, so this is a 5-fold pole
        let err = partial_fractions(&Polynomial::constant(1.0), &b).unwrap_err();
        assert_eq!(err, Error::MultiplicityTooHigh(5));
    }

    #[test]
    fn zero_numerator_has_no_terms() {
        let pf = partial_fractions(&Polynomial::zero(), &Polynomial::linear(0.5)).unwrap();
        assert!(pf.terms.is_empty());
        assert!(partial_fractions(&Polynomial::constant(1.0), &Polynomial::zero()).is_err());
    }
}
