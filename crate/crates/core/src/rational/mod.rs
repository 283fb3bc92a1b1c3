//! Real polynomials, their roots, partial fractions, and strictly proper
//! rational symbols with poles inside the unit disc.

mod partial;
mod poly;
mod roots;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use partial::{
    partial_fractions, PartialFractionTerm, PartialFractions, GCD_RESIDUAL_TOL, MAX_MULTIPLICITY,
    RECOMBINATION_TOL,
};
pub use poly::Polynomial;
pub use roots::{poly_roots, Root, CLUSTER_TOL, ROOT_RESIDUAL_TOL};

use crate::error::{Error, Result};
use poly::{cpoly_mul, Polynomial as Poly};

/// Poles with `|z| ≥ 1 - POLE_TOL` are treated as outside the disc.
pub const POLE_TOL: f64 = 1e-8;
/// Half-width of the band around `|z| = 1` that triggers a warning.
pub const WARN_BAND: f64 = 1e-4;

/// A strictly proper `p / q` with monic real `q` and every pole inside
/// the open unit disc.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSymbol {
    p: Polynomial,
    q: Polynomial,
    poles: Vec<Root>,
}

impl RationalSymbol {
    /// Normalizes `q` to be monic and checks properness and pole location.
    pub fn new(p: Polynomial, q: Polynomial) -> Result<Self> {
        let lead = q.leading().ok_or(Error::ZeroPolynomial)?;
        let p = p.scale(1.0 / lead);
        let q = q.scale(1.0 / lead);
        let poles = poly_roots(&q)?;
        Self::from_parts(p, q, poles)
    }

    fn from_parts(p: Polynomial, q: Polynomial, poles: Vec<Root>) -> Result<Self> {
        let dq = q.degree().ok_or(Error::ZeroPolynomial)?;
        if dq == 0 || p.degree().is_some_and(|dp| dp >= dq) {
            return Err(Error::InvalidArgument(format!(
                "symbol must be strictly proper, got degrees {:?} over {dq}",
                p.degree()
            )));
        }
        if let Some(r) = poles.iter().find(|r| r.modulus() >= 1.0 - POLE_TOL) {
            return Err(Error::InvalidArgument(format!(
                "pole {} lies outside the open unit disc",
                r.value
            )));
        }
        Ok(Self { p, q, poles })
    }

    pub fn p(&self) -> &Polynomial {
        &self.p
    }

    pub fn q(&self) -> &Polynomial {
        &self.q
    }

    pub fn poles(&self) -> &[Root] {
        &self.poles
    }

    /// Degree of the denominator, the rank of the associated Hankel operator.
    pub fn degree(&self) -> usize {
        self.q.degree().unwrap_or(0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.p.eval_complex(z) / self.q.eval_complex(z)
    }

    /// Laurent coefficients `g_0, …, g_{m-1}` of `r(z) = Σ g_n z^{-n-1}`.
    pub fn series_coefficients(&self, m: usize) -> Vec<f64> {
        series_recurrence(&self.p, &self.q, m)
    }
}

impl Serialize for RationalSymbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymbolJson {
            p: self.p.coeffs().to_vec(),
            q: self.q.coeffs().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalSymbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SymbolJson::deserialize(d)?;
        RationalSymbol::new(raw.p.into(), raw.q.into()).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    p: Vec<f64>,
    q: Vec<f64>,
}

/// Laurent coefficients of `p / q`; `q` must be monic.
pub fn series_coefficients(p: &Polynomial, q: &Polynomial, m: usize) -> Result<Vec<f64>> {
    let lead = q.leading().ok_or(Error::ZeroPolynomial)?;
    if lead != 1.0 {
        return Err(Error::NonMonicDenominator(lead));
    }
    Ok(series_recurrence(p, q, m))
}

fn series_recurrence(p: &Polynomial, q: &Polynomial, m: usize) -> Vec<f64> {
    let k = q.degree().unwrap_or(0);
    let mut g = Vec::with_capacity(m);
    for j in 0..m {
        let mut v = if j < k { p.coeff(k - 1 - j) } else { 0.0 };
        for i in 1..=j.min(k) {
            v -= q.coeff(k - i) * g[j - i];
        }
        g.push(v);
    }
    g
}

/// Tolerances for [`project_negative_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub pole_tol: f64,
    /// Kept terms whose norm bound is at or below this are dropped.
    pub prune_below: Option<f64>,
    pub warn_band: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            pole_tol: POLE_TOL,
            prune_below: None,
            warn_band: WARN_BAND,
        }
    }
}

/// The stable part of `a / b` and what was thrown away to get it.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub symbol: RationalSymbol,
    pub kept: Vec<PartialFractionTerm>,
    pub discarded: Vec<PartialFractionTerm>,
    pub pruned: Vec<PartialFractionTerm>,
    pub near_unit_circle: Vec<Complex64>,
}

/// Keeps the partial-fraction terms of `a / b` with poles strictly inside
/// the unit disc and drops the polynomial part.
pub fn project_negative(a: &Polynomial, b: &Polynomial) -> Result<RationalSymbol> {
    Ok(project_negative_with(a, b, &ProjectionOptions::default())?.symbol)
}

pub fn project_negative_with(a: &Polynomial, b: &Polynomial, opts: &ProjectionOptions) -> Result<Projection> {
    let pf = partial_fractions(a, b)?;
    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    let mut pruned = Vec::new();
    let mut near_unit_circle = Vec::new();
    for term in pf.terms {
        let modulus = term.pole.norm();
        if (modulus - 1.0).abs() <= opts.warn_band {
            near_unit_circle.push(term.pole);
        }
        if modulus >= 1.0 - opts.pole_tol {
            discarded.push(term);
        } else if opts.prune_below.is_some_and(|t| term.norm_bound() <= t) {
            pruned.push(term);
        } else {
            kept.push(term);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyProjection);
    }
    let symbol = recombine(&kept)?;
    Ok(Projection {
        symbol,
        kept,
        discarded,
        pruned,
        near_unit_circle,
    })
}

/// Sums partial-fraction terms over the common denominator `Π (z - p)^m`.
fn recombine(terms: &[PartialFractionTerm]) -> Result<RationalSymbol> {
    let one = vec![Complex64::new(1.0, 0.0)];
    let factor = |pole: Complex64, times: usize| {
        let lin = [-pole, Complex64::new(1.0, 0.0)];
        (0..times).fold(one.clone(), |acc, _| cpoly_mul(&acc, &lin))
    };
    let mut den = one.clone();
    for t in terms {
        den = cpoly_mul(&den, &factor(t.pole, t.multiplicity));
    }
    let mut num = vec![Complex64::new(0.0, 0.0); den.len().saturating_sub(1)];
    for (j, t) in terms.iter().enumerate() {
        let mut others = one.clone();
        for (i, o) in terms.iter().enumerate() {
            if i != j {
                others = cpoly_mul(&others, &factor(o.pole, o.multiplicity));
            }
        }
        for (s, c) in t.residues.iter().enumerate() {
            let part = cpoly_mul(&others, &factor(t.pole, t.multiplicity - (s + 1)));
            for (idx, v) in part.iter().enumerate() {
                num[idx] += c * v;
            }
        }
    }
    let poles = terms
        .iter()
        .map(|t| Root {
            value: t.pole,
            multiplicity: t.multiplicity,
        })
        .collect();
    RationalSymbol::from_parts(
        Poly::from_complex_real_part(&num),
        Poly::from_complex_real_part(&den),
        poles,
    )
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn app_a_symbol() -> RationalSymbol {
        RationalSymbol::new(
            Polynomial::new(vec![0.0, 8.0 / 9.0]),
            Polynomial::new(vec![-1.0 / 9.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    /// Laurent coefficients by the trapezoid rule on the unit circle.
    fn contour_coefficients(r: &RationalSymbol, m: usize) -> Vec<f64> {
        let points = 4096;
        (0..m)
            .map(|n| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..points {
                    let z = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / points as f64);
                    // (1/2πi) ∮ r z^n dz = mean of r(z) z^{n+1}
                    acc += r.eval(z) * z.powu(n as u32 + 1);
                }
                acc.re / points as f64
            })
            .collect()
    }

    #[test]
    fn projection_keeps_inside_pole() {
        let b = &Polynomial::linear(1.0 / 3.0) * &Polynomial::linear(3.0);
        let r = project_negative(&Polynomial::new(vec![0.0, 1.0]), &b).unwrap();
        assert_eq!(r.degree(), 1);
        assert!(close(r.p().coeffs(), &[-1.0 / 8.0], 1e-13));
        assert!(close(r.q().coeffs(), &[-1.0 / 3.0, 1.0], 1e-13));
    }

    #[test]
    fn projection_of_unstable_function_is_empty() {
        let err = project_negative(&Polynomial::constant(1.0), &Polynomial::linear(2.0)).unwrap_err();
        assert_eq!(err, Error::EmptyProjection);
    }

    #[test]
    fn projection_keeps_stable_function() {
        let r = project_negative(
            &Polynomial::new(vec![0.0, 8.0 / 9.0]),
            &Polynomial::new(vec![-1.0 / 9.0, 0.0, 1.0]),
        )
        .unwrap();
        assert!(r.p().coeff(0).abs() < 1e-15);
        assert!((r.p().coeff(1) - 8.0 / 9.0).abs() < 1e-14);
        assert!(close(r.q().coeffs(), &[-1.0 / 9.0, 0.0, 1.0], 1e-14));
    }

    #[test]
    fn projection_reports_discarded_and_circle_poles() {
        // 1/(z - 0.5) + 1/(z - 1.00001)
        let b = &Polynomial::linear(0.5) * &Polynomial::linear(1.00001);
        let a = &Polynomial::linear(0.5) + &Polynomial::linear(1.00001);
        let proj = project_negative_with(&a, &b, &ProjectionOptions::default()).unwrap();
        assert_eq!(proj.kept.len(), 1);
        assert_eq!(proj.discarded.len(), 1);
        assert_eq!(proj.near_unit_circle.len(), 1);
    }

    #[test]
    fn pruning_drops_negligible_terms() {
        // 1/(z - 0.5) + 1e-3/(z + 0.2)
        let b = &Polynomial::linear(0.5) * &Polynomial::linear(-0.2);
        let a = &Polynomial::linear(-0.2) + &Polynomial::linear(0.5).scale(1e-3);
        let opts = ProjectionOptions {
            prune_below: Some(1e-2),
            ..Default::default()
        };
        let proj = project_negative_with(&a, &b, &opts).unwrap();
        assert_eq!(proj.symbol.degree(), 1);
        assert_eq!(proj.pruned.len(), 1);
    }

    #[test]
    fn geometric_series() {
        let r = RationalSymbol::new(Polynomial::constant(1.0), Polynomial::linear(0.5)).unwrap();
        assert!(close(&r.series_coefficients(4), &[1.0, 0.5, 0.25, 0.125], 1e-15));
    }

    #[test]
    fn app_a_series() {
        let g = app_a_symbol().series_coefficients(5);
        assert!(close(&g, &[8.0 / 9.0, 0.0, 8.0 / 81.0, 0.0, 8.0 / 729.0], 1e-15));
    }

    #[test]
    fn zero_numerator_series() {
        let g = series_coefficients(&Polynomial::zero(), &Polynomial::linear(0.3), 6).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn non_monic_rejected() {
        let err = series_coefficients(&Polynomial::constant(1.0), &Polynomial::new(vec![1.0, 2.0]), 3);
        assert_eq!(err, Err(Error::NonMonicDenominator(2.0)));
    }

    #[test]
    fn series_matches_contour_integral() {
        let b = &(&Polynomial::linear(0.9) * &Polynomial::new(vec![0.5, -0.2, 1.0])) * &Polynomial::linear(-0.7);
        let a = Polynomial::new(vec![0.3, -1.0, 0.4]);
        let r = RationalSymbol::new(a, b).unwrap();
        assert!(r.poles().iter().all(|p| p.modulus() <= 0.9 + 1e-12));
        let g = r.series_coefficients(40);
        let h = contour_coefficients(&r, 40);
        assert!(close(&g, &h, 1e-8));
    }

    #[test]
    fn symbol_json_round_trip() {
        let r = app_a_symbol();
        let json = serde_json::to_string(&r).unwrap();
        let back: RationalSymbol = serde_json::from_str(&json).unwrap();
        assert_eq!(back.p(), r.p());
        assert_eq!(back.q(), r.q());
    }

    #[test]
    fn improper_or_unstable_symbol_rejected() {
        assert!(RationalSymbol::new(Polynomial::new(vec![0.0, 1.0]), Polynomial::linear(0.5)).is_err());
        assert!(RationalSymbol::new(Polynomial::constant(1.0), Polynomial::linear(1.5)).is_err());
    }
}
