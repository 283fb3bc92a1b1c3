//! AAK rank-k approximation of a truncated Hankel operator.
//!
//! The approximant's symbol is the stable part of `z ↦ (Tξ)(z) / ξ(z)`
//! where `ξ` is the `k`-th Schmidt vector of the truncation and `T` its
//! Toeplitz companion.

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hankel::{
    build_truncation, sample_noise, CoefficientStream, HankelBlock, NoiseSpec, ToeplitzBlock,
};
use crate::linalg;
use crate::oracle::{Horizon, SequenceOracle};
use crate::rational::{
    project_negative_with, Polynomial, ProjectionOptions, RationalSymbol, POLE_TOL, WARN_BAND,
};

/// A singular number with its Schmidt vectors, `Hξ = ση` and `Hη = σξ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtPair {
    /// Position of `sigma` in the descending list of singular values.
    pub index: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

/// Something worth knowing about a run that did not stop it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    /// `σ_{k-1} - σ_k` is tiny relative to `σ_0`; the Schmidt vector is
    /// ill-determined. Adding noise usually separates the values.
    SmallGap { gap: f64, threshold: f64 },
    /// The symbol has a different number of stable poles than requested.
    RankMismatch { expected: usize, actual: usize },
    /// Poles within the warning band of the unit circle.
    NearUnitCircle { moduli: Vec<f64> },
}

/// Which Hankel block feeds the Toeplitz companion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToeplitzSource {
    /// The block whose Schmidt pair is used, noise included.
    Perturbed,
    /// The noise-free truncation.
    Clean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AakOptions {
    pub gap_tol: f64,
    pub pole_tol: f64,
    /// Stable terms whose norm bound is below `prune_tol · σ_0` are dropped.
    pub prune_tol: f64,
    /// Trailing polynomial coefficients below `strip_tol · max|c|` are
    /// removed before root finding.
    pub strip_tol: f64,
    pub warn_band: f64,
    pub toeplitz: ToeplitzSource,
}

impl Default for AakOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            pole_tol: POLE_TOL,
            prune_tol: 1e-12,
            strip_tol: 1e-14,
            warn_band: WARN_BAND,
            toeplitz: ToeplitzSource::Perturbed,
        }
    }
}

/// Facts about a run beyond the symbol itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `σ_{k-1} - σ_k` of the perturbed block.
    pub gap: f64,
    pub kept_pole_moduli: Vec<f64>,
    pub discarded_pole_moduli: Vec<f64>,
    #[serde(serialize_with = "complex_list")]
    pub pruned_poles: Vec<Complex64>,
    pub warnings: Vec<Warning>,
}

/// Output of [`aak_approximate`].
#[derive(Debug, Clone, PartialEq)]
pub struct AakResult {
    pub symbol: RationalSymbol,
    pub schmidt: SchmidtPair,
    pub sigma_k_n: f64,
    /// Stable poles, repeated by multiplicity.
    pub kept_poles: Vec<Complex64>,
    pub diagnostics: Diagnostics,
    /// Singular values of the perturbed block, descending.
    pub singular_values: Vec<f64>,
    pub truncation: HankelBlock,
    pub noise: HankelBlock,
    /// Spectral norm of the noise block.
    pub noise_norm: f64,
}

impl AakResult {
    pub fn rank(&self) -> usize {
        self.symbol.degree()
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.diagnostics.warnings
    }

    pub fn has_rank_mismatch(&self) -> bool {
        self.warnings()
            .iter()
            .any(|w| matches!(w, Warning::RankMismatch { .. }))
    }
}

impl Serialize for AakResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Json<'a> {
            sigma_k_n: f64,
            symbol: &'a RationalSymbol,
            #[serde(serialize_with = "complex_list")]
            kept_poles: &'a [Complex64],
            diagnostics: &'a Diagnostics,
        }
        Json {
            sigma_k_n: self.sigma_k_n,
            symbol: &self.symbol,
            kept_poles: &self.kept_poles,
            diagnostics: &self.diagnostics,
        }
        .serialize(s)
    }
}

fn complex_list<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
}

/// Approximant coefficients are the Laurent coefficients of the symbol.
impl CoefficientStream for RationalSymbol {
    fn coefficients(&self, count: usize) -> Result<Vec<f64>> {
        Ok(self.series_coefficients(count))
    }
}

impl CoefficientStream for AakResult {
    fn coefficients(&self, count: usize) -> Result<Vec<f64>> {
        self.symbol.coefficients(count)
    }
}

/// The Schmidt pair of the `k`-th largest singular value of a Hankel block.
///
/// Ties in `|λ|` prefer the positive eigenvalue. `ξ` is normalized so that
/// its first significant component is positive.
pub fn compute_eigenpair(h: &HankelBlock, k: usize) -> Result<SchmidtPair> {
    Ok(eigenpair_and_spectrum(h, k)?.0)
}

fn eigenpair_and_spectrum(h: &HankelBlock, k: usize) -> Result<(SchmidtPair, Vec<f64>)> {
    let n = h.size();
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "singular value index {k} needs a block larger than {n}x{n}"
        )));
    }
    let eig = linalg::symmetric_eigen_by_magnitude(h.to_matrix())?;
    let lambda = eig.values[k];
    let mut xi: Vec<f64> = eig.vectors.column(k).iter().copied().collect();
    let peak = xi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(first) = xi.iter().find(|v| v.abs() > 1e-12 * peak) {
        if *first < 0.0 {
            xi.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let sign = if lambda < 0.0 { -1.0 } else { 1.0 };
    let eta = xi.iter().map(|v| sign * v).collect();
    let sigmas = eig.values.iter().map(|v| v.abs()).collect();
    Ok((
        SchmidtPair {
            index: k,
            sigma: lambda.abs(),
            lambda,
            xi,
            eta,
        },
        sigmas,
    ))
}

/// `a = Tξ` and `b = ξ` as polynomials in ascending powers.
pub fn build_symbol(t: &ToeplitzBlock, pair: &SchmidtPair) -> Result<(Polynomial, Polynomial)> {
    if t.size() != pair.xi.len() {
        return Err(Error::InvalidArgument(format!(
            "Toeplitz block of size {} does not match a Schmidt vector of length {}",
            t.size(),
            pair.xi.len()
        )));
    }
    if pair.xi.iter().any(|v| !v.is_finite()) || pair.xi.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroSchmidtVector);
    }
    Ok((Polynomial::new(t.mul_vec(&pair.xi)), Polynomial::new(pair.xi.clone())))
}

/// Rank-`k` approximation of the `n`-truncation of `oracle`.
pub fn aak_approximate<O: SequenceOracle + ?Sized>(
    oracle: &O,
    k: usize,
    n: usize,
    noise: &NoiseSpec,
) -> Result<AakResult> {
    aak_approximate_with(oracle, k, n, noise, &AakOptions::default())
}

pub fn aak_approximate_with<O: SequenceOracle + ?Sized>(
    oracle: &O,
    k: usize,
    n: usize,
    noise: &NoiseSpec,
    opts: &AakOptions,
) -> Result<AakResult> {
    if k == 0 || n <= k {
        return Err(Error::InvalidArgument(format!(
            "need n > k >= 1, got n = {n}, k = {k}"
        )));
    }
    let truncation = build_truncation(oracle, n)?;
    let noise_block = sample_noise(n, noise)?;
    let perturbed = truncation.add(&noise_block)?;
    let (schmidt, singular_values) = eigenpair_and_spectrum(&perturbed, k)?;
    let sigma0 = singular_values[0];

    let mut warnings = Vec::new();
    let gap = singular_values[k - 1] - singular_values[k];
    if gap < opts.gap_tol * sigma0 {
        warnings.push(Warning::SmallGap {
            gap,
            threshold: opts.gap_tol * sigma0,
        });
    }

    let toeplitz = match opts.toeplitz {
        ToeplitzSource::Perturbed => ToeplitzBlock::from_hankel(&perturbed),
        ToeplitzSource::Clean => ToeplitzBlock::from_hankel(&truncation),
    };
    let (a, b) = build_symbol(&toeplitz, &schmidt)?;
    let projection = project_negative_with(
        &a.trimmed(opts.strip_tol),
        &b.trimmed(opts.strip_tol),
        &ProjectionOptions {
            pole_tol: opts.pole_tol,
            prune_below: Some(opts.prune_tol * sigma0),
            warn_band: opts.warn_band,
        },
    )?;

    let kept_poles: Vec<Complex64> = projection
        .kept
        .iter()
        .flat_map(|t| std::iter::repeat(t.pole).take(t.multiplicity))
        .collect();
    if kept_poles.len() != k {
        warnings.push(Warning::RankMismatch {
            expected: k,
            actual: kept_poles.len(),
        });
    }
    if !projection.near_unit_circle.is_empty() {
        warnings.push(Warning::NearUnitCircle {
            moduli: projection.near_unit_circle.iter().map(|z| z.norm()).collect(),
        });
    }
    let diagnostics = Diagnostics {
        gap,
        kept_pole_moduli: kept_poles.iter().map(|z| z.norm()).collect(),
        discarded_pole_moduli: projection.discarded.iter().map(|t| t.pole.norm()).collect(),
        pruned_poles: projection.pruned.iter().map(|t| t.pole).collect(),
        warnings,
    };
    Ok(AakResult {
        symbol: projection.symbol,
        sigma_k_n: schmidt.sigma,
        schmidt,
        kept_poles,
        diagnostics,
        singular_values,
        truncation,
        noise_norm: noise_block.spectral_norm()?,
        noise: noise_block,
    })
}

/// Reruns with doubled `n` while the kept-pole count differs from `k`,
/// up to `max_n` and the oracle horizon. Returns the last attempt.
pub fn aak_approximate_retrying<O: SequenceOracle + ?Sized>(
    oracle: &O,
    k: usize,
    n: usize,
    max_n: usize,
    noise: &NoiseSpec,
) -> Result<AakResult> {
    let limit = match oracle.horizon() {
        Horizon::Unbounded => max_n,
        Horizon::Last(last) => max_n.min(last + 1),
    };
    let mut n = n;
    loop {
        let result = aak_approximate(oracle, k, n, noise)?;
        if !result.has_rank_mismatch() || n >= limit {
            return Ok(result);
        }
        n = (2 * n).min(limit);
    }
}

/// `min(8k, horizon + 1)`.
pub fn default_truncation(k: usize, horizon: Horizon) -> usize {
    match horizon {
        Horizon::Unbounded => 8 * k,
        Horizon::Last(last) => (8 * k).min(last + 1),
    }
}

/// Smallest `k` with `σ_k < rho`, or `None` if every value is at least `rho`.
pub fn select_order(singular_values: &[f64], rho: f64) -> Option<usize> {
    singular_values.iter().position(|s| *s < rho)
}
