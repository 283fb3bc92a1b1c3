//! Finite Hankel and Toeplitz blocks built from an oracle, random compact
//! Hankel noise, tail masses, and a spectral-norm estimator for Hankel
//! differences.

use nalgebra::DMatrix;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::symmetric_unit;
use crate::linalg;
use crate::oracle::{SequenceOracle, MASS_TOL};

/// An `n × n` Hankel matrix stored by its `2n - 1` anti-diagonals.
///
/// Entries with `i + j ≥ support` are zero. A truncation of an oracle has
/// `support = n`; the block then represents the bi-infinite Hankel operator
/// whose only non-zero entries lie in this block.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelBlock {
    n: usize,
    diag: Vec<f64>,
    support: usize,
}

impl HankelBlock {
    /// Builds a block from its anti-diagonals; `diag.len()` must be `2n - 1`.
    pub fn from_diag(n: usize, diag: Vec<f64>) -> Result<Self> {
        if n == 0 || diag.len() != 2 * n - 1 {
            return Err(Error::InvalidArgument(format!(
                "a {n}x{n} Hankel block needs {} anti-diagonals, got {}",
                (2 * n).saturating_sub(1),
                diag.len()
            )));
        }
        let support = diag.iter().rposition(|v| *v != 0.0).map_or(0, |i| i + 1);
        Ok(Self { n, diag, support })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            diag: vec![0.0; 2 * n - 1],
            support: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.diag[i + j]
    }

    pub fn first_row(&self) -> &[f64] {
        &self.diag[..self.n]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.diag[i + j])
    }

    /// Entry-wise sum; both blocks must have the same size.
    pub fn add(&self, other: &HankelBlock) -> Result<HankelBlock> {
        if self.n != other.n {
            return Err(Error::InvalidArgument(format!(
                "cannot add Hankel blocks of sizes {} and {}",
                self.n, other.n
            )));
        }
        let diag = self.diag.iter().zip(&other.diag).map(|(a, b)| a + b).collect();
        HankelBlock::from_diag(self.n, diag)
    }

    /// Extends the anti-diagonal sequence with zeros to a `size × size` block.
    pub fn padded(&self, size: usize) -> Result<HankelBlock> {
        if size < self.n {
            return Err(Error::InvalidArgument(format!(
                "cannot pad a {}x{} block down to {size}",
                self.n, self.n
            )));
        }
        let mut diag = self.diag.clone();
        diag.resize(2 * size - 1, 0.0);
        Ok(HankelBlock {
            n: size,
            diag,
            support: self.support,
        })
    }

    /// Singular values, descending. For a symmetric block these are `|λ|`.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        linalg::symmetric_singular_values(&self.to_matrix())
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(self.singular_values()?.first().copied().unwrap_or(0.0))
    }

    /// Row-major CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| format!("{:.16e}", self.entry(i, j)))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct HankelJson {
    n: usize,
    diag: Vec<f64>,
}

impl Serialize for HankelBlock {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HankelJson {
            n: self.n,
            diag: self.diag.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HankelBlock {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = HankelJson::deserialize(d)?;
        HankelBlock::from_diag(raw.n, raw.diag).map_err(serde::de::Error::custom)
    }
}

/// An `n × n` strictly upper triangular Toeplitz matrix,
/// `entry(i, j) = first_row[j - i]` for `j > i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzBlock {
    first_row: Vec<f64>,
}

impl ToeplitzBlock {
    pub fn new(first_row: Vec<f64>) -> Result<Self> {
        match first_row.first() {
            None => Err(Error::InvalidArgument("Toeplitz block must be non-empty".into())),
            Some(v) if *v != 0.0 => Err(Error::InvalidArgument(
                "Toeplitz block must have a zero main diagonal".into(),
            )),
            Some(_) => Ok(Self { first_row }),
        }
    }

    /// The Toeplitz companion of a Hankel block: `T(0, j) = H(0, j - 1)`.
    pub fn from_hankel(h: &HankelBlock) -> Self {
        let mut first_row = Vec::with_capacity(h.size());
        first_row.push(0.0);
        first_row.extend_from_slice(&h.first_row()[..h.size() - 1]);
        Self { first_row }
    }

    pub fn size(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if j > i {
            self.first_row[j - i]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        (0..n)
            .map(|i| (i + 1..n).map(|j| self.first_row[j - i] * x[j]).sum())
            .collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

/// How many anti-diagonals of the noise block are perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseLayout {
    /// Only the first `n` anti-diagonals, like an oracle truncation. The
    /// perturbed block stays the matrix of a finite-rank Hankel operator.
    Truncated,
    /// All `2n - 1` anti-diagonals of the block.
    FullBlock,
}

/// Random Hankel perturbation with anti-diagonal `m` uniform in
/// `[-(m+2)^{-p}, (m+2)^{-p}]`.
///
/// Draws come from ChaCha8 seeded with `seed` through
/// `SeedableRng::seed_from_u64`; each value takes the top 53 bits `u` of one
/// `next_u64` word and maps it to `bound · (2u·2^{-53} - 1)`. Anti-diagonal
/// `m` is always the `m`-th draw, so blocks of different sizes share their
/// leading values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p: f64,
    pub seed: u64,
    pub enabled: bool,
    pub layout: NoiseLayout,
}

impl NoiseSpec {
    pub fn new(p: f64, seed: u64) -> Self {
        Self {
            p,
            seed,
            enabled: true,
            layout: NoiseLayout::Truncated,
        }
    }

    pub fn disabled() -> Self {
        Self {
            p: 2.0,
            seed: 0,
            enabled: false,
            layout: NoiseLayout::Truncated,
        }
    }

    pub fn with_layout(mut self, layout: NoiseLayout) -> Self {
        self.layout = layout;
        self
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::disabled()
    }
}

/// Truncation of the oracle's Hankel matrix to `n` anti-diagonals:
/// `H(i, j) = f(i + j)` for `i + j ≤ n - 1`, zero otherwise.
pub fn build_truncation<O: SequenceOracle + ?Sized>(oracle: &O, n: usize) -> Result<HankelBlock> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation size must be at least 1".into()));
    }
    let mut diag = oracle.eval_prefix(n)?;
    diag.resize(2 * n - 1, 0.0);
    Ok(HankelBlock {
        n,
        diag,
        support: n,
    })
}

/// Toeplitz matrix with first row `[0, f(0), …, f(n - 2)]`.
pub fn build_toeplitz<O: SequenceOracle + ?Sized>(oracle: &O, n: usize) -> Result<ToeplitzBlock> {
    if n == 0 {
        return Err(Error::InvalidArgument("Toeplitz size must be at least 1".into()));
    }
    let mut first_row = vec![0.0];
    first_row.extend(oracle.eval_prefix(n - 1)?);
    Ok(ToeplitzBlock { first_row })
}

/// Noise block for a truncation of size `n`; the zero block when disabled.
pub fn sample_noise(n: usize, spec: &NoiseSpec) -> Result<HankelBlock> {
    if n == 0 {
        return Err(Error::InvalidArgument("noise block size must be at least 1".into()));
    }
    if !spec.enabled {
        return Ok(HankelBlock::zeros(n));
    }
    if !(spec.p >= 2.0) {
        return Err(Error::InvalidNoiseExponent(spec.p));
    }
    let sampled = match spec.layout {
        NoiseLayout::Truncated => n,
        NoiseLayout::FullBlock => 2 * n - 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut diag: Vec<f64> = (0..sampled)
        .map(|m| (m as f64 + 2.0).powf(-spec.p) * symmetric_unit(&mut rng))
        .collect();
    diag.resize(2 * n - 1, 0.0);
    HankelBlock::from_diag(n, diag)
}

/// `1 - Σ_{i ≤ n} f(i)` for a probabilistic oracle, clamped to zero when it
/// is negative by less than `MASS_TOL`.
pub fn tail_mass<O: SequenceOracle + ?Sized>(oracle: &O, n: usize) -> Result<f64> {
    if !oracle.is_probabilistic() {
        return Err(Error::UnsupportedBound);
    }
    let values = oracle.eval_prefix(n + 1)?;
    let tail = 1.0 - neumaier_sum(&values);
    if tail >= 0.0 {
        Ok(tail)
    } else if tail >= -MASS_TOL {
        Ok(0.0)
    } else {
        Err(Error::InvalidArgument(format!(
            "partial sums exceed one by {:e}",
            -tail
        )))
    }
}

fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A sequence of Hankel coefficients `g_0, g_1, …`.
pub trait CoefficientStream {
    fn coefficients(&self, count: usize) -> Result<Vec<f64>>;
}

/// A finitely supported stream; entries past the end are zero.
impl CoefficientStream for [f64] {
    fn coefficients(&self, count: usize) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = self.iter().take(count).copied().collect();
        out.resize(count, 0.0);
        Ok(out)
    }
}

impl CoefficientStream for Vec<f64> {
    fn coefficients(&self, count: usize) -> Result<Vec<f64>> {
        self.as_slice().coefficients(count)
    }
}

/// A block read as the operator it represents: its anti-diagonals, then zeros.
impl CoefficientStream for HankelBlock {
    fn coefficients(&self, count: usize) -> Result<Vec<f64>> {
        self.diag.coefficients(count)
    }
}

/// Adapts an oracle to a coefficient stream.
pub struct OracleStream<'a, O: ?Sized>(pub &'a O);

impl<O: SequenceOracle + ?Sized> CoefficientStream for OracleStream<'_, O> {
    fn coefficients(&self, count: usize) -> Result<Vec<f64>> {
        self.0.eval_prefix(count)
    }
}

/// Largest singular value of the `size × size` Hankel block of `a - b`.
///
/// This is the norm of a leading section of the bi-infinite difference, so
/// it is a lower bound on the operator norm and is non-decreasing in `size`.
pub fn hankel_diff_norm<A, B>(a: &A, b: &B, size: usize) -> Result<f64>
where
    A: CoefficientStream + ?Sized,
    B: CoefficientStream + ?Sized,
{
    if size == 0 {
        return Ok(0.0);
    }
    let count = 2 * size - 1;
    let diff: Vec<f64> = a
        .coefficients(count)?
        .iter()
        .zip(b.coefficients(count)?)
        .map(|(x, y)| x - y)
        .collect();
    let block = HankelBlock::from_diag(size, diff)?;
    block.spectral_norm()
}

/// Growth schedule for [`hankel_diff_norm_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub start: usize,
    pub rel_tol: f64,
    pub cap: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            start: 32,
            rel_tol: 1e-9,
            cap: 512,
        }
    }
}

/// Result of an adaptive norm estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub size: usize,
    pub converged: bool,
}

/// Doubles the section size until the norm changes by less than
/// `rel_tol` relative, or the cap is reached.
pub fn hankel_diff_norm_adaptive<A, B>(a: &A, b: &B, opts: &NormOptions) -> Result<NormEstimate>
where
    A: CoefficientStream + ?Sized,
    B: CoefficientStream + ?Sized,
{
    let mut size = opts.start.clamp(1, opts.cap.max(1));
    let mut value = hankel_diff_norm(a, b, size)?;
    while size < opts.cap {
        let next = (2 * size).min(opts.cap);
        let next_value = hankel_diff_norm(a, b, next)?;
        let settled = (next_value - value).abs() <= opts.rel_tol * next_value.abs();
        size = next;
        value = next_value;
        if settled {
            return Ok(NormEstimate {
                value,
                size,
                converged: true,
            });
        }
    }
    Ok(NormEstimate {
        value,
        size,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::{oracle_from_table, BeyondTable};

    #[test]
    fn truncation_of_interleaved_fixture() {
        let h = build_truncation(&fixtures::even_geometric(1.0 / 3.0), 3).unwrap();
        let expected = [
            [8.0 / 9.0, 0.0, 8.0 / 81.0],
            [0.0, 8.0 / 81.0, 0.0],
            [8.0 / 81.0, 0.0, 0.0],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((h.entry(i, j) - v).abs() < 1e-16, "({i},{j})");
            }
        }
        assert_eq!(h.support(), 3);
    }

    #[test]
    fn truncation_of_zero_and_geometric() {
        let z = build_truncation(&fixtures::zero(), 2).unwrap();
        assert_eq!(z.to_matrix(), DMatrix::zeros(2, 2));
        let g = build_truncation(&fixtures::geometric(0.5), 2).unwrap();
        assert_eq!(g.to_matrix(), DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.0]));
    }

    #[test]
    fn truncation_propagates_horizon_errors() {
        let t = oracle_from_table(vec![0.5, 0.25], BeyondTable::Error).unwrap();
        assert!(matches!(build_truncation(&t, 3), Err(Error::OutOfHorizon { .. })));
        assert!(build_truncation(&t, 2).is_ok());
    }

    #[test]
    fn tail_mass_examples() {
        assert!((tail_mass(&fixtures::geometric(0.5), 3).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        let point = oracle_from_table(vec![1.0], BeyondTable::Zero).unwrap();
        assert_eq!(tail_mass(&point, 0).unwrap(), 0.0);
        // 1 - (8/9)(1 + 1/9 + 1/81) = 1/729
        let t = tail_mass(&fixtures::even_geometric(1.0 / 3.0), 4).unwrap();
        assert!((t - 1.0 / 729.0).abs() < 1e-15);
    }

    #[test]
    fn tail_mass_needs_probabilistic_oracle() {
        let t = oracle_from_table(vec![2.0, -1.0], BeyondTable::Zero).unwrap();
        assert_eq!(tail_mass(&t, 1), Err(Error::UnsupportedBound));
    }

    #[test]
    fn toeplitz_layouts() {
        let t = build_toeplitz(&oracle_from_table(vec![1.0, 2.0, 3.0], BeyondTable::Zero).unwrap(), 3)
            .unwrap();
        assert_eq!(
            t.to_matrix(),
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        );
        assert_eq!(build_toeplitz(&fixtures::geometric(0.5), 1).unwrap().to_matrix(), DMatrix::zeros(1, 1));
        let a = build_toeplitz(&fixtures::even_geometric(1.0 / 3.0), 3).unwrap();
        assert_eq!(a.first_row(), &[0.0, 8.0 / 9.0, 0.0]);
        assert_eq!(a.entry(1, 2), 8.0 / 9.0);
    }

    #[test]
    fn toeplitz_from_hankel_matches_oracle_toeplitz() {
        let o = fixtures::geometric(0.3);
        let h = build_truncation(&o, 6).unwrap();
        assert_eq!(ToeplitzBlock::from_hankel(&h), build_toeplitz(&o, 6).unwrap());
        let x = [1.0, -2.0, 0.5, 0.0, 3.0, 1.0];
        let dense = build_toeplitz(&o, 6).unwrap().to_matrix() * nalgebra::DVector::from_row_slice(&x);
        let fast = build_toeplitz(&o, 6).unwrap().mul_vec(&x);
        for (a, b) in dense.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn noise_disabled_is_zero() {
        let z = sample_noise(3, &NoiseSpec::disabled()).unwrap();
        assert_eq!(z, HankelBlock::zeros(3));
    }

    #[test]
    fn noise_respects_interval_bounds() {
        for seed in 0..50 {
            let full = sample_noise(3, &NoiseSpec::new(2.0, seed).with_layout(NoiseLayout::FullBlock))
                .unwrap();
            assert!(full.diag()[0].abs() <= 0.25);
            assert!(full.diag()[4].abs() <= 1.0 / 36.0);
            let trunc = sample_noise(3, &NoiseSpec::new(2.0, seed)).unwrap();
            assert_eq!(&trunc.diag()[..3], &full.diag()[..3]);
            assert_eq!(&trunc.diag()[3..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let spec = NoiseSpec::new(3.0, 7);
        assert_eq!(sample_noise(10, &spec).unwrap(), sample_noise(10, &spec).unwrap());
        assert_ne!(
            sample_noise(10, &spec).unwrap(),
            sample_noise(10, &NoiseSpec::new(3.0, 8)).unwrap()
        );
    }

    #[test]
    fn noise_rejects_slow_decay() {
        assert_eq!(
            sample_noise(3, &NoiseSpec::new(1.5, 0)),
            Err(Error::InvalidNoiseExponent(1.5))
        );
    }

    #[test]
    fn diff_norm_identical_streams() {
        let a = vec![1.0, 0.5, 0.25];
        assert_eq!(hankel_diff_norm(&a, &a, 10).unwrap(), 0.0);
    }

    #[test]
    fn diff_norm_rank_one_closed_forms() {
        // (1/2)^{i+j+1} is rank one with norm (1/2) Σ 4^{-i} = 2/3
        let g = fixtures::geometric(0.5);
        let v = hankel_diff_norm(&OracleStream(&g), &[][..], 100).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
        let e = fixtures::even_geometric(1.0 / 3.0);
        let v = hankel_diff_norm(&OracleStream(&e), &[][..], 200).unwrap();
        assert!((v - 0.9).abs() < 1e-6);
    }

    #[test]
    fn adaptive_norm_converges() {
        let e = fixtures::even_geometric(1.0 / 3.0);
        let est = hankel_diff_norm_adaptive(&OracleStream(&e), &[][..], &NormOptions::default()).unwrap();
        assert!(est.converged);
        assert!((est.value - 0.9).abs() < 1e-12);
    }

    #[test]
    fn padding_keeps_entries() {
        let h = build_truncation(&fixtures::geometric(0.5), 3).unwrap();
        let p = h.padded(5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h.entry(i, j), p.entry(i, j));
            }
        }
        assert_eq!(p.entry(4, 4), 0.0);
        assert!((h.spectral_norm().unwrap() - p.spectral_norm().unwrap()).abs() < 1e-14);
    }

    #[test]
    fn json_and_csv() {
        let h = build_truncation(&fixtures::geometric(0.5), 2).unwrap();
        let json = serde_json::to_string(&h).unwrap();
        assert_eq!(json, r#"{"n":2,"diag":[0.5,0.25,0.0]}"#);
        let back: HankelBlock = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
        let csv = h.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("5.0000000000000000e-1,"));
    }
}
