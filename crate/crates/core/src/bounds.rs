//! Computable error certificates for a finished approximation.
//!
//! With `t` the ℓ¹ tail of `f` past the truncation, the true singular value
//! satisfies `|σ_k - σ_k^n| ≤ t`, and the approximation error satisfies
//! `σ_k ≤ ‖H - G‖ ≤ σ_k + 2t`. Substituting the first bracket into the
//! second gives an interval in observable quantities only. Noise of norm
//! `‖N‖` widens the upper end by `2‖N‖`.

use serde::Serialize;

use crate::aak::AakResult;
use crate::error::{Error, Result};
use crate::hankel::{build_truncation, hankel_diff_norm_adaptive, HankelBlock, NormOptions, OracleStream};
use crate::oracle::{Horizon, SequenceOracle};
use crate::wfa::Wfa;

/// Both tails must fall below this before an ℓ² distance is reported.
pub const L2_TAIL_TOL: f64 = 1e-12;
/// Largest horizon searched by [`l2_distance`].
pub const L2_HORIZON_CAP: usize = 100_000;

/// `(max(σ - t, 0), σ + 3t)`.
pub fn near_optimality_bound(sigma_k_n: f64, tail: f64) -> (f64, f64) {
    ((sigma_k_n - tail).max(0.0), sigma_k_n + 3.0 * tail)
}

/// `upper + 2‖N‖`.
pub fn noise_adjustment(upper: f64, noise_norm: f64) -> f64 {
    upper + 2.0 * noise_norm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Distance {
    /// `(Σ_{i ≤ horizon} (f(i) - g(i))²)^{1/2}`.
    pub value: f64,
    pub horizon: usize,
    /// Certified bound on the contribution of indices past the horizon.
    pub tail_slack: f64,
}

/// ℓ² distance between an oracle and an automaton.
///
/// With `horizon = None` the smallest index whose combined certified tail
/// is below [`L2_TAIL_TOL`] is used. An explicit horizon must meet the
/// same requirement.
pub fn l2_distance<O: SequenceOracle + ?Sized>(
    oracle: &O,
    wfa: &Wfa,
    horizon: Option<usize>,
) -> Result<L2Distance> {
    let last = match oracle.horizon() {
        Horizon::Unbounded => L2_HORIZON_CAP,
        Horizon::Last(last) => last.min(L2_HORIZON_CAP),
    };
    let slack_at = |m: usize| -> Result<f64> {
        let f = oracle.tail_bound(m).ok_or_else(|| {
            Error::UncertifiableTail("the oracle provides no tail bound".into())
        })?;
        let g = wfa.tail_bound(m).ok_or_else(|| {
            Error::UncertifiableTail("the automaton's transition matrix is not contracting".into())
        })?;
        Ok(f + g)
    };
    let m = match horizon {
        Some(m) => {
            if m > last {
                return Err(Error::UncertifiableTail(format!(
                    "horizon {m} is past the last usable index {last}"
                )));
            }
            m
        }
        None => find_horizon(last, &slack_at)?,
    };
    let tail_slack = slack_at(m)?;
    if !(tail_slack < L2_TAIL_TOL) {
        return Err(Error::UncertifiableTail(format!(
            "tail bound {tail_slack:e} at index {m} is not below {L2_TAIL_TOL:e}"
        )));
    }
    let f = oracle.eval_prefix(m + 1)?;
    let sum: f64 = f
        .iter()
        .zip(wfa.stream())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(L2Distance {
        value: sum.sqrt(),
        horizon: m,
        tail_slack,
    })
}

/// Doubling followed by bisection for the first certified index.
fn find_horizon(last: usize, slack_at: &dyn Fn(usize) -> Result<f64>) -> Result<usize> {
    let ok = |m: usize| -> Result<bool> { Ok(slack_at(m)? < L2_TAIL_TOL) };
    if ok(0)? {
        return Ok(0);
    }
    let mut lo = 0;
    let mut hi = 1;
    loop {
        if hi >= last {
            if ok(last)? {
                hi = last;
                break;
            }
            return Err(Error::UncertifiableTail(format!(
                "tails stay above {L2_TAIL_TOL:e} up to index {last}"
            )));
        }
        if ok(hi)? {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaDeviation {
    /// `|σ_k(a) - σ_k(b)|`.
    pub deviation: f64,
    /// `‖a - b‖`, which bounds the deviation.
    pub difference_norm: f64,
}

pub fn sigma_deviation(a: &HankelBlock, b: &HankelBlock, k: usize) -> Result<SigmaDeviation> {
    if a.size() != b.size() {
        return Err(Error::InvalidArgument(format!(
            "blocks of sizes {} and {} cannot be compared",
            a.size(),
            b.size()
        )));
    }
    if k >= a.size() {
        return Err(Error::InvalidArgument(format!(
            "singular value index {k} out of range for size {}",
            a.size()
        )));
    }
    let diag: Vec<f64> = a.diag().iter().zip(b.diag()).map(|(x, y)| x - y).collect();
    let difference_norm = HankelBlock::from_diag(a.size(), diag)?.spectral_norm()?;
    let deviation = (a.singular_values()?[k] - b.singular_values()?[k]).abs();
    Ok(SigmaDeviation {
        deviation,
        difference_norm,
    })
}

/// How [`ErrorReport`] measures distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub norm: NormOptions,
    pub l2_horizon: Option<usize>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            norm: NormOptions {
                start: 32,
                rel_tol: 1e-9,
                cap: 512,
            },
            l2_horizon: None,
        }
    }
}

/// Certified interval and measured distances for one run.
///
/// Fields tied to an approximation run are absent when only an oracle and
/// an automaton are compared. `tail` and the bounds are absent when the
/// oracle has no certified tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub sigma_k_n: Option<f64>,
    /// ℓ¹ tail of the oracle past the truncation.
    pub tail: Option<f64>,
    /// Spectral norm of the noise block.
    pub noise_norm: Option<f64>,
    /// `σ_k^n ± tail`, the bracket on the true `σ_k`.
    pub sigma_k_bracket: Option<(f64, f64)>,
    pub lower_bound: Option<f64>,
    /// `σ_k^n + 3·tail` before the noise term.
    pub upper_bound_noise_free: Option<f64>,
    pub upper_bound: Option<f64>,
    /// `|σ_k^n(H + N) - σ_k^n(H)|`.
    pub sigma_deviation: Option<f64>,
    pub l2_distance: f64,
    pub l2_horizon: usize,
    pub l2_tail_slack: f64,
    /// Hankel norm of `f - g` on a leading section.
    pub spectral_estimate: f64,
    pub spectral_size: usize,
    pub spectral_converged: bool,
}

impl ErrorReport {
    /// Certificates for `result` and the automaton extracted from it.
    pub fn for_run<O: SequenceOracle + ?Sized>(
        oracle: &O,
        result: &AakResult,
        wfa: &Wfa,
        opts: &ReportOptions,
    ) -> Result<Self> {
        let mut report = Self::compare(oracle, wfa, opts)?;
        let n = result.truncation.size();
        let k = result.schmidt.index;
        let sigma = result.sigma_k_n;
        let noise_norm = result.noise_norm;
        let tail = oracle.tail_bound(n - 1);
        report.k = Some(k);
        report.n = Some(n);
        report.sigma_k_n = Some(sigma);
        report.noise_norm = Some(noise_norm);
        report.tail = tail;
        if let Some(t) = tail {
            let (lower, upper) = near_optimality_bound(sigma, t);
            report.sigma_k_bracket = Some(((sigma - t).max(0.0), sigma + t));
            // σ_k^n comes from the perturbed block, so it sits within ‖N‖ of the clean value
            report.lower_bound = Some((lower - noise_norm).max(0.0));
            report.upper_bound_noise_free = Some(upper);
            report.upper_bound = Some(noise_adjustment(upper, noise_norm));
        }
        let clean_sigma = result.truncation.singular_values()?[k];
        report.sigma_deviation = Some((sigma - clean_sigma).abs());
        Ok(report)
    }

    /// Distances between an oracle and an automaton, without certificates.
    pub fn compare<O: SequenceOracle + ?Sized>(oracle: &O, wfa: &Wfa, opts: &ReportOptions) -> Result<Self> {
        let l2 = l2_distance(oracle, wfa, opts.l2_horizon)?;
        let mut norm = opts.norm;
        if let Horizon::Last(last) = oracle.horizon() {
            // a section of size s reads 2s - 1 coefficients
            norm.cap = norm.cap.min(last / 2 + 1).max(1);
            norm.start = norm.start.min(norm.cap);
        }
        let spectral = hankel_diff_norm_adaptive(&OracleStream(oracle), wfa, &norm)?;
        Ok(Self {
            k: None,
            n: None,
            sigma_k_n: None,
            tail: None,
            noise_norm: None,
            sigma_k_bracket: None,
            lower_bound: None,
            upper_bound_noise_free: None,
            upper_bound: None,
            sigma_deviation: None,
            l2_distance: l2.value,
            l2_horizon: l2.horizon,
            l2_tail_slack: l2.tail_slack,
            spectral_estimate: spectral.value,
            spectral_size: spectral.size,
            spectral_converged: spectral.converged,
        })
    }

    /// Adds the lower certificate that holds for any automaton with at most
    /// `k` states: its Hankel distance to `f` is at least `σ_k(H) ≥ σ_k^n - tail`.
    pub fn with_rank_certificate<O: SequenceOracle + ?Sized>(
        mut self,
        oracle: &O,
        wfa: &Wfa,
        k: usize,
        n: usize,
    ) -> Result<Self> {
        if wfa.states() > k || n <= k {
            return Err(Error::InvalidArgument(format!(
                "a rank-{k} certificate needs n > k and at most {k} states, got n = {n} and {} states",
                wfa.states()
            )));
        }
        let sigma = build_truncation(oracle, n)?.singular_values()?[k];
        let tail = oracle.tail_bound(n - 1);
        self.k = Some(k);
        self.n = Some(n);
        self.sigma_k_n = Some(sigma);
        self.tail = tail;
        if let Some(t) = tail {
            self.sigma_k_bracket = Some(((sigma - t).max(0.0), sigma + t));
            self.lower_bound = Some(near_optimality_bound(sigma, t).0);
        }
        Ok(self)
    }

    /// `quantity,value,provenance` rows; absent values are left empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        let rows: Vec<(&str, String, &str)> = vec![
            ("k", self.k.map(|v| v.to_string()).unwrap_or_default(), "input"),
            ("n", self.n.map(|v| v.to_string()).unwrap_or_default(), "input"),
            ("sigma_k_n", opt(self.sigma_k_n), "singular value of the perturbed truncation"),
            ("tail", opt(self.tail), "certified l1 tail of f past the truncation"),
            ("noise_norm", opt(self.noise_norm), "spectral norm of the noise block"),
            ("sigma_k_lower", opt(self.sigma_k_bracket.map(|b| b.0)), "Weyl perturbation bracket on sigma_k"),
            ("sigma_k_upper", opt(self.sigma_k_bracket.map(|b| b.1)), "Weyl perturbation bracket on sigma_k"),
            ("lower_bound", opt(self.lower_bound), "AAK lower bound with sigma_k bracket"),
            ("upper_bound_noise_free", opt(self.upper_bound_noise_free), "AAK near-optimality with sigma_k bracket"),
            ("upper_bound", opt(self.upper_bound), "near-optimality plus twice the noise norm"),
            ("sigma_deviation", opt(self.sigma_deviation), "Weyl perturbation of singular values"),
            ("l2_distance", format!("{:.17e}", self.l2_distance), "l2 norm bounded by the Hankel norm"),
            ("l2_horizon", self.l2_horizon.to_string(), "certified truncation index"),
            ("l2_tail_slack", format!("{:.17e}", self.l2_tail_slack), "certified l1 tails of f and g"),
            ("spectral_estimate", format!("{:.17e}", self.spectral_estimate), "largest singular value of a leading Hankel section"),
            ("spectral_size", self.spectral_size.to_string(), "section size"),
            ("spectral_converged", self.spectral_converged.to_string(), "section doubling settled"),
        ];
        let mut out = String::from("quantity,value,provenance-theorem\n");
        for (q, v, p) in rows {
            out.push_str(&format!("{q},{v},{p}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle::oracle_from_wfa;

    #[test]
    fn near_optimality_examples() {
        assert_eq!(near_optimality_bound(0.1, 0.0), (0.1, 0.1));
        let (lo, hi) = near_optimality_bound(0.1, 1.0 / 81.0);
        assert!((lo - (0.1 - 1.0 / 81.0)).abs() < 1e-16);
        assert!((hi - (0.1 + 3.0 / 81.0)).abs() < 1e-16);
        assert_eq!(near_optimality_bound(0.0, 0.2), (0.0, 0.6000000000000001));
    }

    #[test]
    fn rank_certificate_bounds_any_small_automaton() {
        let oracle = fixtures::even_geometric(1.0 / 3.0);
        let w = Wfa::scalar(1.0, 0.2, 0.5);
        let report = ErrorReport::compare(&oracle, &w, &ReportOptions::default())
            .unwrap()
            .with_rank_certificate(&oracle, &w, 1, 40)
            .unwrap();
        let lower = report.lower_bound.unwrap();
        assert!((lower - 0.1).abs() < 1e-9);
        assert!(report.spectral_estimate >= lower);
        assert!(report.upper_bound.is_none());
    }

    #[test]
    fn noise_adjustment_examples() {
        assert_eq!(noise_adjustment(0.1, 0.0), 0.1);
        assert!((noise_adjustment(0.1, 0.01) - 0.12).abs() < 1e-16);
    }

    #[test]
    fn l2_of_identical_functions() {
        let w = fixtures::random_stable_wfa(3, 0.8, 11);
        let d = l2_distance(&oracle_from_wfa(w.clone()), &w, None).unwrap();
        assert!(d.value <= 1e-12);
        assert!(d.tail_slack < L2_TAIL_TOL);
    }

    #[test]
    fn l2_geometric_against_zero() {
        let d = l2_distance(&fixtures::geometric(0.5), &Wfa::scalar(0.0, 0.0, 0.0), None).unwrap();
        assert!((d.value - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn l2_refuses_uncertified_horizon() {
        let w = Wfa::scalar(1.0, 0.5, 1.0);
        let err = l2_distance(&fixtures::geometric(0.5), &w, Some(3)).unwrap_err();
        assert!(matches!(err, Error::UncertifiableTail(_)));
        let unbounded = Wfa::scalar(1.0, 1.0, 1.0);
        assert!(l2_distance(&fixtures::geometric(0.5), &unbounded, None).is_err());
    }

    #[test]
    fn sigma_deviation_of_equal_blocks() {
        let h = build_truncation(&fixtures::even_geometric(1.0 / 3.0), 10).unwrap();
        let d = sigma_deviation(&h, &h, 1).unwrap();
        assert_eq!(d.deviation, 0.0);
        assert_eq!(d.difference_norm, 0.0);
    }

    #[test]
    fn sigma_deviation_of_nested_truncations() {
        let oracle = fixtures::even_geometric(1.0 / 3.0);
        let short = build_truncation(&oracle, 20).unwrap().padded(40).unwrap();
        let long = build_truncation(&oracle, 40).unwrap();
        let d = sigma_deviation(&short, &long, 1).unwrap();
        let tail = crate::hankel::tail_mass(&oracle, 19).unwrap();
        assert!(d.deviation <= tail + 1e-15);
        assert!(d.deviation <= d.difference_norm + 1e-10);
    }

    #[test]
    fn csv_has_stable_header() {
        let oracle = fixtures::geometric(0.5);
        let r = ErrorReport::compare(&oracle, &Wfa::scalar(0.5, 0.5, 1.0), &ReportOptions::default()).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("quantity,value,provenance-theorem\n"));
        assert!(r.l2_distance < 1e-12 && r.spectral_estimate < 1e-12);
    }
}
