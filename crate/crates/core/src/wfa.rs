//! One-letter weighted automata and their spectral extraction from a window
//! of Hankel coefficients.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hankel::CoefficientStream;
use crate::rational::RationalSymbol;
use crate::linalg;

/// Singular values below `RANK_TOL · σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Largest power searched for a contracting `A^j` when bounding tails.
const CONTRACTION_SEARCH: usize = 4096;

/// `f(n) = αᵀ Aⁿ β`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wfa {
    alpha: DVector<f64>,
    transition: DMatrix<f64>,
    beta: DVector<f64>,
}

impl Wfa {
    pub fn new(alpha: Vec<f64>, transition: DMatrix<f64>, beta: Vec<f64>) -> Result<Self> {
        let k = alpha.len();
        if transition.shape() != (k, k) || beta.len() != k {
            return Err(Error::InvalidArgument(format!(
                "inconsistent WFA shapes: alpha {k}, A {:?}, beta {}",
                transition.shape(),
                beta.len()
            )));
        }
        if alpha.iter().chain(transition.iter()).chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("WFA weights must be finite".into()));
        }
        Ok(Self {
            alpha: DVector::from_vec(alpha),
            transition,
            beta: DVector::from_vec(beta),
        })
    }

    /// A one-state automaton.
    pub fn scalar(alpha: f64, a: f64, beta: f64) -> Self {
        Self {
            alpha: DVector::from_element(1, alpha),
            transition: DMatrix::from_element(1, 1, a),
            beta: DVector::from_element(1, beta),
        }
    }

    pub fn states(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    /// `αᵀ Aⁿ β` by repeated matrix-vector products.
    pub fn eval(&self, n: usize) -> f64 {
        let mut v = self.beta.clone();
        for _ in 0..n {
            v = &self.transition * v;
        }
        self.alpha.dot(&v)
    }

    /// Lazily yields `f(0), f(1), …`.
    pub fn stream(&self) -> WfaStream<'_> {
        WfaStream {
            wfa: self,
            v: self.beta.clone(),
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        if self.states() == 0 {
            return 0.0;
        }
        self.transition
            .complex_eigenvalues()
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Certified bound on `Σ_{i > n} |f(i)|`.
    ///
    /// Finds `j` with `‖A^j‖_F ≤ 1/2`, then every index past `n` is
    /// `n + 1 + s + r·j` with `s < j`, giving
    /// `Σ ≤ ‖β‖ Σ_{s<j} ‖αᵀ A^{n+1+s}‖ / (1 - ‖A^j‖_F)`.
    /// Returns `None` when no such `j` exists within the search range.
    pub fn tail_bound(&self, n: usize) -> Option<f64> {
        let k = self.states();
        if k == 0 {
            return Some(0.0);
        }
        let mut power = DMatrix::<f64>::identity(k, k);
        let mut contraction = None;
        for j in 1..=CONTRACTION_SEARCH {
            power = &power * &self.transition;
            let norm = power.norm();
            if !norm.is_finite() {
                return None;
            }
            if norm <= 0.5 {
                contraction = Some((j, norm));
                break;
            }
        }
        let (j, norm) = contraction?;
        let mut row: RowDVector<f64> = self.alpha.transpose();
        for _ in 0..=n {
            row = &row * &self.transition;
        }
        let mut sum = 0.0;
        for _ in 0..j {
            sum += row.norm();
            row = &row * &self.transition;
        }
        Some(self.beta.norm() * sum / (1.0 - norm))
    }
}

/// Coefficient stream of a [`Wfa`].
#[derive(Debug, Clone)]
pub struct WfaStream<'a> {
    wfa: &'a Wfa,
    v: DVector<f64>,
}

impl Iterator for WfaStream<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.wfa.alpha.dot(&self.v);
        self.v = &self.wfa.transition * &self.v;
        Some(out)
    }
}

impl CoefficientStream for Wfa {
    fn coefficients(&self, count: usize) -> Result<Vec<f64>> {
        Ok(self.stream().take(count).collect())
    }
}

pub fn wfa_eval(wfa: &Wfa, n: usize) -> f64 {
    wfa.eval(n)
}

pub fn wfa_coefficient_stream(wfa: &Wfa) -> WfaStream<'_> {
    wfa.stream()
}

#[derive(Serialize, Deserialize)]
struct WfaJson {
    k: usize,
    alpha: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    beta: Vec<f64>,
}

impl Serialize for Wfa {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let k = self.states();
        WfaJson {
            k,
            alpha: self.alpha.iter().copied().collect(),
            a: (0..k)
                .map(|i| self.transition.row(i).iter().copied().collect())
                .collect(),
            beta: self.beta.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Wfa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = WfaJson::deserialize(d)?;
        if raw.alpha.len() != raw.k || raw.a.len() != raw.k || raw.a.iter().any(|r| r.len() != raw.k) {
            return Err(D::Error::custom(format!("WFA arrays do not match k = {}", raw.k)));
        }
        let flat: Vec<f64> = raw.a.into_iter().flatten().collect();
        let a = DMatrix::from_row_slice(raw.k, raw.k, &flat);
        Wfa::new(raw.alpha, a, raw.beta).map_err(D::Error::custom)
    }
}

/// The first `2k + 1` Laurent coefficients of a rank-`k` symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientWindow {
    g: Vec<f64>,
    k: usize,
}

impl CoefficientWindow {
    pub fn new(g: Vec<f64>, k: usize) -> Result<Self> {
        if g.len() != 2 * k + 1 {
            return Err(Error::InvalidArgument(format!(
                "a rank-{k} window needs {} coefficients, got {}",
                2 * k + 1,
                g.len()
            )));
        }
        Ok(Self { g, k })
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    pub fn rank(&self) -> usize {
        self.k
    }
}

pub fn recover_window(symbol: &RationalSymbol, k: usize) -> Result<CoefficientWindow> {
    let actual = symbol.degree();
    if actual != k {
        return Err(Error::DegreeMismatch { expected: k, actual });
    }
    CoefficientWindow::new(symbol.series_coefficients(2 * k + 1), k)
}

/// Balanced spectral factorization of the leading `k × k` Hankel block.
pub fn spectral_extract(window: &CoefficientWindow) -> Result<Wfa> {
    let k = window.k;
    let g = &window.g;
    if k == 0 {
        return Err(Error::InvalidArgument("cannot extract a zero-state WFA".into()));
    }
    let h = DMatrix::from_fn(k, k, |i, j| g[i + j]);
    let h_shift = DMatrix::from_fn(k, k, |i, j| g[i + j + 1]);
    // H is symmetric, so its compact SVD comes from the eigenpairs:
    // U = Q, D = |Λ|, Vᵀ = sign(Λ) Qᵀ
    let eig = linalg::symmetric_eigen_by_magnitude(h.clone())?;
    let top = eig.values[0].abs();
    let rank = if top > 0.0 {
        eig.values.iter().filter(|x| x.abs() > RANK_TOL * top).count()
    } else {
        0
    };
    if rank < k {
        return Err(Error::RankDeficient { rank, expected: k });
    }
    let q = &eig.vectors;
    let inv_sqrt = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 / eig.values[i].abs().sqrt() } else { 0.0 });
    let signs = DMatrix::from_fn(k, k, |i, j| if i == j { eig.values[i].signum() } else { 0.0 });
    // P⁺ = D^{-1/2} Uᵀ and S⁺ = V D^{-1/2}
    let p_pinv = &inv_sqrt * q.transpose();
    let s_pinv = q * &signs * &inv_sqrt;
    let first_row = h.row(0).clone_owned();
    let first_col = h.column(0).clone_owned();
    let alpha = (first_row * &s_pinv).transpose();
    let beta = &p_pinv * first_col;
    let a = &p_pinv * h_shift * &s_pinv;
    Wfa::new(alpha.iter().copied().collect(), a, beta.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Polynomial;

    fn app_a_window() -> CoefficientWindow {
        CoefficientWindow::new(vec![8.0 / 9.0, 0.0, 8.0 / 81.0, 0.0, 8.0 / 729.0], 2).unwrap()
    }

    fn app_a(n: usize) -> f64 {
        if n % 2 == 0 {
            (8.0 / 9.0) * 9f64.powi(-(n as i32) / 2)
        } else {
            0.0
        }
    }

    #[test]
    fn scalar_eval() {
        let w = Wfa::scalar(1.0, 0.5, 1.0);
        assert_eq!(w.eval(0), 1.0);
        assert_eq!(w.eval(3), 0.125);
        assert_eq!(wfa_eval(&w, 3), 0.125);
    }

    #[test]
    fn streams() {
        let w = Wfa::scalar(1.0, 0.0, 1.0);
        assert_eq!(wfa_coefficient_stream(&w).take(4).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0]);
        let w = Wfa::scalar(1.0, 0.5, 1.0);
        let s: Vec<f64> = w.stream().take(5).collect();
        assert_eq!(s, (0..5).map(|i| 0.5f64.powi(i)).collect::<Vec<_>>());
    }

    #[test]
    fn windows_from_symbols() {
        let r = RationalSymbol::new(
            Polynomial::new(vec![0.0, 8.0 / 9.0]),
            Polynomial::new(vec![-1.0 / 9.0, 0.0, 1.0]),
        )
        .unwrap();
        let w = recover_window(&r, 2).unwrap();
        for (x, y) in w.values().iter().zip(app_a_window().values()) {
            assert!((x - y).abs() < 1e-16);
        }
        assert_eq!(
            recover_window(&r, 1),
            Err(Error::DegreeMismatch { expected: 1, actual: 2 })
        );
        let r = RationalSymbol::new(Polynomial::constant(1.0), Polynomial::linear(0.5)).unwrap();
        assert_eq!(recover_window(&r, 1).unwrap().values(), &[1.0, 0.5, 0.25]);
    }

    #[test]
    fn one_state_extraction() {
        let w = spectral_extract(&CoefficientWindow::new(vec![1.0, 0.5, 0.25], 1).unwrap()).unwrap();
        assert!((w.transition()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((w.alpha()[0] * w.beta()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_state_extraction_reproduces_sequence() {
        let w = spectral_extract(&app_a_window()).unwrap();
        assert_eq!(w.states(), 2);
        for n in 0..=20 {
            assert!((w.eval(n) - app_a(n)).abs() < 1e-10, "n = {n}");
        }
        assert!((w.eval(4) - 8.0 / 729.0).abs() < 1e-10);
    }

    #[test]
    fn zero_window_is_rank_deficient() {
        let err = spectral_extract(&CoefficientWindow::new(vec![0.0; 5], 2).unwrap()).unwrap_err();
        assert_eq!(err, Error::RankDeficient { rank: 0, expected: 2 });
    }

    #[test]
    fn window_length_checked() {
        assert!(CoefficientWindow::new(vec![1.0, 2.0], 1).is_err());
    }

    #[test]
    fn tail_bound_dominates_true_tail() {
        let w = Wfa::scalar(1.0, 0.5, 1.0);
        // Σ_{i>3} 2^{-i} = 1/8
        let bound = w.tail_bound(3).unwrap();
        assert!(bound >= 0.125 - 1e-15 && bound <= 0.26);
        assert!(Wfa::scalar(1.0, 1.0, 1.0).tail_bound(0).is_none());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let w = crate::fixtures::random_stable_wfa(3, 0.8, 7);
        let json = serde_json::to_string(&w).unwrap();
        assert!(json.contains("\"A\""));
        let back: Wfa = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }
}
