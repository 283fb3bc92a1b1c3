use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative width under which two eigenvalue magnitudes count as tied.
const TIE_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 80;

/// Eigenpairs of a symmetric matrix, ordered by decreasing `|λ|`.
///
/// Column `i` of `vectors` belongs to `values[i]`.
pub(crate) struct OrderedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi eigenvalue iteration on a dense symmetric matrix.
///
/// nalgebra's symmetric QR iteration and its SVD both lose accuracy on some
/// Hankel blocks (eigenvalues off by 1e-5 at size 60, NaN on graded
/// truncations). Jacobi rotations are slower but stay backward stable and
/// keep small eigenvalues of graded matrices accurate.
///
/// An off-diagonal entry is annihilated unless it is already below
/// `eps · sqrt(|a_pp a_qq|)` or `eps² · ‖A‖_F`; iteration stops after a
/// sweep with no rotations.
fn jacobi(m: &DMatrix<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let n = m.nrows();
    // row-major copy; the matrix is symmetric so rows and columns coincide
    let mut a: Vec<f64> = (0..n * n).map(|idx| 0.5 * (m[(idx / n, idx % n)] + m[(idx % n, idx / n)])).collect();
    let mut v = want_vectors.then(|| DMatrix::<f64>::identity(n, n));
    // entries below eps² of the Frobenius norm are rounding noise for every
    // eigenvalue we use; rotating them only costs sweeps
    let floor = f64::EPSILON * f64::EPSILON * a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() || apq.abs() <= floor {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                // rows p and q double as columns p and q by symmetry
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[p * n + k];
                    let akq = a[q * n + k];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[p * n + k] = np;
                    a[q * n + k] = nq;
                    a[k * n + p] = np;
                    a[k * n + q] = nq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        if !rotated {
            let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
            if values.iter().any(|x| !x.is_finite()) {
                return Err(Error::EigenFailure("Jacobi iteration produced a non-finite value".into()));
            }
            return Ok((values, v));
        }
    }
    Err(Error::EigenFailure(format!("Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")))
}

/// Symmetric eigendecomposition ordered by magnitude.
///
/// Ties in `|λ|` (within `TIE_TOL` of the largest magnitude) put the positive
/// eigenvalue first and otherwise keep index order, so the ordering is
/// deterministic.
pub(crate) fn symmetric_eigen_by_magnitude(m: DMatrix<f64>) -> Result<OrderedEigen> {
    let n = m.nrows();
    let scale = m.amax();
    if n == 0 || scale == 0.0 {
        return Ok(OrderedEigen {
            values: vec![0.0; n],
            vectors: DMatrix::identity(n, n),
        });
    }
    let (values, vectors) = jacobi(&(m / scale), true)?;
    let vectors = vectors.expect("vectors were requested");
    let order = magnitude_order(&values);
    let sorted = order.iter().map(|&i| scale * values[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(OrderedEigen {
        values: sorted,
        vectors,
    })
}

fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tie = TIE_TOL * scale;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && values[order[start]].abs() - values[order[end]].abs() <= tie
        {
            end += 1;
        }
        order[start..end].sort_by_key(|&i| (values[i] < 0.0, i));
        start = end;
    }
    order
}

/// Singular values of a symmetric matrix, i.e. sorted `|λ|`, descending.
pub(crate) fn symmetric_singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let scale = m.amax();
    if m.nrows() == 0 || scale == 0.0 {
        return Ok(vec![0.0; m.nrows()]);
    }
    let (values, _) = jacobi(&(m / scale), false)?;
    let mut s: Vec<f64> = values.iter().map(|x| scale * x.abs()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}
